#include <catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "delgp/io_csv.hpp"

using namespace delgp;

TEST_CASE("sigma csv round trip") {
  Mesh mesh{0.1, 0.2, 4, 3, 2, true};
  UncertaintyField u{mesh, Eigen::MatrixXd::Zero(2, 6)};
  double v = 0.5;
  for (int r = 0; r < u.sigma.rows(); ++r)
    for (int c = 0; c < u.sigma.cols(); ++c) u.sigma(r, c) = (v *= 0.75);

  std::ostringstream os;
  write_sigma_csv(u, os);
  const std::string text = os.str();
  CHECK(text.rfind("i,j,component,sigma\n", 0) == 0);
  CHECK(text.back() == '\n');
  // one row per interior mesh point per component
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 3 * 2);

  std::istringstream is(text);
  const UncertaintyField back = read_sigma_csv(is, mesh);
  CHECK(back.sigma == u.sigma);
  CHECK(back.max_sigma() == u.max_sigma());
}

TEST_CASE("sigma csv error handling") {
  Mesh mesh{0.1, 0.2, 4, 3, 1, true};
  std::istringstream bad_header("sigma,values\n");
  CHECK_THROWS_WITH(read_sigma_csv(bad_header, mesh),
                    Catch::Matchers::ContainsSubstring("header"));
  std::istringstream bad_row("i,j,component,sigma\n1,0\n");
  CHECK_THROWS_WITH(read_sigma_csv(bad_row, mesh),
                    Catch::Matchers::ContainsSubstring("bad row"));
  std::istringstream out_of_range("i,j,component,sigma\n9,0,0,1.0\n");
  CHECK_THROWS_WITH(read_sigma_csv(out_of_range, mesh),
                    Catch::Matchers::ContainsSubstring("out of range"));
}
