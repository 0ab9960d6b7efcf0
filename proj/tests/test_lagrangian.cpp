#include <catch_amalgamated.hpp>

#include <random>

#include "delgp/lagrangian.hpp"
#include "delgp/reference_models.hpp"
#include "test_helpers.hpp"

using namespace delgp;

namespace {

StencilData random_stencil(StencilKind kind, int d, std::mt19937_64& rng) {
  StencilData s(kind, d);
  for (int c = 0; c < s.points.cols(); ++c)
    s.points.col(c) = testutil::random_vector(d, rng);
  return s;
}

ScalarFn random_quadratic(int d, std::mt19937_64& rng) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = testutil::random_vector(1, rng)[0];
  const Eigen::VectorXd b = testutil::random_vector(d, rng);
  return ScalarFn{
      [A, b](const Eigen::VectorXd& u) { return 0.5 * u.dot(A * u) + b.dot(u); },
      [A, b](const Eigen::VectorXd& u) { return (A * u + b).eval(); },
      [A](const Eigen::VectorXd&) { return A; }};
}

DivergenceSpec random_divergence(StencilKind kind, int d, std::mt19937_64& rng) {
  DivergenceSpec g;
  g.kind = kind;
  const size_t n = kind == StencilKind::three_point ? 3 : 6;
  for (size_t k = 0; k < n; ++k) g.components.push_back(random_quadratic(d, rng));
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  g.rho = unif(rng);
  g.c = unif(rng) - 1.0;
  return g;
}

}  // namespace

TEST_CASE("sub tuple column tables") {
  std::mt19937_64 rng(1);
  const StencilData s3 = random_stencil(StencilKind::three_point, 2, rng);
  // sub-tuple a places the stencil center in slot a
  for (int a = 0; a < 3; ++a)
    CHECK(sub_tuple(s3, a).segment(a * 2, 2) == s3.points.col(0));
  CHECK(sub_tuple(s3, 1).segment(0, 2) == s3.points.col(3));
  CHECK(sub_tuple(s3, 1).segment(4, 2) == s3.points.col(4));
  CHECK(sub_tuple(s3, 2).segment(0, 2) == s3.points.col(5));
  CHECK(sub_tuple(s3, 2).segment(2, 2) == s3.points.col(6));

  const StencilData s4 = random_stencil(StencilKind::four_point, 1, rng);
  for (int a = 0; a < 4; ++a) CHECK(sub_tuple(s4, a)[a] == s4.points(0, 0));
  CHECK(sub_tuple(s4, 1)[0] == s4.points(0, 4));
  CHECK(sub_tuple(s4, 1)[2] == s4.points(0, 5));
  CHECK(sub_tuple(s4, 1)[3] == s4.points(0, 2));
  CHECK(sub_tuple(s4, 2)[0] == s4.points(0, 6));
  CHECK(sub_tuple(s4, 2)[1] == s4.points(0, 7));
  CHECK(sub_tuple(s4, 2)[3] == s4.points(0, 1));
  CHECK(sub_tuple(s4, 3)[0] == s4.points(0, 8));
  CHECK(sub_tuple(s4, 3)[1] == s4.points(0, 6));
  CHECK(sub_tuple(s4, 3)[2] == s4.points(0, 4));
}

TEST_CASE("del equals momentum difference") {
  std::mt19937_64 rng(2);
  const DensityPtr Lw = wave_density(WaveSpec{});
  const DensityPtr Ls = schrodinger_density(SchrodingerSpec{});
  for (int trial = 0; trial < 25; ++trial) {
    // momenta carry the 1/dt^2 scale, so compare relative to it
    const StencilData s3 = random_stencil(StencilKind::three_point, 1, rng);
    const Eigen::VectorXd lhs3 = del(*Lw, s3);
    const Eigen::VectorXd rhs3 = mm_plus(*Lw, s3) - mm_minus(*Lw, s3);
    CHECK((lhs3 - rhs3).lpNorm<Eigen::Infinity>() <=
          1e-13 * (1.0 + mm_plus(*Lw, s3).lpNorm<Eigen::Infinity>()));

    const StencilData s4 = random_stencil(StencilKind::four_point, 2, rng);
    const Eigen::VectorXd lhs4 = del(*Ls, s4);
    const Eigen::VectorXd rhs4 = mm_plus(*Ls, s4) - mm_minus(*Ls, s4);
    CHECK((lhs4 - rhs4).lpNorm<Eigen::Infinity>() <=
          1e-13 * (1.0 + mm_plus(*Ls, s4).lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("kind mismatch is rejected") {
  std::mt19937_64 rng(3);
  const DensityPtr Lw = wave_density(WaveSpec{});
  const StencilData s4 = random_stencil(StencilKind::four_point, 1, rng);
  CHECK_THROWS_AS(del(*Lw, s4), std::invalid_argument);
  CHECK_THROWS_AS(del_three_point(*Lw, s4), std::invalid_argument);
  const DensityPtr Ls = schrodinger_density(SchrodingerSpec{});
  const StencilData wrong_d = random_stencil(StencilKind::four_point, 1, rng);
  CHECK_THROWS_AS(del(*Ls, wrong_d), std::invalid_argument);
}

TEST_CASE("discrete divergences are null Lagrangians") {
  std::mt19937_64 rng(4);
  const DensityPtr Lw = wave_density(WaveSpec{});
  const DensityPtr Ls = schrodinger_density(SchrodingerSpec{});
  for (int trial = 0; trial < 100; ++trial) {
    const bool three = trial % 2 == 0;
    const DensityPtr base = three ? Lw : Ls;
    const int d = base->components();
    DivergenceSpec g = random_divergence(base->kind(), d, rng);
    const double rho = g.rho;
    const DensityPtr Lt = gauge_transform(base, std::move(g));
    const StencilData s = random_stencil(base->kind(), d, rng);
    const Eigen::VectorXd lhs = del(*Lt, s);
    const Eigen::VectorXd rhs = rho * del(*base, s);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <=
          1e-10 * (1.0 + rhs.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("gauge transform derivative consistency") {
  std::mt19937_64 rng(5);
  const DensityPtr Ls = schrodinger_density(SchrodingerSpec{});
  const DensityPtr Lt = gauge_transform(Ls, random_divergence(Ls->kind(), 2, rng));
  const Eigen::VectorXd x = testutil::random_vector(Lt->input_dim(), rng);
  const auto f = [&](const Eigen::VectorXd& z) { return Lt->eval(z); };
  CHECK((Lt->gradient(x) - testutil::fd_gradient(f, x)).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK((Lt->hessian(x) - testutil::fd_hessian(f, x)).lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("normalization pins value and momentum exactly") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const bool three = trial % 2 == 0;
    const DensityPtr base =
        three ? wave_density(WaveSpec{}) : schrodinger_density(SchrodingerSpec{});
    const int d = base->components();
    const StencilData b = random_stencil(base->kind(), d, rng);
    const Eigen::VectorXd p_b = testutil::random_vector(d, rng);
    const double c_b = testutil::random_vector(1, rng)[0];

    const DensityPtr Ln = normalize_density(base, b, p_b, c_b);
    const double scale = 1.0 + mm_minus(*base, b).lpNorm<Eigen::Infinity>();
    CHECK(std::abs(Ln->eval(sub_tuple(b, 0)) - c_b) <= 1e-13 * scale);
    CHECK((mm_minus(*Ln, b) - p_b).lpNorm<Eigen::Infinity>() <= 1e-13 * scale);

    // rho = 1, so the field equations are untouched
    const StencilData s = random_stencil(base->kind(), d, rng);
    CHECK((del(*Ln, s) - del(*base, s)).lpNorm<Eigen::Infinity>() <=
          1e-12 * (1.0 + del(*base, s).lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("divergence spec validation") {
  DivergenceSpec g;
  g.kind = StencilKind::three_point;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.components.assign(3, linear_fn(Eigen::VectorXd::Zero(1)));
  g.rho = 0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.rho = 1;
  CHECK_NOTHROW(g.validate());
}
