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

// second-difference form of the discrete wave equation at a stencil
double wave_equation_residual(const StencilData& s, const WaveSpec& spec) {
  const double u = s.points(0, 0), up = s.points(0, 1), uxp = s.points(0, 2),
               um = s.points(0, 3), uxm = s.points(0, 5);
  return (up - 2.0 * u + um) / (spec.dt * spec.dt) -
         (uxp - 2.0 * u + uxm) / (spec.dx * spec.dx) + spec.potential.dv(u);
}

// central-difference form of the discrete Schroedinger equation at a stencil
Eigen::Vector2d schrodinger_equation_del(const StencilData& s,
                                         const SchrodingerSpec& spec) {
  auto c = [&](int col) { return Eigen::Vector2d(s.points.col(col)); };
  Eigen::Matrix2d J;
  J << 0, -1, 1, 0;
  const Eigen::Vector2d u_dt =
      ((c(3) - c(5)) + 2.0 * (c(1) - c(4)) + (c(7) - c(8))) / (8.0 * spec.dt);
  const Eigen::Vector2d u_dx2 =
      ((c(3) - 2.0 * c(1) + c(7)) + 2.0 * (c(2) - 2.0 * c(0) + c(6)) +
       (c(5) - 2.0 * c(4) + c(8))) /
      (4.0 * spec.dx * spec.dx);
  Eigen::Vector2d vterm = Eigen::Vector2d::Zero();
  const int corners[4][4] = {{0, 1, 2, 3}, {4, 0, 5, 2}, {6, 7, 0, 1}, {8, 6, 4, 0}};
  for (const auto& slab : corners) {
    const Eigen::Vector2d uc =
        (c(slab[0]) + c(slab[1]) + c(slab[2]) + c(slab[3])) / 4.0;
    vterm += spec.potential.dv(uc.squaredNorm()) * uc;
  }
  vterm /= 4.0;
  return 2.0 * J * u_dt + 2.0 * u_dx2 - 2.0 * vterm;
}

}  // namespace

TEST_CASE("wave density values and derivatives") {
  const WaveSpec spec;  // dt = 1/40, dx = 1/20, V(u) = u^2/2
  const DensityPtr L = wave_density(spec);
  Eigen::VectorXd x(3);
  x << 0, 1, 0;
  CHECK(L->eval(x) == Catch::Approx(800.0).epsilon(1e-14));
  x << 1, 1, 1;
  CHECK(L->eval(x) == Catch::Approx(-0.5).epsilon(1e-14));

  std::mt19937_64 rng(21);
  const Eigen::VectorXd z = testutil::random_vector(3, rng);
  const auto f = [&](const Eigen::VectorXd& v) { return L->eval(v); };
  CHECK((L->gradient(z) - testutil::fd_gradient(f, z)).lpNorm<Eigen::Infinity>() <=
        1e-3);  // entries are O(1/dt^2)
  CHECK((L->hessian(z) - testutil::fd_hessian(f, z)).lpNorm<Eigen::Infinity>() <= 1e-2);
}

TEST_CASE("wave del equals the discrete wave equation") {
  const WaveSpec spec;
  const DensityPtr L = wave_density(spec);
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const StencilData s = random_stencil(StencilKind::three_point, 1, rng);
    const double lhs = del(*L, s)[0];
    const double rhs = -wave_equation_residual(s, spec);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("schrodinger density derivatives") {
  const SchrodingerSpec spec;
  const DensityPtr L = schrodinger_density(spec);
  std::mt19937_64 rng(23);
  const Eigen::VectorXd z = testutil::random_vector(8, rng);
  const auto f = [&](const Eigen::VectorXd& v) { return L->eval(v); };
  CHECK((L->gradient(z) - testutil::fd_gradient(f, z)).lpNorm<Eigen::Infinity>() <= 1e-4);
  CHECK((L->hessian(z) - testutil::fd_hessian(f, z)).lpNorm<Eigen::Infinity>() <= 1e-2);
}

TEST_CASE("schrodinger del equals the discrete schrodinger equation") {
  std::mt19937_64 rng(24);
  SchrodingerSpec spec;  // V(r) = r
  const DensityPtr L = schrodinger_density(spec);
  for (int trial = 0; trial < 50; ++trial) {
    const StencilData s = random_stencil(StencilKind::four_point, 2, rng);
    const Eigen::Vector2d lhs = del(*L, s);
    const Eigen::Vector2d rhs = schrodinger_equation_del(s, spec);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <=
          1e-10 * (1.0 + rhs.lpNorm<Eigen::Infinity>()));
  }

  // nonlinear potential exercises the centred potential average
  SchrodingerSpec cubic = spec;
  cubic.potential = PotentialFn{[](double r) { return r * r; },
                                [](double r) { return 2.0 * r; },
                                [](double) { return 2.0; }};
  const DensityPtr Lc = schrodinger_density(cubic);
  for (int trial = 0; trial < 50; ++trial) {
    const StencilData s = random_stencil(StencilKind::four_point, 2, rng);
    const Eigen::Vector2d lhs = del(*Lc, s);
    const Eigen::Vector2d rhs = schrodinger_equation_del(s, cubic);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <=
          1e-10 * (1.0 + rhs.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("travelling wave solves the discrete wave equation") {
  const WaveSpec spec;
  Mesh mesh{spec.dt, spec.dx, 16, 20, 1, true};
  const DensityPtr L = wave_density(spec);
  for (int k : {1, 2}) {
    const DiscreteField f = travelling_wave(k, 0.7, -0.3, spec, mesh);
    double worst = 0;
    for (const auto& s : extract_stencils(f, StencilKind::three_point))
      worst = std::max(worst, std::abs(del(*L, s)[0]));
    CHECK(worst <= 1e-12 / (spec.dt * spec.dt));  // relative to the 1/dt^2 scale
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("travelling wave edge cases") {
  const WaveSpec spec;
  Mesh mesh{spec.dt, spec.dx, 4, 8, 1, true};
  // k = 0: constant-speed degenerate case is well defined
  const DiscreteField f0 = travelling_wave(0, 0.5, 1.5, spec, mesh);
  CHECK(f0.values.isApproxToConstant(1.5, 1e-14));

  WaveSpec steep;
  steep.dt = 1.0;
  steep.dx = 0.1;
  CHECK_THROWS_AS(travelling_wave(1, 1, 0, steep, Mesh{1.0, 0.1, 4, 8, 1, true}),
                  std::domain_error);
}

TEST_CASE("initial data sampler") {
  SamplerSpec s;
  Mesh mesh{0.1, 0.05, 5, 20, 2, true};
  std::mt19937_64 a(99), b(99), c(100);
  const Eigen::VectorXd ua = sample_initial(s, mesh, a);
  const Eigen::VectorXd ub = sample_initial(s, mesh, b);
  const Eigen::VectorXd uc = sample_initial(s, mesh, c);
  CHECK(ua == ub);        // deterministic given the rng state
  CHECK(ua != uc);
  CHECK(ua.size() == mesh.nx * mesh.d);
  CHECK(ua.lpNorm<Eigen::Infinity>() <= 2.0);  // sum of decaying amplitudes

  SamplerSpec bad;
  bad.max_mode = 0;
  CHECK_THROWS_AS(sample_initial(bad, mesh, a), std::invalid_argument);
}
