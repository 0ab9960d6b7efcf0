#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "delgp/density.hpp"
#include "delgp/mesh_field.hpp"

namespace delgp {

struct PotentialFn {
  std::function<double(double)> v;
  std::function<double(double)> dv;
  std::function<double(double)> d2v;
};

inline PotentialFn quadratic_potential() {  // V(u) = u^2 / 2
  return {[](double u) { return 0.5 * u * u; }, [](double u) { return u; },
          [](double) { return 1.0; }};
}

inline PotentialFn linear_potential() {  // V(r) = r
  return {[](double r) { return r; }, [](double) { return 1.0; },
          [](double) { return 0.0; }};
}

struct WaveSpec {
  double dt = 1.0 / 40.0;
  double dx = 1.0 / 20.0;
  PotentialFn potential = quadratic_potential();
};

struct SchrodingerSpec {
  double dt = 7.0 / 400.0;
  double dx = 1.0 / 10.0;
  PotentialFn potential = linear_potential();  // acts on |u|^2
};

// L(u, u+, u_+) = 1/2 ((u+ - u)/dt)^2 - 1/2 ((u_+ - u)/dx)^2 - V(u)
class WaveDensity : public Density {
 public:
  explicit WaveDensity(WaveSpec spec)
      : Density(StencilKind::three_point, 1), spec_(std::move(spec)) {
    if (!(spec_.dt > 0 && spec_.dx > 0))
      throw std::invalid_argument("WaveDensity: dt, dx must be positive");
  }

  double eval(const Eigen::VectorXd& x) const override {
    check_input(x);
    const double a = x[0], b = x[1], c = x[2];
    const double qt = (b - a) / spec_.dt, qx = (c - a) / spec_.dx;
    return 0.5 * qt * qt - 0.5 * qx * qx - spec_.potential.v(a);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    check_input(x);
    const double a = x[0], b = x[1], c = x[2];
    const double it2 = 1.0 / (spec_.dt * spec_.dt), ix2 = 1.0 / (spec_.dx * spec_.dx);
    Eigen::VectorXd g(3);
    g[0] = -(b - a) * it2 + (c - a) * ix2 - spec_.potential.dv(a);
    g[1] = (b - a) * it2;
    g[2] = -(c - a) * ix2;
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    check_input(x);
    const double it2 = 1.0 / (spec_.dt * spec_.dt), ix2 = 1.0 / (spec_.dx * spec_.dx);
    Eigen::MatrixXd h(3, 3);
    h << it2 - ix2 - spec_.potential.d2v(x[0]), -it2, ix2,
        -it2, it2, 0,
        ix2, 0, -ix2;
    return h;
  }

  const WaveSpec& spec() const { return spec_; }

 private:
  WaveSpec spec_;
};

inline DensityPtr wave_density(WaveSpec spec) {
  return std::make_shared<WaveDensity>(std::move(spec));
}

// L(u, u+, u_+, u+_+) = u_cntr^T J u_dt - |u_dx|^2 - V(|u_cntr|^2), d = 2.
// Written via the linear slot maps C (average), T (temporal difference) and
// X (spatial difference) on the stacked input z in R^8.
class SchrodingerDensity : public Density {
 public:
  explicit SchrodingerDensity(SchrodingerSpec spec)
      : Density(StencilKind::four_point, 2), spec_(std::move(spec)) {
    if (!(spec_.dt > 0 && spec_.dx > 0))
      throw std::invalid_argument("SchrodingerDensity: dt, dx must be positive");
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    C_.setZero(2, 8);
    T_.setZero(2, 8);
    X_.setZero(2, 8);
    for (int slot = 0; slot < 4; ++slot) C_.block(0, 2 * slot, 2, 2) = 0.25 * I;
    // slots: 0 = u, 1 = u+, 2 = u_+, 3 = u+_+
    const double ct = 1.0 / (2.0 * spec_.dt), cx = 1.0 / (2.0 * spec_.dx);
    T_.block(0, 0, 2, 2) = -ct * I;
    T_.block(0, 2, 2, 2) = ct * I;
    T_.block(0, 4, 2, 2) = -ct * I;
    T_.block(0, 6, 2, 2) = ct * I;
    X_.block(0, 0, 2, 2) = -cx * I;
    X_.block(0, 2, 2, 2) = -cx * I;
    X_.block(0, 4, 2, 2) = cx * I;
    X_.block(0, 6, 2, 2) = cx * I;
    J_ << 0, -1, 1, 0;
  }

  double eval(const Eigen::VectorXd& z) const override {
    check_input(z);
    const Eigen::Vector2d uc = C_ * z, ut = T_ * z, ux = X_ * z;
    return uc.dot(J_ * ut) - ux.squaredNorm() - spec_.potential.v(uc.squaredNorm());
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const override {
    check_input(z);
    const Eigen::Vector2d uc = C_ * z, ut = T_ * z, ux = X_ * z;
    const double vp = spec_.potential.dv(uc.squaredNorm());
    return C_.transpose() * (J_ * ut) + T_.transpose() * (J_.transpose() * uc) -
           2.0 * X_.transpose() * ux - 2.0 * vp * C_.transpose() * uc;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& z) const override {
    check_input(z);
    const Eigen::Vector2d uc = C_ * z;
    const double r = uc.squaredNorm();
    const double vp = spec_.potential.dv(r), vpp = spec_.potential.d2v(r);
    Eigen::MatrixXd h = C_.transpose() * J_ * T_ + T_.transpose() * J_.transpose() * C_ -
                        2.0 * X_.transpose() * X_ - 2.0 * vp * C_.transpose() * C_;
    if (vpp != 0.0) {
      const Eigen::VectorXd cu = C_.transpose() * uc;
      h.noalias() -= 4.0 * vpp * cu * cu.transpose();
    }
    return h;
  }

  const SchrodingerSpec& spec() const { return spec_; }

 private:
  SchrodingerSpec spec_;
  Eigen::MatrixXd C_, T_, X_;
  Eigen::Matrix2d J_;
};

inline DensityPtr schrodinger_density(SchrodingerSpec spec) {
  return std::make_shared<SchrodingerDensity>(std::move(spec));
}

// Travelling wave u(t,x) = a1 sin(kappa (x - c t)) + a2 cos(kappa (x - c t))
// of the interpolated discrete wave equation, kappa = 2 pi k. The wave speed
// satisfies cos(kappa c dt) = 1 - dt^2/2 + (dt^2/dx^2)(cos(kappa dx) - 1);
// the smallest nonnegative solution is used.
inline DiscreteField travelling_wave(int k, double a1, double a2,
                                     const WaveSpec& spec, const Mesh& mesh) {
  if (mesh.d != 1) throw std::invalid_argument("travelling_wave: d must be 1");
  const double kappa = 2.0 * M_PI * k;
  double c = 0;
  if (k != 0) {
    const double r = 1.0 - spec.dt * spec.dt / 2.0 +
                     (spec.dt * spec.dt) / (spec.dx * spec.dx) *
                         (std::cos(kappa * spec.dx) - 1.0);
    if (std::abs(r) > 1.0)
      throw std::domain_error("travelling_wave: no real wave speed (|rhs| > 1)");
    c = std::acos(r) / (std::abs(kappa) * spec.dt);
  }
  DiscreteField f(mesh);
  for (int i = 0; i < mesh.nt; ++i) {
    for (int j = 0; j < mesh.nx; ++j) {
      const double s = j * mesh.dx - c * i * mesh.dt;
      f.values(i, j) = a1 * std::sin(kappa * s) + a2 * std::cos(kappa * s);
    }
  }
  return f;
}

// Random truncated Fourier series with decaying amplitudes, periodic over the
// spatial domain of length nx*dx. Deterministic given the rng state.
struct SamplerSpec {
  int max_mode = 3;
  double amplitude_decay = 2.0;
  double amplitude = 1.0;

  void validate() const {
    if (max_mode < 1) throw std::invalid_argument("sampler: max_mode must be >= 1");
    if (!(amplitude_decay > 0))
      throw std::invalid_argument("sampler: amplitude_decay must be positive");
  }
};

inline Eigen::VectorXd sample_initial(const SamplerSpec& s, const Mesh& mesh,
                                      std::mt19937_64& rng) {
  s.validate();
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double L = mesh.nx * mesh.dx;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(mesh.nx * mesh.d);
  for (int c = 0; c < mesh.d; ++c) {
    for (int m = 1; m <= s.max_mode; ++m) {
      const double scale = s.amplitude * std::pow(s.amplitude_decay, -m);
      const double alpha = unif(rng) * scale, beta = unif(rng) * scale;
      for (int j = 0; j < mesh.nx; ++j) {
        const double x = j * mesh.dx;
        u[j * mesh.d + c] += alpha * std::cos(2.0 * M_PI * m * x / L) +
                             beta * std::sin(2.0 * M_PI * m * x / L);
      }
    }
  }
  return u;
}

}  // namespace delgp
