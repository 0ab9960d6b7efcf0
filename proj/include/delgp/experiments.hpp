#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "delgp/integrator.hpp"
#include "delgp/mesh_field.hpp"
#include "delgp/reference_models.hpp"
#include "delgp/temporal.hpp"

namespace delgp {

inline Mesh wave_mesh() { return Mesh{1.0 / 40.0, 1.0 / 20.0, 21, 20, 1, true}; }
inline Mesh schrodinger_mesh() { return Mesh{7.0 / 400.0, 1.0 / 10.0, 9, 10, 2, true}; }

inline StencilData zero_base(StencilKind kind, int d) { return StencilData(kind, d); }

// Training field for the wave system: sample (U^0, P^0_-), solve the first
// step for U^1, then march the reference variational integrator.
inline DiscreteField generate_wave_field(const WaveSpec& spec, const Mesh& mesh,
                                         const SamplerSpec& sampler,
                                         std::mt19937_64& rng,
                                         const NewtonConfig& cfg = {}) {
  const TemporalLagrangian TL = temporal_lagrangian(wave_density(spec), mesh);
  const Eigen::VectorXd U0 = sample_initial(sampler, mesh, rng);
  const Eigen::VectorXd P0 = sample_initial(sampler, mesh, rng);
  const Eigen::VectorXd U1 = first_step(TL, U0, P0, cfg);
  return propagate(TL, U0, U1, mesh.nt - 2, cfg, mesh.dt, mesh.dx).field;
}

// One implicit-midpoint step of J du/dt = (-d^2/dx^2 + V'(|u|^2)) u with the
// mesh spacing, used to produce the second time slice from sampled initial
// data for the Schroedinger system.
inline Eigen::VectorXd schrodinger_first_slice(const SchrodingerSpec& spec,
                                               const Mesh& mesh,
                                               const Eigen::VectorXd& U0,
                                               const NewtonConfig& cfg = {}) {
  const int nx = mesh.nx, d = 2;
  Eigen::Matrix2d J;
  J << 0, -1, 1, 0;
  const double ix2 = 1.0 / (mesh.dx * mesh.dx);
  auto wrap = [nx](int j) { return ((j % nx) + nx) % nx; };

  auto rhs = [&](const Eigen::VectorXd& U) {
    Eigen::VectorXd f(nx * d);
    for (int j = 0; j < nx; ++j) {
      const Eigen::Vector2d u = U.segment(j * d, d);
      const Eigen::Vector2d lap = (U.segment(wrap(j + 1) * d, d) - 2.0 * u +
                                   U.segment(wrap(j - 1) * d, d)) *
                                  ix2;
      f.segment(j * d, d) = -lap + spec.potential.dv(u.squaredNorm()) * u;
    }
    return f;
  };
  auto rhs_jac = [&](const Eigen::VectorXd& U) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nx * d, nx * d);
    for (int j = 0; j < nx; ++j) {
      const Eigen::Vector2d u = U.segment(j * d, d);
      const double r = u.squaredNorm();
      Eigen::Matrix2d diag = (2.0 * ix2 + spec.potential.dv(r)) * Eigen::Matrix2d::Identity() +
                             2.0 * spec.potential.d2v(r) * u * u.transpose();
      jac.block(j * d, j * d, d, d) = diag;
      jac.block(j * d, wrap(j + 1) * d, d, d) -= ix2 * Eigen::Matrix2d::Identity();
      jac.block(j * d, wrap(j - 1) * d, d, d) -= ix2 * Eigen::Matrix2d::Identity();
    }
    return jac;
  };

  Eigen::MatrixXd Jbig = Eigen::MatrixXd::Zero(nx * d, nx * d);
  for (int j = 0; j < nx; ++j) Jbig.block(j * d, j * d, d, d) = J;

  auto result = detail::newton_solve(
      [&](const Eigen::VectorXd& U1) -> Eigen::VectorXd {
        return Jbig * (U1 - U0) / mesh.dt - rhs(0.5 * (U0 + U1));
      },
      [&](const Eigen::VectorXd& U1) -> Eigen::MatrixXd {
        return Jbig / mesh.dt - 0.5 * rhs_jac(0.5 * (U0 + U1));
      },
      U0, cfg);
  return result.x;
}

inline DiscreteField generate_schrodinger_field(const SchrodingerSpec& spec,
                                                const Mesh& mesh,
                                                const SamplerSpec& sampler,
                                                std::mt19937_64& rng,
                                                const NewtonConfig& cfg = {}) {
  const TemporalLagrangian TL = temporal_lagrangian(schrodinger_density(spec), mesh);
  const Eigen::VectorXd U0 = sample_initial(sampler, mesh, rng);
  const Eigen::VectorXd U1 = schrodinger_first_slice(spec, mesh, U0, cfg);
  return propagate(TL, U0, U1, mesh.nt - 2, cfg, mesh.dt, mesh.dx).field;
}

}  // namespace delgp
