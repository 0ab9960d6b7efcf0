#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "delgp/mesh_field.hpp"
#include "delgp/temporal.hpp"

namespace delgp {

struct NewtonConfig {
  double tol = 1e-9;         // residual threshold, relative to the data scale
  int max_iter = 50;
  bool line_search = true;

  void validate() const {
    if (!(tol > 0)) throw std::invalid_argument("newton: tol must be positive");
    if (max_iter < 0) throw std::invalid_argument("newton: max_iter must be >= 0");
  }
};

class NewtonDivergenceError : public std::runtime_error {
 public:
  NewtonDivergenceError(const std::string& msg, double residual, int level = -1)
      : std::runtime_error(msg), last_residual(residual), time_level(level) {}
  double last_residual;
  int time_level;  // -1 when not attached to a propagation
};

class DegenerateDensityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct NewtonResult {
  Eigen::VectorXd x;
  double residual_norm;
  int iterations;
};

// `scale` is the magnitude of the terms the residual is assembled from; the
// stopping threshold is cfg.tol * (1 + scale) so that convergence is judged
// relative to the rounding floor of the residual evaluation.
template <class ResidualFn, class JacobianFn>
NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian,
                          Eigen::VectorXd x, const NewtonConfig& cfg,
                          double scale = 0.0) {
  cfg.validate();
  const double tol = cfg.tol * (1.0 + scale);
  Eigen::VectorXd r = residual(x);
  double rnorm = r.lpNorm<Eigen::Infinity>();
  int it = 0;
  while (rnorm > tol) {
    if (it >= cfg.max_iter)
      throw NewtonDivergenceError(
          "Newton did not converge within " + std::to_string(cfg.max_iter) +
              " iterations (residual " + std::to_string(rnorm) + ")",
          rnorm);
    const Eigen::MatrixXd jac = jacobian(x);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible())
      throw DegenerateDensityError("singular Newton Jacobian");
    const Eigen::VectorXd dx = lu.solve(-r);

    double step = 1.0;
    Eigen::VectorXd xn = x + dx;
    Eigen::VectorXd rn = residual(xn);
    if (cfg.line_search) {
      const double phi0 = 0.5 * r.squaredNorm();
      int backtracks = 0;
      while (0.5 * rn.squaredNorm() > (1.0 - 1e-4 * step) * phi0 && backtracks < 30) {
        step *= 0.5;
        xn = x + step * dx;
        rn = residual(xn);
        ++backtracks;
      }
    }
    x = std::move(xn);
    r = std::move(rn);
    rnorm = r.lpNorm<Eigen::Infinity>();
    ++it;
  }
  return {std::move(x), rnorm, it};
}

}  // namespace detail

// Solve P0 = -grad_{U^0} L_{d,dx}(U^0, U^1) for U^1.
inline Eigen::VectorXd first_step(const TemporalLagrangian& TL,
                                  const Eigen::VectorXd& U0,
                                  const Eigen::VectorXd& P0,
                                  const NewtonConfig& cfg) {
  TL.check(U0);
  TL.check(P0);
  auto res = detail::newton_solve(
      [&](const Eigen::VectorXd& U1) -> Eigen::VectorXd {
        return P0 + TL.grad_first(U0, U1);
      },
      [&](const Eigen::VectorXd& U1) { return TL.jac_first_wrt_second(U0, U1); },
      U0, cfg, P0.lpNorm<Eigen::Infinity>());
  return res.x;
}

struct StepResult {
  Eigen::VectorXd slice;
  double residual;
  int iterations;
};

// Solve the temporal DEL for U^{i+1}. Two starting points are tried in turn:
// the linear extrapolation 2 Ucur - Uprev (best for slowly varying solutions)
// and Ucur itself, which stays inside the range of the observed field values
// and is the robust choice when the solution decorrelates between time levels.
inline StepResult step(const TemporalLagrangian& TL, const Eigen::VectorXd& Uprev,
                       const Eigen::VectorXd& Ucur, const NewtonConfig& cfg) {
  TL.check(Uprev);
  TL.check(Ucur);
  const Eigen::VectorXd held = TL.grad_second(Uprev, Ucur);
  const double scale = held.lpNorm<Eigen::Infinity>();
  auto residual = [&](const Eigen::VectorXd& Unext) -> Eigen::VectorXd {
    return held + TL.grad_first(Ucur, Unext);
  };
  auto jacobian = [&](const Eigen::VectorXd& Unext) {
    return TL.jac_first_wrt_second(Ucur, Unext);
  };
  const Eigen::VectorXd guesses[2] = {2.0 * Ucur - Uprev, Ucur};
  for (int g = 0; g < 2; ++g) {
    try {
      auto res = detail::newton_solve(residual, jacobian, guesses[g], cfg, scale);
      return {std::move(res.x), res.residual_norm, res.iterations};
    } catch (const NewtonDivergenceError&) {
      if (g == 1) throw;
    } catch (const DegenerateDensityError&) {
      if (g == 1) throw;
    }
  }
  throw std::logic_error("unreachable");
}

struct PropagationResult {
  DiscreteField field;
  std::vector<double> residuals;   // accepted temporal-DEL residual per interior level
  std::vector<int> newton_iters;   // Newton iterations per step
};

// Forward propagation; the output field has n_steps + 2 time levels, levels
// 0 and 1 equal to the inputs.
inline PropagationResult propagate(const TemporalLagrangian& TL,
                                   const Eigen::VectorXd& U0,
                                   const Eigen::VectorXd& U1, int n_steps,
                                   const NewtonConfig& cfg, double dt, double dx) {
  if (n_steps < 0) throw std::invalid_argument("propagate: n_steps must be >= 0");
  TL.check(U0);
  TL.check(U1);
  Mesh mesh{dt, dx, n_steps + 2, TL.nx(), TL.d(), true};
  PropagationResult out{DiscreteField(mesh), {}, {}};
  out.field.set_slice(0, U0);
  out.field.set_slice(1, U1);
  for (int i = 1; i <= n_steps; ++i) {
    try {
      StepResult s = step(TL, out.field.slice(i - 1), out.field.slice(i), cfg);
      out.field.set_slice(i + 1, s.slice);
      out.residuals.push_back(s.residual);
      out.newton_iters.push_back(s.iterations);
    } catch (const NewtonDivergenceError& e) {
      throw NewtonDivergenceError(
          "propagation failed at time level " + std::to_string(i + 1) + ": " + e.what(),
          e.last_residual, i + 1);
    }
  }
  return out;
}

}  // namespace delgp
