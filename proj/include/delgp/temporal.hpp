#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

#include "delgp/density.hpp"

namespace delgp {

// Temporal Lagrangian L_{d,dx}(U^i, U^{i+1}) = sum_j L_d over the slab
// between two time slices, with the spatial index periodic. Slices are
// stacked vectors of length nx*d.
class TemporalLagrangian {
 public:
  TemporalLagrangian(DensityPtr density, int nx)
      : L_(std::move(density)), nx_(nx) {
    if (nx_ < 3) throw std::invalid_argument("TemporalLagrangian: nx must be >= 3");
  }

  const Density& density() const { return *L_; }
  DensityPtr density_ptr() const { return L_; }
  int nx() const { return nx_; }
  int d() const { return L_->components(); }
  int slice_dim() const { return nx_ * d(); }

  // slot -> (time level in {0,1}, spatial offset in {0,1})
  int slot_time(int slot) const { return slot == 1 || slot == 3 ? 1 : 0; }
  int slot_xoff(int slot) const { return slot >= 2 ? 1 : 0; }

  double eval(const Eigen::VectorXd& U, const Eigen::VectorXd& W) const {
    check(U); check(W);
    double v = 0;
    for (int j = 0; j < nx_; ++j) v += L_->eval(slab_point(U, W, j));
    return v;
  }

  // gradient with respect to the first slice argument
  Eigen::VectorXd grad_first(const Eigen::VectorXd& U, const Eigen::VectorXd& W) const {
    return grad_arg(U, W, 0);
  }
  // gradient with respect to the second slice argument
  Eigen::VectorXd grad_second(const Eigen::VectorXd& U, const Eigen::VectorXd& W) const {
    return grad_arg(U, W, 1);
  }

  // d/dW of grad_first(U, W); the Newton matrix for time stepping
  Eigen::MatrixXd jac_first_wrt_second(const Eigen::VectorXd& U,
                                       const Eigen::VectorXd& W) const {
    check(U); check(W);
    const int d = this->d(), q = L_->slots();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(slice_dim(), slice_dim());
    for (int j = 0; j < nx_; ++j) {
      const Eigen::MatrixXd h = L_->hessian(slab_point(U, W, j));
      for (int s = 0; s < q; ++s) {
        if (slot_time(s) != 0) continue;
        for (int t = 0; t < q; ++t) {
          if (slot_time(t) != 1) continue;
          const int m = wrap(j + slot_xoff(s)), mp = wrap(j + slot_xoff(t));
          jac.block(m * d, mp * d, d, d) += h.block(s * d, t * d, d, d);
        }
      }
    }
    return jac;
  }

  void check(const Eigen::VectorXd& u) const {
    if (u.size() != slice_dim())
      throw std::invalid_argument("TemporalLagrangian: slice length mismatch");
  }

 private:
  int wrap(int j) const { return ((j % nx_) + nx_) % nx_; }

  Eigen::VectorXd slab_point(const Eigen::VectorXd& U, const Eigen::VectorXd& W,
                             int j) const {
    const int d = this->d(), q = L_->slots();
    Eigen::VectorXd z(q * d);
    for (int s = 0; s < q; ++s) {
      const auto& src = slot_time(s) == 0 ? U : W;
      z.segment(s * d, d) = src.segment(wrap(j + slot_xoff(s)) * d, d);
    }
    return z;
  }

  Eigen::VectorXd grad_arg(const Eigen::VectorXd& U, const Eigen::VectorXd& W,
                           int which) const {
    check(U); check(W);
    const int d = this->d(), q = L_->slots();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(slice_dim());
    for (int j = 0; j < nx_; ++j) {
      const Eigen::VectorXd grad = L_->gradient(slab_point(U, W, j));
      for (int s = 0; s < q; ++s) {
        if (slot_time(s) != which) continue;
        g.segment(wrap(j + slot_xoff(s)) * d, d) += grad.segment(s * d, d);
      }
    }
    return g;
  }

  DensityPtr L_;
  int nx_;
};

inline TemporalLagrangian temporal_lagrangian(DensityPtr density, const Mesh& mesh) {
  if (!mesh.periodic_x)
    throw std::invalid_argument("temporal_lagrangian: mesh must be periodic in x");
  if (density->components() != mesh.d)
    throw std::invalid_argument("temporal_lagrangian: component mismatch");
  return TemporalLagrangian(std::move(density), mesh.nx);
}

// d/dU^i of [ L_{d,dx}(U^{i-1}, U^i) + L_{d,dx}(U^i, U^{i+1}) ]
inline Eigen::VectorXd temporal_del(const TemporalLagrangian& TL,
                                    const Eigen::VectorXd& Uprev,
                                    const Eigen::VectorXd& Ucur,
                                    const Eigen::VectorXd& Unext) {
  return TL.grad_second(Uprev, Ucur) + TL.grad_first(Ucur, Unext);
}

}  // namespace delgp
