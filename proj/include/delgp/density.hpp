#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>

#include "delgp/mesh_field.hpp"

namespace delgp {

// Evaluatable discrete Lagrangian density. Inputs are the stacked slot
// values (3*d or 4*d numbers, slot-major). Implementations provide analytic
// gradients and Hessians over the full input; slot-wise views are derived.
class Density {
 public:
  Density(StencilKind kind, int d) : kind_(kind), d_(d) {}
  virtual ~Density() = default;

  StencilKind kind() const { return kind_; }
  int components() const { return d_; }
  int slots() const { return density_slots(kind_); }
  int input_dim() const { return slots() * d_; }

  virtual double eval(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const = 0;

  Eigen::VectorXd grad_slot(const Eigen::VectorXd& x, int slot) const {
    return gradient(x).segment(slot * d_, d_);
  }
  Eigen::MatrixXd hess_block(const Eigen::VectorXd& x, int a, int b) const {
    return hessian(x).block(a * d_, b * d_, d_, d_);
  }

 protected:
  void check_input(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim())
      throw std::invalid_argument("density: input dimension mismatch");
  }

 private:
  StencilKind kind_;
  int d_;
};

using DensityPtr = std::shared_ptr<const Density>;

}  // namespace delgp
