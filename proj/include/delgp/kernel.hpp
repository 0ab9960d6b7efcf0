#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace delgp {

// Squared-exponential kernel K(x,y) = variance * exp(-|x-y|^2 / (2 l^2)).
struct KernelParams {
  double lengthscale = 1.0;
  double variance = 1.0;

  void validate() const {
    if (!(lengthscale > 0)) throw std::invalid_argument("kernel: lengthscale must be positive");
    if (!(variance > 0)) throw std::invalid_argument("kernel: variance must be positive");
  }
  double inv_l2() const { return 1.0 / (lengthscale * lengthscale); }
};

inline double k_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     const KernelParams& p) {
  if (x.size() != y.size()) throw std::invalid_argument("k_eval: dimension mismatch");
  return p.variance * std::exp(-0.5 * p.inv_l2() * (x - y).squaredNorm());
}

// Partial derivative of K with indices dx over components of x and dy over
// components of y, total order <= 3. Closed forms for the Gaussian kernel:
// with r = x-y, s = 1/l^2, g = K(x,y),
//   d/dr_i        -> -s r_i g
//   d2/dr_i dr_j  -> (-s delta_ij + s^2 r_i r_j) g
//   d3/dr_i dr_j dr_k -> (s^2 (d_ij r_k + d_ik r_j + d_jk r_i) - s^3 r_i r_j r_k) g
// and each y-index flips the sign once.
inline double k_derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const KernelParams& p, const std::vector<int>& dx,
                           const std::vector<int>& dy) {
  if (x.size() != y.size()) throw std::invalid_argument("k_derivative: dimension mismatch");
  const size_t order = dx.size() + dy.size();
  if (order > 3) throw std::invalid_argument("k_derivative: unsupported order > 3");

  const Eigen::VectorXd r = x - y;
  const double s = p.inv_l2();
  const double g = p.variance * std::exp(-0.5 * s * r.squaredNorm());
  const double sign = (dy.size() % 2 == 0) ? 1.0 : -1.0;

  std::vector<int> idx;
  idx.reserve(order);
  idx.insert(idx.end(), dx.begin(), dx.end());
  idx.insert(idx.end(), dy.begin(), dy.end());
  for (int i : idx)
    if (i < 0 || i >= r.size()) throw std::invalid_argument("k_derivative: index out of range");

  double core = 0;
  switch (order) {
    case 0:
      core = 1.0;
      break;
    case 1:
      core = -s * r[idx[0]];
      break;
    case 2: {
      const int i = idx[0], j = idx[1];
      core = (i == j ? -s : 0.0) + s * s * r[i] * r[j];
      break;
    }
    case 3: {
      const int i = idx[0], j = idx[1], k = idx[2];
      core = s * s *
                 ((i == j ? r[k] : 0.0) + (i == k ? r[j] : 0.0) + (j == k ? r[i] : 0.0)) -
             s * s * s * r[i] * r[j] * r[k];
      break;
    }
  }
  return sign * core * g;
}

}  // namespace delgp
