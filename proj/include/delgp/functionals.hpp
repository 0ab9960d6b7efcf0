#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "delgp/kernel.hpp"
#include "delgp/lagrangian.hpp"
#include "delgp/mesh_field.hpp"

namespace delgp {

// The conditioning functionals (DEL at a stencil, Mm- at a stencil, ev at a
// point) are linear combinations of slot-gradients of point evaluations.
// Component r of a vector-valued functional applied to a function f on the
// density input space reads sum_t sign_t * d f / d x_{slot_t*d + r} (z_t).
struct GradTerm {
  Eigen::VectorXd point;  // density input point (q*d components)
  int slot = 0;
  double sign = 1.0;
};

struct LinearFunctional {
  enum class Tag { del_at_stencil, mm_minus_at_stencil, ev_at_point };

  Tag tag = Tag::ev_at_point;
  int d = 1;
  Eigen::VectorXd ev_point;      // ev only
  std::vector<GradTerm> terms;   // del / mm_minus only

  int dim() const { return tag == Tag::ev_at_point ? 1 : d; }
  int input_dim() const {
    return tag == Tag::ev_at_point ? static_cast<int>(ev_point.size())
                                   : static_cast<int>(terms.front().point.size());
  }
};

inline LinearFunctional del_functional(const StencilData& s) {
  LinearFunctional f;
  f.tag = LinearFunctional::Tag::del_at_stencil;
  f.d = s.d();
  const int q = density_slots(s.kind);
  for (int a = 0; a < q; ++a) f.terms.push_back({sub_tuple(s, a), a, 1.0});
  return f;
}

inline LinearFunctional mm_minus_functional(const StencilData& s) {
  LinearFunctional f;
  f.tag = LinearFunctional::Tag::mm_minus_at_stencil;
  f.d = s.d();
  f.terms.push_back({sub_tuple(s, 0), 0, -1.0});
  f.terms.push_back({sub_tuple(s, 2), 2, -1.0});
  return f;
}

inline LinearFunctional ev_functional(const Eigen::VectorXd& point, int d) {
  LinearFunctional f;
  f.tag = LinearFunctional::Tag::ev_at_point;
  f.d = d;
  f.ev_point = point;
  return f;
}

inline LinearFunctional ev_functional(const StencilData& base) {
  return ev_functional(sub_tuple(base, 0), base.d());
}

// Block f^1 g^2 K of size f.dim() x g.dim(): f acts on the first kernel
// argument, g on the second.
inline Eigen::MatrixXd pair_apply(const LinearFunctional& f,
                                  const LinearFunctional& g,
                                  const KernelParams& p) {
  if (f.input_dim() != g.input_dim())
    throw std::invalid_argument("pair_apply: incompatible functional payloads");
  const double s = p.inv_l2();
  const bool fev = f.tag == LinearFunctional::Tag::ev_at_point;
  const bool gev = g.tag == LinearFunctional::Tag::ev_at_point;

  if (fev && gev) {
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = k_eval(f.ev_point, g.ev_point, p);
    return out;
  }
  if (fev) {
    // row vector: dK/dy_{slot*d+r} (x = ev point)
    const int d = g.d;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(1, d);
    for (const auto& t : g.terms) {
      const Eigen::VectorXd r = f.ev_point - t.point;
      const double e = p.variance * std::exp(-0.5 * s * r.squaredNorm());
      out.row(0) += (t.sign * s * e) * r.segment(t.slot * d, d).transpose();
    }
    return out;
  }
  if (gev) {
    const int d = f.d;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, 1);
    for (const auto& t : f.terms) {
      const Eigen::VectorXd r = t.point - g.ev_point;
      const double e = p.variance * std::exp(-0.5 * s * r.squaredNorm());
      out.col(0) += (-t.sign * s * e) * r.segment(t.slot * d, d);
    }
    return out;
  }

  // d^2 K / dx_p dy_q = (delta_pq / l^2 - r_p r_q / l^4) K with r = x - y
  const int d = f.d;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (const auto& tf : f.terms) {
    for (const auto& tg : g.terms) {
      const Eigen::VectorXd r = tf.point - tg.point;
      const double e = p.variance * std::exp(-0.5 * s * r.squaredNorm());
      const double w = tf.sign * tg.sign * e;
      out.noalias() -= (w * s * s) * (r.segment(tf.slot * d, d) *
                                      r.segment(tg.slot * d, d).transpose());
      if (tf.slot == tg.slot)
        out.diagonal().array() += w * s;
    }
  }
  return out;
}

enum class KernelSide { first, second };

// f applied to the chosen kernel argument with the other argument fixed at
// `other`. Returns a column of length f.dim().
inline Eigen::VectorXd apply_functional(KernelSide side, const LinearFunctional& f,
                                        const Eigen::VectorXd& other,
                                        const KernelParams& p) {
  const LinearFunctional ev = ev_functional(other, f.d);
  if (side == KernelSide::first) return pair_apply(f, ev, p).col(0);
  return pair_apply(ev, f, p).row(0).transpose();
}

}  // namespace delgp
