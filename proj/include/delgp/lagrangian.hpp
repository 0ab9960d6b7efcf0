#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "delgp/density.hpp"
#include "delgp/mesh_field.hpp"

namespace delgp {

// Stencil-column indices of the q sub-tuples entering DEL. Sub-tuple a is the
// slot arrangement whose slot-a entry is the stencil center.
inline const std::vector<std::array<int, 4>>& sub_tuple_indices(StencilKind k) {
  static const std::vector<std::array<int, 4>> three = {
      {0, 1, 2, -1}, {3, 0, 4, -1}, {5, 6, 0, -1}};
  static const std::vector<std::array<int, 4>> four = {
      {0, 1, 2, 3}, {4, 0, 5, 2}, {6, 7, 0, 1}, {8, 6, 4, 0}};
  return k == StencilKind::three_point ? three : four;
}

// Flattened slot values of sub-tuple a of a stencil (a density input point).
inline Eigen::VectorXd sub_tuple(const StencilData& s, int a) {
  const auto& idx = sub_tuple_indices(s.kind)[a];
  const int q = density_slots(s.kind), d = s.d();
  Eigen::VectorXd x(q * d);
  for (int slot = 0; slot < q; ++slot) x.segment(slot * d, d) = s.points.col(idx[slot]);
  return x;
}

inline void check_kinds(const Density& L, const StencilData& s) {
  if (L.kind() != s.kind)
    throw std::invalid_argument("density/stencil kind mismatch");
  if (L.components() != s.d())
    throw std::invalid_argument("density/stencil component mismatch");
}

// Discrete Euler-Lagrange operator: sum over sub-tuples of the slot-a
// gradient, evaluated at sub-tuple a.
inline Eigen::VectorXd del(const Density& L, const StencilData& s) {
  check_kinds(L, s);
  const int q = L.slots(), d = L.components();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  for (int a = 0; a < q; ++a) out += L.grad_slot(sub_tuple(s, a), a);
  return out;
}

inline Eigen::VectorXd del_three_point(const Density& L, const StencilData& s) {
  if (L.kind() != StencilKind::three_point || s.kind != StencilKind::three_point)
    throw std::invalid_argument("del_three_point: kind mismatch");
  return del(L, s);
}

inline Eigen::VectorXd del_four_point(const Density& L, const StencilData& s) {
  if (L.kind() != StencilKind::four_point || s.kind != StencilKind::four_point)
    throw std::invalid_argument("del_four_point: kind mismatch");
  return del(L, s);
}

// Discrete conjugate-momentum functionals. Three-point densities are treated
// as four-point with vacuous fourth slot, so for them Mm+ keeps only the
// slot-2 term and Mm- keeps slots 1 and 3. del == mm_plus - mm_minus.
inline Eigen::VectorXd mm_plus(const Density& L, const StencilData& s) {
  check_kinds(L, s);
  Eigen::VectorXd out = L.grad_slot(sub_tuple(s, 1), 1);
  if (L.kind() == StencilKind::four_point) out += L.grad_slot(sub_tuple(s, 3), 3);
  return out;
}

inline Eigen::VectorXd mm_minus(const Density& L, const StencilData& s) {
  check_kinds(L, s);
  return -L.grad_slot(sub_tuple(s, 0), 0) - L.grad_slot(sub_tuple(s, 2), 2);
}

// One component function of a discrete divergence, R^d -> R with derivatives.
struct ScalarFn {
  std::function<double(const Eigen::VectorXd&)> f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess;
};

inline ScalarFn linear_fn(const Eigen::VectorXd& w) {
  const int d = static_cast<int>(w.size());
  return ScalarFn{
      [w](const Eigen::VectorXd& u) { return w.dot(u); },
      [w](const Eigen::VectorXd&) { return w; },
      [d](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(d, d).eval(); }};
}

// Telescopic slot pairs of div_t F: component F_k enters as F_k(slot first) -
// F_k(slot second).
inline const std::vector<std::pair<int, int>>& divergence_pairs(StencilKind k) {
  static const std::vector<std::pair<int, int>> three = {{0, 1}, {0, 2}, {1, 2}};
  static const std::vector<std::pair<int, int>> four = {{0, 1}, {0, 2}, {0, 3},
                                                        {1, 2}, {1, 3}, {2, 3}};
  return k == StencilKind::three_point ? three : four;
}

// rho * L + div_t F + c; div_t F is a null Lagrangian, so DEL of the result
// is rho * DEL(L).
struct DivergenceSpec {
  StencilKind kind = StencilKind::three_point;
  std::vector<ScalarFn> components;  // 3 for three_point, 6 for four_point
  double c = 0;
  double rho = 1;

  void validate() const {
    const size_t need = kind == StencilKind::three_point ? 3 : 6;
    if (components.size() != need)
      throw std::invalid_argument("DivergenceSpec: wrong number of components");
    if (rho == 0) throw std::invalid_argument("DivergenceSpec: rho must be nonzero");
  }
};

class GaugeTransformedDensity : public Density {
 public:
  GaugeTransformedDensity(DensityPtr base, DivergenceSpec g)
      : Density(base->kind(), base->components()), base_(std::move(base)), g_(std::move(g)) {
    g_.validate();
    if (g_.kind != base_->kind())
      throw std::invalid_argument("gauge_transform: kind mismatch");
  }

  double eval(const Eigen::VectorXd& x) const override {
    check_input(x);
    double v = g_.rho * base_->eval(x) + g_.c;
    const auto& pairs = divergence_pairs(kind());
    const int d = components();
    for (size_t k = 0; k < pairs.size(); ++k) {
      v += g_.components[k].f(x.segment(pairs[k].first * d, d));
      v -= g_.components[k].f(x.segment(pairs[k].second * d, d));
    }
    return v;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    check_input(x);
    Eigen::VectorXd grad = g_.rho * base_->gradient(x);
    const auto& pairs = divergence_pairs(kind());
    const int d = components();
    for (size_t k = 0; k < pairs.size(); ++k) {
      grad.segment(pairs[k].first * d, d) +=
          g_.components[k].grad(x.segment(pairs[k].first * d, d));
      grad.segment(pairs[k].second * d, d) -=
          g_.components[k].grad(x.segment(pairs[k].second * d, d));
    }
    return grad;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    check_input(x);
    Eigen::MatrixXd h = g_.rho * base_->hessian(x);
    const auto& pairs = divergence_pairs(kind());
    const int d = components();
    for (size_t k = 0; k < pairs.size(); ++k) {
      h.block(pairs[k].first * d, pairs[k].first * d, d, d) +=
          g_.components[k].hess(x.segment(pairs[k].first * d, d));
      h.block(pairs[k].second * d, pairs[k].second * d, d, d) -=
          g_.components[k].hess(x.segment(pairs[k].second * d, d));
    }
    return h;
  }

 private:
  DensityPtr base_;
  DivergenceSpec g_;
};

inline DensityPtr gauge_transform(DensityPtr L, DivergenceSpec g) {
  return std::make_shared<GaugeTransformedDensity>(std::move(L), std::move(g));
}

// Gauge-equivalent density with eval(first sub-tuple of base) == c_b and
// mm_minus at base == p_b. F_1 linear plus a constant shift; rho stays 1, so
// DEL is unchanged.
inline DensityPtr normalize_density(DensityPtr L, const StencilData& base,
                                    const Eigen::VectorXd& p_b, double c_b) {
  check_kinds(*L, base);
  const int d = L->components();
  if (p_b.size() != d) throw std::invalid_argument("normalize_density: p_b dimension");

  const Eigen::VectorXd p0 = mm_minus(*L, base);
  const double c0 = L->eval(sub_tuple(base, 0));
  const Eigen::VectorXd w = p0 - p_b;
  // base stencil's u and u^+ are columns 0 and 1 for both kinds
  const Eigen::VectorXd u = base.points.col(0), up = base.points.col(1);

  DivergenceSpec g;
  g.kind = L->kind();
  const size_t n = g.kind == StencilKind::three_point ? 3 : 6;
  g.components.assign(n, linear_fn(Eigen::VectorXd::Zero(d)));
  g.components[0] = linear_fn(w);
  g.c = c_b - c0 + w.dot(up - u);
  g.rho = 1;
  return gauge_transform(std::move(L), std::move(g));
}

}  // namespace delgp
