#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "delgp/density.hpp"
#include "delgp/functionals.hpp"
#include "delgp/kernel.hpp"
#include "delgp/lagrangian.hpp"
#include "delgp/mesh_field.hpp"

namespace delgp {

class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& msg, double min_eigenvalue_estimate)
      : std::runtime_error(msg), min_eigenvalue_estimate(min_eigenvalue_estimate) {}
  double min_eigenvalue_estimate;
};

// Conditioning functionals in the fixed order: DEL at each training stencil,
// Mm- at the base stencil, ev at the base's first sub-tuple.
inline std::vector<LinearFunctional> conditioning_functionals(
    const std::vector<StencilData>& stencils, const StencilData& base) {
  std::vector<LinearFunctional> fs;
  fs.reserve(stencils.size() + 2);
  for (const auto& s : stencils) fs.push_back(del_functional(s));
  fs.push_back(mm_minus_functional(base));
  fs.push_back(ev_functional(base));
  return fs;
}

// Gram matrix of pairwise functional applications to the kernel; size
// M*d + d + 1. Upper triangle computed, mirrored, so symmetry is exact.
inline Eigen::MatrixXd assemble_theta(const std::vector<LinearFunctional>& fs,
                                      const KernelParams& kernel) {
  kernel.validate();
  const int nf = static_cast<int>(fs.size());
  std::vector<int> offset(nf + 1, 0);
  for (int i = 0; i < nf; ++i) offset[i + 1] = offset[i] + fs[i].dim();
  const int n = offset[nf];
  Eigen::MatrixXd theta(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < nf; ++i) {
    for (int j = i; j < nf; ++j) {
      const Eigen::MatrixXd block = pair_apply(fs[i], fs[j], kernel);
      theta.block(offset[i], offset[j], fs[i].dim(), fs[j].dim()) = block;
      if (j != i)
        theta.block(offset[j], offset[i], fs[j].dim(), fs[i].dim()) = block.transpose();
    }
  }
  return theta;
}

inline Eigen::MatrixXd assemble_theta(const std::vector<StencilData>& stencils,
                                      const StencilData& base,
                                      const KernelParams& kernel) {
  return assemble_theta(conditioning_functionals(stencils, base), kernel);
}

struct TrainedModel {
  StencilKind kind = StencilKind::three_point;
  int d = 1;
  std::vector<StencilData> stencils;  // deduplicated, M entries
  StencilData base;
  Eigen::VectorXd p_b;
  double c_b = 0;
  KernelParams kernel;
  double jitter = 0;
  Eigen::VectorXd y;      // (0,...,0, p_b, c_b)
  Eigen::VectorXd alpha;  // solves (Theta + jitter I) alpha = y
  double solve_residual = 0;

  std::vector<LinearFunctional> functionals;  // DEL..., Mm-, ev
  // factorization of Theta + jitter I; rebuilt on demand after deserialization
  mutable std::shared_ptr<Eigen::LDLT<Eigen::MatrixXd>> factorization_cache;

  int dim() const { return static_cast<int>(stencils.size()) * d + d + 1; }

  const Eigen::LDLT<Eigen::MatrixXd>& factorization() const {
    if (!factorization_cache) {
      Eigen::MatrixXd theta = assemble_theta(functionals, kernel);
      theta.diagonal().array() += jitter;
      factorization_cache = std::make_shared<Eigen::LDLT<Eigen::MatrixXd>>(theta);
    }
    return *factorization_cache;
  }
};

inline std::vector<StencilData> dedup_stencils(const std::vector<StencilData>& in) {
  std::vector<StencilData> out;
  out.reserve(in.size());
  for (const auto& s : in) {
    bool dup = false;
    for (const auto& t : out)
      if (t == s) { dup = true; break; }
    if (!dup) out.push_back(s);
  }
  return out;
}

namespace detail {

// Solve with one pass of iterative refinement; returns the achieved
// infinity-norm residual.
inline double refined_solve(const Eigen::MatrixXd& A,
                            const Eigen::LDLT<Eigen::MatrixXd>& fact,
                            const Eigen::VectorXd& y, Eigen::VectorXd& x) {
  x = fact.solve(y);
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXd r = y - A * x;
    const double rn = r.lpNorm<Eigen::Infinity>();
    if (rn <= 1e-14 * std::max(1.0, y.lpNorm<Eigen::Infinity>())) return rn;
    x += fact.solve(r);
  }
  return (y - A * x).lpNorm<Eigen::Infinity>();
}

}  // namespace detail

inline TrainedModel fit(const std::vector<StencilData>& raw_stencils,
                        const StencilData& base, const Eigen::VectorXd& p_b,
                        double c_b, const KernelParams& kernel, double jitter,
                        StencilKind kind) {
  kernel.validate();
  if (jitter < 0) throw std::invalid_argument("fit: jitter must be >= 0");
  const int d = base.d();
  if (base.kind != kind) throw std::invalid_argument("fit: base stencil kind mismatch");
  if (p_b.size() != d) throw std::invalid_argument("fit: p_b dimension mismatch");
  for (const auto& s : raw_stencils)
    if (s.kind != kind || s.d() != d)
      throw std::invalid_argument("fit: training stencil kind/component mismatch");

  TrainedModel m;
  m.kind = kind;
  m.d = d;
  m.stencils = dedup_stencils(raw_stencils);
  m.base = base;
  m.p_b = p_b;
  m.c_b = c_b;
  m.kernel = kernel;
  m.functionals = conditioning_functionals(m.stencils, m.base);

  const int n = m.dim();
  m.y = Eigen::VectorXd::Zero(n);
  m.y.segment(n - d - 1, d) = p_b;
  m.y[n - 1] = c_b;

  Eigen::MatrixXd theta = assemble_theta(m.functionals, kernel);
  const double scale = theta.trace() / n;
  const double jitter_cap = 1e-4 * scale;
  double j = jitter > 0 ? jitter : 1e-12 * scale;
  const double res_tol = 1e-8 * std::max(1.0, m.y.lpNorm<Eigen::Infinity>());

  Eigen::MatrixXd A;
  while (true) {
    A = theta;
    A.diagonal().array() += j;
    auto fact = std::make_shared<Eigen::LDLT<Eigen::MatrixXd>>(A);
    const bool pd = fact->info() == Eigen::Success &&
                    (fact->vectorD().array() > 0).all();
    if (pd) {
      const double res = detail::refined_solve(A, *fact, m.y, m.alpha);
      if (res <= res_tol) {
        m.jitter = j;
        m.solve_residual = res;
        m.factorization_cache = std::move(fact);
        return m;
      }
    }
    if (j >= jitter_cap) {
      const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                 A, Eigen::EigenvaluesOnly)
                                 .eigenvalues()
                                 .minCoeff();
      throw ConditioningError(
          "fit: factorization failed even at jitter " + std::to_string(j) +
              " (smallest eigenvalue estimate " + std::to_string(min_eig) + ")",
          min_eig);
    }
    j = std::min(j * 10.0, jitter_cap);
  }
}

// Posterior-mean density L_d(x) = alpha^T [functionals applied to K(.,x)],
// with analytic gradient and Hessian via kernel derivatives up to order 3.
class LearnedDensity : public Density {
 public:
  explicit LearnedDensity(std::shared_ptr<const TrainedModel> model)
      : Density(model->kind, model->d), model_(std::move(model)) {}

  double eval(const Eigen::VectorXd& x) const override {
    check_input(x);
    double v = 0;
    for_terms(x, [&](double w, double e, double s, const Eigen::VectorXd& rho,
                     const Eigen::VectorXd& aseg, int slot) {
      (void)w;
      v += e * (-s) * aseg.dot(rho.segment(slot * model_->d, model_->d));
    });
    const Eigen::VectorXd rho_ev = ev_point() - x;
    v += alpha_ev() * kval(rho_ev);
    return v;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override {
    check_input(x);
    const int d = model_->d;
    const double s = model_->kernel.inv_l2();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for_terms(x, [&](double w, double e, double sv, const Eigen::VectorXd& rho,
                     const Eigen::VectorXd& aseg, int slot) {
      (void)w;
      const double ar = aseg.dot(rho.segment(slot * d, d));
      g.segment(slot * d, d) += (sv * e) * aseg;
      g.noalias() -= (sv * sv * ar * e) * rho;
    });
    const Eigen::VectorXd rho_ev = ev_point() - x;
    g.noalias() += (alpha_ev() * s) * kval(rho_ev) * rho_ev;
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const override {
    check_input(x);
    const int d = model_->d;
    const int n = static_cast<int>(x.size());
    const double s = model_->kernel.inv_l2();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for_terms(x, [&](double w, double e, double sv, const Eigen::VectorXd& rho,
                     const Eigen::VectorXd& aseg, int slot) {
      (void)w;
      const double ar = aseg.dot(rho.segment(slot * d, d));
      const double s2e = sv * sv * e;
      h.block(slot * d, 0, d, n).noalias() += s2e * aseg * rho.transpose();
      h.block(0, slot * d, n, d).noalias() += s2e * rho * aseg.transpose();
      h.diagonal().array() += s2e * ar;
      h.noalias() -= (sv * s2e * ar) * rho * rho.transpose();
    });
    const Eigen::VectorXd rho_ev = ev_point() - x;
    const double ke = kval(rho_ev);
    h.noalias() += (alpha_ev() * s * s * ke) * rho_ev * rho_ev.transpose();
    h.diagonal().array() -= alpha_ev() * s * ke;
    return h;
  }

  const TrainedModel& model() const { return *model_; }

 private:
  double kval(const Eigen::VectorXd& rho) const {
    return model_->kernel.variance *
           std::exp(-0.5 * model_->kernel.inv_l2() * rho.squaredNorm());
  }
  const Eigen::VectorXd& ev_point() const {
    return model_->functionals.back().ev_point;
  }
  double alpha_ev() const { return model_->alpha[model_->alpha.size() - 1]; }

  // Visit every gradient term of every conditioned functional together with
  // its signed coefficient segment of alpha.
  template <class Fn>
  void for_terms(const Eigen::VectorXd& x, const Fn& fn) const {
    const int d = model_->d;
    const double s = model_->kernel.inv_l2();
    int off = 0;
    for (const auto& f : model_->functionals) {
      if (f.tag == LinearFunctional::Tag::ev_at_point) { off += 1; continue; }
      const Eigen::VectorXd aseg_base = model_->alpha.segment(off, d);
      for (const auto& t : f.terms) {
        const Eigen::VectorXd rho = t.point - x;
        const double e = kval(rho);
        const Eigen::VectorXd aseg = t.sign * aseg_base;
        fn(t.sign, e, s, rho, aseg, t.slot);
      }
      off += d;
    }
  }

  std::shared_ptr<const TrainedModel> model_;
};

inline DensityPtr posterior_density(std::shared_ptr<const TrainedModel> model) {
  return std::make_shared<LearnedDensity>(std::move(model));
}

// Cross-covariance column Phi K f of a functional against all conditioning
// functionals; n x f.dim().
inline Eigen::MatrixXd cross_block(const TrainedModel& m, const LinearFunctional& f) {
  Eigen::MatrixXd out(m.dim(), f.dim());
  int off = 0;
  for (const auto& g : m.functionals) {
    out.block(off, 0, g.dim(), f.dim()) = pair_apply(g, f, m.kernel);
    off += g.dim();
  }
  return out;
}

// Conditional covariance block psi K phi - (psi K Phi^T) Theta^-1 (Phi K phi).
inline Eigen::MatrixXd posterior_cov(const TrainedModel& m, const LinearFunctional& f,
                                     const LinearFunctional& g) {
  const Eigen::MatrixXd prior = pair_apply(f, g, m.kernel);
  const Eigen::MatrixXd vf = cross_block(m, f);
  const Eigen::MatrixXd vg = cross_block(m, g);
  return prior - vf.transpose() * m.factorization().solve(vg);
}

struct UncertaintyField {
  Mesh mesh;
  Eigen::MatrixXd sigma;  // (nt-2) x (nx*d), row i-1 holds interior level i

  double max_sigma() const { return sigma.size() ? sigma.maxCoeff() : 0.0; }
};

// Standard deviation of DEL(xi^M) per interior mesh point and component.
inline UncertaintyField sigma_del_map(const TrainedModel& m, const DiscreteField& field) {
  if (field.mesh.d != m.d)
    throw std::invalid_argument("sigma_del_map: component mismatch");
  const auto stencils = extract_stencils(field, m.kind);
  UncertaintyField out{field.mesh,
                       Eigen::MatrixXd::Zero(field.mesh.nt - 2, field.mesh.nx * m.d)};
  const auto& fact = m.factorization();
  const int n = m.dim(), d = m.d;
  const int count = static_cast<int>(stencils.size());
  const int chunk = std::max(1, 512 / std::max(1, d));
  for (int begin = 0; begin < count; begin += chunk) {
    const int nb = std::min(chunk, count - begin);
    Eigen::MatrixXd rhs(n, nb * d);
    std::vector<LinearFunctional> fs(nb);
#pragma omp parallel for schedule(dynamic, 4)
    for (int b = 0; b < nb; ++b) {
      fs[b] = del_functional(stencils[begin + b]);
      rhs.middleCols(b * d, d) = cross_block(m, fs[b]);
    }
    const Eigen::MatrixXd sol = fact.solve(rhs);
    for (int b = 0; b < nb; ++b) {
      const Eigen::MatrixXd prior = pair_apply(fs[b], fs[b], m.kernel);
      const Eigen::MatrixXd cov =
          prior - rhs.middleCols(b * d, d).transpose() * sol.middleCols(b * d, d);
      const int k = begin + b;
      const int i = k / field.mesh.nx, j = k % field.mesh.nx;
      for (int c = 0; c < d; ++c)
        out.sigma(i, j * d + c) = std::sqrt(std::max(0.0, cov(c, c)));
    }
  }
  return out;
}

// RKHS norm of the posterior mean, sqrt(y^T alpha).
inline double rkhs_norm(const TrainedModel& m) {
  const double q = m.y.dot(m.alpha);
  if (q < -1e-12)
    throw ConditioningError("rkhs_norm: negative quadratic form " + std::to_string(q), q);
  return std::sqrt(std::max(0.0, q));
}

// Max infinity-norm of DEL of the posterior mean over the training stencils.
inline double max_training_del_residual(std::shared_ptr<const TrainedModel> model) {
  const auto& stencils = model->stencils;
  const LearnedDensity ld(std::move(model));
  double worst = 0;
  for (const auto& s : stencils)
    worst = std::max(worst, del(ld, s).lpNorm<Eigen::Infinity>());
  return worst;
}

inline nlohmann::json stencil_to_json(const StencilData& s) {
  nlohmann::json pts = nlohmann::json::array();
  for (int c = 0; c < s.points.cols(); ++c) {
    nlohmann::json col = nlohmann::json::array();
    for (int r = 0; r < s.points.rows(); ++r) col.push_back(s.points(r, c));
    pts.push_back(std::move(col));
  }
  return pts;
}

inline StencilData stencil_from_json(const nlohmann::json& j, StencilKind kind, int d) {
  StencilData s(kind, d);
  if (static_cast<int>(j.size()) != stencil_size(kind))
    throw std::runtime_error("model file: stencil point count mismatch");
  for (int c = 0; c < s.points.cols(); ++c)
    for (int r = 0; r < d; ++r) s.points(r, c) = j.at(c).at(r).get<double>();
  return s;
}

inline nlohmann::json model_to_json(const TrainedModel& m) {
  nlohmann::json j;
  j["kind"] = to_string(m.kind);
  j["d"] = m.d;
  j["kernel"] = {{"lengthscale", m.kernel.lengthscale}, {"variance", m.kernel.variance}};
  j["jitter"] = m.jitter;
  j["base"] = stencil_to_json(m.base);
  j["p_b"] = std::vector<double>(m.p_b.data(), m.p_b.data() + m.p_b.size());
  j["c_b"] = m.c_b;
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : m.stencils) st.push_back(stencil_to_json(s));
  j["stencils"] = std::move(st);
  j["alpha"] = std::vector<double>(m.alpha.data(), m.alpha.data() + m.alpha.size());
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  TrainedModel m;
  m.kind = stencil_kind_from_string(j.at("kind").get<std::string>());
  m.d = j.at("d").get<int>();
  m.kernel.lengthscale = j.at("kernel").at("lengthscale").get<double>();
  m.kernel.variance = j.at("kernel").at("variance").get<double>();
  m.jitter = j.at("jitter").get<double>();
  m.base = stencil_from_json(j.at("base"), m.kind, m.d);
  const auto pb = j.at("p_b").get<std::vector<double>>();
  m.p_b = Eigen::Map<const Eigen::VectorXd>(pb.data(), pb.size());
  m.c_b = j.at("c_b").get<double>();
  for (const auto& s : j.at("stencils")) m.stencils.push_back(stencil_from_json(s, m.kind, m.d));
  const auto al = j.at("alpha").get<std::vector<double>>();
  m.alpha = Eigen::Map<const Eigen::VectorXd>(al.data(), al.size());
  if (m.alpha.size() != m.dim())
    throw std::runtime_error("model file: alpha length mismatch");
  m.functionals = conditioning_functionals(m.stencils, m.base);
  const int n = m.dim();
  m.y = Eigen::VectorXd::Zero(n);
  m.y.segment(n - m.d - 1, m.d) = m.p_b;
  m.y[n - 1] = m.c_b;
  return m;
}

inline void write_model(const TrainedModel& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << model_to_json(m).dump(1) << "\n";
}

inline TrainedModel read_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("model file parse error in " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace delgp
