#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "delgp/gp.hpp"

namespace delgp {

// Models trained on strictly growing prefixes of a fixed stencil stream,
// all sharing the normalization data.
inline std::vector<std::shared_ptr<const TrainedModel>> nested_fits(
    const std::vector<StencilData>& stream, const StencilData& base,
    const Eigen::VectorXd& p_b, double c_b, const KernelParams& kernel,
    const std::vector<int>& sizes, double jitter = 0) {
  for (size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 0 || sizes[k] > static_cast<int>(stream.size()))
      throw std::invalid_argument("nested_fits: size exceeds stream length");
    if (k > 0 && sizes[k] < sizes[k - 1])
      throw std::invalid_argument("nested_fits: sizes must be nondecreasing");
  }
  std::vector<std::shared_ptr<const TrainedModel>> models;
  models.reserve(sizes.size());
  for (int sz : sizes) {
    std::vector<StencilData> prefix(stream.begin(), stream.begin() + sz);
    models.push_back(std::make_shared<TrainedModel>(
        fit(prefix, base, p_b, c_b, kernel, jitter, base.kind)));
  }
  return models;
}

// Sampled surrogate for the C1 distance: max |a-b| over probes plus max
// gradient deviation over probes and slots.
inline double c1_distance(const Density& a, const Density& b,
                          const std::vector<Eigen::VectorXd>& probes) {
  if (a.input_dim() != b.input_dim())
    throw std::invalid_argument("c1_distance: incompatible densities");
  double val = 0, grad = 0;
  for (const auto& x : probes) {
    val = std::max(val, std::abs(a.eval(x) - b.eval(x)));
    grad = std::max(grad,
                    (a.gradient(x) - b.gradient(x)).lpNorm<Eigen::Infinity>());
  }
  return val + grad;
}

struct ConvergenceReport {
  std::vector<int> sizes;
  std::vector<double> rkhs_norms;
  std::vector<double> c1_distances_to_final;
  std::vector<double> max_del_residual_on_holdout;
};

inline ConvergenceReport convergence_report(
    const std::vector<std::shared_ptr<const TrainedModel>>& models,
    const std::vector<Eigen::VectorXd>& probes,
    const std::vector<StencilData>& holdout) {
  if (models.empty()) throw std::invalid_argument("convergence_report: no models");
  ConvergenceReport rep;
  const DensityPtr final_density = posterior_density(models.back());
  for (const auto& m : models) {
    rep.sizes.push_back(static_cast<int>(m->stencils.size()));
    rep.rkhs_norms.push_back(rkhs_norm(*m));
    const DensityPtr dens = posterior_density(m);
    rep.c1_distances_to_final.push_back(c1_distance(*dens, *final_density, probes));
    double worst = 0;
    for (const auto& s : holdout)
      worst = std::max(worst, del(*dens, s).lpNorm<Eigen::Infinity>());
    rep.max_del_residual_on_holdout.push_back(worst);
  }
  return rep;
}

inline nlohmann::json report_to_json(const ConvergenceReport& r) {
  return nlohmann::json{{"sizes", r.sizes},
                        {"rkhs_norms", r.rkhs_norms},
                        {"c1_distances_to_final", r.c1_distances_to_final},
                        {"max_del_residual_on_holdout", r.max_del_residual_on_holdout}};
}

inline ConvergenceReport report_from_json(const nlohmann::json& j) {
  ConvergenceReport r;
  r.sizes = j.at("sizes").get<std::vector<int>>();
  r.rkhs_norms = j.at("rkhs_norms").get<std::vector<double>>();
  r.c1_distances_to_final = j.at("c1_distances_to_final").get<std::vector<double>>();
  r.max_del_residual_on_holdout =
      j.at("max_del_residual_on_holdout").get<std::vector<double>>();
  return r;
}

// Probe points drawn from observed-stencil sub-tuples (the documented
// training hull).
inline std::vector<Eigen::VectorXd> stencil_probes(
    const std::vector<StencilData>& stencils, size_t max_probes = 200) {
  std::vector<Eigen::VectorXd> probes;
  if (stencils.empty()) return probes;
  const int q = density_slots(stencils.front().kind);
  const size_t total = stencils.size() * q;
  const size_t stride = std::max<size_t>(1, total / max_probes);
  for (size_t k = 0; k < total; k += stride)
    probes.push_back(sub_tuple(stencils[k / q], static_cast<int>(k % q)));
  return probes;
}

}  // namespace delgp
