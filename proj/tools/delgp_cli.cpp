// Command-line driver: generate training data, train a model, predict by
// forward propagation, map uncertainty, and run convergence studies.
//
// Commands: generate, train, predict, uq, converge.
// Common flags: --config PATH, --out DIR, --seed N (flag > config > default).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delgp/convergence.hpp"
#include "delgp/experiments.hpp"
#include "delgp/gp.hpp"
#include "delgp/integrator.hpp"
#include "delgp/io_csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace delgp;

namespace {

constexpr int kExitUsage = 1;      // config / file / validation problems
constexpr int kExitNumerical = 2;  // Newton divergence, conditioning failure

struct RunConfig {
  std::string experiment = "wave";
  Mesh mesh;
  SamplerSpec sampler;
  KernelParams kernel;
  NewtonConfig newton;
  std::string base = "zero";  // "zero" or a path to a stencil JSON
  Eigen::VectorXd p_b;
  double c_b = 1.0;
  double jitter = 0.0;
  unsigned long long seed = 0;
  int n_fields = 0;
  std::string out = ".";

  StencilKind kind() const {
    return experiment == "schrodinger" ? StencilKind::four_point
                                       : StencilKind::three_point;
  }
};

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  return j;
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  c.experiment = j.value("experiment", std::string("wave"));
  if (c.experiment != "wave" && c.experiment != "schrodinger" &&
      c.experiment != "custom")
    throw std::runtime_error("config: unknown experiment \"" + c.experiment + "\"");

  if (c.experiment == "schrodinger") {
    c.mesh = schrodinger_mesh();
    c.n_fields = 30;
    // wider kernel: keeps the posterior mean well-behaved beyond the convex
    // hull of the training tuples, which Newton visits during propagation
    c.kernel.lengthscale = 2.0;
  } else {
    c.mesh = wave_mesh();
    c.n_fields = 2;
    // training fields spanning roughly [-1, 1] so unit-amplitude initial
    // data stays inside the sampled range
    c.sampler.amplitude = 2.0;
  }
  if (j.contains("mesh")) {
    const auto& m = j.at("mesh");
    c.mesh.dt = m.value("dt", c.mesh.dt);
    c.mesh.dx = m.value("dx", c.mesh.dx);
    c.mesh.nt = m.value("nt", c.mesh.nt);
    c.mesh.nx = m.value("nx", c.mesh.nx);
    c.mesh.d = m.value("d", c.mesh.d);
  }
  c.mesh.validate();

  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    c.sampler.max_mode = s.value("max_mode", c.sampler.max_mode);
    c.sampler.amplitude_decay = s.value("amplitude_decay", c.sampler.amplitude_decay);
    c.sampler.amplitude = s.value("amplitude", c.sampler.amplitude);
  }
  c.sampler.validate();

  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    c.kernel.lengthscale = k.value("lengthscale", c.kernel.lengthscale);
    c.kernel.variance = k.value("variance", c.kernel.variance);
  }
  c.kernel.validate();

  if (j.contains("newton")) {
    const auto& n = j.at("newton");
    c.newton.tol = n.value("tol", c.newton.tol);
    c.newton.max_iter = n.value("max_iter", c.newton.max_iter);
  }
  c.newton.validate();

  c.p_b = Eigen::VectorXd::Ones(c.mesh.d);
  if (j.contains("normalization")) {
    const auto& n = j.at("normalization");
    c.base = n.value("base", c.base);
    c.c_b = n.value("c_b", c.c_b);
    if (n.contains("p_b")) {
      const auto v = n.at("p_b").get<std::vector<double>>();
      if (static_cast<int>(v.size()) != c.mesh.d)
        throw std::runtime_error("config: p_b must have d components");
      c.p_b = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    }
  }

  c.jitter = j.value("jitter", c.jitter);
  c.seed = j.value("seed", c.seed);
  c.n_fields = j.value("n_fields", c.n_fields);
  c.out = j.value("out", c.out);
  if (c.n_fields < 0) throw std::runtime_error("config: n_fields must be >= 0");
  return c;
}

StencilData load_base(const RunConfig& c) {
  if (c.base == "zero") return zero_base(c.kind(), c.mesh.d);
  return stencil_from_json(load_json(c.base), c.kind(), c.mesh.d);
}

DiscreteField generate_field(const RunConfig& c, std::mt19937_64& rng) {
  if (c.experiment == "schrodinger") {
    SchrodingerSpec spec;
    spec.dt = c.mesh.dt;
    spec.dx = c.mesh.dx;
    return generate_schrodinger_field(spec, c.mesh, c.sampler, rng, c.newton);
  }
  WaveSpec spec;
  spec.dt = c.mesh.dt;
  spec.dx = c.mesh.dx;
  return generate_wave_field(spec, c.mesh, c.sampler, rng, c.newton);
}

std::vector<StencilData> stencils_from_manifest(const std::string& manifest_path,
                                                StencilKind kind) {
  const json manifest = load_json(manifest_path);
  if (!manifest.contains("fields"))
    throw std::runtime_error("manifest: missing key \"fields\"");
  const fs::path dir = fs::path(manifest_path).parent_path();
  std::vector<StencilData> stencils;
  for (const auto& entry : manifest.at("fields")) {
    fs::path p = entry.get<std::string>();
    if (p.is_relative()) p = dir / p;
    const DiscreteField f = read_field(p.string());
    auto s = extract_stencils(f, kind);
    stencils.insert(stencils.end(), s.begin(), s.end());
  }
  return stencils;
}

int cmd_generate(const RunConfig& c) {
  fs::create_directories(c.out);
  std::mt19937_64 rng(c.seed);
  json manifest;
  manifest["experiment"] = c.experiment;
  manifest["kind"] = to_string(c.kind());
  json files = json::array(), counts = json::array();
  size_t total = 0;
  for (int k = 0; k < c.n_fields; ++k) {
    const DiscreteField f = generate_field(c, rng);
    char name[32];
    std::snprintf(name, sizeof(name), "field_%03d.json", k);
    write_field(f, (fs::path(c.out) / name).string());
    const size_t n = extract_stencils(f, c.kind()).size();
    files.push_back(name);
    counts.push_back(n);
    total += n;
  }
  manifest["fields"] = std::move(files);
  manifest["stencil_counts"] = std::move(counts);
  manifest["total_stencils"] = total;
  std::ofstream os(fs::path(c.out) / "manifest.json");
  os << manifest.dump(1) << "\n";
  std::cout << "generated " << c.n_fields << " fields, " << total << " stencils\n";
  return 0;
}

int cmd_train(const RunConfig& c, const std::string& manifest_path,
              const std::string& model_out) {
  const auto stencils = stencils_from_manifest(manifest_path, c.kind());
  const StencilData base = load_base(c);
  const auto model = std::make_shared<const TrainedModel>(
      fit(stencils, base, c.p_b, c.c_b, c.kernel, c.jitter, c.kind()));
  fs::create_directories(fs::path(model_out).parent_path().empty()
                             ? "."
                             : fs::path(model_out).parent_path().string());
  write_model(*model, model_out);
  std::cout << "M " << model->stencils.size() << "\n"
            << "jitter " << model->jitter << "\n"
            << "max_training_del_residual " << max_training_del_residual(model) << "\n"
            << "rkhs_norm " << rkhs_norm(*model) << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& initial_path,
                int n_steps, const std::string& out_path,
                const std::optional<std::string>& reference_path,
                const NewtonConfig& newton) {
  const auto model = std::make_shared<const TrainedModel>(read_model(model_path));
  const DiscreteField init = read_field(initial_path);
  if (init.mesh.d != model->d)
    throw std::runtime_error("predict: field components incompatible with model");
  if (n_steps < 0) throw std::runtime_error("predict: steps must be >= 0");

  const TemporalLagrangian TL = temporal_lagrangian(posterior_density(model), init.mesh);
  const PropagationResult r = propagate(TL, init.slice(0), init.slice(1), n_steps,
                                        newton, init.mesh.dt, init.mesh.dx);
  write_field(r.field, out_path);
  std::cout << "newton_iterations";
  for (int it : r.newton_iters) std::cout << " " << it;
  std::cout << "\n";
  if (reference_path) {
    const DiscreteField ref = read_field(*reference_path);
    std::cout << "l2_error " << l2_error(r.field, ref) << "\n";
  }
  return 0;
}

int cmd_uq(const std::string& model_path, const std::string& field_path,
           const std::string& out_path) {
  const TrainedModel model = read_model(model_path);
  const DiscreteField field = read_field(field_path);
  const UncertaintyField u = sigma_del_map(model, field);
  write_sigma_csv(u, out_path);
  std::cout << "max_sigma " << u.max_sigma() << "\n";
  return 0;
}

int cmd_converge(const RunConfig& c, const std::string& manifest_path,
                 const std::vector<int>& sizes, const std::string& report_out) {
  if (sizes.empty()) throw std::runtime_error("converge: at least one size required");
  const auto stream = stencils_from_manifest(manifest_path, c.kind());
  for (int s : sizes)
    if (s > static_cast<int>(stream.size()))
      throw std::runtime_error("converge: size exceeds available stencils (" +
                               std::to_string(stream.size()) + ")");
  const StencilData base = load_base(c);
  const auto models =
      nested_fits(stream, base, c.p_b, c.c_b, c.kernel, sizes, c.jitter);
  const auto probes = stencil_probes(
      {stream.begin(), stream.begin() + sizes.back()}, 200);
  const std::vector<StencilData> holdout(stream.begin() + sizes.back(), stream.end());
  const ConvergenceReport rep = convergence_report(models, probes, holdout);

  std::ofstream os(report_out);
  if (!os) throw std::runtime_error("cannot open for writing: " + report_out);
  os << report_to_json(rep).dump(1) << "\n";

  std::printf("%8s %14s %18s %18s\n", "size", "rkhs_norm", "c1_dist_to_final",
              "holdout_residual");
  for (size_t k = 0; k < rep.sizes.size(); ++k)
    std::printf("%8d %14.8f %18.10f %18.10f\n", rep.sizes[k], rep.rkhs_norms[k],
                rep.c1_distances_to_final[k],
                holdout.empty() ? 0.0 : rep.max_del_residual_on_holdout[k]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn discrete Lagrangian densities from mesh data and predict "
               "solutions with a variational integrator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, manifest_path, model_path, field_path;
  std::string initial_path, out_path, reference_path, sizes_arg;
  long long seed_flag = -1;
  int n_steps = 0;

  auto* gen = app.add_subcommand("generate", "sample and propagate training fields");
  gen->add_option("--config", config_path, "config JSON")->required();
  gen->add_option("--out", out_dir, "output directory");
  gen->add_option("--seed", seed_flag, "rng seed (overrides config)");

  auto* train = app.add_subcommand("train", "fit a model to a stencil manifest");
  train->add_option("--config", config_path, "config JSON")->required();
  train->add_option("--manifest", manifest_path, "manifest from generate")->required();
  train->add_option("--out", out_path, "model output path");

  auto* predict = app.add_subcommand("predict", "propagate initial data with a model");
  predict->add_option("--model", model_path, "trained model JSON")->required();
  predict->add_option("--initial", initial_path, "field whose first two levels seed "
                      "the propagation")->required();
  predict->add_option("--steps", n_steps, "number of forward steps")->required();
  predict->add_option("--out", out_path, "predicted field output path");
  predict->add_option("--reference", reference_path, "reference field for the error");

  auto* uq = app.add_subcommand("uq", "standard deviation of the field equations");
  uq->add_option("--model", model_path, "trained model JSON")->required();
  uq->add_option("--field", field_path, "field JSON")->required();
  uq->add_option("--out", out_path, "sigma CSV output path");

  auto* conv = app.add_subcommand("converge", "nested-data convergence study");
  conv->add_option("--config", config_path, "config JSON")->required();
  conv->add_option("--manifest", manifest_path, "manifest from generate")->required();
  conv->add_option("--sizes", sizes_arg, "comma-separated nested sizes")->required();
  conv->add_option("--out", out_path, "report output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      RunConfig c = parse_config(load_json(config_path));
      if (!out_dir.empty()) c.out = out_dir;
      if (seed_flag >= 0) c.seed = static_cast<unsigned long long>(seed_flag);
      return cmd_generate(c);
    }
    if (train->parsed()) {
      RunConfig c = parse_config(load_json(config_path));
      return cmd_train(c, manifest_path,
                       out_path.empty() ? "model.json" : out_path);
    }
    if (predict->parsed()) {
      NewtonConfig newton;
      return cmd_predict(model_path, initial_path, n_steps,
                         out_path.empty() ? "predicted.json" : out_path,
                         reference_path.empty()
                             ? std::nullopt
                             : std::optional<std::string>(reference_path),
                         newton);
    }
    if (uq->parsed())
      return cmd_uq(model_path, field_path, out_path.empty() ? "sigma.csv" : out_path);
    if (conv->parsed()) {
      RunConfig c = parse_config(load_json(config_path));
      std::vector<int> sizes;
      for (size_t pos = 0; pos < sizes_arg.size();) {
        size_t next = sizes_arg.find(',', pos);
        if (next == std::string::npos) next = sizes_arg.size();
        sizes.push_back(std::stoi(sizes_arg.substr(pos, next - pos)));
        pos = next + 1;
      }
      return cmd_converge(c, manifest_path, sizes,
                          out_path.empty() ? "report.json" : out_path);
    }
  } catch (const NewtonDivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConditioningError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
