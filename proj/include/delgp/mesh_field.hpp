#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace delgp {

enum class StencilKind { three_point, four_point };

inline int stencil_size(StencilKind k) {
  return k == StencilKind::three_point ? 7 : 9;
}

inline int density_slots(StencilKind k) {
  return k == StencilKind::three_point ? 3 : 4;
}

inline std::string to_string(StencilKind k) {
  return k == StencilKind::three_point ? "three_point" : "four_point";
}

inline StencilKind stencil_kind_from_string(const std::string& s) {
  if (s == "three_point") return StencilKind::three_point;
  if (s == "four_point") return StencilKind::four_point;
  throw std::invalid_argument("unknown stencil kind: " + s);
}

// Uniform temporal-spatial mesh, periodic in space.
struct Mesh {
  double dt = 0;
  double dx = 0;
  int nt = 0;
  int nx = 0;
  int d = 1;
  bool periodic_x = true;

  void validate() const {
    if (!(dt > 0)) throw std::invalid_argument("mesh: dt must be positive");
    if (!(dx > 0)) throw std::invalid_argument("mesh: dx must be positive");
    if (nt < 3) throw std::invalid_argument("mesh: nt must be at least 3");
    if (nx < 3) throw std::invalid_argument("mesh: nx must be at least 3");
    if (d < 1) throw std::invalid_argument("mesh: d must be at least 1");
  }

  bool operator==(const Mesh& o) const {
    return dt == o.dt && dx == o.dx && nt == o.nt && nx == o.nx && d == o.d &&
           periodic_x == o.periodic_x;
  }
};

// d-component field values on a mesh. Row i holds the time slice U^i as a
// stacked vector of length nx*d (point j occupies entries [j*d, (j+1)*d)).
struct DiscreteField {
  Mesh mesh;
  Eigen::MatrixXd values;  // nt x (nx*d)

  DiscreteField() = default;
  explicit DiscreteField(const Mesh& m)
      : mesh(m), values(Eigen::MatrixXd::Zero(m.nt, m.nx * m.d)) {}

  Eigen::VectorXd value(int i, int j) const {
    return values.row(i).segment(j * mesh.d, mesh.d).transpose();
  }
  void set_value(int i, int j, const Eigen::VectorXd& v) {
    values.row(i).segment(j * mesh.d, mesh.d) = v.transpose();
  }
  Eigen::VectorXd slice(int i) const { return values.row(i).transpose(); }
  void set_slice(int i, const Eigen::VectorXd& u) {
    values.row(i) = u.transpose();
  }
};

// Ordered tuple of mesh values centered at one interior mesh point.
// Column order for three_point: (u, u+, u_+, u-, u-_+, u_-, u_-^+).
// Column order for four_point:  (u, u+, u_+, u+_+, u-, u-_+, u_-, u_-^+, u_-^-).
// Superscript +/- shifts time, subscript +/- shifts space.
struct StencilData {
  StencilKind kind = StencilKind::three_point;
  Eigen::MatrixXd points;  // d x (7 or 9)

  StencilData() = default;
  StencilData(StencilKind k, int d)
      : kind(k), points(Eigen::MatrixXd::Zero(d, stencil_size(k))) {}

  int d() const { return static_cast<int>(points.rows()); }

  bool operator==(const StencilData& o) const {
    return kind == o.kind && points.rows() == o.points.rows() &&
           points == o.points;
  }
};

// One stencil per interior mesh point, ordered by (i, j) lexicographically.
// Temporal neighbours need 1 <= i <= nt-2; spatial indices wrap.
inline std::vector<StencilData> extract_stencils(const DiscreteField& field,
                                                 StencilKind kind) {
  const Mesh& m = field.mesh;
  if (m.nt < 3) throw std::invalid_argument("insufficient time levels");
  if (!m.periodic_x)
    throw std::invalid_argument("stencil extraction requires periodic_x");

  std::vector<StencilData> out;
  out.reserve(static_cast<size_t>(m.nt - 2) * m.nx);
  auto wrap = [&](int j) { return ((j % m.nx) + m.nx) % m.nx; };
  for (int i = 1; i <= m.nt - 2; ++i) {
    for (int j = 0; j < m.nx; ++j) {
      StencilData s(kind, m.d);
      const int jp = wrap(j + 1), jm = wrap(j - 1);
      if (kind == StencilKind::three_point) {
        const int ti[7] = {i, i + 1, i, i - 1, i - 1, i, i + 1};
        const int xi[7] = {j, j, jp, j, jp, jm, jm};
        for (int c = 0; c < 7; ++c) s.points.col(c) = field.value(ti[c], xi[c]);
      } else {
        const int ti[9] = {i, i + 1, i, i + 1, i - 1, i - 1, i, i + 1, i - 1};
        const int xi[9] = {j, j, jp, jp, j, jp, jm, jm, jm};
        for (int c = 0; c < 9; ++c) s.points.col(c) = field.value(ti[c], xi[c]);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

// Measure-weighted discrete l2 norm of the difference:
// sqrt( sum_{i,j} |a^i_j - b^i_j|^2 dt dx ).
inline double l2_error(const DiscreteField& a, const DiscreteField& b) {
  if (!(a.mesh == b.mesh)) throw std::invalid_argument("l2_error: mesh mismatch");
  return std::sqrt((a.values - b.values).squaredNorm() * a.mesh.dt * a.mesh.dx);
}

namespace detail {

inline double require_number(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key))
    throw std::runtime_error("field file: missing key \"" + key + "\"");
  if (!j.at(key).is_number())
    throw std::runtime_error("field file: key \"" + key + "\" is not a number");
  return j.at(key).get<double>();
}

}  // namespace detail

inline nlohmann::json field_to_json(const DiscreteField& f) {
  nlohmann::json jm;
  jm["dt"] = f.mesh.dt;
  jm["dx"] = f.mesh.dx;
  jm["nt"] = f.mesh.nt;
  jm["nx"] = f.mesh.nx;
  jm["d"] = f.mesh.d;
  jm["periodic_x"] = f.mesh.periodic_x;
  nlohmann::json vals = nlohmann::json::array();
  for (int i = 0; i < f.mesh.nt; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < f.mesh.nx; ++j) {
      nlohmann::json pt = nlohmann::json::array();
      for (int c = 0; c < f.mesh.d; ++c) pt.push_back(f.values(i, j * f.mesh.d + c));
      row.push_back(std::move(pt));
    }
    vals.push_back(std::move(row));
  }
  return nlohmann::json{{"mesh", std::move(jm)}, {"values", std::move(vals)}};
}

inline DiscreteField field_from_json(const nlohmann::json& j) {
  if (!j.contains("mesh")) throw std::runtime_error("field file: missing key \"mesh\"");
  if (!j.contains("values")) throw std::runtime_error("field file: missing key \"values\"");
  const auto& jm = j.at("mesh");
  Mesh m;
  m.dt = detail::require_number(jm, "dt");
  m.dx = detail::require_number(jm, "dx");
  m.nt = static_cast<int>(detail::require_number(jm, "nt"));
  m.nx = static_cast<int>(detail::require_number(jm, "nx"));
  m.d = static_cast<int>(detail::require_number(jm, "d"));
  m.periodic_x = jm.value("periodic_x", true);
  m.validate();

  const auto& vals = j.at("values");
  if (!vals.is_array() || static_cast<int>(vals.size()) != m.nt)
    throw std::runtime_error("field file: \"values\" shape mismatch (nt)");
  DiscreteField f(m);
  for (int i = 0; i < m.nt; ++i) {
    const auto& row = vals.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != m.nx)
      throw std::runtime_error("field file: \"values\" shape mismatch (nx)");
    for (int jx = 0; jx < m.nx; ++jx) {
      const auto& pt = row.at(jx);
      if (!pt.is_array() || static_cast<int>(pt.size()) != m.d)
        throw std::runtime_error("field file: \"values\" shape mismatch (d)");
      for (int c = 0; c < m.d; ++c) {
        double v = pt.at(c).get<double>();
        if (!std::isfinite(v))
          throw std::runtime_error("field file: non-finite value in \"values\"");
        f.values(i, jx * m.d + c) = v;
      }
    }
  }
  return f;
}

inline void write_field(const DiscreteField& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << field_to_json(f).dump(1) << "\n";
}

inline DiscreteField read_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("field file parse error in " + path + ": " + e.what());
  }
  return field_from_json(j);
}

}  // namespace delgp
