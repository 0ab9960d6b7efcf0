#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "delgp/gp.hpp"

namespace delgp {

// "i,j,component,sigma" rows over interior time levels, newline-terminated.
inline void write_sigma_csv(const UncertaintyField& u, std::ostream& os) {
  os << "i,j,component,sigma\n";
  char buf[64];
  const int d = u.mesh.d;
  for (int i = 1; i <= u.mesh.nt - 2; ++i)
    for (int j = 0; j < u.mesh.nx; ++j)
      for (int c = 0; c < d; ++c) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g\n", i, j, c,
                      u.sigma(i - 1, j * d + c));
        os << buf;
      }
}

inline void write_sigma_csv(const UncertaintyField& u, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_sigma_csv(u, os);
}

// Parses the CSV back into (nt-2) x (nx*d) sigma values given the mesh.
inline UncertaintyField read_sigma_csv(std::istream& is, const Mesh& mesh) {
  std::string line;
  if (!std::getline(is, line) || line != "i,j,component,sigma")
    throw std::runtime_error("sigma csv: bad header");
  UncertaintyField u{mesh, Eigen::MatrixXd::Zero(mesh.nt - 2, mesh.nx * mesh.d)};
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    int i, j, c;
    double sigma;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf", &i, &j, &c, &sigma) != 4)
      throw std::runtime_error("sigma csv: bad row: " + line);
    if (i < 1 || i > mesh.nt - 2 || j < 0 || j >= mesh.nx || c < 0 || c >= mesh.d)
      throw std::runtime_error("sigma csv: index out of range: " + line);
    u.sigma(i - 1, j * mesh.d + c) = sigma;
  }
  return u;
}

inline UncertaintyField read_sigma_csv(const std::string& path, const Mesh& mesh) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_sigma_csv(is, mesh);
}

}  // namespace delgp
