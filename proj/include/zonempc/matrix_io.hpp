#pragma once

// Plain-text matrix bundle format:
//
//   # comment
//   matrix <name> <rows> <cols>
//   <row 0 values separated by spaces>
//   ...
//   scalar <name> <value>
//
// Values are written with 17 significant digits so a dump/load round trip is
// exact.

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "zonempc/linear_model.hpp"

namespace zonempc {

struct MatrixBundle {
  std::vector<std::pair<std::string, Eigen::MatrixXd>> matrices;
  std::vector<std::pair<std::string, double>> scalars;

  void add(const std::string& name, const Eigen::MatrixXd& m) { matrices.emplace_back(name, m); }
  void add_scalar(const std::string& name, double v) { scalars.emplace_back(name, v); }
  const Eigen::MatrixXd& matrix(const std::string& name) const;
  double scalar(const std::string& name) const;
  bool has_matrix(const std::string& name) const;
  bool has_scalar(const std::string& name) const;
};

std::string format_number(double v);

void write_matrix_text(std::ostream& out, const MatrixBundle& bundle,
                       const std::string& comment = "");
MatrixBundle read_matrix_text(std::istream& in);

void save_matrix_text(const std::string& path, const MatrixBundle& bundle,
                      const std::string& comment = "");
MatrixBundle load_matrix_text(const std::string& path);

MatrixBundle to_bundle(const StateSpaceModel& ss);
StateSpaceModel model_from_bundle(const MatrixBundle& bundle);

}  // namespace zonempc
