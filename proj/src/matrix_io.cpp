#include "zonempc/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "zonempc/errors.hpp"

namespace zonempc {

const Eigen::MatrixXd& MatrixBundle::matrix(const std::string& name) const {
  for (const auto& [n, m] : matrices)
    if (n == name) return m;
  throw NotFoundError("matrix '" + name + "' not present");
}

double MatrixBundle::scalar(const std::string& name) const {
  for (const auto& [n, v] : scalars)
    if (n == name) return v;
  throw NotFoundError("scalar '" + name + "' not present");
}

bool MatrixBundle::has_matrix(const std::string& name) const {
  for (const auto& [n, m] : matrices)
    if (n == name) return true;
  return false;
}

bool MatrixBundle::has_scalar(const std::string& name) const {
  for (const auto& [n, v] : scalars)
    if (n == name) return true;
  return false;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_text(std::ostream& out, const MatrixBundle& bundle, const std::string& comment) {
  if (!comment.empty()) {
    std::istringstream lines(comment);
    std::string line;
    while (std::getline(lines, line)) out << "# " << line << "\n";
  }
  for (const auto& [name, m] : bundle.matrices) {
    out << "matrix " << name << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_number(m(r, c));
      out << "\n";
    }
  }
  for (const auto& [name, v] : bundle.scalars) out << "scalar " << name << " " << format_number(v) << "\n";
}

MatrixBundle read_matrix_text(std::istream& in) {
  MatrixBundle bundle;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw InvalidConfigError("matrix text line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind, name;
    ls >> kind >> name;
    if (kind == "matrix") {
      long rows = -1, cols = -1;
      ls >> rows >> cols;
      if (!ls || rows < 0 || cols < 0) fail("bad matrix header");
      Eigen::MatrixXd m(rows, cols);
      for (long r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) fail("unexpected end of file");
        ++line_no;
        std::istringstream rs(line);
        for (long c = 0; c < cols; ++c) {
          std::string tok;
          if (!(rs >> tok)) fail("too few values in row");
          try {
            m(r, c) = std::stod(tok);
          } catch (const std::exception&) {
            fail("bad number '" + tok + "'");
          }
        }
        std::string extra;
        if (rs >> extra) fail("too many values in row");
      }
      bundle.add(name, m);
    } else if (kind == "scalar") {
      std::string tok;
      if (!(ls >> tok)) fail("missing scalar value");
      try {
        bundle.add_scalar(name, std::stod(tok));
      } catch (const std::exception&) {
        fail("bad number '" + tok + "'");
      }
    } else {
      fail("unknown record '" + kind + "'");
    }
  }
  return bundle;
}

void save_matrix_text(const std::string& path, const MatrixBundle& bundle, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw InvalidConfigError("cannot write '" + path + "'");
  write_matrix_text(out, bundle, comment);
}

MatrixBundle load_matrix_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open '" + path + "'");
  return read_matrix_text(in);
}

MatrixBundle to_bundle(const StateSpaceModel& ss) {
  MatrixBundle b;
  b.add("A", ss.A);
  b.add("B", ss.B);
  b.add("E", ss.E);
  b.add("C", ss.C);
  b.add_scalar("Ts", ss.Ts);
  return b;
}

StateSpaceModel model_from_bundle(const MatrixBundle& bundle) {
  StateSpaceModel ss;
  ss.A = bundle.matrix("A");
  ss.B = bundle.matrix("B");
  ss.E = bundle.matrix("E");
  ss.C = bundle.matrix("C");
  ss.Ts = bundle.has_scalar("Ts") ? bundle.scalar("Ts") : 0.0;
  ss.validate();
  return ss;
}

}  // namespace zonempc
