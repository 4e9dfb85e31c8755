#include "symkry/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace symkry {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("matrix market: " + msg);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '%') continue;
    // Skip whitespace-only lines.
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    return true;
  }
  return false;
}

}  // namespace

std::unique_ptr<SymmetricOperator> read_matrix_market(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) fail("empty input");
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") fail("missing %%MatrixMarket banner");
  if (lower(object) != "matrix") fail("unsupported object '" + object + "'");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array")
    fail("unsupported format '" + format + "'");
  if (field != "real" && field != "integer")
    fail("unsupported field '" + field + "' (need real or integer)");
  if (symmetry != "symmetric" && symmetry != "general")
    fail("unsupported symmetry '" + symmetry + "'");

  std::string line;
  if (!next_data_line(in, line)) fail("missing size line");
  std::istringstream ss(line);

  Matrix a;
  if (format == "coordinate") {
    long rows = 0, cols = 0, nnz = 0;
    ss >> rows >> cols >> nnz;
    if (!ss || rows <= 0 || cols <= 0 || nnz < 0) fail("bad size line '" + line + "'");
    if (rows != cols) fail("matrix is not square");
    a = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    for (long e = 0; e < nnz; ++e) {
      if (!next_data_line(in, line)) fail("unexpected end of file in entry list");
      std::istringstream es(line);
      long i = 0, j = 0;
      double v = 0.0;
      es >> i >> j >> v;
      if (!es) fail("bad entry line '" + line + "'");
      if (i < 1 || i > rows || j < 1 || j > cols) fail("entry index out of range");
      if (symmetry == "symmetric" && j > i)
        fail("symmetric file stores an upper-triangle entry");
      a(static_cast<int>(i - 1), static_cast<int>(j - 1)) = v;
      if (symmetry == "symmetric" && i != j)
        a(static_cast<int>(j - 1), static_cast<int>(i - 1)) = v;
    }
  } else {
    long rows = 0, cols = 0;
    ss >> rows >> cols;
    if (!ss || rows <= 0 || cols <= 0) fail("bad size line '" + line + "'");
    if (rows != cols) fail("matrix is not square");
    a = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    // Array data is column-major; symmetric array files store j <= i only.
    for (int j = 0; j < cols; ++j) {
      const int i_start = (symmetry == "symmetric") ? j : 0;
      for (int i = i_start; i < rows; ++i) {
        if (!next_data_line(in, line)) fail("unexpected end of file in array data");
        std::istringstream es(line);
        double v = 0.0;
        es >> v;
        if (!es) fail("bad array value '" + line + "'");
        a(i, j) = v;
        if (symmetry == "symmetric" && i != j) a(j, i) = v;
      }
    }
  }

  if (symmetry == "general") {
    double defect = 0.0;
    for (int i = 0; i < a.rows; ++i)
      for (int j = i + 1; j < a.cols; ++j)
        defect = std::max(defect, std::abs(a(i, j) - a(j, i)));
    const double scale = max_abs(a);
    if (scale > 0.0 && defect > 1e-12 * scale)
      fail("general file is not symmetric, max defect " + std::to_string(defect));
  }

  bool diagonal_only = true;
  for (int i = 0; i < a.rows && diagonal_only; ++i)
    for (int j = 0; j < a.cols; ++j)
      if (i != j && a(i, j) != 0.0) {
        diagonal_only = false;
        break;
      }
  if (diagonal_only) {
    Vec d(static_cast<std::size_t>(a.rows));
    for (int i = 0; i < a.rows; ++i) d[static_cast<std::size_t>(i)] = a(i, i);
    return std::make_unique<DiagonalOperator>(std::move(d));
  }
  return std::make_unique<DenseOperator>(std::move(a));
}

std::unique_ptr<SymmetricOperator> read_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  return read_matrix_market(in);
}

}  // namespace symkry
