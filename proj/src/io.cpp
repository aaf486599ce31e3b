#include "msgr/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace msgr::io {

namespace {

[[noreturn]] void parse_fail(const std::string& what, Index line) {
  throw Error(ErrorCode::parse_error, what + " (line " + std::to_string(line) + ")");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Yields non-blank, non-comment lines with their 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& out) {
    if (has_pushback_) {
      has_pushback_ = false;
      out = pushback_;
      return true;
    }
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      raw = trim(raw);
      if (raw.empty() || raw[0] == '%') continue;
      out = raw;
      return true;
    }
    return false;
  }

  void push_back(std::string s) {
    pushback_ = std::move(s);
    has_pushback_ = true;
  }

  Index line() const { return line_; }

 private:
  std::istream& in_;
  Index line_ = 0;
  std::string pushback_;
  bool has_pushback_ = false;
};

template <typename... T>
bool parse_fields(const std::string& s, T&... fields) {
  std::istringstream ss(s);
  ((ss >> fields), ...);
  if (ss.fail()) return false;
  std::string rest;
  ss >> rest;
  return rest.empty();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open " + path);
  return in;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

WeightedGraph read_graph(std::istream& in) {
  LineReader lines(in);
  std::string line;
  if (!lines.next(line)) parse_fail("graph: missing header", lines.line());
  Index n = 0;
  int d = 0;
  if (!parse_fields(line, n, d) || n < 0 || (d != 0 && d != 2 && d != 3)) {
    parse_fail("graph: header must be 'n d' with d in {0, 2, 3}", lines.line());
  }
  DenseMatrix coords;
  if (d > 0) {
    coords.resize(n, d);
    for (Index v = 0; v < n; ++v) {
      if (!lines.next(line)) parse_fail("graph: missing coordinate lines", lines.line());
      std::istringstream ss(line);
      for (int c = 0; c < d; ++c) ss >> coords(v, c);
      if (ss.fail()) parse_fail("graph: bad coordinate line", lines.line());
    }
  }
  std::vector<Edge> edges;
  while (lines.next(line)) {
    if (line[0] == '#') {
      lines.push_back(line);
      break;
    }
    Edge e;
    if (!parse_fields(line, e.i, e.j, e.w)) parse_fail("graph: bad edge line", lines.line());
    edges.push_back(e);
  }
  WeightedGraph g(n, std::move(coords), std::move(edges));

  std::string section;
  while (lines.next(line)) {
    std::string record = line;
    if (line[0] == '#') {
      const auto sp = line.find_first_of(" \t");
      section = line.substr(1, sp == std::string::npos ? std::string::npos : sp - 1);
      record = sp == std::string::npos ? std::string() : trim(line.substr(sp));
      if (section == "capacity") g.capacity = Vector::Zero(n);
      if (section == "source" && g.source.size() != n) g.source = Vector::Zero(n);
      if (section != "capacity" && section != "robin" && section != "dirichlet" &&
          section != "source") {
        parse_fail("graph: unknown section #" + section, lines.line());
      }
      if (section == "capacity") {
        Index filled = 0;
        std::istringstream first(record);
        double c;
        while (first >> c && filled < n) (*g.capacity)[filled++] = c;
        while (filled < n) {
          if (!lines.next(line)) parse_fail("graph: short #capacity section", lines.line());
          if (!parse_fields(line, c)) parse_fail("graph: bad capacity value", lines.line());
          (*g.capacity)[filled++] = c;
        }
        continue;
      }
      if (record.empty()) continue;
    }
    if (section == "robin") {
      RobinCondition r;
      if (!parse_fields(record, r.vertex, r.alpha, r.value)) {
        parse_fail("graph: bad #robin record", lines.line());
      }
      if (r.vertex < 0 || r.vertex >= n) parse_fail("graph: robin vertex out of range", lines.line());
      g.robin.push_back(r);
    } else if (section == "dirichlet") {
      DirichletCondition dc;
      if (!parse_fields(record, dc.vertex, dc.value)) {
        parse_fail("graph: bad #dirichlet record", lines.line());
      }
      if (dc.vertex < 0 || dc.vertex >= n) {
        parse_fail("graph: dirichlet vertex out of range", lines.line());
      }
      g.dirichlet.push_back(dc);
    } else if (section == "source") {
      Index i;
      double b;
      if (!parse_fields(record, i, b)) parse_fail("graph: bad #source record", lines.line());
      if (i < 0 || i >= n) parse_fail("graph: source vertex out of range", lines.line());
      g.source[i] += b;
    } else {
      parse_fail("graph: record outside a section", lines.line());
    }
  }
  return g;
}

WeightedGraph read_graph_file(const std::string& path) {
  auto in = open_in(path);
  return read_graph(in);
}

void write_graph(std::ostream& out, const WeightedGraph& graph) {
  const Index n = graph.num_vertices();
  out << n << ' ' << (graph.has_coords() ? graph.dim() : 0) << '\n';
  if (graph.has_coords()) {
    for (Index v = 0; v < n; ++v) {
      for (int c = 0; c < graph.dim(); ++c) {
        out << (c ? " " : "") << format_double(graph.coords()(v, c));
      }
      out << '\n';
    }
  }
  for (const auto& e : graph.edges()) {
    out << e.i << ' ' << e.j << ' ' << format_double(e.w) << '\n';
  }
  if (graph.capacity) {
    out << "#capacity\n";
    for (Index v = 0; v < n; ++v) out << format_double((*graph.capacity)[v]) << '\n';
  }
  if (!graph.robin.empty()) {
    out << "#robin\n";
    for (const auto& r : graph.robin) {
      out << r.vertex << ' ' << format_double(r.alpha) << ' ' << format_double(r.value) << '\n';
    }
  }
  if (!graph.dirichlet.empty()) {
    out << "#dirichlet\n";
    for (const auto& d : graph.dirichlet) out << d.vertex << ' ' << format_double(d.value) << '\n';
  }
  if (graph.source.size() == n && graph.source.any()) {
    out << "#source\n";
    for (Index v = 0; v < n; ++v) {
      if (graph.source[v] != 0.0) out << v << ' ' << format_double(graph.source[v]) << '\n';
    }
  }
}

void write_graph_file(const std::string& path, const WeightedGraph& graph) {
  auto out = open_out(path);
  write_graph(out, graph);
}

SparseMatrix read_matrix_market(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw Error(ErrorCode::parse_error, "matrix market: empty input");
  }
  std::string lower = header;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower.rfind("%%matrixmarket", 0) != 0 || lower.find("coordinate") == std::string::npos) {
    throw Error(ErrorCode::parse_error, "matrix market: expected a coordinate header");
  }
  if (lower.find("complex") != std::string::npos || lower.find("pattern") != std::string::npos) {
    throw Error(ErrorCode::parse_error, "matrix market: only real or integer values supported");
  }
  const bool symmetric = lower.find("symmetric") != std::string::npos;
  LineReader lines(in);
  std::string line;
  if (!lines.next(line)) throw Error(ErrorCode::parse_error, "matrix market: missing size line");
  Index rows = 0, cols = 0, nnz = 0;
  if (!parse_fields(line, rows, cols, nnz)) parse_fail("matrix market: bad size line", lines.line());
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  for (Index k = 0; k < nnz; ++k) {
    if (!lines.next(line)) parse_fail("matrix market: too few entries", lines.line());
    Index i = 0, j = 0;
    double v = 0;
    if (!parse_fields(line, i, j, v)) parse_fail("matrix market: bad entry", lines.line());
    if (i < 1 || i > rows || j < 1 || j > cols) parse_fail("matrix market: index out of range", lines.line());
    t.emplace_back(i - 1, j - 1, v);
    if (symmetric && i != j) t.emplace_back(j - 1, i - 1, v);
  }
  return from_triplets(rows, cols, t);
}

SparseMatrix read_matrix_market_file(const std::string& path) {
  auto in = open_in(path);
  return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  for (Index c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_double(it.value()) << '\n';
    }
  }
}

void write_matrix_market_file(const std::string& path, const SparseMatrix& a) {
  auto out = open_out(path);
  write_matrix_market(out, a);
}

WeightedGraph graph_from_operator(const SparseMatrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::invalid_argument, "graph_from_operator: matrix is not square");
  }
  require_symmetric(a, 1e-12, "graph_from_operator");
  std::vector<Edge> edges;
  for (Index c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      if (it.row() < it.col() && it.value() != 0.0) edges.push_back({it.row(), it.col(), -it.value()});
    }
  }
  return WeightedGraph(a.rows(), DenseMatrix(), std::move(edges));
}

Vector read_vector(std::istream& in) {
  LineReader lines(in);
  std::string line;
  std::vector<double> values;
  while (lines.next(line)) {
    double v;
    if (!parse_fields(line, v)) parse_fail("vector: bad value", lines.line());
    values.push_back(v);
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
}

Vector read_vector_file(const std::string& path) {
  auto in = open_in(path);
  return read_vector(in);
}

void write_vector(std::ostream& out, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << '\n';
}

void write_vector_file(const std::string& path, const Vector& v) {
  auto out = open_out(path);
  write_vector(out, v);
}

}  // namespace msgr::io
