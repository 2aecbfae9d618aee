#include "stacknet/tasks.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "stacknet/io.hpp"
#include "stacknet/net.hpp"
#include "stacknet/rng.hpp"

namespace stacknet {

void Dataset::validate() const {
  if (X.rows() != Y.rows()) throw std::invalid_argument("dataset: X/Y row counts differ");
  if (X.rows() == 0) throw std::invalid_argument("dataset: empty");
  if (!X.allFinite() || !Y.allFinite())
    throw std::invalid_argument("dataset: non-finite entries");
  if (has_mask()) {
    if (mask.rows() != Y.rows() || mask.cols() != Y.cols())
      throw std::invalid_argument("dataset: mask shape mismatch");
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
      for (Eigen::Index k = 0; k < mask.cols(); ++k)
        if (mask(i, k) != 0.0 && mask(i, k) != 1.0)
          throw std::invalid_argument("dataset: mask entries must be 0 or 1");
  }
}

Dataset Dataset::task_column(Eigen::Index k) const {
  Dataset out;
  out.X = X;
  out.Y = Y.col(k);
  if (has_mask()) out.mask = mask.col(k);
  if (k < static_cast<Eigen::Index>(names.size()))
    out.names = {names[static_cast<std::size_t>(k)]};
  return out;
}

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

double sign_of(double p) { return p > 0.0 ? 1.0 : (p < 0.0 ? -1.0 : 0.0); }

struct Shape {
  const char* name;
  double (*fn)(double);
};

const std::array<Shape, 7> kShapes = {{
    {"one_kink", [](double p) { return relu(p); }},
    {"absolute_value", [](double p) { return std::abs(p); }},
    {"square", [](double p) { return p * p; }},
    {"sign", sign_of},
    {"cubic", [](double p) { return p * p * p; }},
    {"sine", [](double p) { return std::sin(kPi * p); }},
    {"exponential", [](double p) { return std::exp(p); }},
}};

struct Moments {
  double mean, sd;
};

// Population mean/sd of shape(sin(2 pi u)) for u uniform over one period,
// by midpoint quadrature. Independent of the period and of any seed.
Moments shape_moments(int shape_index) {
  static std::array<Moments, 7> cache = [] {
    std::array<Moments, 7> out{};
    const int q = 8192;
    for (int s = 0; s < 7; ++s) {
      double m1 = 0.0, m2 = 0.0;
      for (int i = 0; i < q; ++i) {
        const double u = (i + 0.5) / q;
        const double val = kShapes[static_cast<std::size_t>(s)].fn(std::sin(2.0 * kPi * u));
        m1 += val;
        m2 += val * val;
      }
      m1 /= q;
      m2 /= q;
      out[static_cast<std::size_t>(s)] = {m1, std::sqrt(m2 - m1 * m1)};
    }
    return out;
  }();
  return cache[static_cast<std::size_t>(shape_index)];
}

}  // namespace

Dataset gen_periodic7(int n, double period, double noise_sd, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("gen_periodic7: need n >= 2");
  if (!(period > 0.0)) throw std::invalid_argument("gen_periodic7: period must be > 0");
  Rng rng(seed);
  Dataset data;
  data.X.resize(n, 1);
  data.Y.resize(n, 7);
  for (int i = 0; i < n; ++i) data.X(i, 0) = rng.uniform(0.0, 3.0 * period);
  for (int i = 0; i < n; ++i) {
    const double p = std::sin(2.0 * kPi * data.X(i, 0) / period);
    for (int k = 0; k < 7; ++k) {
      const Moments m = shape_moments(k);
      double y = (kShapes[static_cast<std::size_t>(k)].fn(p) - m.mean) / m.sd;
      if (noise_sd > 0.0) y += noise_sd * rng.normal();
      data.Y(i, k) = y;
    }
  }
  for (const auto& s : kShapes) data.names.emplace_back(s.name);
  return data;
}

namespace {

// Both coupling targets bend only at {-1, 0, 1}.
double coupling_dense_fn(double x) {
  return 1.0 * relu(x + 1.0) - 2.2 * relu(x) + 2.0 * relu(x - 1.0) - 0.3;
}

double coupling_sparse_fn(double x) {
  return -0.9 * relu(x + 1.0) + 1.8 * relu(x) - 1.4 * relu(x - 1.0) + 0.6;
}

constexpr int kCouplingDense = 40;
constexpr double kCouplingDenseNoise = 0.01;
constexpr double kCouplingSparseNoise = 0.05;

}  // namespace

Eigen::VectorXd coupling_sparse_inputs() {
  Eigen::VectorXd xs(4);
  xs << -1.7, -0.5, 0.4, 1.6;
  return xs;
}

Eigen::MatrixXd coupling_truth(const Eigen::VectorXd& xs) {
  Eigen::MatrixXd out(xs.size(), 2);
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    out(i, 0) = coupling_dense_fn(xs(i));
    out(i, 1) = coupling_sparse_fn(xs(i));
  }
  return out;
}

Dataset gen_coupling_pair(std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::VectorXd sparse_xs = coupling_sparse_inputs();
  const int n = kCouplingDense + static_cast<int>(sparse_xs.size());
  Dataset data;
  data.X.resize(n, 1);
  data.Y.setZero(n, 2);
  data.mask.setZero(n, 2);
  data.names = {"dense_task", "sparse_task"};
  for (int i = 0; i < kCouplingDense; ++i) data.X(i, 0) = rng.uniform(-2.0, 2.0);
  for (Eigen::Index i = 0; i < sparse_xs.size(); ++i)
    data.X(kCouplingDense + i, 0) = sparse_xs(i);
  for (int i = 0; i < n; ++i) {
    data.Y(i, 0) = coupling_dense_fn(data.X(i, 0)) + kCouplingDenseNoise * rng.normal();
    data.mask(i, 0) = 1.0;
  }
  for (Eigen::Index i = kCouplingDense; i < n; ++i) {
    data.Y(i, 1) = coupling_sparse_fn(data.X(i, 0)) + kCouplingSparseNoise * rng.normal();
    data.mask(i, 1) = 1.0;
  }
  return data;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_double(const std::string& s, int line_no) {
  double val = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  auto res = std::from_chars(begin, end, val);
  if (res.ec != std::errc{})
    throw std::runtime_error("csv parse error at line " + std::to_string(line_no) +
                             ": bad number '" + s + "'");
  return val;
}

int count_prefixed(const std::vector<std::string>& hdr, std::size_t from, const char* prefix) {
  int count = 0;
  for (std::size_t i = from; i < hdr.size(); ++i) {
    if (hdr[i].rfind(prefix, 0) == 0)
      ++count;
    else
      break;
  }
  return count;
}

}  // namespace

void save_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (Eigen::Index j = 0; j < data.d_in(); ++j) os << "x_" << (j + 1) << ',';
  for (Eigen::Index k = 0; k < data.d_out(); ++k) {
    os << "y_" << (k + 1);
    if (k + 1 < data.d_out() || data.has_mask()) os << ',';
  }
  if (data.has_mask())
    for (Eigen::Index k = 0; k < data.d_out(); ++k) {
      os << "m_" << (k + 1);
      if (k + 1 < data.d_out()) os << ',';
    }
  os << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.d_in(); ++j) os << format_double(data.X(i, j)) << ',';
    for (Eigen::Index k = 0; k < data.d_out(); ++k) {
      os << format_double(data.Y(i, k));
      if (k + 1 < data.d_out() || data.has_mask()) os << ',';
    }
    if (data.has_mask())
      for (Eigen::Index k = 0; k < data.d_out(); ++k) {
        os << format_double(data.mask(i, k));
        if (k + 1 < data.d_out()) os << ',';
      }
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Dataset load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || line.empty())
    throw std::runtime_error("csv parse error: " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> hdr = split_csv_line(line);
  const int d_in = count_prefixed(hdr, 0, "x_");
  const int d_out = count_prefixed(hdr, static_cast<std::size_t>(d_in), "y_");
  const int d_mask =
      count_prefixed(hdr, static_cast<std::size_t>(d_in + d_out), "m_");
  if (d_in == 0 || d_out == 0)
    throw std::runtime_error("csv parse error at line 1: header must be x_1..,y_1..");
  if (d_mask != 0 && d_mask != d_out)
    throw std::runtime_error("csv parse error at line 1: mask columns must match y columns");
  const std::size_t want = static_cast<std::size_t>(d_in + d_out + d_mask);
  if (hdr.size() != want)
    throw std::runtime_error("csv parse error at line 1: unrecognized trailing columns");

  std::vector<double> values;
  int rows = 0;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != want)
      throw std::runtime_error("csv parse error at line " + std::to_string(line_no) +
                               ": expected " + std::to_string(want) + " fields, got " +
                               std::to_string(fields.size()));
    for (const auto& f : fields) values.push_back(parse_double(f, line_no));
    ++rows;
  }
  if (rows == 0) throw std::runtime_error("csv parse error: " + path + " has no data rows");

  Dataset data;
  data.X.resize(rows, d_in);
  data.Y.resize(rows, d_out);
  if (d_mask > 0) data.mask.resize(rows, d_out);
  std::size_t pos = 0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < d_in; ++j) data.X(i, j) = values[pos++];
    for (int k = 0; k < d_out; ++k) data.Y(i, k) = values[pos++];
    for (int k = 0; k < d_mask; ++k) data.mask(i, k) = values[pos++];
  }
  for (int k = 0; k < d_out; ++k) data.names.push_back("y_" + std::to_string(k + 1));
  data.validate();
  return data;
}

}  // namespace stacknet
