#include "stacknet/net.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "stacknet/io.hpp"
#include "stacknet/kernels.hpp"

namespace stacknet {

void Architecture::validate() const {
  if (num_stacks < 1) throw std::invalid_argument("architecture: num_stacks must be >= 1");
  if (dims.size() != static_cast<std::size_t>(num_stacks) + 1)
    throw std::invalid_argument("architecture: dims must have num_stacks+1 entries");
  if (widths.size() != static_cast<std::size_t>(num_stacks))
    throw std::invalid_argument("architecture: widths must have num_stacks entries");
  if (skips.size() != static_cast<std::size_t>(num_stacks))
    throw std::invalid_argument("architecture: skips must have num_stacks entries");
  for (int d : dims)
    if (d < 1) throw std::invalid_argument("architecture: all dims must be >= 1");
  for (int n : widths)
    if (n < 0) throw std::invalid_argument("architecture: widths must be >= 0");
}

int Architecture::factored_inner_dim(int d_out_j, int d_in_j) {
  return std::min(d_out_j, d_in_j);
}

Eigen::MatrixXd StackParams::skip_matrix() const {
  switch (skip_kind) {
    case SkipKind::none: return {};
    case SkipKind::linear: return skip;
    case SkipKind::factored_linear: return skip_a2 * skip_a1;
  }
  return {};
}

namespace {

void check_stack_shapes(const StackParams& s) {
  if (s.b.size() != s.v.rows() || s.w.cols() != s.v.rows() || s.c.size() != s.w.rows())
    throw std::invalid_argument("stack: inconsistent parameter shapes");
  if (s.skip_kind == SkipKind::linear) {
    if (s.skip.rows() != s.w.rows() || s.skip.cols() != s.v.cols())
      throw std::invalid_argument("stack: skip matrix shape mismatch");
  } else if (s.skip_kind == SkipKind::factored_linear) {
    if (s.skip_a2.rows() != s.w.rows() || s.skip_a1.cols() != s.v.cols() ||
        s.skip_a2.cols() != s.skip_a1.rows())
      throw std::invalid_argument("stack: factored skip shape mismatch");
  }
}

double neuron_inner_norm_sq(const StackParams& s, int k) {
  return s.v.row(k).squaredNorm() + s.b(k) * s.b(k);
}

}  // namespace

Eigen::VectorXd stack_forward(const StackParams& stack, const Eigen::VectorXd& x) {
  check_stack_shapes(stack);
  if (x.size() != stack.v.cols())
    throw std::invalid_argument("stack_forward: input dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("stack_forward: non-finite input");
  Eigen::VectorXd z = stack.b + stack.v * x;
  Eigen::VectorXd a = z.unaryExpr([](double t) { return relu(t); });
  Eigen::VectorXd out = stack.w * a + stack.c;
  if (stack.skip_kind == SkipKind::linear)
    out += stack.skip * x;
  else if (stack.skip_kind == SkipKind::factored_linear)
    out += stack.skip_a2 * (stack.skip_a1 * x);
  return out;
}

void check_consistent(const NetworkParams& net, const Architecture& arch) {
  arch.validate();
  if (net.stacks.size() != static_cast<std::size_t>(arch.num_stacks))
    throw std::invalid_argument("network: stack count does not match architecture");
  for (int j = 0; j < arch.num_stacks; ++j) {
    const StackParams& s = net.stacks[static_cast<std::size_t>(j)];
    check_stack_shapes(s);
    if (s.width() != arch.widths[static_cast<std::size_t>(j)] ||
        s.d_prev() != arch.dims[static_cast<std::size_t>(j)] ||
        s.d_out() != arch.dims[static_cast<std::size_t>(j) + 1])
      throw std::invalid_argument("network: stack shapes do not match architecture");
    SkipKind want = arch.skips[static_cast<std::size_t>(j)];
    if (s.skip_kind != want)
      throw std::invalid_argument("network: stack skip kind does not match architecture");
  }
}

Eigen::VectorXd forward(const NetworkParams& net, const Architecture& arch,
                        const Eigen::VectorXd& x) {
  check_consistent(net, arch);
  Eigen::VectorXd h = x;
  for (int j = 0; j < arch.num_stacks; ++j) {
    h = stack_forward(net.stacks[static_cast<std::size_t>(j)], h);
    const bool last = (j + 1 == arch.num_stacks);
    if (!last && arch.inner_activation == Activation::relu)
      h = h.unaryExpr([](double t) { return relu(t); });
  }
  return h;  // identity link
}

Eigen::MatrixXd batch_forward(const NetworkParams& net, const Architecture& arch,
                              const Eigen::MatrixXd& xs) {
  check_consistent(net, arch);
  if (xs.cols() != arch.d_in())
    throw std::invalid_argument("batch_forward: input dimension mismatch");
  Eigen::MatrixXd out(xs.rows(), arch.d_out());
  parallel_for(xs.rows(), [&](std::int64_t i) {
    Eigen::VectorXd h = xs.row(i).transpose();
    for (int j = 0; j < arch.num_stacks; ++j) {
      h = stack_forward(net.stacks[static_cast<std::size_t>(j)], h);
      if (j + 1 < arch.num_stacks && arch.inner_activation == Activation::relu)
        h = h.unaryExpr([](double t) { return relu(t); });
    }
    out.row(i) = h.transpose();
  });
  return out;
}

StackParams rescale_neuron(const StackParams& stack, int k, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("rescale_neuron: alpha must be > 0");
  if (k < 0 || k >= stack.width()) throw std::invalid_argument("rescale_neuron: bad index");
  StackParams out = stack;
  out.v.row(k) *= alpha;
  out.b(k) *= alpha;
  out.w.col(k) /= alpha;
  return out;
}

StackParams balance(const StackParams& stack) {
  StackParams out = stack;
  for (int k = 0; k < out.width(); ++k) {
    const double inner = std::sqrt(neuron_inner_norm_sq(out, k));
    const double outer = out.w.col(k).norm();
    if (inner == 0.0 || outer == 0.0) {
      out.v.row(k).setZero();
      out.b(k) = 0.0;
      out.w.col(k).setZero();
      continue;
    }
    const double alpha = std::sqrt(outer / inner);
    out.v.row(k) *= alpha;
    out.b(k) *= alpha;
    out.w.col(k) /= alpha;
  }
  if (out.skip_kind == SkipKind::factored_linear) {
    // Norm-minimal factorization of the same product, via SVD.
    Eigen::MatrixXd a = out.skip_a2 * out.skip_a1;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd root = svd.singularValues().cwiseSqrt();
    const Eigen::Index m = out.skip_a1.rows();
    const Eigen::Index r = std::min<Eigen::Index>(root.size(), m);
    out.skip_a2.setZero();
    out.skip_a1.setZero();
    out.skip_a2.leftCols(r) = svd.matrixU().leftCols(r) * root.head(r).asDiagonal();
    out.skip_a1.topRows(r) = root.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
  }
  return out;
}

NetworkParams balance(const NetworkParams& net) {
  NetworkParams out = net;
  for (auto& s : out.stacks) s = balance(s);
  return out;
}

double param_norm_sq(const StackParams& stack) {
  double t = stack.v.squaredNorm() + stack.b.squaredNorm() + stack.w.squaredNorm() +
             stack.c.squaredNorm();
  if (stack.skip_kind == SkipKind::linear) t += stack.skip.squaredNorm();
  if (stack.skip_kind == SkipKind::factored_linear)
    t += stack.skip_a1.squaredNorm() + stack.skip_a2.squaredNorm();
  return t;
}

double param_norm_sq(const NetworkParams& net) {
  double t = 0.0;
  for (const auto& s : net.stacks) t += param_norm_sq(s);
  return t;
}

KinkAtomView kinks(const StackParams& stack, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("kinks: tol must be > 0");
  KinkAtomView view;
  const int n = stack.width();
  view.directions = Eigen::MatrixXd::Zero(n, stack.d_prev());
  view.kink_pos = Eigen::VectorXd::Zero(n);
  view.out_weights = stack.w;
  view.degenerate.assign(static_cast<std::size_t>(n), false);
  for (int k = 0; k < n; ++k) {
    const double vnorm = stack.v.row(k).norm();
    if (vnorm < tol) {
      view.degenerate[static_cast<std::size_t>(k)] = true;
      continue;
    }
    view.directions.row(k) = stack.v.row(k) / vnorm;
    view.kink_pos(k) = -stack.b(k) / vnorm;
  }
  return view;
}

Eigen::Index param_count(const Architecture& arch) {
  arch.validate();
  Eigen::Index total = 0;
  for (int j = 0; j < arch.num_stacks; ++j) {
    const Eigen::Index n = arch.widths[static_cast<std::size_t>(j)];
    const Eigen::Index dp = arch.dims[static_cast<std::size_t>(j)];
    const Eigen::Index d = arch.dims[static_cast<std::size_t>(j) + 1];
    total += n * dp + n + d * n + d;
    if (arch.skips[static_cast<std::size_t>(j)] == SkipKind::linear) total += d * dp;
    if (arch.skips[static_cast<std::size_t>(j)] == SkipKind::factored_linear) {
      const Eigen::Index m = Architecture::factored_inner_dim(static_cast<int>(d),
                                                              static_cast<int>(dp));
      total += d * m + m * dp;
    }
  }
  return total;
}

namespace {

void append(Eigen::VectorXd& flat, Eigen::Index& pos, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat(pos++) = m(i, j);
}

void take(const Eigen::VectorXd& flat, Eigen::Index& pos, Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = flat(pos++);
}

}  // namespace

Eigen::VectorXd pack(const NetworkParams& net) {
  Eigen::Index total = 0;
  for (const auto& s : net.stacks) {
    total += s.v.size() + s.b.size() + s.w.size() + s.c.size();
    if (s.skip_kind == SkipKind::linear) total += s.skip.size();
    if (s.skip_kind == SkipKind::factored_linear) total += s.skip_a1.size() + s.skip_a2.size();
  }
  Eigen::VectorXd flat(total);
  Eigen::Index pos = 0;
  for (const auto& s : net.stacks) {
    Eigen::MatrixXd bm = s.b, cm = s.c;
    append(flat, pos, s.v);
    append(flat, pos, bm);
    append(flat, pos, s.w);
    append(flat, pos, cm);
    if (s.skip_kind == SkipKind::linear) append(flat, pos, s.skip);
    if (s.skip_kind == SkipKind::factored_linear) {
      append(flat, pos, s.skip_a1);
      append(flat, pos, s.skip_a2);
    }
  }
  return flat;
}

NetworkParams zero_network(const Architecture& arch) {
  arch.validate();
  NetworkParams net;
  for (int j = 0; j < arch.num_stacks; ++j) {
    const int n = arch.widths[static_cast<std::size_t>(j)];
    const int dp = arch.dims[static_cast<std::size_t>(j)];
    const int d = arch.dims[static_cast<std::size_t>(j) + 1];
    StackParams s;
    s.v = Eigen::MatrixXd::Zero(n, dp);
    s.b = Eigen::VectorXd::Zero(n);
    s.w = Eigen::MatrixXd::Zero(d, n);
    s.c = Eigen::VectorXd::Zero(d);
    s.skip_kind = arch.skips[static_cast<std::size_t>(j)];
    if (s.skip_kind == SkipKind::linear) s.skip = Eigen::MatrixXd::Zero(d, dp);
    if (s.skip_kind == SkipKind::factored_linear) {
      const int m = Architecture::factored_inner_dim(d, dp);
      s.skip_a2 = Eigen::MatrixXd::Zero(d, m);
      s.skip_a1 = Eigen::MatrixXd::Zero(m, dp);
    }
    net.stacks.push_back(std::move(s));
  }
  return net;
}

NetworkParams unpack(const Architecture& arch, const Eigen::VectorXd& flat) {
  NetworkParams net = zero_network(arch);
  if (flat.size() != param_count(arch))
    throw std::invalid_argument("unpack: flat vector has wrong length");
  Eigen::Index pos = 0;
  for (auto& s : net.stacks) {
    Eigen::MatrixXd bm = s.b, cm = s.c;
    take(flat, pos, s.v);
    take(flat, pos, bm);
    take(flat, pos, s.w);
    take(flat, pos, cm);
    s.b = bm;
    s.c = cm;
    if (s.skip_kind == SkipKind::linear) take(flat, pos, s.skip);
    if (s.skip_kind == SkipKind::factored_linear) {
      take(flat, pos, s.skip_a1);
      take(flat, pos, s.skip_a2);
    }
  }
  return net;
}

// ---------------------------------------------------------------------------
// serialization

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "identity";
}

std::string to_string(SkipKind s) {
  switch (s) {
    case SkipKind::none: return "none";
    case SkipKind::linear: return "linear";
    case SkipKind::factored_linear: return "factored";
  }
  return "none";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation: " + s);
}

SkipKind skip_kind_from_string(const std::string& s) {
  if (s == "none") return SkipKind::none;
  if (s == "linear") return SkipKind::linear;
  if (s == "factored") return SkipKind::factored_linear;
  throw std::invalid_argument("unknown skip kind: " + s);
}

namespace {

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(is >> m(i, j))) throw std::runtime_error("network file: truncated matrix block");
  return m;
}

}  // namespace

void save_network(const NetworkParams& net, const Architecture& arch,
                  const std::string& path) {
  check_consistent(net, arch);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "stacknet-network 1\n";
  os << "stacks " << arch.num_stacks << " activation " << to_string(arch.inner_activation)
     << "\n";
  for (int j = 0; j < arch.num_stacks; ++j) {
    const StackParams& s = net.stacks[static_cast<std::size_t>(j)];
    os << "stack " << j << " width " << s.width() << " in " << s.d_prev() << " out "
       << s.d_out() << " skip " << to_string(s.skip_kind);
    if (s.skip_kind == SkipKind::factored_linear) os << ' ' << s.skip_a1.rows();
    os << '\n';
    write_matrix(os, s.v);
    write_matrix(os, s.b);
    write_matrix(os, s.w);
    write_matrix(os, s.c);
    if (s.skip_kind == SkipKind::linear) write_matrix(os, s.skip);
    if (s.skip_kind == SkipKind::factored_linear) {
      write_matrix(os, s.skip_a1);
      write_matrix(os, s.skip_a2);
    }
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::pair<NetworkParams, Architecture> load_network(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "stacknet-network" || version != 1)
    throw std::runtime_error("network file: bad header in " + path);
  std::string kw, act;
  int num_stacks = 0;
  is >> kw >> num_stacks;
  if (kw != "stacks" || num_stacks < 1)
    throw std::runtime_error("network file: bad stack count");
  is >> kw >> act;
  if (kw != "activation") throw std::runtime_error("network file: missing activation");

  Architecture arch;
  arch.num_stacks = num_stacks;
  arch.inner_activation = activation_from_string(act);
  NetworkParams net;
  for (int j = 0; j < num_stacks; ++j) {
    std::string skw, skip_name;
    int idx, n, dp, d;
    is >> skw >> idx;
    if (skw != "stack" || idx != j) throw std::runtime_error("network file: bad stack record");
    is >> skw >> n >> skw >> dp >> skw >> d >> skw >> skip_name;
    StackParams s;
    s.skip_kind = skip_kind_from_string(skip_name);
    Eigen::Index m = 0;
    if (s.skip_kind == SkipKind::factored_linear) is >> m;
    s.v = read_matrix(is, n, dp);
    s.b = read_matrix(is, n, 1);
    s.w = read_matrix(is, d, n);
    s.c = read_matrix(is, d, 1);
    if (s.skip_kind == SkipKind::linear) s.skip = read_matrix(is, d, dp);
    if (s.skip_kind == SkipKind::factored_linear) {
      s.skip_a1 = read_matrix(is, m, dp);
      s.skip_a2 = read_matrix(is, d, m);
    }
    if (j == 0) arch.dims.push_back(dp);
    arch.dims.push_back(d);
    arch.widths.push_back(n);
    arch.skips.push_back(s.skip_kind);
    net.stacks.push_back(std::move(s));
  }
  check_consistent(net, arch);
  return {std::move(net), std::move(arch)};
}

}  // namespace stacknet
