#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace stacknet {

enum class Activation { identity, relu };
enum class SkipKind { none, linear, factored_linear };

inline double relu(double z) { return z > 0.0 ? z : 0.0; }
// Subgradient convention: relu'(0) = 0.
inline double relu_deriv(double z) { return z > 0.0 ? 1.0 : 0.0; }

// Stacked architecture: dims d_0..d_s are the bottleneck dimensions,
// widths n_1..n_s the hidden neurons per stack. The activation between
// stacks is `inner_activation`; the final link is always the identity.
struct Architecture {
  int num_stacks = 1;
  std::vector<int> dims;    // length num_stacks + 1, all >= 1
  std::vector<int> widths;  // length num_stacks, all >= 0
  Activation inner_activation = Activation::identity;
  std::vector<SkipKind> skips;  // length num_stacks

  int d_in() const { return dims.front(); }
  int d_out() const { return dims.back(); }
  void validate() const;  // throws std::invalid_argument

  // Inner dimension of a factored skip: smallest m that can realize any
  // d_out x d_in linear map.
  static int factored_inner_dim(int d_out_j, int d_in_j);
};

// One stack: out(x) = w * relu(b + v x) + c, plus an optional linear
// bypass A x (or A2 A1 x for the factored kind).
struct StackParams {
  Eigen::MatrixXd v;  // n x d_prev
  Eigen::VectorXd b;  // n
  Eigen::MatrixXd w;  // d x n
  Eigen::VectorXd c;  // d
  SkipKind skip_kind = SkipKind::none;
  Eigen::MatrixXd skip;              // d x d_prev when linear
  Eigen::MatrixXd skip_a2, skip_a1;  // d x m, m x d_prev when factored

  int width() const { return static_cast<int>(v.rows()); }
  int d_prev() const { return static_cast<int>(v.cols()); }
  int d_out() const { return static_cast<int>(w.rows()); }
  Eigen::MatrixXd skip_matrix() const;  // A or A2*A1; empty when no skip
};

struct NetworkParams {
  std::vector<StackParams> stacks;
};

// Per-neuron ridge view: unit direction s_k, kink position xi_k = -b_k/|v_k|,
// outer weight column w_k. Neurons with |v_k| < tol are flagged degenerate
// and get s = 0, xi = 0.
struct KinkAtomView {
  Eigen::MatrixXd directions;   // n x d_prev, unit rows
  Eigen::VectorXd kink_pos;     // n
  Eigen::MatrixXd out_weights;  // d x n
  std::vector<bool> degenerate;
};

Eigen::VectorXd stack_forward(const StackParams& stack, const Eigen::VectorXd& x);
Eigen::VectorXd forward(const NetworkParams& net, const Architecture& arch,
                        const Eigen::VectorXd& x);

// Row-per-sample forward over a whole dataset; parallel over samples.
Eigen::MatrixXd batch_forward(const NetworkParams& net, const Architecture& arch,
                              const Eigen::MatrixXd& xs);

// Scales (v_k, b_k) by alpha and w_k by 1/alpha; the function is unchanged
// by positive homogeneity of relu. alpha must be > 0.
StackParams rescale_neuron(const StackParams& stack, int k, double alpha);

// Per-neuron rescaling to |w_k| = sqrt(|v_k|^2 + b_k^2), the norm-minimal
// representative of the neuron's function. Neurons with a zero inner or
// outer part are zeroed entirely. A factored skip is rebalanced to the
// norm-minimal factorization of the same product.
StackParams balance(const StackParams& stack);
NetworkParams balance(const NetworkParams& net);

double param_norm_sq(const StackParams& stack);
double param_norm_sq(const NetworkParams& net);

KinkAtomView kinks(const StackParams& stack, double tol = 1e-12);

void check_consistent(const NetworkParams& net, const Architecture& arch);

// Flat parameter vector, stack by stack in field order v, b, w, c, skip.
Eigen::VectorXd pack(const NetworkParams& net);
NetworkParams unpack(const Architecture& arch, const Eigen::VectorXd& flat);
Eigen::Index param_count(const Architecture& arch);

NetworkParams zero_network(const Architecture& arch);

// Plain-text serialization: a header line, then one record per stack with a
// shapes line followed by row-major coefficients at 17 significant digits.
void save_network(const NetworkParams& net, const Architecture& arch,
                  const std::string& path);
std::pair<NetworkParams, Architecture> load_network(const std::string& path);

std::string to_string(Activation a);
std::string to_string(SkipKind s);
Activation activation_from_string(const std::string& s);
SkipKind skip_kind_from_string(const std::string& s);

}  // namespace stacknet
