#include "stacknet/pfunc.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "stacknet/io.hpp"

namespace stacknet {

double neuron_cost(const Eigen::VectorXd& v, double b, const Eigen::VectorXd& w,
                   const PenaltyVariant& variant) {
  const double wn = w.norm();
  if (variant.kind == PenaltyKind::no_bias_reg) return v.norm() * wn;
  // Covers the degenerate |v| = 0 case as |w| |b|.
  return wn * std::sqrt(v.squaredNorm() + b * b);
}

double schatten1(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  if (!a.allFinite()) throw std::invalid_argument("schatten1: non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues().sum();
}

CostBreakdown stack_cost(const StackParams& stack, const PenaltyVariant& variant) {
  const bool has_skip = stack.skip_kind != SkipKind::none;
  if (has_skip != (variant.skip != SkipPenalty::none))
    throw std::invalid_argument("stack_cost: skip penalty does not match stack skip kind");

  CostBreakdown out;
  out.atom_factor = variant.atom_factor;
  out.per_neuron.reserve(static_cast<std::size_t>(stack.width()));
  double atoms = 0.0;
  for (int k = 0; k < stack.width(); ++k) {
    const double ck =
        neuron_cost(stack.v.row(k).transpose(), stack.b(k), stack.w.col(k), variant);
    out.per_neuron.push_back(ck);
    atoms += ck;
  }
  if (variant.kind == PenaltyKind::bias_reg) out.bias_term = stack.c.squaredNorm();
  if (variant.skip == SkipPenalty::frobenius_sq)
    out.skip_term = stack.skip_matrix().squaredNorm();
  else if (variant.skip == SkipPenalty::schatten1)
    out.skip_term = variant.atom_factor * schatten1(stack.skip_matrix());
  out.total = variant.atom_factor * atoms + out.bias_term + out.skip_term;
  return out;
}

PenaltyVariant matching_variant(SkipKind skip, PenaltyKind kind, double atom_factor) {
  PenaltyVariant v;
  v.kind = kind;
  v.atom_factor = atom_factor;
  switch (skip) {
    case SkipKind::none: v.skip = SkipPenalty::none; break;
    case SkipKind::linear: v.skip = SkipPenalty::frobenius_sq; break;
    case SkipKind::factored_linear: v.skip = SkipPenalty::schatten1; break;
  }
  return v;
}

double network_cost(const NetworkParams& net, const Architecture& arch,
                    const std::vector<PenaltyVariant>& variants) {
  check_consistent(net, arch);
  if (variants.size() != net.stacks.size())
    throw std::invalid_argument("network_cost: one variant per stack required");
  double total = 0.0;
  for (std::size_t j = 0; j < net.stacks.size(); ++j)
    total += stack_cost(net.stacks[j], variants[j]).total;
  return total;
}

double network_cost(const NetworkParams& net, const Architecture& arch, PenaltyKind kind,
                    double atom_factor) {
  std::vector<PenaltyVariant> variants;
  variants.reserve(net.stacks.size());
  for (const auto& s : net.stacks)
    variants.push_back(matching_variant(s.skip_kind, kind, atom_factor));
  return network_cost(net, arch, variants);
}

std::vector<std::pair<int, int>> near_linear_pairs(const StackParams& stack, double kink_tol,
                                                   double cos_tol) {
  std::vector<std::pair<int, int>> pairs;
  const KinkAtomView view = kinks(stack);
  for (int k = 0; k < stack.width(); ++k) {
    if (view.degenerate[static_cast<std::size_t>(k)]) continue;
    const double wk = stack.w.col(k).norm();
    if (wk == 0.0) continue;
    for (int l = k + 1; l < stack.width(); ++l) {
      if (view.degenerate[static_cast<std::size_t>(l)]) continue;
      const double wl = stack.w.col(l).norm();
      if (wl == 0.0) continue;
      const double dir_cos = view.directions.row(k).dot(view.directions.row(l));
      if (dir_cos > -0.999) continue;  // needs opposite ridge directions
      if (std::abs(view.kink_pos(k) - view.kink_pos(l)) >
          kink_tol * (1.0 + std::abs(view.kink_pos(k))))
        continue;
      const double w_cos = stack.w.col(k).dot(stack.w.col(l)) / (wk * wl);
      if (w_cos < cos_tol) pairs.emplace_back(k, l);
    }
  }
  return pairs;
}

void write_cost_csv(const std::vector<CostBreakdown>& stacks, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "stack,neuron_index_or_term,value\n";
  for (std::size_t j = 0; j < stacks.size(); ++j) {
    const CostBreakdown& b = stacks[j];
    for (std::size_t k = 0; k < b.per_neuron.size(); ++k)
      os << j << ',' << k << ',' << format_double(b.per_neuron[k]) << '\n';
    os << j << ",bias_term," << format_double(b.bias_term) << '\n';
    os << j << ",skip_term," << format_double(b.skip_term) << '\n';
    os << j << ",total," << format_double(b.total) << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace stacknet
