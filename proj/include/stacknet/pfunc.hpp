#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stacknet/net.hpp"

namespace stacknet {

// Which per-neuron penalty to use. bias_reg charges sqrt(|v|^2 + b^2) per
// unit of outer weight (kinks far from the origin cost more); no_bias_reg
// charges |v||w| and ignores the bias.
enum class PenaltyKind { bias_reg, no_bias_reg };

// How a stack's linear bypass is charged: squared Frobenius norm for a
// single skip matrix, Schatten-1 (nuclear) norm for a factored path.
enum class SkipPenalty { none, frobenius_sq, schatten1 };

struct PenaltyVariant {
  PenaltyKind kind = PenaltyKind::bias_reg;
  SkipPenalty skip = SkipPenalty::none;
  // Multiplier on the per-neuron terms. 2 makes the penalty of a balanced
  // stack equal its squared parameter norm, which is the convention every
  // cross-check in this project relies on.
  double atom_factor = 2.0;
};

struct CostBreakdown {
  std::vector<double> per_neuron;
  double bias_term = 0.0;
  double skip_term = 0.0;
  double total = 0.0;
  double atom_factor = 2.0;
};

double neuron_cost(const Eigen::VectorXd& v, double b, const Eigen::VectorXd& w,
                   const PenaltyVariant& variant);

CostBreakdown stack_cost(const StackParams& stack, const PenaltyVariant& variant);

double network_cost(const NetworkParams& net, const Architecture& arch,
                    const std::vector<PenaltyVariant>& variants);
// Same penalty kind for every stack, skip penalty matched to the stack's
// skip kind (none / frobenius_sq for linear / schatten1 for factored).
double network_cost(const NetworkParams& net, const Architecture& arch,
                    PenaltyKind kind = PenaltyKind::bias_reg, double atom_factor = 2.0);

PenaltyVariant matching_variant(SkipKind skip, PenaltyKind kind = PenaltyKind::bias_reg,
                                double atom_factor = 2.0);

// Sum of singular values.
double schatten1(const Eigen::MatrixXd& a);

// Indices (k, l) of neuron pairs that nearly cancel into a linear map:
// opposite directions, matching kink positions, outer weights anti-parallel.
// Such pairs should be expressed through a skip matrix instead.
std::vector<std::pair<int, int>> near_linear_pairs(const StackParams& stack,
                                                   double kink_tol = 1e-6,
                                                   double cos_tol = -0.999);

// CSV rows: stack, neuron_index_or_term, value.
void write_cost_csv(const std::vector<CostBreakdown>& stacks, const std::string& path);

}  // namespace stacknet
