#pragma once

#include <stdexcept>
#include <vector>

#include "spinid/operators.hpp"

namespace spinid {

/// Thrown when a closure is requested above the configured spin cap.
class CapExceeded : public std::runtime_error {
 public:
  CapExceeded(int spins, int cap);
  int spins() const { return spins_; }
  int cap() const { return cap_; }

 private:
  int spins_;
  int cap_;
};

struct ClosureOptions {
  /// Closures are limited to 2^max_spins dimensional operators.
  int max_spins = 5;
  /// Residual threshold relative to the largest seed norm.
  double relative_tol = 1e-10;
};

/// Hilbert-Schmidt orthonormal basis of a subspace of skew-Hermitian
/// operators.
class LieBasis {
 public:
  LieBasis() = default;
  LieBasis(Eigen::Index operator_dim, Eigen::MatrixXcd columns);

  Eigen::Index dimension() const { return columns_.cols(); }
  Eigen::Index operator_dimension() const { return operator_dim_; }
  /// Element i reshaped into an operator.
  Operator element(Eigen::Index i) const;
  std::vector<Operator> elements() const;
  /// Column-major vectorized elements (one per column).
  const Eigen::MatrixXcd& columns() const { return columns_; }

  /// Norm of the component of x orthogonal to the span.
  double residual_norm(const Operator& x) const;

 private:
  Eigen::Index operator_dim_ = 0;
  Eigen::MatrixXcd columns_;
};

/// Dimension of su(2^n).
Eigen::Index su_dimension(int n);

/// Smallest subspace containing `seeds` and closed under ad_g for every g
/// in `brackets_with`. Elements are visited in insertion order and
/// bracketed against the generators in the given order.
LieBasis ad_closure(const std::vector<Operator>& seeds, const std::vector<Operator>& brackets_with,
                    const ClosureOptions& options = {});

/// Lie algebra generated by `generators`.
LieBasis span_closure(const std::vector<Operator>& generators, const ClosureOptions& options = {});

/// Connectivity of the coupling graph (edge iff J_kl != 0).
bool graph_connected(const SpinNetwork& net);

/// Connected components of the coupling graph, each a sorted list of spins.
std::vector<std::vector<int>> graph_components(const SpinNetwork& net);

/// All gyromagnetic ratios pairwise different (exact comparison).
bool gamma_distinct(const SpinNetwork& net);

enum class ControllabilityTest { lie_rank, graph };

/// Lie algebra rank condition on {A, B_x, B_y, B_z}, or the coupling-graph
/// criterion (valid only for distinct gyromagnetic ratios; throws
/// std::domain_error otherwise).
bool is_controllable(const SpinNetwork& net, ControllabilityTest test = ControllabilityTest::lie_rank,
                     const ClosureOptions& options = {});

/// Span of iterated ad_{B_j} (B_0 = A) applied to i S_v^TOT.
LieBasis observability_space(const SpinNetwork& net, const ClosureOptions& options = {});

bool is_observable(const SpinNetwork& net, const ClosureOptions& options = {});

struct AnalysisReport {
  int spins = 0;
  bool controllable = false;
  bool observable = false;
  Eigen::Index lie_dimension = 0;
  Eigen::Index observability_dimension = 0;
  Eigen::Index target_dimension = 0;
  bool graph_connected = false;
  bool gamma_distinct = false;
};

AnalysisReport analyze(const SpinNetwork& net, const ClosureOptions& options = {});

}  // namespace spinid
