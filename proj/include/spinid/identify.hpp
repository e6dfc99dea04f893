#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spinid/dynamics.hpp"
#include "spinid/equivalence.hpp"
#include "spinid/operators.hpp"

namespace spinid {

using Edge = std::pair<int, int>;

struct Record {
  ControlSchedule schedule;
  Trace trace;
};

/// Input-output experiments under a fixed model hypothesis.
struct Dataset {
  int spins = 0;
  double grid = kDefaultGrid;
  /// Pairs (k < l) whose coupling is a free parameter; all others are 0.
  std::vector<Edge> edges;
  std::vector<Record> records;

  /// Throws std::invalid_argument when a trace does not match its
  /// schedule on the grid or exceeds the |M_v| <= n/2 bound.
  void validate() const;
  std::size_t sample_count() const;
};

/// Unknowns: couplings on the hypothesis edges, gyromagnetic ratios and,
/// for unknown-state fits, a lower-triangular factor T with
/// rho0 = T^H T / Tr(T^H T).
struct ParameterVector {
  int spins = 0;
  std::vector<Edge> edges;
  std::vector<double> couplings;
  std::vector<double> gamma;
  std::optional<Operator> state_factor;

  static ParameterVector from_network(const SpinNetwork& net, const std::vector<Edge>& edges);
  SpinNetwork network() const;
  std::optional<Operator> state() const;

  /// Flattened real parameters (couplings, gamma, then T entries).
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& theta);
  Eigen::Index size() const;
};

/// T^H T / Tr(T^H T).
Operator state_from_factor(const Operator& factor);
/// Lower-triangular T with T^H T = rho (rho must be positive definite).
Operator factor_from_state(const Operator& rho);

struct FitOptions {
  int starts = 1;
  std::uint64_t seed = 0;
  int max_iterations = 200;
  double relative_step = 1e-6;
  double stop_relative_decrease = 1e-12;
  /// Multi-start perturbation: parameters scaled by (1 + spread * U(-1, 1)).
  double start_spread = 0.2;
};

struct FitResult {
  ParameterVector estimate;
  /// The initial state used (known-state fits) or estimated.
  Operator state;
  double objective = 0.0;
  /// Root-mean-square misfit over all samples and axes.
  double residual = 0.0;
  std::string branch = "J";
  int iterations = 0;
  bool converged = false;
  int start = 0;
  std::vector<std::string> warnings;
  /// Hypothesis edges along which the objective is numerically flat.
  std::vector<Edge> flat_couplings;
};

/// Model-minus-data residuals, ordered record, sample, axis.
Eigen::VectorXd residuals(const ParameterVector& params, const Dataset& data, const Operator& rho0);

/// Sum of squared magnetization misfits.
double objective(const ParameterVector& params, const Dataset& data, const Operator& rho0);
/// Uses the state encoded in `params`.
double objective(const ParameterVector& params, const Dataset& data);

/// Gradient 2 J^T r with a central-difference residual Jacobian.
Eigen::VectorXd objective_gradient(const ParameterVector& params, const Dataset& data, const Operator& rho0,
                                   double relative_step = 1e-6);

FitResult fit_known_state(const Dataset& data, const DensityMatrix& rho0, const ParameterVector& initial_guess,
                          const FitOptions& options = {});

/// Fits J, gamma and the state, then reports the estimate ("J" branch)
/// and its sign-flipped partner ("-J" branch).
std::pair<FitResult, FitResult> fit_unknown_state(const Dataset& data, const ParameterVector& initial_guess,
                                                  const FitOptions& options = {});

/// A drift-only probe followed by count - 1 random 8-segment schedules.
std::vector<ControlSchedule> design_schedules(int n, int count, std::uint64_t seed);

/// Noiseless traces of (net, rho0) under `schedules`.
Dataset simulate_dataset(const SpinNetwork& net, const DensityMatrix& rho0,
                         const std::vector<ControlSchedule>& schedules, double grid,
                         const std::vector<Edge>& edges);

/// Additive Gaussian corruption of every sample; an extension for
/// robustness experiments (the noiseless case is the default).
Dataset add_gaussian_noise(Dataset data, double sigma, std::uint64_t seed);

/// Model-state pair described by a fit branch.
ModelStatePair to_pair(const FitResult& result);

}  // namespace spinid
