#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "spinid/dynamics.hpp"
#include "spinid/operators.hpp"

namespace spinid {

/// rho = scalar * I + odd + even, where `odd` collects Pauli strings with
/// an odd number of factors and `even` those with an even number >= 2.
struct ParitySplit {
  double scalar = 0.0;
  Operator odd;
  Operator even;
};

ParitySplit parity_split(const Operator& rho);
inline ParitySplit parity_split(const DensityMatrix& rho) { return parity_split(rho.matrix()); }

struct ModelStatePair {
  SpinNetwork net;
  DensityMatrix rho0;

  ModelStatePair() = default;
  /// Throws std::invalid_argument if the state and model sizes differ.
  ModelStatePair(SpinNetwork net, DensityMatrix rho0);
};

/// Relabels spin k as pi(k): gamma'_{pi(k)} = gamma_k, J'_{pi(k)pi(l)} =
/// J_kl, and rho0' = P^T rho0 P so that P rho0' P^T = rho0.
ModelStatePair apply_permutation(const ModelStatePair& pair, const std::vector<int>& pi);

struct PartnerResult {
  ModelStatePair pair;
  /// min eigenvalue of the partner state is >= -1e-10.
  bool psd_ok = false;
  double min_eigenvalue = 0.0;
};

/// All couplings negated, same gyromagnetic ratios, and the even-parity
/// part of the state flipped: rho0' = 2^{-n} I + odd - even.
PartnerResult partner_pair(const ModelStatePair& pair);

struct EquivalenceOptions {
  int trials = 20;
  std::uint64_t seed = 0;
  double tolerance = 1e-8;
  double grid = kDefaultGrid;
  int segments = 8;
  double amplitude_bound = 2.0;
};

struct EquivalenceVerdict {
  bool equivalent = false;
  double max_deviation = std::numeric_limits<double>::infinity();
  int trials = 0;
  double tolerance = 0.0;
  int spins_a = 0;
  int spins_b = 0;
  std::string note;
};

/// Seed of probe schedule `trial` derived from a base seed.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

/// The probe schedules used by equivalence_test for these options.
std::vector<ControlSchedule> probe_schedules(const EquivalenceOptions& options);

/// Largest |M_v - M'_v| over probe schedules, samples and axes. A
/// numerical certificate over finitely many inputs, not a proof.
EquivalenceVerdict equivalence_test(const ModelStatePair& a, const ModelStatePair& b,
                                    const EquivalenceOptions& options = {});

/// max_t |Tr(P rho(t)) - (-1)^{r-1} Tr(P rho'(t))| for an r-site string P,
/// over all given schedules. Throws if `partner` is not the sign-flipped
/// model of `pair`.
double sign_flip_trace_check(const ModelStatePair& pair, const ModelStatePair& partner,
                             const PauliString& string, const std::vector<ControlSchedule>& schedules,
                             double grid = kDefaultGrid);

/// Representative of the class: spins sorted by increasing gamma, and the
/// first nonzero coupling made positive (switching to the partner if
/// needed). Requires a connected graph and distinct gammas.
ModelStatePair canonicalize(const ModelStatePair& pair);

/// Permutation sorting gamma ascending: pi(k) = rank of gamma_k.
std::vector<int> sorting_permutation(const std::vector<double>& gamma);

}  // namespace spinid
