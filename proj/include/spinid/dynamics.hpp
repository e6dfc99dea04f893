#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spinid/operators.hpp"

namespace spinid {

/// Default spacing of output samples.
inline constexpr double kDefaultGrid = 0.01;

/// Eigenvalue floor accepted as positive semidefinite.
inline constexpr double kPsdTol = 1e-10;

struct Segment {
  double duration;
  double ux = 0.0;
  double uy = 0.0;
  double uz = 0.0;

  double amplitude(Axis v) const { return v == Axis::x ? ux : (v == Axis::y ? uy : uz); }
  bool operator==(const Segment&) const = default;
};

/// Piecewise-constant controls (u_x, u_y, u_z).
class ControlSchedule {
 public:
  ControlSchedule() = default;
  /// Throws std::invalid_argument on a non-positive or non-finite duration
  /// or a non-finite amplitude.
  explicit ControlSchedule(std::vector<Segment> segments);

  const std::vector<Segment>& segments() const { return segments_; }
  double total_duration() const;
  bool empty() const { return segments_.empty(); }

  bool operator==(const ControlSchedule&) const = default;

 private:
  std::vector<Segment> segments_;
};

/// Hermitian, unit-trace state. Positivity is either enforced at
/// construction or only recorded, for states such as sign-flip partners
/// whose positivity is not guaranteed.
class DensityMatrix {
 public:
  enum class Positivity { require, report };

  DensityMatrix() = default;
  explicit DensityMatrix(Operator rho, Positivity policy = Positivity::require);

  static DensityMatrix maximally_mixed(int n);
  /// 2^{-n} I plus the given traceless Pauli expansion. The identity
  /// string, if present, is rejected.
  static DensityMatrix from_pauli(int n, const PauliCoefficients& traceless,
                                  Positivity policy = Positivity::require);

  const Operator& matrix() const { return rho_; }
  int spins() const { return n_; }
  Eigen::Index dimension() const { return rho_.rows(); }

  double min_eigenvalue() const { return min_eigenvalue_; }
  bool is_psd() const { return min_eigenvalue_ >= -kPsdTol; }
  /// True when rho is a multiple of the identity (all outputs vanish).
  bool is_scalar(double tol = 1e-12) const;

 private:
  Operator rho_;
  int n_ = 0;
  double min_eigenvalue_ = 0.0;
};

/// Magnetization samples M_v(t_j) = Tr(S_v^TOT rho(t_j)).
struct Trace {
  std::vector<double> t;
  std::vector<double> mx;
  std::vector<double> my;
  std::vector<double> mz;

  std::size_t size() const { return t.size(); }
  const std::vector<double>& channel(Axis v) const { return v == Axis::x ? mx : (v == Axis::y ? my : mz); }
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Operator> rho;
};

/// exp(L dt) for skew-Hermitian L via the eigendecomposition of iL.
Operator step_exponential(const Operator& generator, double dt);

/// Sample times j * grid, j = 0..floor(T / grid).
std::vector<double> sample_times(const ControlSchedule& sched, double grid);

using SampleVisitor = std::function<void(std::size_t index, double t, const Operator& rho)>;

/// Exact piecewise propagation of rho0 under `gens`, calling `visit` at
/// every sample time. Sample intervals are split at segment boundaries.
void evolve(const Generators& gens, const ControlSchedule& sched, const Operator& rho0, double grid,
            const SampleVisitor& visit);

Trajectory propagate(const SpinNetwork& net, const ControlSchedule& sched, const DensityMatrix& rho0,
                     double grid = kDefaultGrid);

Trace magnetization_trace(const SpinNetwork& net, const ControlSchedule& sched, const DensityMatrix& rho0,
                          double grid = kDefaultGrid);
Trace magnetization_trace(const Generators& gens, const ControlSchedule& sched, const Operator& rho0,
                          double grid = kDefaultGrid);

/// Tr(F rho(t_j)) for Hermitian F.
std::vector<double> observable_trace(const SpinNetwork& net, const ControlSchedule& sched,
                                     const DensityMatrix& rho0, const Operator& observable,
                                     double grid = kDefaultGrid);

/// Several observables along one trajectory; result[i][j] = Tr(F_i rho(t_j)).
std::vector<std::vector<double>> observable_traces(const Generators& gens, const ControlSchedule& sched,
                                                   const Operator& rho0,
                                                   const std::vector<Operator>& observables,
                                                   double grid = kDefaultGrid);

/// Amplitudes uniform in [-bound, bound], durations uniform in [0.05, 0.5].
ControlSchedule random_schedule(int n_segments, double amplitude_bound, std::uint64_t seed);

}  // namespace spinid
