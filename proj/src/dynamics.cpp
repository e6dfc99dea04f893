#include "spinid/dynamics.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace spinid {

namespace {

// Diagonalized Hermitian generator H = iL; exp(L tau) = V exp(-i lambda tau) V^H.
class SegmentPropagator {
 public:
  explicit SegmentPropagator(const Operator& generator) {
    const Operator h = Complex(0.0, 1.0) * generator;
    Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (h + h.adjoint()));
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    vectors_ = es.eigenvectors();
    values_ = es.eigenvalues();
  }

  Operator at(double tau) const {
    Eigen::VectorXcd phases(values_.size());
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      phases(i) = std::polar(1.0, -values_(i) * tau);
    }
    return vectors_ * phases.asDiagonal() * vectors_.adjoint();
  }

 private:
  Operator vectors_;
  Eigen::VectorXd values_;
};

Operator segment_generator(const Generators& gens, const Segment& seg) {
  Operator l = gens.drift;
  for (Axis v : kAxes) {
    const double u = seg.amplitude(v);
    if (u != 0.0) l += u * gens.control[static_cast<std::size_t>(v)];
  }
  return l;
}

void conjugate_in_place(Operator& rho, const Operator& u) {
  Operator tmp = u * rho;
  rho.noalias() = tmp * u.adjoint();
}

double expectation(const Operator& f, const Operator& rho) {
  return f.cwiseProduct(rho.transpose()).sum().real();
}

void check_grid(double grid) {
  if (!(grid > 0.0) || !std::isfinite(grid)) {
    throw std::invalid_argument("invalid sample grid " + std::to_string(grid));
  }
}

}  // namespace

ControlSchedule::ControlSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
  for (const Segment& s : segments_) {
    if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
      throw std::invalid_argument("ControlSchedule: segment durations must be positive and finite");
    }
    if (!std::isfinite(s.ux) || !std::isfinite(s.uy) || !std::isfinite(s.uz)) {
      throw std::invalid_argument("ControlSchedule: control amplitudes must be finite");
    }
  }
}

double ControlSchedule::total_duration() const {
  double total = 0.0;
  for (const Segment& s : segments_) total += s.duration;
  return total;
}

DensityMatrix::DensityMatrix(Operator rho, Positivity policy) : rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols()) throw std::invalid_argument("density matrix must be square");
  n_ = spins_for_dimension(rho_.rows());
  if (!is_hermitian(rho_)) {
    throw std::invalid_argument("density matrix is not Hermitian (defect " +
                                std::to_string(hermitian_defect(rho_)) + ")");
  }
  const Complex tr = rho_.trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > 1e-12) {
    throw std::invalid_argument("density matrix trace is " + std::to_string(tr.real()) + ", expected 1");
  }
  Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (rho_ + rho_.adjoint()), Eigen::EigenvaluesOnly);
  min_eigenvalue_ = es.eigenvalues().minCoeff();
  if (policy == Positivity::require && !is_psd()) {
    throw std::invalid_argument("density matrix is not positive semidefinite (min eigenvalue " +
                                std::to_string(min_eigenvalue_) + ")");
  }
}

DensityMatrix DensityMatrix::maximally_mixed(int n) {
  if (n < 1 || n > kMaxRealizeSpins) throw std::invalid_argument("maximally_mixed: bad spin count");
  const Eigen::Index dim = Eigen::Index{1} << n;
  return DensityMatrix(Operator::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::from_pauli(int n, const PauliCoefficients& traceless, Positivity policy) {
  for (const auto& [p, c] : traceless) {
    if (p.is_identity()) throw std::invalid_argument("from_pauli: identity string is fixed by the trace");
  }
  Operator rho = reconstruct(n, traceless);
  rho.diagonal().array() += 1.0 / static_cast<double>(rho.rows());
  return DensityMatrix(std::move(rho), policy);
}

bool DensityMatrix::is_scalar(double tol) const {
  const Operator shifted = rho_ - Operator::Identity(rho_.rows(), rho_.cols()) / static_cast<double>(rho_.rows());
  return shifted.cwiseAbs().maxCoeff() < tol;
}

Operator step_exponential(const Operator& generator, double dt) {
  if (!is_skew_hermitian(generator)) {
    throw std::invalid_argument("step_exponential: generator is not skew-Hermitian (defect " +
                                std::to_string(skew_hermitian_defect(generator)) + ")");
  }
  if (!std::isfinite(dt)) throw std::invalid_argument("step_exponential: non-finite time step");
  return SegmentPropagator(generator).at(dt);
}

std::vector<double> sample_times(const ControlSchedule& sched, double grid) {
  check_grid(grid);
  const double total = sched.total_duration();
  const auto last = static_cast<std::size_t>(std::floor(total / grid + 1e-9));
  std::vector<double> t(last + 1);
  for (std::size_t j = 0; j <= last; ++j) t[j] = static_cast<double>(j) * grid;
  return t;
}

void evolve(const Generators& gens, const ControlSchedule& sched, const Operator& rho0, double grid,
            const SampleVisitor& visit) {
  if (rho0.rows() != gens.drift.rows() || rho0.cols() != gens.drift.cols()) {
    throw std::invalid_argument("evolve: state dimension " + std::to_string(rho0.rows()) +
                                " does not match model dimension " + std::to_string(gens.drift.rows()));
  }
  const std::vector<double> times = sample_times(sched, grid);
  // The identity component is invariant; only the traceless part is propagated.
  const Complex scalar = rho0.trace() / static_cast<double>(rho0.rows());
  Operator rho = rho0;
  rho.diagonal().array() -= scalar;
  Operator full = rho0;
  visit(0, 0.0, full);
  const auto report = [&](std::size_t j, double t) {
    full = rho;
    full.diagonal().array() += scalar;
    visit(j, t, full);
  };

  const auto& segments = sched.segments();
  std::size_t next = 1;
  double now = 0.0;
  double seg_start = 0.0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const double seg_end = seg_start + segments[s].duration;
    const bool last_segment = s + 1 == segments.size();
    // Samples within rounding of the final boundary still belong to the schedule.
    const double limit = last_segment ? seg_end + 1e-9 * grid : seg_end + 1e-12;
    const SegmentPropagator prop(segment_generator(gens, segments[s]));
    std::optional<Operator> full_step;

    while (next < times.size() && times[next] <= limit) {
      const double tau = times[next] - now;
      if (std::abs(tau - grid) < 1e-13) {
        if (!full_step) full_step = prop.at(grid);
        conjugate_in_place(rho, *full_step);
      } else if (tau > 0.0) {
        conjugate_in_place(rho, prop.at(tau));
      }
      now = times[next];
      report(next, now);
      ++next;
    }
    if (seg_end - now > 0.0) {
      conjugate_in_place(rho, prop.at(seg_end - now));
      now = seg_end;
    }
    seg_start = seg_end;
  }
}

Trajectory propagate(const SpinNetwork& net, const ControlSchedule& sched, const DensityMatrix& rho0,
                     double grid) {
  if (rho0.spins() != net.spins()) throw std::invalid_argument("propagate: state/model dimension mismatch");
  Trajectory out;
  evolve(build_generators(net), sched, rho0.matrix(), grid, [&](std::size_t, double t, const Operator& rho) {
    out.t.push_back(t);
    out.rho.push_back(rho);
  });
  return out;
}

Trace magnetization_trace(const Generators& gens, const ControlSchedule& sched, const Operator& rho0,
                          double grid) {
  const int n = spins_for_dimension(gens.drift.rows());
  const Operator sx = total_spin(n, Axis::x);
  const Operator sy = total_spin(n, Axis::y);
  const Operator sz = total_spin(n, Axis::z);
  Trace out;
  evolve(gens, sched, rho0, grid, [&](std::size_t, double t, const Operator& rho) {
    out.t.push_back(t);
    out.mx.push_back(expectation(sx, rho));
    out.my.push_back(expectation(sy, rho));
    out.mz.push_back(expectation(sz, rho));
  });
  return out;
}

Trace magnetization_trace(const SpinNetwork& net, const ControlSchedule& sched, const DensityMatrix& rho0,
                          double grid) {
  if (rho0.spins() != net.spins()) {
    throw std::invalid_argument("magnetization_trace: state/model dimension mismatch");
  }
  return magnetization_trace(build_generators(net), sched, rho0.matrix(), grid);
}

std::vector<std::vector<double>> observable_traces(const Generators& gens, const ControlSchedule& sched,
                                                   const Operator& rho0,
                                                   const std::vector<Operator>& observables, double grid) {
  for (const Operator& f : observables) {
    if (f.rows() != gens.drift.rows() || f.cols() != gens.drift.cols()) {
      throw std::invalid_argument("observable_traces: observable dimension mismatch");
    }
    const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
    if (!is_hermitian(f, kHermitianTol * scale)) {
      throw std::invalid_argument("observable_traces: observable is not Hermitian");
    }
  }
  std::vector<std::vector<double>> out(observables.size());
  evolve(gens, sched, rho0, grid, [&](std::size_t, double, const Operator& rho) {
    for (std::size_t i = 0; i < observables.size(); ++i) out[i].push_back(expectation(observables[i], rho));
  });
  return out;
}

std::vector<double> observable_trace(const SpinNetwork& net, const ControlSchedule& sched,
                                     const DensityMatrix& rho0, const Operator& observable, double grid) {
  if (rho0.spins() != net.spins()) throw std::invalid_argument("observable_trace: state/model dimension mismatch");
  return observable_traces(build_generators(net), sched, rho0.matrix(), {observable}, grid).front();
}

ControlSchedule random_schedule(int n_segments, double amplitude_bound, std::uint64_t seed) {
  if (n_segments < 1) throw std::invalid_argument("random_schedule: need at least one segment");
  if (!(amplitude_bound >= 0.0) || !std::isfinite(amplitude_bound)) {
    throw std::invalid_argument("random_schedule: amplitude bound must be finite and >= 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> duration(0.05, 0.5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Segment> segments;
  segments.reserve(static_cast<std::size_t>(n_segments));
  for (int i = 0; i < n_segments; ++i) {
    Segment s{duration(rng)};
    // Draws are consumed even for a zero bound so the duration stream is unchanged.
    const double ux = unit(rng), uy = unit(rng), uz = unit(rng);
    if (amplitude_bound > 0.0) {
      s.ux = amplitude_bound * ux;
      s.uy = amplitude_bound * uy;
      s.uz = amplitude_bound * uz;
    }
    segments.push_back(s);
  }
  return ControlSchedule(std::move(segments));
}

}  // namespace spinid
