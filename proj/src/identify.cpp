#include "spinid/identify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "spinid/liealg.hpp"

namespace spinid {

namespace {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Eigen::MatrixXd central_jacobian(const ResidualFn& fn, const Eigen::VectorXd& theta, Eigen::Index rows,
                                 double relative_step) {
  Eigen::MatrixXd jac(rows, theta.size());
  Eigen::VectorXd probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double h = relative_step * std::max(1.0, std::abs(theta(i)));
    probe(i) = theta(i) + h;
    const Eigen::VectorXd plus = fn(probe);
    probe(i) = theta(i) - h;
    const Eigen::VectorXd minus = fn(probe);
    probe(i) = theta(i);
    jac.col(i) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

struct SolveOutcome {
  Eigen::VectorXd theta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped least squares (Levenberg-Marquardt with Marquardt scaling).
SolveOutcome damped_least_squares(const ResidualFn& fn, Eigen::VectorXd theta, const FitOptions& options) {
  constexpr double kNegligible = 1e-28;
  Eigen::VectorXd r = fn(theta);
  double f = r.squaredNorm();
  SolveOutcome out;
  if (f <= kNegligible) {
    out.theta = std::move(theta);
    out.objective = f;
    out.converged = true;
    return out;
  }

  double lambda = 1e-3;
  bool refresh = true;
  Eigen::MatrixXd jtj;
  Eigen::VectorXd jtr;
  Eigen::VectorXd scale;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (refresh) {
      const Eigen::MatrixXd jac = central_jacobian(fn, theta, r.size(), options.relative_step);
      jtj = jac.transpose() * jac;
      jtr = jac.transpose() * r;
      scale = jtj.diagonal();
      const double floor = std::max(1e-9 * scale.maxCoeff(), 1e-30);
      scale = scale.cwiseMax(floor);
      refresh = false;
    }
    Eigen::MatrixXd lhs = jtj;
    lhs.diagonal() += lambda * scale;
    const Eigen::VectorXd step = lhs.ldlt().solve(-jtr);
    const Eigen::VectorXd candidate = theta + step;
    const Eigen::VectorXd r_new = fn(candidate);
    const double f_new = r_new.squaredNorm();

    if (std::isfinite(f_new) && f_new < f) {
      const double decrease = (f - f_new) / f;
      theta = candidate;
      r = r_new;
      f = f_new;
      lambda = std::max(lambda / 10.0, 1e-15);
      refresh = true;
      if (decrease < options.stop_relative_decrease || f <= kNegligible) {
        out.converged = true;
        ++it;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e16) {
        // No descent direction left at working precision.
        out.converged = true;
        ++it;
        break;
      }
    }
  }
  out.theta = std::move(theta);
  out.objective = f;
  out.iterations = it;
  return out;
}

double min_gamma_gap(const std::vector<double>& gamma) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    for (std::size_t j = i + 1; j < gamma.size(); ++j) gap = std::min(gap, std::abs(gamma[i] - gamma[j]));
  }
  return gap;
}

void append_identifiability_warnings(const ParameterVector& p, const std::string& where,
                                     std::vector<std::string>& warnings) {
  if (p.spins > 1 && min_gamma_gap(p.gamma) < 1e-6) {
    warnings.push_back(where +
                       ": near-equal gyromagnetic ratios; couplings are not identifiable from the "
                       "total magnetization when all ratios coincide");
  }
  SpinNetwork skeleton(p.spins);
  for (const Edge& e : p.edges) skeleton.set_coupling(e.first, e.second, 1.0);
  if (!graph_connected(skeleton)) {
    warnings.push_back(where + ": hypothesis coupling graph is disconnected; the model is not controllable");
  }
}

std::vector<Edge> flat_coupling_directions(const ParameterVector& p, const Dataset& data, const Operator& rho0,
                                           double f0) {
  std::vector<Edge> flat;
  for (std::size_t e = 0; e < p.edges.size(); ++e) {
    const double delta = 1e-3 * std::max(1.0, std::abs(p.couplings[e]));
    double change = 0.0;
    for (double sign : {1.0, -1.0}) {
      ParameterVector q = p;
      q.couplings[e] += sign * delta;
      change = std::max(change, std::abs(objective(q, data, rho0) - f0));
    }
    if (change < 1e-12) flat.push_back(p.edges[e]);
  }
  return flat;
}

ParameterVector perturbed(const ParameterVector& base, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  ParameterVector p = base;
  for (double& j : p.couplings) j *= 1.0 + spread * unit(rng);
  for (double& g : p.gamma) g *= 1.0 + spread * unit(rng);
  if (p.state_factor) {
    Operator& t = *p.state_factor;
    const double mag = spread * t.cwiseAbs().maxCoeff() * 0.25;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        t(i, j) += Complex(mag * normal(rng), i > j ? mag * normal(rng) : 0.0);
      }
    }
  }
  return p;
}

void check_fit_inputs(const Dataset& data, const ParameterVector& guess) {
  if (data.records.empty()) throw std::invalid_argument("fit: dataset is empty");
  data.validate();
  if (guess.spins != data.spins || guess.edges != data.edges) {
    throw std::invalid_argument("fit: initial guess does not match the dataset hypothesis");
  }
  if (guess.gamma.size() != static_cast<std::size_t>(data.spins) || guess.couplings.size() != guess.edges.size()) {
    throw std::invalid_argument("fit: initial guess has inconsistent sizes");
  }
}

FitResult finish_result(const ParameterVector& estimate, const Operator& state, const Dataset& data,
                        const SolveOutcome& outcome, int start) {
  FitResult r;
  r.estimate = estimate;
  r.state = state;
  r.objective = outcome.objective;
  r.residual = std::sqrt(outcome.objective / static_cast<double>(3 * data.sample_count()));
  r.iterations = outcome.iterations;
  r.converged = outcome.converged;
  r.start = start;
  return r;
}

}  // namespace

void Dataset::validate() const {
  if (spins < 1) throw std::invalid_argument("dataset: spin count must be positive");
  if (!(grid > 0.0) || !std::isfinite(grid)) throw std::invalid_argument("dataset: invalid grid");
  for (const Edge& e : edges) {
    if (e.first < 1 || e.second > spins || e.first >= e.second) {
      throw std::invalid_argument("dataset: invalid hypothesis edge (" + std::to_string(e.first) + "," +
                                  std::to_string(e.second) + ")");
    }
  }
  const double bound = 0.5 * spins + 1e-9;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& rec = records[i];
    const std::vector<double> times = sample_times(rec.schedule, grid);
    const Trace& tr = rec.trace;
    if (tr.t.size() != times.size() || tr.mx.size() != times.size() || tr.my.size() != times.size() ||
        tr.mz.size() != times.size()) {
      throw std::invalid_argument("dataset: record " + std::to_string(i) + " has " + std::to_string(tr.t.size()) +
                                  " samples, schedule implies " + std::to_string(times.size()));
    }
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (std::abs(tr.t[j] - times[j]) > 1e-9 * std::max(1.0, times[j])) {
        throw std::invalid_argument("dataset: record " + std::to_string(i) + " sample times do not match the grid");
      }
      if (std::abs(tr.mx[j]) > bound || std::abs(tr.my[j]) > bound || std::abs(tr.mz[j]) > bound) {
        throw std::invalid_argument("dataset: record " + std::to_string(i) + " exceeds the |M| <= n/2 bound");
      }
    }
  }
}

std::size_t Dataset::sample_count() const {
  std::size_t total = 0;
  for (const Record& r : records) total += r.trace.size();
  return total;
}

ParameterVector ParameterVector::from_network(const SpinNetwork& net, const std::vector<Edge>& edges) {
  ParameterVector p;
  p.spins = net.spins();
  p.edges = edges;
  for (const Edge& e : edges) p.couplings.push_back(net.coupling(e.first, e.second));
  p.gamma = net.gamma();
  return p;
}

SpinNetwork ParameterVector::network() const {
  SpinNetwork net(spins);
  for (int k = 1; k <= spins; ++k) net.set_gamma(k, gamma.at(static_cast<std::size_t>(k - 1)));
  for (std::size_t e = 0; e < edges.size(); ++e) net.set_coupling(edges[e].first, edges[e].second, couplings.at(e));
  return net;
}

std::optional<Operator> ParameterVector::state() const {
  if (!state_factor) return std::nullopt;
  return state_from_factor(*state_factor);
}

Eigen::Index ParameterVector::size() const {
  const Eigen::Index dim = state_factor ? state_factor->rows() : 0;
  return static_cast<Eigen::Index>(couplings.size() + gamma.size()) + dim * dim;
}

Eigen::VectorXd ParameterVector::pack() const {
  Eigen::VectorXd theta(size());
  Eigen::Index k = 0;
  for (double j : couplings) theta(k++) = j;
  for (double g : gamma) theta(k++) = g;
  if (state_factor) {
    const Operator& t = *state_factor;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        theta(k++) = t(i, j).real();
        if (i > j) theta(k++) = t(i, j).imag();
      }
    }
  }
  return theta;
}

void ParameterVector::unpack(const Eigen::VectorXd& theta) {
  if (theta.size() != size()) throw std::invalid_argument("ParameterVector::unpack: size mismatch");
  Eigen::Index k = 0;
  for (double& j : couplings) j = theta(k++);
  for (double& g : gamma) g = theta(k++);
  if (state_factor) {
    Operator& t = *state_factor;
    t.setZero();
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double re = theta(k++);
        const double im = i > j ? theta(k++) : 0.0;
        t(i, j) = Complex(re, im);
      }
    }
  }
}

Operator state_from_factor(const Operator& factor) {
  Operator m = factor.adjoint() * factor;
  const double tr = m.trace().real();
  if (!(tr > 0.0)) throw std::invalid_argument("state_from_factor: zero factor");
  m /= tr;
  return 0.5 * (m + m.adjoint());
}

Operator factor_from_state(const Operator& rho) {
  // With R the index reversal, R rho R = L L^H gives T = R L^H R lower triangular.
  const Operator reversed = rho.colwise().reverse().rowwise().reverse();
  Eigen::LLT<Operator> llt(reversed);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("factor_from_state: state is not positive definite");
  const Operator upper = llt.matrixL().adjoint();
  return upper.colwise().reverse().rowwise().reverse();
}

Eigen::VectorXd residuals(const ParameterVector& params, const Dataset& data, const Operator& rho0) {
  const Generators gens = build_generators(params.network());
  Eigen::VectorXd r(static_cast<Eigen::Index>(3 * data.sample_count()));
  Eigen::Index k = 0;
  for (const Record& rec : data.records) {
    const Trace model = magnetization_trace(gens, rec.schedule, rho0, data.grid);
    if (model.size() != rec.trace.size()) throw std::invalid_argument("objective: inconsistent grid");
    for (std::size_t j = 0; j < model.size(); ++j) {
      r(k++) = model.mx[j] - rec.trace.mx[j];
      r(k++) = model.my[j] - rec.trace.my[j];
      r(k++) = model.mz[j] - rec.trace.mz[j];
    }
  }
  return r;
}

double objective(const ParameterVector& params, const Dataset& data, const Operator& rho0) {
  return residuals(params, data, rho0).squaredNorm();
}

double objective(const ParameterVector& params, const Dataset& data) {
  const auto rho = params.state();
  if (!rho) throw std::invalid_argument("objective: parameters carry no state");
  return objective(params, data, *rho);
}

Eigen::VectorXd objective_gradient(const ParameterVector& params, const Dataset& data, const Operator& rho0,
                                   double relative_step) {
  ParameterVector work = params;
  const ResidualFn fn = [&](const Eigen::VectorXd& theta) {
    work.unpack(theta);
    const auto rho = work.state();
    return residuals(work, data, rho ? *rho : rho0);
  };
  const Eigen::VectorXd theta = params.pack();
  const Eigen::VectorXd r = fn(theta);
  const Eigen::MatrixXd jac = central_jacobian(fn, theta, r.size(), relative_step);
  return 2.0 * jac.transpose() * r;
}

FitResult fit_known_state(const Dataset& data, const DensityMatrix& rho0, const ParameterVector& initial_guess,
                          const FitOptions& options) {
  check_fit_inputs(data, initial_guess);
  if (rho0.spins() != data.spins) throw std::invalid_argument("fit_known_state: state dimension mismatch");
  if (rho0.is_scalar()) {
    throw std::domain_error("fit_known_state: scalar initial state gives identically zero outputs; "
                            "parameters are unidentifiable");
  }
  ParameterVector base = initial_guess;
  base.state_factor.reset();

  std::optional<FitResult> best;
  for (int s = 0; s < std::max(1, options.starts); ++s) {
    ParameterVector start = s == 0 ? base : perturbed(base, options.start_spread, trial_seed(options.seed, s));
    ParameterVector work = start;
    const ResidualFn fn = [&](const Eigen::VectorXd& theta) {
      work.unpack(theta);
      return residuals(work, data, rho0.matrix());
    };
    const SolveOutcome outcome = damped_least_squares(fn, start.pack(), options);
    ParameterVector estimate = start;
    estimate.unpack(outcome.theta);
    FitResult result = finish_result(estimate, rho0.matrix(), data, outcome, s);
    if (!best || result.objective < best->objective) best = std::move(result);
  }

  FitResult& r = *best;
  append_identifiability_warnings(initial_guess, "initial guess", r.warnings);
  append_identifiability_warnings(r.estimate, "estimate", r.warnings);
  r.flat_couplings = flat_coupling_directions(r.estimate, data, rho0.matrix(), r.objective);
  for (const Edge& e : r.flat_couplings) {
    r.warnings.push_back("objective is flat along J_" + std::to_string(e.first) + std::to_string(e.second) +
                         "; that coupling is unconstrained by the data");
  }
  return r;
}

std::pair<FitResult, FitResult> fit_unknown_state(const Dataset& data, const ParameterVector& initial_guess,
                                                  const FitOptions& options) {
  check_fit_inputs(data, initial_guess);
  double peak = 0.0;
  for (const Record& rec : data.records) {
    for (Axis v : kAxes) {
      for (double m : rec.trace.channel(v)) peak = std::max(peak, std::abs(m));
    }
  }
  if (peak <= 1e-12) throw std::domain_error("scalar-state data: unidentifiable");

  ParameterVector base = initial_guess;
  const Eigen::Index dim = Eigen::Index{1} << data.spins;
  if (!base.state_factor) {
    std::mt19937_64 rng(trial_seed(options.seed ^ 0x5eedfac7u, 0));
    std::normal_distribution<double> normal(0.0, 0.3);
    Operator t = Operator::Identity(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) t(i, j) += Complex(normal(rng), i > j ? normal(rng) : 0.0);
    }
    base.state_factor = t;
  } else if (base.state_factor->rows() != dim || base.state_factor->cols() != dim) {
    throw std::invalid_argument("fit_unknown_state: state factor has the wrong dimension");
  }

  std::optional<FitResult> best;
  for (int s = 0; s < std::max(1, options.starts); ++s) {
    ParameterVector start = s == 0 ? base : perturbed(base, options.start_spread, trial_seed(options.seed, s));
    ParameterVector work = start;
    const ResidualFn fn = [&](const Eigen::VectorXd& theta) {
      work.unpack(theta);
      return residuals(work, data, *work.state());
    };
    const SolveOutcome outcome = damped_least_squares(fn, start.pack(), options);
    ParameterVector estimate = start;
    estimate.unpack(outcome.theta);
    FitResult result = finish_result(estimate, *estimate.state(), data, outcome, s);
    if (!best || result.objective < best->objective) best = std::move(result);
  }

  FitResult primary = std::move(*best);
  primary.branch = "J";
  append_identifiability_warnings(initial_guess, "initial guess", primary.warnings);
  append_identifiability_warnings(primary.estimate, "estimate", primary.warnings);

  const PartnerResult partner = partner_pair(to_pair(primary));
  FitResult mirror;
  mirror.branch = "-J";
  mirror.estimate = primary.estimate;
  mirror.estimate.state_factor.reset();
  for (double& j : mirror.estimate.couplings) j = -j;
  mirror.state = partner.pair.rho0.matrix();
  mirror.objective = objective(mirror.estimate, data, mirror.state);
  mirror.residual = std::sqrt(mirror.objective / static_cast<double>(3 * data.sample_count()));
  mirror.iterations = primary.iterations;
  mirror.converged = primary.converged;
  mirror.start = primary.start;
  mirror.warnings = primary.warnings;
  if (!partner.psd_ok) {
    std::ostringstream os;
    os << "partner state is not positive semidefinite (min eigenvalue " << partner.min_eigenvalue << ")";
    mirror.warnings.push_back(os.str());
  }
  if (std::abs(mirror.residual - primary.residual) > 1e-8) {
    const std::string w = "branch residuals differ beyond 1e-8";
    primary.warnings.push_back(w);
    mirror.warnings.push_back(w);
  }
  return {std::move(primary), std::move(mirror)};
}

std::vector<ControlSchedule> design_schedules(int n, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("design_schedules: count must be >= 1");
  if (n < 1) throw std::invalid_argument("design_schedules: n must be >= 1");
  std::vector<ControlSchedule> out;
  out.emplace_back(std::vector<Segment>{Segment{2.0}});
  for (int i = 1; i < count; ++i) out.push_back(random_schedule(8, 2.0, trial_seed(seed, i)));
  return out;
}

Dataset simulate_dataset(const SpinNetwork& net, const DensityMatrix& rho0,
                         const std::vector<ControlSchedule>& schedules, double grid,
                         const std::vector<Edge>& edges) {
  Dataset d;
  d.spins = net.spins();
  d.grid = grid;
  d.edges = edges;
  const Generators gens = build_generators(net);
  for (const ControlSchedule& s : schedules) {
    d.records.push_back({s, magnetization_trace(gens, s, rho0.matrix(), grid)});
  }
  return d;
}

Dataset add_gaussian_noise(Dataset data, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (Record& rec : data.records) {
    for (auto* ch : {&rec.trace.mx, &rec.trace.my, &rec.trace.mz}) {
      for (double& m : *ch) m += normal(rng);
    }
  }
  return data;
}

ModelStatePair to_pair(const FitResult& result) {
  return {result.estimate.network(), DensityMatrix(result.state, DensityMatrix::Positivity::report)};
}

}  // namespace spinid
