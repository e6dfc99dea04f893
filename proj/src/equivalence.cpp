#include "spinid/equivalence.hpp"

#include "spinid/liealg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spinid {

ParitySplit parity_split(const Operator& rho) {
  const int n = spins_for_dimension(rho.rows());
  PauliCoefficients odd;
  PauliCoefficients even;
  ParitySplit out;
  for (const auto& [p, c] : pauli_decompose(rho)) {
    if (p.is_identity()) {
      out.scalar = c;
    } else if (p.weight() % 2 == 1) {
      odd.emplace(p, c);
    } else {
      even.emplace(p, c);
    }
  }
  out.odd = reconstruct(n, odd);
  out.even = reconstruct(n, even);
  return out;
}

ModelStatePair::ModelStatePair(SpinNetwork net_, DensityMatrix rho0_)
    : net(std::move(net_)), rho0(std::move(rho0_)) {
  if (net.spins() != rho0.spins()) {
    throw std::invalid_argument("model has " + std::to_string(net.spins()) + " spins but state has " +
                                std::to_string(rho0.spins()));
  }
}

ModelStatePair apply_permutation(const ModelStatePair& pair, const std::vector<int>& pi) {
  const int n = pair.net.spins();
  validate_permutation(n, pi);
  auto image = [&](int k) { return pi[static_cast<std::size_t>(k - 1)]; };

  SpinNetwork net(n);
  for (int k = 1; k <= n; ++k) net.set_gamma(image(k), pair.net.gamma(k));
  for (const auto& [kl, j] : pair.net.couplings()) net.set_coupling(image(kl.first), image(kl.second), j);

  const Eigen::MatrixXd p = permutation_operator(n, pi);
  Operator rho = p.transpose().cast<Complex>() * pair.rho0.matrix() * p.cast<Complex>();
  return {std::move(net), DensityMatrix(std::move(rho), DensityMatrix::Positivity::report)};
}

PartnerResult partner_pair(const ModelStatePair& pair) {
  const int n = pair.net.spins();
  SpinNetwork net(n);
  for (int k = 1; k <= n; ++k) net.set_gamma(k, pair.net.gamma(k));
  for (const auto& [kl, j] : pair.net.couplings()) net.set_coupling(kl.first, kl.second, -j);

  const ParitySplit split = parity_split(pair.rho0);
  Operator rho = split.odd - split.even;
  rho.diagonal().array() += 1.0 / static_cast<double>(rho.rows());

  PartnerResult out;
  out.pair = ModelStatePair(std::move(net), DensityMatrix(std::move(rho), DensityMatrix::Positivity::report));
  out.min_eigenvalue = out.pair.rho0.min_eigenvalue();
  out.psd_ok = out.pair.rho0.is_psd();
  return out;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  // splitmix64 finalizer over (seed, trial)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(trial) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<ControlSchedule> probe_schedules(const EquivalenceOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("equivalence test needs at least one trial");
  std::vector<ControlSchedule> out;
  out.reserve(static_cast<std::size_t>(options.trials));
  for (int i = 0; i < options.trials; ++i) {
    out.push_back(random_schedule(options.segments, options.amplitude_bound, trial_seed(options.seed, i)));
  }
  return out;
}

EquivalenceVerdict equivalence_test(const ModelStatePair& a, const ModelStatePair& b,
                                    const EquivalenceOptions& options) {
  EquivalenceVerdict v;
  v.tolerance = options.tolerance;
  v.spins_a = a.net.spins();
  v.spins_b = b.net.spins();
  if (v.spins_a != v.spins_b) {
    v.note = "spin counts differ (" + std::to_string(v.spins_a) + " vs " + std::to_string(v.spins_b) +
             "); equivalent pairs must have the same n";
    return v;
  }
  const Generators ga = build_generators(a.net);
  const Generators gb = build_generators(b.net);
  double worst = 0.0;
  for (const ControlSchedule& sched : probe_schedules(options)) {
    const Trace ta = magnetization_trace(ga, sched, a.rho0.matrix(), options.grid);
    const Trace tb = magnetization_trace(gb, sched, b.rho0.matrix(), options.grid);
    for (Axis axis : kAxes) {
      const auto& ca = ta.channel(axis);
      const auto& cb = tb.channel(axis);
      for (std::size_t j = 0; j < ca.size(); ++j) worst = std::max(worst, std::abs(ca[j] - cb[j]));
    }
    ++v.trials;
  }
  v.max_deviation = worst;
  v.equivalent = worst < options.tolerance;
  return v;
}

double sign_flip_trace_check(const ModelStatePair& pair, const ModelStatePair& partner,
                             const PauliString& string, const std::vector<ControlSchedule>& schedules,
                             double grid) {
  const int n = pair.net.spins();
  if (partner.net.spins() != n || string.spins() != n) {
    throw std::invalid_argument("sign_flip_trace_check: spin counts differ");
  }
  if (partner.net.gamma() != pair.net.gamma()) {
    throw std::invalid_argument("sign_flip_trace_check: partner must keep the gyromagnetic ratios");
  }
  for (int k = 1; k <= n; ++k) {
    for (int l = k + 1; l <= n; ++l) {
      if (partner.net.coupling(k, l) != -pair.net.coupling(k, l)) {
        throw std::invalid_argument("sign_flip_trace_check: partner couplings are not all negated");
      }
    }
  }
  if (string.is_identity()) throw std::invalid_argument("sign_flip_trace_check: string must have r >= 1 sites");

  const double sign = (string.weight() % 2 == 1) ? 1.0 : -1.0;  // (-1)^{r-1}
  const Operator p = realize(string);
  const Generators g = build_generators(pair.net);
  const Generators gp = build_generators(partner.net);
  double worst = 0.0;
  for (const ControlSchedule& sched : schedules) {
    const auto lhs = observable_traces(g, sched, pair.rho0.matrix(), {p}, grid).front();
    const auto rhs = observable_traces(gp, sched, partner.rho0.matrix(), {p}, grid).front();
    for (std::size_t j = 0; j < lhs.size(); ++j) worst = std::max(worst, std::abs(lhs[j] - sign * rhs[j]));
  }
  return worst;
}

std::vector<int> sorting_permutation(const std::vector<double>& gamma) {
  std::vector<int> order(gamma.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gamma[static_cast<std::size_t>(a)] < gamma[static_cast<std::size_t>(b)]; });
  std::vector<int> pi(gamma.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    pi[static_cast<std::size_t>(order[rank])] = static_cast<int>(rank) + 1;
  }
  return pi;
}

ModelStatePair canonicalize(const ModelStatePair& pair) {
  std::vector<double> sorted = pair.net.gamma();
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::domain_error("canonicalize: duplicate gyromagnetic ratios leave the spin order undefined");
  }
  if (!graph_connected(pair.net)) throw std::domain_error("canonicalize: coupling graph is not connected");
  ModelStatePair out = apply_permutation(pair, sorting_permutation(pair.net.gamma()));
  const auto& couplings = out.net.couplings();
  if (!couplings.empty() && couplings.begin()->second < 0.0) out = partner_pair(out).pair;
  return out;
}

}  // namespace spinid
