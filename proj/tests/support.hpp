#pragma once

#include <random>
#include <vector>

#include "spinid/dynamics.hpp"
#include "spinid/operators.hpp"

namespace spinid::test {

inline Operator kron(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// Half-Pauli on one site, built by explicit Kronecker products.
inline Operator kron_site(int n, int k, Axis v) {
  Operator out = Operator::Identity(1, 1);
  for (int s = 1; s <= n; ++s) {
    const Operator f = s == k ? Operator(pauli(v)) : Operator(Operator::Identity(2, 2));
    out = kron(out, f);
  }
  return out;
}

inline Operator kron_string(const PauliString& p) {
  Operator out = Operator::Identity(1, 1);
  for (int s = 1; s <= p.spins(); ++s) {
    const auto v = p.axis_at(s);
    out = kron(out, v ? Operator(pauli(*v)) : Operator(Operator::Identity(2, 2)));
  }
  return out;
}

inline std::vector<PauliString> all_strings(int n) {
  std::vector<PauliString> out;
  long total = 1;
  for (int k = 0; k < n; ++k) total *= 4;
  for (long code = 0; code < total; ++code) {
    std::vector<Site> sites;
    long c = code;
    for (int k = 1; k <= n; ++k, c /= 4) {
      if (c % 4) sites.push_back({k, static_cast<Axis>(c % 4 - 1)});
    }
    out.emplace_back(n, std::move(sites));
  }
  return out;
}

inline Operator random_matrix(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Operator m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = Complex(g(rng), g(rng));
  }
  return m;
}

inline Operator random_hermitian(Eigen::Index dim, std::mt19937_64& rng) {
  const Operator m = random_matrix(dim, rng);
  return (m + m.adjoint()) / 2.0;
}

// Traceless Hermitian with unit Frobenius norm.
inline Operator random_traceless(Eigen::Index dim, std::mt19937_64& rng) {
  Operator h = random_hermitian(dim, rng);
  h.diagonal().array() -= h.trace() / static_cast<double>(dim);
  return h / h.norm();
}

inline DensityMatrix near_mixed_state(int n, double eps, std::mt19937_64& rng) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Operator rho = Operator::Identity(dim, dim) / static_cast<double>(dim) + eps * random_traceless(dim, rng);
  return DensityMatrix(rho);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Distinct gamma in [0.5, 2.5], nonzero J of magnitude in [0.5, 1.5] on a
// random spanning tree plus random extra edges.
inline SpinNetwork random_connected_network(int n, std::mt19937_64& rng) {
  SpinNetwork net(n);
  for (int k = 1; k <= n; ++k) {
    double g;
    bool clash;
    do {
      g = uniform(rng, 0.5, 2.5);
      clash = false;
      for (int m = 1; m < k; ++m) clash = clash || std::abs(net.gamma(m) - g) < 0.05;
    } while (clash);
    net.set_gamma(k, g);
  }
  auto coupling = [&] { return (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0) * uniform(rng, 0.5, 1.5); };
  for (int k = 2; k <= n; ++k) {
    const int l = std::uniform_int_distribution<int>(1, k - 1)(rng);
    net.set_coupling(l, k, coupling());
  }
  for (int k = 1; k <= n; ++k) {
    for (int l = k + 1; l <= n; ++l) {
      if (net.coupling(k, l) == 0.0 && uniform(rng, 0.0, 1.0) < 0.4) net.set_coupling(k, l, coupling());
    }
  }
  return net;
}

inline double max_abs(const Operator& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

inline double max_trace_deviation(const Trace& a, const Trace& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    d = std::max({d, std::abs(a.mx[j] - b.mx[j]), std::abs(a.my[j] - b.my[j]), std::abs(a.mz[j] - b.mz[j])});
  }
  return d;
}

}  // namespace spinid::test
