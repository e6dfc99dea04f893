#include "spinid/operators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace spinid {

namespace {

// Each Pauli string is a monomial matrix: row r has a single nonzero in
// column r ^ flip_mask. Site k lives on bit (n - k), so site 1 is the
// leftmost Kronecker factor.
struct Monomial {
  std::uint64_t flip_mask = 0;
  std::vector<std::pair<int, Axis>> factors;  // (bit position, axis)

  explicit Monomial(const PauliString& p) {
    const int n = p.spins();
    for (const Site& s : p.sites()) {
      const int bit = n - s.index;
      factors.emplace_back(bit, s.axis);
      if (s.axis != Axis::z) flip_mask |= std::uint64_t{1} << bit;
    }
  }

  Complex value(std::uint64_t row) const {
    Complex v(1.0, 0.0);
    for (const auto& [bit, axis] : factors) {
      const bool up = ((row >> bit) & 1U) == 0;
      switch (axis) {
        case Axis::x:
          v *= 0.5;
          break;
        case Axis::y:
          v *= up ? Complex(0.0, -0.5) : Complex(0.0, 0.5);
          break;
        case Axis::z:
          v *= up ? 0.5 : -0.5;
          break;
      }
    }
    return v;
  }
};

void check_realizable(int n) {
  if (n < 1 || n > kMaxRealizeSpins) {
    throw std::invalid_argument("spin count " + std::to_string(n) + " outside 1.." +
                                std::to_string(kMaxRealizeSpins));
  }
}

// Levi-Civita sign of (v, w, u) on axes, with u the remaining axis.
int cyclic_sign(Axis v, Axis w) {
  const int a = static_cast<int>(v);
  const int b = static_cast<int>(w);
  return ((b - a + 3) % 3 == 1) ? 1 : -1;
}

Axis third_axis(Axis v, Axis w) {
  return static_cast<Axis>(3 - static_cast<int>(v) - static_cast<int>(w));
}

}  // namespace

char axis_name(Axis v) {
  switch (v) {
    case Axis::x:
      return 'x';
    case Axis::y:
      return 'y';
    case Axis::z:
      return 'z';
  }
  return '?';
}

Axis parse_axis(char c) {
  switch (c) {
    case 'x':
    case 'X':
      return Axis::x;
    case 'y':
    case 'Y':
      return Axis::y;
    case 'z':
    case 'Z':
      return Axis::z;
    default:
      throw std::invalid_argument(std::string("unknown axis '") + c + "'");
  }
}

PauliString::PauliString(int n, std::vector<Site> sites) : n_(n), sites_(std::move(sites)) {
  if (n_ < 1) throw std::invalid_argument("PauliString: n must be positive");
  std::sort(sites_.begin(), sites_.end());
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const int k = sites_[i].index;
    if (k < 1 || k > n_) {
      throw std::invalid_argument("PauliString: site index " + std::to_string(k) +
                                  " out of range 1.." + std::to_string(n_));
    }
    if (i > 0 && sites_[i - 1].index == k) {
      throw std::invalid_argument("PauliString: duplicate site " + std::to_string(k));
    }
  }
}

std::optional<Axis> PauliString::axis_at(int k) const {
  for (const Site& s : sites_) {
    if (s.index == k) return s.axis;
  }
  return std::nullopt;
}

double PauliString::norm_squared() const {
  return std::ldexp(1.0, n_ - 2 * weight());
}

std::string PauliString::to_string() const {
  if (sites_.empty()) return "I";
  std::ostringstream os;
  os << "I_{";
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (i) os << ',';
    os << sites_[i].index << axis_name(sites_[i].axis);
  }
  os << '}';
  return os.str();
}

std::optional<PauliBracket> pauli_commutator(const PauliString& p, int k, Axis w) {
  if (k < 1 || k > p.spins()) throw std::invalid_argument("pauli_commutator: site out of range");
  const auto v = p.axis_at(k);
  if (!v || *v == w) return std::nullopt;
  std::vector<Site> sites = p.sites();
  for (Site& s : sites) {
    if (s.index == k) s.axis = third_axis(*v, w);
  }
  return PauliBracket{cyclic_sign(*v, w), PauliString(p.spins(), std::move(sites))};
}

SpinNetwork::SpinNetwork(int n) : n_(n), gamma_(static_cast<std::size_t>(std::max(n, 0)), 0.0) {
  if (n < 1) throw std::invalid_argument("SpinNetwork: n must be >= 1");
}

SpinNetwork::SpinNetwork(std::vector<double> gamma,
                         const std::vector<std::tuple<int, int, double>>& couplings)
    : SpinNetwork(static_cast<int>(gamma.size())) {
  for (int k = 1; k <= n_; ++k) set_gamma(k, gamma[static_cast<std::size_t>(k - 1)]);
  for (const auto& [k, l, j] : couplings) set_coupling(k, l, j);
}

void SpinNetwork::set_gamma(int k, double value) {
  if (k < 1 || k > n_) throw std::invalid_argument("SpinNetwork: gamma index out of range");
  if (!std::isfinite(value)) throw std::invalid_argument("SpinNetwork: gamma must be finite");
  gamma_[static_cast<std::size_t>(k - 1)] = value;
}

double SpinNetwork::coupling(int k, int l) const {
  const auto it = couplings_.find({std::min(k, l), std::max(k, l)});
  return it == couplings_.end() ? 0.0 : it->second;
}

void SpinNetwork::set_coupling(int k, int l, double value) {
  if (k < 1 || l < 1 || k > n_ || l > n_ || k == l) {
    throw std::invalid_argument("SpinNetwork: invalid coupling pair (" + std::to_string(k) + "," +
                                std::to_string(l) + ")");
  }
  if (!std::isfinite(value)) throw std::invalid_argument("SpinNetwork: coupling must be finite");
  const std::pair<int, int> key{std::min(k, l), std::max(k, l)};
  if (value == 0.0) {
    couplings_.erase(key);
  } else {
    couplings_[key] = value;
  }
}

int spins_for_dimension(Eigen::Index dim) {
  if (dim < 2 || !std::has_single_bit(static_cast<std::uint64_t>(dim))) {
    throw std::invalid_argument("operator dimension " + std::to_string(dim) +
                                " is not a power of two");
  }
  return std::countr_zero(static_cast<std::uint64_t>(dim));
}

Operator realize(const PauliString& p) {
  check_realizable(p.spins());
  const std::uint64_t dim = std::uint64_t{1} << p.spins();
  const Monomial m(p);
  Operator out = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::uint64_t r = 0; r < dim; ++r) {
    out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r ^ m.flip_mask)) = m.value(r);
  }
  return out;
}

Operator total_spin(int n, Axis v) {
  check_realizable(n);
  Operator s = Operator::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
  for (int k = 1; k <= n; ++k) s += realize(PauliString::single(n, k, v));
  return s;
}

Operator build_drift(const SpinNetwork& net) {
  const int n = net.spins();
  check_realizable(n);
  const auto dim = static_cast<Eigen::Index>(net.dimension());
  Operator h = Operator::Zero(dim, dim);
  for (const auto& [kl, j] : net.couplings()) {
    for (Axis v : kAxes) h += j * realize(PauliString::pair(n, kl.first, v, kl.second, v));
  }
  return Complex(0.0, -1.0) * h;
}

Operator build_control(const SpinNetwork& net, Axis v) {
  const int n = net.spins();
  check_realizable(n);
  const auto dim = static_cast<Eigen::Index>(net.dimension());
  Operator h = Operator::Zero(dim, dim);
  for (int k = 1; k <= n; ++k) {
    if (net.gamma(k) != 0.0) h += net.gamma(k) * realize(PauliString::single(n, k, v));
  }
  return Complex(0.0, -1.0) * h;
}

Generators build_generators(const SpinNetwork& net) {
  return {build_drift(net), {build_control(net, Axis::x), build_control(net, Axis::y), build_control(net, Axis::z)}};
}

Complex trace_product(const PauliString& p, const Operator& x) {
  const std::uint64_t dim = std::uint64_t{1} << p.spins();
  if (static_cast<std::uint64_t>(x.rows()) != dim || x.cols() != x.rows()) {
    throw std::invalid_argument("trace_product: dimension mismatch");
  }
  const Monomial m(p);
  Complex acc(0.0, 0.0);
  for (std::uint64_t r = 0; r < dim; ++r) {
    acc += m.value(r) * x(static_cast<Eigen::Index>(r ^ m.flip_mask), static_cast<Eigen::Index>(r));
  }
  return acc;
}

PauliCoefficients pauli_decompose(const Operator& x, double drop_below) {
  const int n = spins_for_dimension(x.rows());
  check_realizable(n);
  if (x.cols() != x.rows()) throw std::invalid_argument("pauli_decompose: matrix not square");
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());

  PauliCoefficients out;
  const std::uint64_t count = std::uint64_t{1} << (2 * n);
  std::vector<Site> sites;
  for (std::uint64_t code = 0; code < count; ++code) {
    // Base-4 digits: 0 = identity, 1..3 = x, y, z; digit k-1 is spin k.
    sites.clear();
    for (int k = 1; k <= n; ++k) {
      const auto digit = static_cast<int>((code >> (2 * (k - 1))) & 3U);
      if (digit) sites.push_back({k, static_cast<Axis>(digit - 1)});
    }
    PauliString p(n, sites);
    const Complex c = trace_product(p, x) / p.norm_squared();
    if (std::abs(c.imag()) > kDecomposeTol * scale) {
      throw std::invalid_argument("pauli_decompose: input is not Hermitian (coefficient of " +
                                  p.to_string() + " has imaginary part " +
                                  std::to_string(c.imag()) + ")");
    }
    if (std::abs(c.real()) > drop_below) out.emplace(std::move(p), c.real());
  }
  return out;
}

Operator reconstruct(int n, const PauliCoefficients& coeffs) {
  check_realizable(n);
  const std::uint64_t dim = std::uint64_t{1} << n;
  Operator out = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& [p, c] : coeffs) {
    if (p.spins() != n) throw std::invalid_argument("reconstruct: string spin count mismatch");
    const Monomial m(p);
    for (std::uint64_t r = 0; r < dim; ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r ^ m.flip_mask)) += c * m.value(r);
    }
  }
  return out;
}

void validate_permutation(int n, const std::vector<int>& pi) {
  if (static_cast<int>(pi.size()) != n) {
    throw std::invalid_argument("permutation has " + std::to_string(pi.size()) +
                                " entries, expected " + std::to_string(n));
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int image : pi) {
    if (image < 1 || image > n || seen[static_cast<std::size_t>(image - 1)]) {
      throw std::invalid_argument("not a permutation of 1.." + std::to_string(n));
    }
    seen[static_cast<std::size_t>(image - 1)] = true;
  }
}

Eigen::MatrixXd permutation_operator(int n, const std::vector<int>& pi) {
  check_realizable(n);
  validate_permutation(n, pi);
  const std::uint64_t dim = std::uint64_t{1} << n;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  // |b_1..b_n> -> |c_1..c_n> with c_j = b_{pi(j)}.
  for (std::uint64_t b = 0; b < dim; ++b) {
    std::uint64_t c = 0;
    for (int j = 1; j <= n; ++j) {
      const int src = pi[static_cast<std::size_t>(j - 1)];
      const std::uint64_t bit = (b >> (n - src)) & 1U;
      c |= bit << (n - j);
    }
    p(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(b)) = 1.0;
  }
  return p;
}

}  // namespace spinid
