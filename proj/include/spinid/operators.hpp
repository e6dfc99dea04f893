#pragma once

#include <array>
#include <compare>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace spinid {

using Complex = std::complex<double>;

/// Dense operator on the 2^n dimensional spin Hilbert space.
using Operator = Eigen::MatrixXcd;

/// Largest spin count for which dense operators are realized (2^10 = 1024).
inline constexpr int kMaxRealizeSpins = 10;

/// Entrywise tolerance for Hermitian / skew-Hermitian checks.
inline constexpr double kHermitianTol = 1e-12;

/// Tolerance used by Pauli decompositions and their reconstructions.
inline constexpr double kDecomposeTol = 1e-10;

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2 };

inline constexpr Axis kAxes[3] = {Axis::x, Axis::y, Axis::z};

char axis_name(Axis v);
Axis parse_axis(char c);

/// Spin-1/2 matrix along `v`: half of the usual Pauli matrix.
template <typename Scalar = double>
Eigen::Matrix<std::complex<Scalar>, 2, 2> pauli(Axis v) {
  using C = std::complex<Scalar>;
  const Scalar h = Scalar(1) / Scalar(2);
  Eigen::Matrix<C, 2, 2> m = Eigen::Matrix<C, 2, 2>::Zero();
  switch (v) {
    case Axis::x:
      m(0, 1) = C(h, 0);
      m(1, 0) = C(h, 0);
      break;
    case Axis::y:
      m(0, 1) = C(0, -h);
      m(1, 0) = C(0, h);
      break;
    case Axis::z:
      m(0, 0) = C(h, 0);
      m(1, 1) = C(-h, 0);
      break;
  }
  return m;
}

struct Site {
  int index;  // 1-based spin index
  Axis axis;

  auto operator<=>(const Site&) const = default;
};

/// Kronecker product with spin matrices at the listed sites and 2x2
/// identities elsewhere. Sites are kept sorted by index; an empty site
/// list is the identity.
class PauliString {
 public:
  PauliString() = default;
  /// Sorts `sites`; throws std::invalid_argument on duplicates or
  /// indices outside 1..n.
  PauliString(int n, std::vector<Site> sites);

  static PauliString identity(int n) { return PauliString(n, {}); }
  static PauliString single(int n, int k, Axis v) { return PauliString(n, {{k, v}}); }
  static PauliString pair(int n, int k, Axis v, int l, Axis w) {
    return PauliString(n, {{k, v}, {l, w}});
  }

  int spins() const { return n_; }
  const std::vector<Site>& sites() const { return sites_; }
  /// Number of spin factors (the r of I_{k1v1,...,krvr}).
  int weight() const { return static_cast<int>(sites_.size()); }
  bool is_identity() const { return sites_.empty(); }
  std::optional<Axis> axis_at(int k) const;

  /// Squared Hilbert-Schmidt norm Tr(P P) = 2^n / 4^r.
  double norm_squared() const;

  std::string to_string() const;

  auto operator<=>(const PauliString&) const = default;

 private:
  int n_ = 0;
  std::vector<Site> sites_;
};

/// Result of commuting a Pauli string with a single-site spin matrix:
/// [P, I_{kw}] = i * sign * P' (absent when the bracket vanishes).
struct PauliBracket {
  int sign;
  PauliString string;
};

/// Symbolic [P, I_{kw}] following [s_x, s_y] = i s_z cyclically.
std::optional<PauliBracket> pauli_commutator(const PauliString& p, int k, Axis w);

/// Hermitian operator expanded on Pauli strings with real coefficients.
using PauliCoefficients = std::map<PauliString, double>;

/// Exchange network: n spins, couplings J_kl (k < l, 1-based) and
/// gyromagnetic ratios. Zero couplings are never stored.
class SpinNetwork {
 public:
  SpinNetwork() = default;
  explicit SpinNetwork(int n);
  SpinNetwork(std::vector<double> gamma, const std::vector<std::tuple<int, int, double>>& couplings);

  int spins() const { return n_; }
  std::size_t dimension() const { return std::size_t{1} << n_; }

  const std::vector<double>& gamma() const { return gamma_; }
  double gamma(int k) const { return gamma_.at(static_cast<std::size_t>(k - 1)); }
  void set_gamma(int k, double value);

  /// Symmetric lookup; absent pairs read as 0.
  double coupling(int k, int l) const;
  /// Stores J for the unordered pair {k, l}; 0 removes the edge.
  void set_coupling(int k, int l, double value);
  const std::map<std::pair<int, int>, double>& couplings() const { return couplings_; }

  bool operator==(const SpinNetwork&) const = default;

 private:
  int n_ = 0;
  std::vector<double> gamma_;
  std::map<std::pair<int, int>, double> couplings_;
};

template <typename Derived>
double hermitian_defect(const Eigen::MatrixBase<Derived>& x) {
  return (x - x.adjoint()).cwiseAbs().maxCoeff();
}

template <typename Derived>
double skew_hermitian_defect(const Eigen::MatrixBase<Derived>& x) {
  return (x + x.adjoint()).cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& x, double tol = kHermitianTol) {
  return x.rows() == x.cols() && hermitian_defect(x) < tol;
}

template <typename Derived>
bool is_skew_hermitian(const Eigen::MatrixBase<Derived>& x, double tol = kHermitianTol) {
  return x.rows() == x.cols() && skew_hermitian_defect(x) < tol;
}

/// Number of spins n with dim == 2^n; throws if dim is not a power of two.
int spins_for_dimension(Eigen::Index dim);

Operator realize(const PauliString& p);

/// S_v^TOT = sum_k I_{kv}.
Operator total_spin(int n, Axis v);

/// A = -i sum_{k<l} J_kl (I_{kx,lx} + I_{ky,ly} + I_{kz,lz}).
Operator build_drift(const SpinNetwork& net);

/// B_v = -i sum_k gamma_k I_{kv}.
Operator build_control(const SpinNetwork& net, Axis v);

/// The four generators {A, B_x, B_y, B_z} of a network.
struct Generators {
  Operator drift;
  std::array<Operator, 3> control;

  const Operator& operator[](int j) const { return j == 0 ? drift : control[static_cast<std::size_t>(j - 1)]; }
};

Generators build_generators(const SpinNetwork& net);

/// XY - YX; throws std::invalid_argument on mismatched shapes.
template <typename DerivedX, typename DerivedY>
Operator commutator(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols() || x.rows() != x.cols()) {
    throw std::invalid_argument("commutator: dimension mismatch");
  }
  Operator xy = x * y;
  xy.noalias() -= y * x;
  return xy;
}

/// Tr(P X) computed from the monomial structure of P.
Complex trace_product(const PauliString& p, const Operator& x);

/// c_P = Tr(P X) / Tr(P P) over all 4^n strings; entries with
/// |c_P| <= `drop_below` are omitted. Throws std::invalid_argument when
/// X is not Hermitian.
PauliCoefficients pauli_decompose(const Operator& x, double drop_below = 0.0);

Operator reconstruct(int n, const PauliCoefficients& coeffs);

/// pi is given as images of 1..n (pi[k-1] = pi(k)). Throws if not a
/// bijection of {1..n}.
void validate_permutation(int n, const std::vector<int>& pi);

/// Orthogonal basis permutation P with
///   P (K_1 x ... x K_n) P^T = K_{pi(1)} x ... x K_{pi(n)}.
Eigen::MatrixXd permutation_operator(int n, const std::vector<int>& pi);

}  // namespace spinid
