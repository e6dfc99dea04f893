#include "spinid/liealg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spinid {

namespace {

Eigen::VectorXcd vectorize(const Operator& x) {
  return Eigen::Map<const Eigen::VectorXcd>(x.data(), x.size());
}

void check_cap(Eigen::Index operator_dim, const ClosureOptions& options) {
  const int n = spins_for_dimension(operator_dim);
  if (n > options.max_spins) throw CapExceeded(n, options.max_spins);
}

// Incremental Gram-Schmidt with one re-orthogonalization pass.
class OrthonormalSpan {
 public:
  OrthonormalSpan(Eigen::Index operator_dim, Eigen::Index max_dim, double threshold)
      : operator_dim_(operator_dim), max_dim_(max_dim), threshold_(threshold) {
    storage_.resize(operator_dim * operator_dim, std::min<Eigen::Index>(max_dim, 64));
  }

  bool add(const Operator& x) {
    if (full()) return false;
    Eigen::VectorXcd v = vectorize(x);
    for (int pass = 0; pass < 2; ++pass) {
      if (size_ > 0) {
        const auto q = storage_.leftCols(size_);
        const Eigen::VectorXcd coeffs = q.adjoint() * v;
        v.noalias() -= q * coeffs;
      }
    }
    const double residual = v.norm();
    if (!(residual > threshold_)) return false;
    if (size_ == storage_.cols()) {
      storage_.conservativeResize(Eigen::NoChange, std::min(max_dim_, 2 * storage_.cols()));
    }
    storage_.col(size_) = v / residual;
    ++size_;
    return true;
  }

  bool full() const { return size_ >= max_dim_; }
  Eigen::Index size() const { return size_; }

  Operator element(Eigen::Index i) const {
    return Eigen::Map<const Operator>(storage_.col(i).data(), operator_dim_, operator_dim_);
  }

  LieBasis finish() const { return LieBasis(operator_dim_, storage_.leftCols(size_)); }

 private:
  Eigen::Index operator_dim_;
  Eigen::Index max_dim_;
  double threshold_;
  Eigen::MatrixXcd storage_;
  Eigen::Index size_ = 0;
};

void check_generators(const std::vector<Operator>& ops, Eigen::Index dim, const char* what) {
  for (const Operator& g : ops) {
    if (g.rows() != dim || g.cols() != dim) {
      throw std::invalid_argument(std::string(what) + ": operators must share one square dimension");
    }
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if (!is_skew_hermitian(g, kHermitianTol * scale)) {
      throw std::invalid_argument(std::string(what) + ": operator is not skew-Hermitian");
    }
  }
}

}  // namespace

CapExceeded::CapExceeded(int spins, int cap)
    : std::runtime_error("closure requested for " + std::to_string(spins) + " spins; cap is " +
                         std::to_string(cap) + " spins"),
      spins_(spins),
      cap_(cap) {}

LieBasis::LieBasis(Eigen::Index operator_dim, Eigen::MatrixXcd columns)
    : operator_dim_(operator_dim), columns_(std::move(columns)) {}

Operator LieBasis::element(Eigen::Index i) const {
  return Eigen::Map<const Operator>(columns_.col(i).data(), operator_dim_, operator_dim_);
}

std::vector<Operator> LieBasis::elements() const {
  std::vector<Operator> out;
  out.reserve(static_cast<std::size_t>(dimension()));
  for (Eigen::Index i = 0; i < dimension(); ++i) out.push_back(element(i));
  return out;
}

double LieBasis::residual_norm(const Operator& x) const {
  Eigen::VectorXcd v = vectorize(x);
  if (dimension() > 0) v -= columns_ * (columns_.adjoint() * v);
  return v.norm();
}

Eigen::Index su_dimension(int n) { return (Eigen::Index{1} << (2 * n)) - 1; }

LieBasis ad_closure(const std::vector<Operator>& seeds, const std::vector<Operator>& brackets_with,
                    const ClosureOptions& options) {
  if (seeds.empty()) throw std::invalid_argument("ad_closure: no seeds");
  const Eigen::Index dim = seeds.front().rows();
  check_cap(dim, options);
  check_generators(seeds, dim, "ad_closure");
  check_generators(brackets_with, dim, "ad_closure");

  double max_norm = 0.0;
  bool traceless = true;
  for (const Operator& s : seeds) {
    max_norm = std::max(max_norm, s.norm());
    traceless = traceless && std::abs(s.trace()) < kHermitianTol * std::max(1.0, s.norm());
  }
  // Brackets are traceless, so traceless seeds stay inside su(dim).
  const Eigen::Index max_dim = dim * dim - (traceless ? 1 : 0);
  if (max_norm == 0.0) return LieBasis(dim, Eigen::MatrixXcd(dim * dim, 0));

  OrthonormalSpan span(dim, max_dim, options.relative_tol * max_norm);
  for (const Operator& s : seeds) span.add(s);
  for (Eigen::Index i = 0; i < span.size() && !span.full(); ++i) {
    const Operator e = span.element(i);
    for (const Operator& g : brackets_with) {
      span.add(commutator(e, g));
      if (span.full()) break;
    }
  }
  return span.finish();
}

LieBasis span_closure(const std::vector<Operator>& generators, const ClosureOptions& options) {
  return ad_closure(generators, generators, options);
}

std::vector<std::vector<int>> graph_components(const SpinNetwork& net) {
  const int n = net.spins();
  std::vector<int> label(static_cast<std::size_t>(n + 1), 0);
  std::vector<std::vector<int>> components;
  for (int start = 1; start <= n; ++start) {
    if (label[static_cast<std::size_t>(start)]) continue;
    components.emplace_back();
    auto& comp = components.back();
    std::vector<int> stack{start};
    label[static_cast<std::size_t>(start)] = static_cast<int>(components.size());
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      comp.push_back(k);
      for (int l = 1; l <= n; ++l) {
        if (l != k && !label[static_cast<std::size_t>(l)] && net.coupling(k, l) != 0.0) {
          label[static_cast<std::size_t>(l)] = static_cast<int>(components.size());
          stack.push_back(l);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
  }
  return components;
}

bool graph_connected(const SpinNetwork& net) { return graph_components(net).size() == 1; }

bool gamma_distinct(const SpinNetwork& net) {
  std::vector<double> g = net.gamma();
  std::sort(g.begin(), g.end());
  return std::adjacent_find(g.begin(), g.end()) == g.end();
}

bool is_controllable(const SpinNetwork& net, ControllabilityTest test, const ClosureOptions& options) {
  if (test == ControllabilityTest::graph) {
    if (!gamma_distinct(net)) {
      throw std::domain_error("graph controllability criterion requires distinct gyromagnetic ratios");
    }
    return graph_connected(net);
  }
  if (net.spins() > options.max_spins) throw CapExceeded(net.spins(), options.max_spins);
  const Generators g = build_generators(net);
  const LieBasis basis = span_closure({g.drift, g.control[0], g.control[1], g.control[2]}, options);
  return basis.dimension() == su_dimension(net.spins());
}

LieBasis observability_space(const SpinNetwork& net, const ClosureOptions& options) {
  const int n = net.spins();
  if (n > options.max_spins) throw CapExceeded(n, options.max_spins);
  const Complex i(0.0, 1.0);
  const std::vector<Operator> seeds{i * total_spin(n, Axis::x), i * total_spin(n, Axis::y),
                                    i * total_spin(n, Axis::z)};
  const Generators g = build_generators(net);
  return ad_closure(seeds, {g.drift, g.control[0], g.control[1], g.control[2]}, options);
}

bool is_observable(const SpinNetwork& net, const ClosureOptions& options) {
  return observability_space(net, options).dimension() == su_dimension(net.spins());
}

AnalysisReport analyze(const SpinNetwork& net, const ClosureOptions& options) {
  if (net.spins() > options.max_spins) throw CapExceeded(net.spins(), options.max_spins);
  AnalysisReport r;
  r.spins = net.spins();
  r.target_dimension = su_dimension(net.spins());
  const Generators g = build_generators(net);
  r.lie_dimension = span_closure({g.drift, g.control[0], g.control[1], g.control[2]}, options).dimension();
  r.observability_dimension = observability_space(net, options).dimension();
  r.controllable = r.lie_dimension == r.target_dimension;
  r.observable = r.observability_dimension == r.target_dimension;
  r.graph_connected = graph_connected(net);
  r.gamma_distinct = gamma_distinct(net);
  return r;
}

}  // namespace spinid
