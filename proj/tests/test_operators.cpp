#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "spinid/operators.hpp"
#include "support.hpp"

using namespace spinid;
using spinid::test::kron;
using spinid::test::kron_site;
using spinid::test::kron_string;
using spinid::test::max_abs;

namespace {

const Complex I(0.0, 1.0);

}  // namespace

TEST(Pauli, HalfPauliCommutatorIsCyclic) {
  const Operator x = pauli(Axis::x), y = pauli(Axis::y), z = pauli(Axis::z);
  EXPECT_LT(max_abs(commutator(x, y) - I * z), 1e-15);
  EXPECT_LT(max_abs(commutator(y, z) - I * x), 1e-15);
  EXPECT_LT(max_abs(commutator(z, x) - I * y), 1e-15);
  EXPECT_LT(max_abs(commutator(x, x)), 1e-15);
}

TEST(Pauli, FloatScalarInstantiates) {
  const auto y = pauli<float>(Axis::y);
  EXPECT_FLOAT_EQ(y(1, 0).imag(), 0.5f);
}

TEST(PauliString, SortsSitesAndRejectsBadInput) {
  const PauliString p(3, {{3, Axis::z}, {1, Axis::x}});
  EXPECT_EQ(p.sites().front().index, 1);
  EXPECT_EQ(p.to_string(), "I_{1x,3z}");
  EXPECT_THROW(PauliString(2, {{3, Axis::x}}), std::invalid_argument);
  EXPECT_THROW(PauliString(2, {{1, Axis::x}, {1, Axis::y}}), std::invalid_argument);
  EXPECT_THROW(PauliString(0, {}), std::invalid_argument);
}

TEST(PauliString, SingleSiteOnTwoSpins) {
  const Operator expected = kron(pauli(Axis::z), Operator::Identity(2, 2));
  EXPECT_LT(max_abs(realize(PauliString::single(2, 1, Axis::z)) - expected), 1e-15);
}

TEST(PauliString, RealizeMatchesKroneckerOracle) {
  for (int n = 1; n <= 3; ++n) {
    for (const PauliString& p : test::all_strings(n)) {
      const Operator m = realize(p);
      EXPECT_LT(max_abs(m - kron_string(p)), 1e-15) << p.to_string();
      EXPECT_TRUE(is_hermitian(m)) << p.to_string();
    }
  }
}

TEST(PauliString, OrthogonalityAndNorms) {
  for (int n = 1; n <= 4; ++n) {
    const auto strings = test::all_strings(n);
    std::vector<Operator> mats;
    for (const auto& p : strings) mats.push_back(realize(p));
    for (std::size_t a = 0; a < strings.size(); ++a) {
      const double norm = (mats[a] * mats[a]).trace().real();
      EXPECT_NEAR(norm, strings[a].norm_squared(), 1e-12);
      EXPECT_NEAR(norm, std::ldexp(1.0, n) / std::pow(4.0, strings[a].weight()), 1e-12);
      for (std::size_t b = a + 1; b < strings.size(); ++b) {
        const Complex t = mats[a].cwiseProduct(mats[b].transpose()).sum();
        ASSERT_LT(std::abs(t), 1e-14) << strings[a].to_string() << " " << strings[b].to_string();
      }
    }
  }
}

TEST(PauliCommutator, SpecExample) {
  const PauliString p = PauliString::pair(2, 1, Axis::x, 2, Axis::x);
  const auto b = pauli_commutator(p, 1, Axis::z);
  ASSERT_TRUE(b.has_value());
  EXPECT_EQ(b->sign, -1);
  EXPECT_EQ(b->string, PauliString::pair(2, 1, Axis::y, 2, Axis::x));
  const Operator lhs = commutator(realize(p), realize(PauliString::single(2, 1, Axis::z)));
  EXPECT_LT(max_abs(lhs + I * realize(b->string)), 1e-15);
}

TEST(PauliCommutator, CaseSplitExhaustive) {
  for (int n = 1; n <= 3; ++n) {
    for (const PauliString& p : test::all_strings(n)) {
      const Operator pm = realize(p);
      for (int k = 1; k <= n; ++k) {
        for (Axis w : kAxes) {
          const Operator direct = commutator(pm, kron_site(n, k, w));
          const auto symbolic = pauli_commutator(p, k, w);
          const auto at = p.axis_at(k);
          if (!at || *at == w) {
            EXPECT_FALSE(symbolic.has_value());
            EXPECT_LT(max_abs(direct), 1e-15);
          } else {
            ASSERT_TRUE(symbolic.has_value());
            EXPECT_EQ(symbolic->string.weight(), p.weight());
            EXPECT_LT(max_abs(direct - double(symbolic->sign) * I * kron_string(symbolic->string)), 1e-15)
                << p.to_string() << " k=" << k;
          }
        }
      }
    }
  }
}

TEST(Network, CouplingsAreSymmetricAndValidated) {
  SpinNetwork net({1.0, 2.0, 3.0}, {{2, 1, 0.5}});
  EXPECT_EQ(net.coupling(1, 2), 0.5);
  EXPECT_EQ(net.coupling(2, 1), 0.5);
  EXPECT_EQ(net.coupling(1, 3), 0.0);
  net.set_coupling(1, 2, 0.0);
  EXPECT_TRUE(net.couplings().empty());
  EXPECT_THROW(net.set_coupling(1, 1, 1.0), std::invalid_argument);
  EXPECT_THROW(net.set_coupling(1, 4, 1.0), std::invalid_argument);
}

TEST(Generators, MatchKroneckerConstruction) {
  std::mt19937_64 rng(7);
  for (int n = 2; n <= 3; ++n) {
    const SpinNetwork net = test::random_connected_network(n, rng);
    Operator drift = Operator::Zero(1 << n, 1 << n);
    for (const auto& [kl, j] : net.couplings()) {
      for (Axis v : kAxes) drift += -I * j * kron_site(n, kl.first, v) * kron_site(n, kl.second, v);
    }
    const Generators g = build_generators(net);
    EXPECT_LT(max_abs(g.drift - drift), 1e-14);
    EXPECT_TRUE(is_skew_hermitian(g.drift));
    for (Axis v : kAxes) {
      Operator b = Operator::Zero(1 << n, 1 << n);
      for (int k = 1; k <= n; ++k) b += -I * net.gamma(k) * kron_site(n, k, v);
      EXPECT_LT(max_abs(build_control(net, v) - b), 1e-14);
      EXPECT_TRUE(is_skew_hermitian(build_control(net, v)));
    }
  }
}

TEST(Generators, DoubleBracketIdentity) {
  // [i I_lz, [i I_kx, A]] = J_kl * i * I_{kz,lx} for k < l.
  std::mt19937_64 rng(11);
  for (int n = 2; n <= 4; ++n) {
    for (int trial = 0; trial < 3; ++trial) {
      const SpinNetwork net = test::random_connected_network(n, rng);
      const Operator a = build_drift(net);
      for (int k = 1; k <= n; ++k) {
        for (int l = k + 1; l <= n; ++l) {
          const Operator lhs = commutator(I * realize(PauliString::single(n, l, Axis::z)),
                                          commutator(I * realize(PauliString::single(n, k, Axis::x)), a));
          const Operator rhs = net.coupling(k, l) * I * realize(PauliString::pair(n, k, Axis::z, l, Axis::x));
          EXPECT_LT(max_abs(lhs - rhs), 1e-12) << "n=" << n << " k=" << k << " l=" << l;
        }
      }
    }
  }
}

TEST(Commutator, RejectsMismatchedDimensions) {
  EXPECT_THROW(commutator(Operator::Identity(2, 2), Operator::Identity(4, 4)), std::invalid_argument);
}

TEST(Decompose, IdentityAndBasisElement) {
  const auto c = pauli_decompose(Operator::Identity(2, 2), 1e-15);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c.at(PauliString::identity(1)), 1.0, 1e-15);
  const auto z = pauli_decompose(realize(PauliString::single(1, 1, Axis::z)), 1e-15);
  ASSERT_EQ(z.size(), 1u);
  EXPECT_NEAR(z.at(PauliString::single(1, 1, Axis::z)), 1.0, 1e-15);
}

TEST(Decompose, RoundTripOnRandomHermitian) {
  std::mt19937_64 rng(3);
  for (int n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 3; ++trial) {
      const Operator h = test::random_hermitian(Eigen::Index{1} << n, rng);
      const auto coeffs = pauli_decompose(h);
      EXPECT_EQ(coeffs.size(), std::size_t(1) << (2 * n));
      EXPECT_LT(max_abs(reconstruct(n, coeffs) - h), 1e-10);
      for (const auto& [p, c] : coeffs) {
        const Complex direct = trace_product(p, h) / p.norm_squared();
        EXPECT_NEAR(direct.real(), c, 1e-12);
      }
    }
  }
}

TEST(Decompose, RejectsNonHermitian) {
  Operator m = Operator::Zero(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(pauli_decompose(m), std::invalid_argument);
}

TEST(Permutation, IdentityAndSwap) {
  EXPECT_TRUE(permutation_operator(3, {1, 2, 3}).isIdentity());
  Eigen::MatrixXd swap = Eigen::MatrixXd::Zero(4, 4);
  swap(0, 0) = swap(1, 2) = swap(2, 1) = swap(3, 3) = 1.0;
  EXPECT_TRUE(permutation_operator(2, {2, 1}).isApprox(swap));
  const Eigen::MatrixXd p = permutation_operator(2, {2, 1});
  EXPECT_TRUE((p * p).isIdentity());
}

TEST(Permutation, ThreeCycleHasOrderThree) {
  const Eigen::MatrixXd p = permutation_operator(3, {2, 3, 1});
  EXPECT_TRUE((p * p * p).isIdentity());
  EXPECT_FALSE((p * p).isIdentity());
  EXPECT_TRUE((p * p.transpose()).isIdentity());
}

TEST(Permutation, ConjugationRelabelsFactors) {
  std::mt19937_64 rng(5);
  for (int n = 2; n <= 3; ++n) {
    std::vector<int> pi(static_cast<std::size_t>(n));
    std::iota(pi.begin(), pi.end(), 1);
    do {
      std::vector<Operator> k;
      for (int s = 0; s < n; ++s) k.push_back(test::random_matrix(2, rng));
      Operator lhs = Operator::Identity(1, 1), rhs = Operator::Identity(1, 1);
      for (int s = 0; s < n; ++s) {
        lhs = kron(lhs, k[static_cast<std::size_t>(s)]);
        rhs = kron(rhs, k[static_cast<std::size_t>(pi[static_cast<std::size_t>(s)] - 1)]);
      }
      const Eigen::MatrixXd p = permutation_operator(n, pi);
      EXPECT_LT(max_abs(p.cast<Complex>() * lhs * p.transpose().cast<Complex>() - rhs), 1e-12);
    } while (std::next_permutation(pi.begin(), pi.end()));
  }
}

TEST(Permutation, RejectsNonBijection) {
  EXPECT_THROW(permutation_operator(3, {1, 1, 2}), std::invalid_argument);
  EXPECT_THROW(permutation_operator(2, {1, 3}), std::invalid_argument);
  EXPECT_THROW(permutation_operator(2, {1}), std::invalid_argument);
}
