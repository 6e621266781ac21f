#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cobble/analysis.hpp"
#include "cobble/cost.hpp"
#include "cobble/error.hpp"
#include "cobble/frontend.hpp"
#include "support/oracles.hpp"
#include "support/random_programs.hpp"

using namespace cobble;
using namespace cobble::testing;

TEST_CASE("worked example costs, unoptimized and fused forms") {
  TypedExpr h = typecheck(parse(
      "A = kron(X, X) + kron(Y, Y);\nB = kron(X, X) - kron(Y, Y);\nH = A + 0.3 * B;\nH"));
  CHECK(h.cost.queries == 8.0);
  CHECK(h.cost.subnorm == doctest::Approx(2.6).epsilon(1e-14));
  CHECK(h.cost.total == doctest::Approx(20.8).epsilon(1e-14));
  CHECK(h.cost.ancillas == 2);

  TypedExpr fused = typecheck(parse("1.3 * kron(X, X) + 0.7 * kron(Y, Y)"));
  CHECK(fused.cost.queries == 4.0);
  CHECK(fused.cost.subnorm == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fused.cost.total == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(fused.cost.ancillas == 1);
}

TEST_CASE("single base oracle costs its declaration") {
  TypedExpr t = typecheck(parse(
      "oracle A : qubits=1, ancillas=3, subnorm=1.0, hermitian=false;\nA"));
  CHECK(t.cost.queries == 1.0);
  CHECK(t.cost.subnorm == 1.0);
  CHECK(t.cost.ancillas == 3);
}

TEST_CASE("l1 norm examples") {
  CHECK(l1_norm({{1.0, -1.0}}, 1.0) == 2.0);
  // hand sum: 1 * 2^2 + 0.25 * 2^4 = 8
  CHECK(l1_norm({{0.0, 0.0, 1.0, 0.0, -0.25}}, 2.0) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(l1_norm({{0.0, 1.3, 0.7}}, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("linf norm examples and brute-force agreement") {
  // max_{|x|<=1} |4x^2 - 4x^4| = 1 at x^2 = 1/2
  CHECK(linf_norm({{0.0, 0.0, 1.0, 0.0, -0.25}}, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(linf_norm({{-0.7}}, 3.0) == doctest::Approx(0.7));

  std::mt19937_64 rng(42);
  for (int i = 0; i < 5; ++i) {
    std::vector<double> p(9);
    for (double& c : p) c = 4.0 * ((rng() >> 11) * 0x1.0p-53) - 2.0;
    double fast = linf_norm({p}, 1.0);
    double slow = grid_linf(p, 1.0, 10'000'001);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-8));
  }
}

TEST_CASE("gqet norm examples and circle-grid agreement") {
  CHECK(gqet_norm({{0.0, 1.0}}, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(gqet_norm({{0.0, 1.0}}, 2.0) == doctest::Approx(2.0).epsilon(1e-10));

  std::mt19937_64 rng(43);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> p(7);
    for (double& c : p) c = 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0;
    double fast = gqet_norm({p}, 1.3);
    double slow = grid_gqet(monomial_to_chebyshev(p), 1.3, 1'000'000);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-7));
  }
}

TEST_CASE("monomial to chebyshev conversion is exact on knowns") {
  // x^2 = (T_0 + T_2)/2, x^3 = (3 T_1 + T_3)/4
  auto c2 = monomial_to_chebyshev({0.0, 0.0, 1.0});
  CHECK(c2[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c2[2] == doctest::Approx(0.5).epsilon(1e-15));
  auto c3 = monomial_to_chebyshev({0.0, 0.0, 0.0, 1.0});
  CHECK(c3[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(c3[3] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("poly_cost follows the per-method model") {
  CostReport base = make_cost(2.0, 2.0, 2);  // A - B from the worked example
  PolySpec p{{0.0, 0.0, 1.0, 0.0, -0.25}};

  CostReport qsvt = poly_cost(p, base, PolyMethod::QSVT);
  CHECK(qsvt.queries == 8.0);  // fixed parity: k_M * d
  CHECK(qsvt.subnorm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(qsvt.ancillas == 3);  // 1 + m_M

  CostReport lcu = poly_cost(p, base, PolyMethod::LCU);
  CHECK(lcu.queries == 12.0);  // k_M * (2 + 4)
  CHECK(lcu.subnorm == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(lcu.subnorm == doctest::Approx(abs_coeff_eval(p.coeffs, base.subnorm)).epsilon(1e-14));
  CHECK(lcu.ancillas == 2 + 4 + 2);  // ceil(log d) + d + m_M

  CostReport horner = poly_cost(p, base, PolyMethod::Horner);
  CHECK(horner.queries == 8.0);
  CHECK(horner.subnorm == lcu.subnorm);  // refactoring neutrality
  CHECK(horner.ancillas == 2 * 4 + 2);

  // degree-1 pass-through for every method
  PolySpec id{{0.0, 1.0}};
  for (PolyMethod m :
       {PolyMethod::LCU, PolyMethod::Horner, PolyMethod::QSVT, PolyMethod::GQET}) {
    CostReport c = poly_cost(id, base, m);
    CHECK(c.queries == base.queries);
    CHECK(c.subnorm == doctest::Approx(base.subnorm).epsilon(1e-12));
  }
}

TEST_CASE("mixed parity QSVT uses both part degrees") {
  CostReport base = make_cost(1.0, 1.0, 1);
  PolySpec p{{0.5, 1.0, 0.25, -0.5}};  // d_e = 2, d_o = 3
  CostReport c = poly_cost(p, base, PolyMethod::QSVT);
  CHECK(c.queries == 5.0);
  CHECK(c.ancillas == 3);  // 2 + m_M
}

TEST_CASE("triangle inequality and strictness on mixed signs") {
  std::mt19937_64 rng(4242);
  int strict = 0, total = 0;
  for (int i = 0; i < 1000; ++i) {
    int d = 1 + static_cast<int>(rng() % 8);
    std::vector<double> coeffs(d + 1);
    for (double& c : coeffs) c = 4.0 * ((rng() >> 11) * 0x1.0p-53) - 2.0;
    // The L1 bound is attained exactly when the signed coefficients align
    // at x = 1 or x = -1; "mixed signs" means neither endpoint aligns.
    bool align_pos = true, align_neg = true;
    for (size_t j = 1; j < coeffs.size(); ++j) {
      if (coeffs[j] * coeffs[0] < 0) align_pos = false;
      double sj = coeffs[j] * (j % 2 ? -1.0 : 1.0);
      if (sj * coeffs[0] < 0) align_neg = false;
    }
    bool mixed_sign = !align_pos && !align_neg;
    double alpha = 0.5 + 1.5 * ((rng() >> 11) * 0x1.0p-53);
    PolySpec p{coeffs};
    double l1 = l1_norm(p, alpha);
    double linf = linf_norm(p, alpha);
    CHECK(linf <= l1 + 1e-9);
    if (mixed_sign) {
      ++total;
      if (linf < l1 - 1e-9) ++strict;
    }
  }
  CHECK(total > 300);
  CHECK(strict >= total * 9 / 10);
}

TEST_CASE("cost compositionality over random trees") {
  for (uint64_t seed = 0; seed < 40; ++seed) {
    cobble::testing::ProgramGen gen(3100 + seed);
    ExprPtr a = gen.expr();
    ExprPtr b = gen.expr();
    Analyzer an;
    QType ta = an.type_of(a), tb = an.type_of(b);
    CostReport ca = an.cost(a), cb = an.cost(b);

    CostReport tens = an.cost(make_tensor({a, b}));
    CHECK(tens.subnorm == doctest::Approx(ca.subnorm * cb.subnorm).epsilon(1e-12));
    CHECK(tens.queries == ca.queries + cb.queries);

    if (ta.n_qubits == tb.n_qubits) {
      CostReport prod = an.cost(make_prod({a, b}));
      CHECK(prod.subnorm == doctest::Approx(ca.subnorm * cb.subnorm).epsilon(1e-12));
      CostReport sum = an.cost(make_sum({{0.5, a}, {-1.5, b}}));
      CHECK(sum.subnorm ==
            doctest::Approx(0.5 * ca.subnorm + 1.5 * cb.subnorm).epsilon(1e-12));
    }
    CHECK(tens.total == tens.queries * tens.subnorm);
  }
}

TEST_CASE("select_poly_method picks the cheapest admissible route") {
  CostReport base = make_cost(2.0, 2.0, 2);
  PolySpec quartic{{0.0, 0.0, 1.0, 0.0, -0.25}};
  CHECK(select_poly_method(quartic, base, true) == PolyMethod::QSVT);
  CHECK(select_poly_method(quartic, base, false) != PolyMethod::QSVT);

  // Degree-1 ties: QSVT preferred, then Horner, then LCU.
  PolySpec id{{0.0, 1.0}};
  CHECK(select_poly_method(id, base, true) == PolyMethod::QSVT);
  CHECK(select_poly_method(id, base, false) == PolyMethod::Horner);
}

TEST_CASE("qsvt on a non-Hermitian base is inadmissible") {
  CHECK_THROWS_AS(poly_cost({{0.0, 1.0}}, make_cost(1, 1, 0), PolyMethod::QSVT, false), Error);
}
