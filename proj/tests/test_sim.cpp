#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cobble/circuit.hpp"
#include "cobble/error.hpp"
#include "cobble/frontend.hpp"
#include "cobble/rewrite.hpp"
#include "cobble/sim.hpp"
#include "support/random_programs.hpp"

using namespace cobble;

namespace {

TypedExpr typed(const std::string& src) { return typecheck(parse(src)); }

TypedExpr optimized(const std::string& src) {
  TypedExpr t = typed(src);
  return typecheck_expr(apply_rules(t).expr, t.ctx);
}

Circuit gate_only(int n_qubits, int n_data, std::vector<Gate> gates) {
  Circuit c;
  c.n_qubits = n_qubits;
  c.n_data = n_data;
  c.gates = std::move(gates);
  return c;
}

}  // namespace

TEST_CASE("single gates simulate to their matrices") {
  DenseUnitary x = simulate(gate_only(1, 1, {{GateKind::X, {0}, {}, 0.0, "", false}}), {});
  CHECK(std::abs(x.u(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(x.u(1, 0) - 1.0) < 1e-15);
  CHECK(std::abs(x.u(0, 0)) < 1e-15);

  // CX |10> = |11>: qubit 0 (control) is the most significant bit.
  DenseUnitary cx = simulate(gate_only(2, 2, {{GateKind::CX, {0, 1}, {}, 0.0, "", false}}), {});
  CHECK(std::abs(cx.u(3, 2) - 1.0) < 1e-15);
  CHECK(std::abs(cx.u(2, 2)) < 1e-15);
}

TEST_CASE("negative controls condition on zero") {
  Gate g{GateKind::X, {1}, {{0, false}}, 0.0, "", false};
  DenseUnitary u = simulate(gate_only(2, 2, {g}), {});
  CHECK(std::abs(u.u(1, 0) - 1.0) < 1e-15);  // |00> -> |01>
  CHECK(std::abs(u.u(2, 2) - 1.0) < 1e-15);  // |10> untouched
}

TEST_CASE("every simulated circuit is unitary") {
  for (uint64_t seed = 0; seed < 25; ++seed) {
    cobble::testing::ProgramGen gen(9900 + seed);
    TypedExpr t = typecheck_expr(gen.expr(), {});
    DenseUnitary u = simulate(compile(t), seed);
    Eigen::Index dim = u.u.rows();
    CHECK((u.u * u.u.adjoint() - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fused two-site circuit encodes denote(H)/2 exactly") {
  TypedExpr t = typed("1.3 * kron(X, X) + 0.7 * kron(Y, Y)");
  Circuit c = compile(t);
  DenseUnitary u = simulate(c, 0u);
  Matrix target = denote(t.expr) / 2.0;
  CHECK((u.u.topLeftCorner(4, 4) - target).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("verify on a bare unitary oracle has zero deviation") {
  VerifyReport r = verify(typed("X"), 0);
  CHECK(r.pass);
  CHECK(r.max_dev < 1e-15);
  CHECK(r.alpha_pred == 1.0);
  CHECK(r.queries_measured == 1.0);
}

TEST_CASE("verify the optimized simulation example") {
  VerifyReport r = verify(optimized(
      "A = kron(X, X) + kron(Y, Y);\nB = kron(X, X) - kron(Y, Y);\nH = A + 0.3 * B;\nH"), 0);
  CHECK(r.pass);
  CHECK(r.max_dev <= 1e-10);
  CHECK(r.alpha_pred == doctest::Approx(2.0));
  CHECK(r.queries_measured == 4.0);
}

TEST_CASE("verify the regression example through the QSVT path") {
  std::string src =
      "oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;\n"
      "oracle B : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;\n"
      "f = (A - B) + 1/2 * (A - B) ** 2;\n"
      "g = (A - B) - 1/2 * (A - B) ** 2;\n"
      "f * g";
  TypedExpr opt = optimized(src);
  CHECK(contains_qsp_path(opt));
  VerifyReport r = verify(opt, 1);
  CHECK(r.pass);
  CHECK(r.max_dev <= 1e-7);
  CHECK(r.queries_measured == 8.0);
}

TEST_CASE("adjoint compiles to the conjugate-transpose unitary") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    cobble::testing::GenOptions opts;
    opts.max_depth = 3;
    cobble::testing::ProgramGen gen(11000 + seed, opts);
    ExprPtr e = gen.expr();
    TypedExpr t = typecheck_expr(e, {});
    TypedExpr ta = typecheck_expr(make_adjoint(e), {});
    DenseUnitary u = simulate(compile(t), seed);
    DenseUnitary ua = simulate(compile(ta), seed);
    CHECK((ua.u - Matrix(u.u.adjoint())).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Including through a QSVT template instance.
  TypedExpr poly = typed(
      "oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;\n"
      "Poly(A, [0.0, 0.4, 0.3])");
  TypedExpr poly_adj = typecheck_expr(make_adjoint(poly.expr), poly.ctx);
  DenseUnitary u = simulate(compile(poly), 4u);
  DenseUnitary ua = simulate(compile(poly_adj), 4u);
  CHECK((ua.u - Matrix(u.u.adjoint())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("post-selection probability meets the amplitude bound") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    cobble::testing::ProgramGen gen(12000 + seed);
    TypedExpr t = typecheck_expr(gen.expr(), {});
    VerifyReport r = verify(t, seed);
    CHECK(r.pass);
    CHECK(r.success_prob_measured >= r.success_prob_bound - 1e-9);
  }
}

TEST_CASE("cross-method agreement on the regression polynomial") {
  std::string src =
      "oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;\n"
      "oracle B : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;\n"
      "Poly(A - B, [0.0, 0.0, 1.0, 0.0, -0.25])";
  TypedExpr t = typed(src);
  Matrix blocks[3];
  int i = 0;
  for (PolyMethod m : {PolyMethod::LCU, PolyMethod::Horner, PolyMethod::QSVT}) {
    CompileOptions opts;
    opts.method = m;
    Circuit c = compile(t, opts);
    DenseUnitary u = simulate(c, 5u);
    blocks[i++] = u.u.topLeftCorner(2, 2) * c.predicted.subnorm;
  }
  CHECK((blocks[0] - blocks[1]).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((blocks[0] - blocks[2]).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((blocks[1] - blocks[2]).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("poly via LCU with a negative constant and a wide selector") {
  // Three live branches (j = 0, 1, 2), so a two-bit selector, a sign flip
  // on the empty j = 0 branch, and a counter-guarded j = 2 product.
  TypedExpr t = typed("Poly(Z, [-0.5, 0.8, 0.25])");
  CompileOptions opts;
  opts.method = PolyMethod::LCU;
  Circuit c = compile(t, opts);
  CHECK(count_queries(c) == 3.0);  // 0 + 1 + 2
  DenseUnitary u = simulate(c, 2u);
  Matrix target = denote(t.expr);
  Matrix block = u.u.topLeftCorner(2, 2) * c.predicted.subnorm;
  CHECK((block - target).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("a negated single-term sum flips the encoded block") {
  TypedExpr t = typed("-X");
  VerifyReport r = verify(t, 0);
  CHECK(r.pass);
  CHECK(r.max_dev < 1e-12);
  CHECK((r.target + builtin_matrix("X")).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("four-branch direct sums verify end to end") {
  std::string src =
      "oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;\n"
      "oracle B : qubits=1, ancillas=1, subnorm=1.0, hermitian=false;\n"
      "dsum(A, adj(B), 0.5 * (A + B), X)";
  TypedExpr t = typed(src);
  CHECK(t.type.n_qubits == 3);  // two discriminator qubits
  VerifyReport r = verify(t, 3);
  CHECK(r.pass);
  CHECK(r.max_dev <= 1e-10);
}

TEST_CASE("oversize circuits are rejected") {
  std::vector<ExprPtr> xs(15, make_base(*find_builtin("X")));
  Circuit c;
  c.n_qubits = 15;
  c.n_data = 15;
  CHECK_THROWS_AS(simulate(c, OracleUnitaries{}), Error);
}
