#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cobble/error.hpp"
#include "cobble/frontend.hpp"
#include "support/random_programs.hpp"

using namespace cobble;

TEST_CASE("simulation example program structure") {
  Program p = parse(
      "A = kron(X, X) + kron(Y, Y);\n"
      "B = kron(X, X) - kron(Y, Y);\n"
      "H = A + 0.3 * B;\n"
      "H\n");
  REQUIRE(p.bindings.size() == 3);
  const ExprPtr& h = p.bindings[2].second;
  REQUIRE(h->kind == ExprKind::Sum);
  REQUIRE(h->terms.size() == 2);
  CHECK(h->terms[0].coeff == 1.0);
  CHECK(h->terms[1].coeff == 0.3);
  const ExprPtr& b = p.bindings[1].second;
  REQUIRE(b->kind == ExprKind::Sum);
  CHECK(b->terms[0].coeff == 1.0);
  CHECK(b->terms[1].coeff == -1.0);
  CHECK(b->terms[0].child->kind == ExprKind::Tensor);
}

TEST_CASE("bare builtin reference") {
  Program p = parse("X");
  REQUIRE(p.main->kind == ExprKind::Ref);
  ExprPtr r = resolve(p);
  REQUIRE(r->kind == ExprKind::Base);
  CHECK(r->oracle.builtin);
  CHECK(r->oracle.hermitian);
  CHECK(r->oracle.subnorm == 1.0);
}

TEST_CASE("power and scalar-division sugar") {
  Program p = parse(
      "oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;\n"
      "oracle B : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;\n"
      "f = (A - B) + 1/2 * (A - B) ** 2;\n"
      "f\n");
  const ExprPtr& f = p.bindings[0].second;
  REQUIRE(f->kind == ExprKind::Sum);
  REQUIRE(f->terms.size() == 2);
  CHECK(f->terms[0].coeff == 1.0);
  CHECK(f->terms[0].child->kind == ExprKind::Sum);  // A - B
  CHECK(f->terms[1].coeff == 0.5);
  REQUIRE(f->terms[1].child->kind == ExprKind::Prod);
  REQUIRE(f->terms[1].child->factors.size() == 2);
  CHECK(structurally_equal(f->terms[1].child->factors[0], f->terms[1].child->factors[1]));
}

TEST_CASE("operator precedence: ** over * over +") {
  Program p = parse("oracle A : qubits=1, ancillas=0, subnorm=1.0, hermitian=true;\n"
                    "A + A * A ** 2\n");
  ExprPtr e = p.main;
  REQUIRE(e->kind == ExprKind::Sum);
  REQUIRE(e->terms.size() == 2);
  const ExprPtr& second = e->terms[1].child;
  REQUIRE(second->kind == ExprKind::Prod);
  // A * (A ** 2) = Prod([A, Prod([A, A])])
  REQUIRE(second->factors.size() == 2);
  CHECK(second->factors[0]->kind == ExprKind::Ref);
  REQUIRE(second->factors[1]->kind == ExprKind::Prod);
  CHECK(second->factors[1]->factors.size() == 2);
}

TEST_CASE("print canonical forms") {
  OracleDecl x = *find_builtin("X");
  OracleDecl y = *find_builtin("Y");
  ExprPtr xx = make_tensor({make_base(x), make_base(x)});
  ExprPtr yy = make_tensor({make_base(y), make_base(y)});
  ExprPtr sum = make_sum({{1.3, xx}, {0.7, yy}});
  CHECK(print_expr(sum) == "1.3 * kron(X, X) + 0.7 * kron(Y, Y)");

  ExprPtr a = make_base({"A", 1, 1, 1.0, true, false});
  CHECK(print_expr(a) == "A");

  ExprPtr b = make_base({"B", 1, 1, 1.0, true, false});
  ExprPtr diff = make_sum({{1.0, a}, {-1.0, b}});
  ExprPtr poly = make_poly(diff, {0.0, 0.0, 1.0, 0.0, -0.25});
  CHECK(print_expr(poly) == "Poly((A - B), [0.0, 0.0, 1.0, 0.0, -0.25])");
}

TEST_CASE("parse errors carry position and kind") {
  CHECK_THROWS_WITH_AS(parse("H = ;"), doctest::Contains("line 1"), Error);
  try {
    parse("H = @;");
    FAIL("expected syntax error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SyntaxError);
  }
  try {
    parse("oracle A : qubits=1, ancillas=0, subnorm=1.0, hermitian=true;\n"
          "oracle A : qubits=1, ancillas=0, subnorm=1.0, hermitian=true;\nA");
    FAIL("expected duplicate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateDeclaration);
  }
  try {
    parse("A + B");
    FAIL("expected unknown identifier");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownIdentifier);
  }
}

TEST_CASE("oracle attribute validation") {
  CHECK_THROWS_AS(parse("oracle A : qubits=0, ancillas=0, subnorm=1.0, hermitian=true;\nA"),
                  Error);
  CHECK_THROWS_AS(parse("oracle A : qubits=1, ancillas=0, subnorm=0.0, hermitian=true;\nA"),
                  Error);
  CHECK_THROWS_AS(parse("oracle A : qubits=1, ancillas=-1, subnorm=1.0, hermitian=true;\nA"),
                  Error);
}

TEST_CASE("binding may shadow a builtin but not another binding") {
  Program p = parse("H = X + Y;\nH");
  CHECK(p.bindings.size() == 1);
  CHECK_THROWS_AS(parse("H = X;\nH = Y;\nH"), Error);
}

TEST_CASE("round trip: fixtures") {
  const char* sources[] = {
      "A = kron(X, X) + kron(Y, Y);\nB = kron(X, X) - kron(Y, Y);\nH = A + 0.3 * B;\nH\n",
      "oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;\n"
      "Poly(A, [0.5, 0.0, -0.25, 0.0, 1.0])\n",
      "dsum(X, adj(Y)) * kron(Z, H)\n",
  };
  for (const char* src : sources) {
    Program p = parse(src);
    Program q = parse(print(p));
    REQUIRE(p.bindings.size() == q.bindings.size());
    for (size_t i = 0; i < p.bindings.size(); ++i) {
      CHECK(p.bindings[i].first == q.bindings[i].first);
      CHECK(structurally_equal(p.bindings[i].second, q.bindings[i].second));
    }
    CHECK(structurally_equal(p.main, q.main));
  }
}

TEST_CASE("round trip: 1000 random ASTs") {
  std::mt19937_64 rng(20260810);
  for (int i = 0; i < 1000; ++i) {
    Program p;
    p.oracles = {{"alpha", 1, 0, 1.0, true, false}, {"beta", 2, 1, 2.0, false, false}};
    p.main = cobble::testing::random_ast(rng, 4);
    std::string text = print(p);
    Program q = parse(text);
    if (!structurally_equal(p.main, q.main)) {
      CAPTURE(text);
      CHECK(structurally_equal(p.main, q.main));
      break;
    }
  }
}

TEST_CASE("fmt_double keeps floats reparsable") {
  CHECK(fmt_double(1.0) == "1.0");
  CHECK(fmt_double(0.0) == "0.0");
  CHECK(fmt_double(-0.25) == "-0.25");
  CHECK(fmt_double(1.3) == "1.3");
  CHECK(fmt_double(20.8) == "20.8");
}
