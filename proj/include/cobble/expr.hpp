#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace cobble {

// A declared black-box block-encoding oracle. The unitary acts on
// `ancillas` post-selected qubits followed by `n_qubits` data qubits, and
// its top-left block is the encoded matrix divided by `subnorm`.
struct OracleDecl {
  std::string name;
  int n_qubits = 1;
  int ancillas = 0;
  double subnorm = 1.0;
  bool hermitian = false;
  bool builtin = false;
};

struct CommuteDecl {
  std::string left;
  std::string right;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind {
  Ref,      // unresolved name, only before resolution
  Base,     // oracle leaf
  Adjoint,
  Sum,      // weighted n-ary sum
  Prod,     // n-ary matrix product, factors applied right to left
  Choice,   // n-ary direct sum, branch count a power of two
  Tensor,   // n-ary Kronecker product
  Poly,     // symbolic polynomial in a Hermitian base
};

struct SumTerm {
  double coeff = 0.0;
  ExprPtr child;
};

struct Expr {
  ExprKind kind;
  std::string name;              // Ref
  OracleDecl oracle;             // Base
  ExprPtr child;                 // Adjoint, Poly
  std::vector<SumTerm> terms;    // Sum
  std::vector<ExprPtr> factors;  // Prod, Choice, Tensor
  std::vector<double> coeffs;    // Poly, monomial basis a0..ad
};

ExprPtr make_ref(std::string name);
ExprPtr make_base(OracleDecl oracle);
ExprPtr make_adjoint(ExprPtr child);
ExprPtr make_sum(std::vector<SumTerm> terms);
ExprPtr make_prod(std::vector<ExprPtr> factors);
ExprPtr make_choice(std::vector<ExprPtr> branches);
ExprPtr make_tensor(std::vector<ExprPtr> factors);
ExprPtr make_poly(ExprPtr base, std::vector<double> coeffs);

// Deterministic total order on expressions; 0 iff structurally equal.
int compare(const ExprPtr& a, const ExprPtr& b);
bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

int node_count(const ExprPtr& e);

// Base(I) or a tensor/adjoint closure of identities.
bool is_identity_expr(const ExprPtr& e);

// A parsed program: declarations, let-bindings in order, and the main
// expression. Bindings may reference only earlier names.
struct Program {
  std::vector<OracleDecl> oracles;
  std::vector<CommuteDecl> commutes;
  std::vector<std::pair<std::string, ExprPtr>> bindings;
  ExprPtr main;
};

// The implicitly declared single-qubit gates X, Y, Z, H, I.
const std::vector<OracleDecl>& builtin_oracles();
const OracleDecl* find_builtin(const std::string& name);

}  // namespace cobble
