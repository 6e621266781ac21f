#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cobble/cost.hpp"
#include "cobble/expr.hpp"

namespace cobble {

using Matrix = Eigen::MatrixXcd;

struct QType {
  int n_qubits = 0;
};

std::string qtype_to_string(const QType& t);  // "bool⊗bool..."

// Resolved commutativity assumptions; pairs are user-provided facts.
struct AnalysisContext {
  std::vector<std::pair<ExprPtr, ExprPtr>> commutes;

  bool commute_declared(const ExprPtr& a, const ExprPtr& b) const;
};

// Shared recursive judgments over the IR: types (T-rules), hermiticity
// (H-rules, purely syntactic), and the analytic cost model. Memoized per
// instance; all queries are const after construction of the context.
class Analyzer {
 public:
  Analyzer() = default;
  explicit Analyzer(AnalysisContext ctx) : ctx_(std::move(ctx)) {}

  const AnalysisContext& context() const { return ctx_; }

  // Full type check of a subtree; throws TypeMismatch /
  // ChoiceSubnormMismatch / NonHermitianPolyBase / AllTermsCancel with the
  // offending path.
  QType type_of(const ExprPtr& e);

  // Conservative hermiticity: true only when derivable from the H-rules
  // and the declared commute facts; never inspects numeric entries.
  bool hermitian(const ExprPtr& e);

  // Cost with per-Poly methods chosen by select_poly_method, or forced by
  // `method` when present.
  CostReport cost(const ExprPtr& e, std::optional<PolyMethod> method = std::nullopt);

  PolyMethod method_for(const ExprPtr& poly, std::optional<PolyMethod> method = std::nullopt);

 private:
  QType type_rec(const ExprPtr& e, const std::string& path);

  AnalysisContext ctx_;
  std::unordered_map<const Expr*, QType> type_memo_;
  std::unordered_map<const Expr*, bool> herm_memo_;
  std::unordered_map<const Expr*, CostReport> cost_memo_;
  std::vector<ExprPtr> keepalive_;
};

struct TypedExpr {
  ExprPtr expr;
  AnalysisContext ctx;
  QType type;
  bool hermitian = false;
  CostReport cost;
};

TypedExpr typecheck(const Program& p);
TypedExpr typecheck_expr(ExprPtr e, AnalysisContext ctx);

// name -> the encoded 2^n x 2^n matrix (already subnormalization-scaled).
using OracleBindings = std::map<std::string, Matrix>;

// Denotational semantics on concrete matrices. Builtin gates are bound
// automatically; every other Base leaf must appear in `bindings`.
// Expressions above 10 data qubits are rejected (OversizeDenotation).
Matrix denote(const ExprPtr& e, const OracleBindings& bindings = {});

Matrix builtin_matrix(const std::string& name);
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace cobble
