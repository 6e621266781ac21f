#pragma once

#include <string>
#include <vector>

#include "cobble/analysis.hpp"
#include "cobble/expr.hpp"

namespace cobble {

enum class RuleId {
  SumFusion,
  PolyFusion,
  PolyMulMerge,
  PolyAddMerge,
  PolyChoiceMerge,
  PolyCompose,
  FactorProdSumL,
  FactorProdSumR,
  FactorChoiceProdL,
  FactorChoiceProdR,
  FactorTensorSumL,
  FactorTensorSumR,
  FactorTensorChoiceL,
  FactorTensorChoiceR,
  ChoiceIdem,
  ProdIdentity,
  AdjHermitian,
  AdjInvolution,
  AdjProd,
  AdjSum,
  AdjTensor,
  AdjChoice,
};

const char* rule_name(RuleId id);

struct RewriteStep {
  RuleId rule;
  std::string path;
  CostReport before;  // whole-expression cost
  CostReport after;
};

struct RewriteTrace {
  std::vector<RewriteStep> steps;
};

struct RewriteResult {
  ExprPtr expr;
  RewriteTrace trace;
};

// Whole-tree sum fusion: flattens nested weighted sums, merges structurally
// identical summands, drops cancelled terms (AllTermsCancel if none remain).
ExprPtr sum_fuse(const ExprPtr& e);

// Whole-tree polynomial fusion: same-base monomial sums become Poly nodes,
// and products/sums/compositions/direct sums of same-base Polys merge.
// Non-Hermitian bases are left alone.
ExprPtr poly_fuse(const ExprPtr& e, const AnalysisContext& ctx);

// Normalizes to the fixed point of the full rule system under the priority
// order (adjoint push-down, identity elimination, factoring, sum fusion,
// polynomial fusion), innermost first. Every accepted step keeps the whole
// expression well typed, never increases queries or total cost, and
// strictly decreases the termination measure.
RewriteResult apply_rules(const TypedExpr& e);

// Lexicographic termination measure: (oracle leaf count, adjoint weight,
// node count, sum+product+choice count). Every rule strictly decreases it.
struct RewriteMeasure {
  long leaves = 0;
  long adj_weight = 0;
  long nodes = 0;
  long pcs = 0;
};
RewriteMeasure rewrite_measure(const ExprPtr& e);
bool measure_less(const RewriteMeasure& a, const RewriteMeasure& b);

}  // namespace cobble
