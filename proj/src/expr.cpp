#include "cobble/expr.hpp"

#include <algorithm>

namespace cobble {

namespace {

ExprPtr make_node(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

int cmp_double(double a, double b) { return a < b ? -1 : (a > b ? 1 : 0); }

}  // namespace

ExprPtr make_ref(std::string name) {
  Expr e;
  e.kind = ExprKind::Ref;
  e.name = std::move(name);
  return make_node(std::move(e));
}

ExprPtr make_base(OracleDecl oracle) {
  Expr e;
  e.kind = ExprKind::Base;
  e.name = oracle.name;
  e.oracle = std::move(oracle);
  return make_node(std::move(e));
}

ExprPtr make_adjoint(ExprPtr child) {
  Expr e;
  e.kind = ExprKind::Adjoint;
  e.child = std::move(child);
  return make_node(std::move(e));
}

ExprPtr make_sum(std::vector<SumTerm> terms) {
  Expr e;
  e.kind = ExprKind::Sum;
  e.terms = std::move(terms);
  return make_node(std::move(e));
}

ExprPtr make_prod(std::vector<ExprPtr> factors) {
  Expr e;
  e.kind = ExprKind::Prod;
  e.factors = std::move(factors);
  return make_node(std::move(e));
}

ExprPtr make_choice(std::vector<ExprPtr> branches) {
  Expr e;
  e.kind = ExprKind::Choice;
  e.factors = std::move(branches);
  return make_node(std::move(e));
}

ExprPtr make_tensor(std::vector<ExprPtr> factors) {
  Expr e;
  e.kind = ExprKind::Tensor;
  e.factors = std::move(factors);
  return make_node(std::move(e));
}

ExprPtr make_poly(ExprPtr base, std::vector<double> coeffs) {
  Expr e;
  e.kind = ExprKind::Poly;
  e.child = std::move(base);
  e.coeffs = std::move(coeffs);
  return make_node(std::move(e));
}

int compare(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  switch (a->kind) {
    case ExprKind::Ref:
      return a->name.compare(b->name) < 0 ? -1 : (a->name == b->name ? 0 : 1);
    case ExprKind::Base: {
      int c = a->name.compare(b->name);
      if (c != 0) return c < 0 ? -1 : 1;
      if (int c2 = cmp_double(a->oracle.subnorm, b->oracle.subnorm)) return c2;
      if (a->oracle.n_qubits != b->oracle.n_qubits)
        return a->oracle.n_qubits < b->oracle.n_qubits ? -1 : 1;
      if (a->oracle.ancillas != b->oracle.ancillas)
        return a->oracle.ancillas < b->oracle.ancillas ? -1 : 1;
      return 0;
    }
    case ExprKind::Adjoint:
      return compare(a->child, b->child);
    case ExprKind::Sum: {
      if (a->terms.size() != b->terms.size())
        return a->terms.size() < b->terms.size() ? -1 : 1;
      for (size_t i = 0; i < a->terms.size(); ++i) {
        if (int c = compare(a->terms[i].child, b->terms[i].child)) return c;
        if (int c = cmp_double(a->terms[i].coeff, b->terms[i].coeff)) return c;
      }
      return 0;
    }
    case ExprKind::Prod:
    case ExprKind::Choice:
    case ExprKind::Tensor: {
      if (a->factors.size() != b->factors.size())
        return a->factors.size() < b->factors.size() ? -1 : 1;
      for (size_t i = 0; i < a->factors.size(); ++i)
        if (int c = compare(a->factors[i], b->factors[i])) return c;
      return 0;
    }
    case ExprKind::Poly: {
      if (int c = compare(a->child, b->child)) return c;
      if (a->coeffs.size() != b->coeffs.size())
        return a->coeffs.size() < b->coeffs.size() ? -1 : 1;
      for (size_t i = 0; i < a->coeffs.size(); ++i)
        if (int c = cmp_double(a->coeffs[i], b->coeffs[i])) return c;
      return 0;
    }
  }
  return 0;
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) { return compare(a, b) == 0; }

int node_count(const ExprPtr& e) {
  int n = 1;
  switch (e->kind) {
    case ExprKind::Adjoint:
    case ExprKind::Poly:
      n += node_count(e->child);
      break;
    case ExprKind::Sum:
      for (const auto& t : e->terms) n += node_count(t.child);
      break;
    case ExprKind::Prod:
    case ExprKind::Choice:
    case ExprKind::Tensor:
      for (const auto& f : e->factors) n += node_count(f);
      break;
    default:
      break;
  }
  return n;
}

bool is_identity_expr(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Base:
      return e->oracle.builtin && e->name == "I";
    case ExprKind::Adjoint:
      return is_identity_expr(e->child);
    case ExprKind::Tensor:
      return std::all_of(e->factors.begin(), e->factors.end(), is_identity_expr);
    default:
      return false;
  }
}

const std::vector<OracleDecl>& builtin_oracles() {
  static const std::vector<OracleDecl> gates = {
      {"X", 1, 0, 1.0, true, true}, {"Y", 1, 0, 1.0, true, true},
      {"Z", 1, 0, 1.0, true, true}, {"H", 1, 0, 1.0, true, true},
      {"I", 1, 0, 1.0, true, true},
  };
  return gates;
}

const OracleDecl* find_builtin(const std::string& name) {
  for (const auto& g : builtin_oracles())
    if (g.name == name) return &g;
  return nullptr;
}

}  // namespace cobble
