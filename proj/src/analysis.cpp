#include "cobble/analysis.hpp"

#include <cmath>

#include "cobble/error.hpp"
#include "cobble/frontend.hpp"

namespace cobble {

namespace {

constexpr double kChoiceSubnormRelTol = 1e-9;
constexpr int kMaxDenoteQubits = 10;

std::string child_path(const std::string& path, const char* field, size_t i) {
  return path + "." + field + "[" + std::to_string(i) + "]";
}

}  // namespace

std::string qtype_to_string(const QType& t) {
  std::string s;
  for (int i = 0; i < t.n_qubits; ++i) {
    if (i) s += "⊗";
    s += "bool";
  }
  return s.empty() ? "bool⊗?" : s;
}

bool AnalysisContext::commute_declared(const ExprPtr& a, const ExprPtr& b) const {
  for (const auto& [l, r] : commutes) {
    if (structurally_equal(a, l) && structurally_equal(b, r)) return true;
    if (structurally_equal(a, r) && structurally_equal(b, l)) return true;
  }
  return false;
}

QType Analyzer::type_of(const ExprPtr& e) { return type_rec(e, "main"); }

QType Analyzer::type_rec(const ExprPtr& e, const std::string& path) {
  auto it = type_memo_.find(e.get());
  if (it != type_memo_.end()) return it->second;
  QType result;
  switch (e->kind) {
    case ExprKind::Ref:
      throw Error(ErrorKind::UnknownIdentifier, "unresolved reference '" + e->name + "'", path);
    case ExprKind::Base:
      result.n_qubits = e->oracle.n_qubits;
      break;
    case ExprKind::Adjoint:
      result = type_rec(e->child, child_path(path, "child", 0));
      break;
    case ExprKind::Sum: {
      if (e->terms.empty())
        throw Error(ErrorKind::TypeMismatch, "sum must have at least one term", path);
      double abs_sum = 0.0;
      for (const auto& t : e->terms) abs_sum += std::fabs(t.coeff);
      if (abs_sum <= kCoeffZeroTol)
        throw Error(ErrorKind::AllTermsCancel, "sum coefficients are all zero", path);
      result = type_rec(e->terms[0].child, child_path(path, "terms", 0));
      for (size_t i = 1; i < e->terms.size(); ++i) {
        QType ti = type_rec(e->terms[i].child, child_path(path, "terms", i));
        if (ti.n_qubits != result.n_qubits)
          throw Error(ErrorKind::TypeMismatch,
                      "sum operands disagree: " + qtype_to_string(result) + " vs " +
                          qtype_to_string(ti),
                      child_path(path, "terms", i));
      }
      break;
    }
    case ExprKind::Prod: {
      if (e->factors.empty())
        throw Error(ErrorKind::TypeMismatch, "product must have at least one factor", path);
      result = type_rec(e->factors[0], child_path(path, "factors", 0));
      for (size_t i = 1; i < e->factors.size(); ++i) {
        QType ti = type_rec(e->factors[i], child_path(path, "factors", i));
        if (ti.n_qubits != result.n_qubits)
          throw Error(ErrorKind::TypeMismatch,
                      "product operands disagree: " + qtype_to_string(result) + " vs " +
                          qtype_to_string(ti),
                      child_path(path, "factors", i));
      }
      break;
    }
    case ExprKind::Choice: {
      size_t n = e->factors.size();
      if (n == 0)
        throw Error(ErrorKind::TypeMismatch, "direct sum must have at least one branch", path);
      if ((n & (n - 1)) != 0)
        throw Error(ErrorKind::TypeMismatch,
                    "direct sum branch count must be a power of two, got " + std::to_string(n),
                    path);
      QType inner = type_rec(e->factors[0], child_path(path, "branches", 0));
      double alpha0 = cost(e->factors[0]).subnorm;
      for (size_t i = 1; i < n; ++i) {
        QType ti = type_rec(e->factors[i], child_path(path, "branches", i));
        if (ti.n_qubits != inner.n_qubits)
          throw Error(ErrorKind::TypeMismatch,
                      "direct sum branches disagree: " + qtype_to_string(inner) + " vs " +
                          qtype_to_string(ti),
                      child_path(path, "branches", i));
        double ai = cost(e->factors[i]).subnorm;
        if (std::fabs(ai - alpha0) > kChoiceSubnormRelTol * std::max(1.0, std::fabs(alpha0)))
          throw Error(ErrorKind::ChoiceSubnormMismatch,
                      "direct sum branches have unequal subnormalization: " +
                          fmt_double(alpha0) + " vs " + fmt_double(ai),
                      child_path(path, "branches", i));
      }
      result.n_qubits = inner.n_qubits + ceil_log2(static_cast<int>(n));
      break;
    }
    case ExprKind::Tensor: {
      if (e->factors.empty())
        throw Error(ErrorKind::TypeMismatch, "tensor must have at least one factor", path);
      result.n_qubits = 0;
      for (size_t i = 0; i < e->factors.size(); ++i)
        result.n_qubits += type_rec(e->factors[i], child_path(path, "factors", i)).n_qubits;
      break;
    }
    case ExprKind::Poly: {
      if (e->coeffs.empty())
        throw Error(ErrorKind::TypeMismatch, "polynomial must have coefficients", path);
      result = type_rec(e->child, child_path(path, "base", 0));
      if (!hermitian(e->child))
        throw Error(ErrorKind::NonHermitianPolyBase,
                    "polynomial base is not judged Hermitian", path);
      break;
    }
  }
  type_memo_[e.get()] = result;
  keepalive_.push_back(e);
  return result;
}

bool Analyzer::hermitian(const ExprPtr& e) {
  auto it = herm_memo_.find(e.get());
  if (it != herm_memo_.end()) return it->second;
  bool result = false;
  switch (e->kind) {
    case ExprKind::Ref:
      result = false;
      break;
    case ExprKind::Base:
      result = e->oracle.hermitian;
      break;
    case ExprKind::Adjoint:
      result = hermitian(e->child);
      break;
    case ExprKind::Sum:
      result = true;
      for (const auto& t : e->terms) result = result && hermitian(t.child);
      break;
    case ExprKind::Prod: {
      result = true;
      for (const auto& f : e->factors) result = result && hermitian(f);
      // H-Product additionally needs every pair of factors to commute:
      // either structurally identical or declared by the user.
      for (size_t i = 0; result && i < e->factors.size(); ++i)
        for (size_t j = i + 1; result && j < e->factors.size(); ++j) {
          if (structurally_equal(e->factors[i], e->factors[j])) continue;
          if (!ctx_.commute_declared(e->factors[i], e->factors[j])) result = false;
        }
      break;
    }
    case ExprKind::Choice:
    case ExprKind::Tensor:
      result = true;
      for (const auto& f : e->factors) result = result && hermitian(f);
      break;
    case ExprKind::Poly:
      result = hermitian(e->child);
      break;
  }
  herm_memo_[e.get()] = result;
  keepalive_.push_back(e);
  return result;
}

PolyMethod Analyzer::method_for(const ExprPtr& poly, std::optional<PolyMethod> method) {
  if (method) return *method;
  return select_poly_method(PolySpec{poly->coeffs}, cost(poly->child), hermitian(poly->child));
}

CostReport Analyzer::cost(const ExprPtr& e, std::optional<PolyMethod> method) {
  if (!method) {
    auto it = cost_memo_.find(e.get());
    if (it != cost_memo_.end()) return it->second;
  }
  CostReport result;
  switch (e->kind) {
    case ExprKind::Ref:
      throw Error(ErrorKind::UnknownIdentifier, "unresolved reference '" + e->name + "'");
    case ExprKind::Base:
      result = make_cost(1.0, e->oracle.subnorm, e->oracle.ancillas);
      break;
    case ExprKind::Adjoint:
      result = cost(e->child, method);
      break;
    case ExprKind::Sum: {
      double q = 0.0, alpha = 0.0;
      int m = 0;
      for (const auto& t : e->terms) {
        CostReport c = cost(t.child, method);
        q += c.queries;
        alpha += std::fabs(t.coeff) * c.subnorm;
        m = std::max(m, c.ancillas);
      }
      result = make_cost(q, alpha, ceil_log2(static_cast<int>(e->terms.size())) + m);
      break;
    }
    case ExprKind::Prod: {
      double q = 0.0, alpha = 1.0;
      int m = 0;
      for (const auto& f : e->factors) {
        CostReport c = cost(f, method);
        q += c.queries;
        alpha *= c.subnorm;
        m = std::max(m, c.ancillas);
      }
      result = make_cost(q, alpha, ceil_log2(static_cast<int>(e->factors.size())) + m);
      break;
    }
    case ExprKind::Choice: {
      double q = 0.0;
      int m = 0;
      for (const auto& f : e->factors) {
        CostReport c = cost(f, method);
        q += c.queries;
        m = std::max(m, c.ancillas);
      }
      result = make_cost(q, cost(e->factors[0], method).subnorm, m);
      break;
    }
    case ExprKind::Tensor: {
      // The disjoint parallel composition uses the sum of the factor
      // ancilla counts; sharing them has no sound circuit.
      double q = 0.0, alpha = 1.0;
      int m = 0;
      for (const auto& f : e->factors) {
        CostReport c = cost(f, method);
        q += c.queries;
        alpha *= c.subnorm;
        m += c.ancillas;
      }
      result = make_cost(q, alpha, m);
      break;
    }
    case ExprKind::Poly: {
      CostReport base = cost(e->child, method);
      PolyMethod m = method_for(e, method);
      result = poly_cost(PolySpec{e->coeffs}, base, m, hermitian(e->child));
      break;
    }
  }
  if (!method) {
    cost_memo_[e.get()] = result;
    keepalive_.push_back(e);
  }
  return result;
}

TypedExpr typecheck_expr(ExprPtr e, AnalysisContext ctx) {
  Analyzer an(ctx);
  TypedExpr out;
  out.expr = std::move(e);
  out.type = an.type_of(out.expr);
  out.hermitian = an.hermitian(out.expr);
  out.cost = an.cost(out.expr);
  out.ctx = std::move(ctx);
  return out;
}

TypedExpr typecheck(const Program& p) {
  AnalysisContext ctx{resolved_commutes(p)};
  return typecheck_expr(resolve(p), std::move(ctx));
}

Matrix builtin_matrix(const std::string& name) {
  using namespace std::complex_literals;
  Matrix m(2, 2);
  if (name == "X") {
    m << 0, 1, 1, 0;
  } else if (name == "Y") {
    m << 0.0, -1.0i, 1.0i, 0.0;
  } else if (name == "Z") {
    m << 1, 0, 0, -1;
  } else if (name == "H") {
    double s = 1.0 / std::sqrt(2.0);
    m << s, s, s, -s;
  } else if (name == "I") {
    m << 1, 0, 0, 1;
  } else {
    throw Error(ErrorKind::UnknownIdentifier, "not a builtin gate: " + name);
  }
  return m;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {

Matrix denote_rec(const ExprPtr& e, const OracleBindings& bindings) {
  switch (e->kind) {
    case ExprKind::Ref:
      throw Error(ErrorKind::UnknownIdentifier, "unresolved reference '" + e->name + "'");
    case ExprKind::Base: {
      Eigen::Index dim = Eigen::Index(1) << e->oracle.n_qubits;
      auto it = bindings.find(e->name);
      Matrix m;
      if (it != bindings.end()) {
        m = it->second;
      } else if (e->oracle.builtin) {
        m = builtin_matrix(e->name);
      } else {
        throw Error(ErrorKind::UnknownIdentifier,
                    "no concrete matrix bound for oracle '" + e->name + "'");
      }
      if (m.rows() != dim || m.cols() != dim)
        throw Error(ErrorKind::DimensionMismatch,
                    "bound matrix for '" + e->name + "' has the wrong dimension");
      return m;
    }
    case ExprKind::Adjoint:
      return denote_rec(e->child, bindings).adjoint();
    case ExprKind::Sum: {
      Matrix acc = e->terms[0].coeff * denote_rec(e->terms[0].child, bindings);
      for (size_t i = 1; i < e->terms.size(); ++i) {
        Matrix t = denote_rec(e->terms[i].child, bindings);
        if (t.rows() != acc.rows())
          throw Error(ErrorKind::DimensionMismatch, "sum operand dimensions disagree");
        acc += e->terms[i].coeff * t;
      }
      return acc;
    }
    case ExprKind::Prod: {
      Matrix acc = denote_rec(e->factors[0], bindings);
      for (size_t i = 1; i < e->factors.size(); ++i) {
        Matrix f = denote_rec(e->factors[i], bindings);
        if (f.rows() != acc.cols())
          throw Error(ErrorKind::DimensionMismatch, "product operand dimensions disagree");
        acc = acc * f;
      }
      return acc;
    }
    case ExprKind::Choice: {
      std::vector<Matrix> blocks;
      Eigen::Index total = 0;
      for (const auto& f : e->factors) {
        blocks.push_back(denote_rec(f, bindings));
        total += blocks.back().rows();
      }
      Matrix out = Matrix::Zero(total, total);
      Eigen::Index off = 0;
      for (const auto& b : blocks) {
        out.block(off, off, b.rows(), b.cols()) = b;
        off += b.rows();
      }
      return out;
    }
    case ExprKind::Tensor: {
      Matrix acc = denote_rec(e->factors[0], bindings);
      for (size_t i = 1; i < e->factors.size(); ++i)
        acc = kron(acc, denote_rec(e->factors[i], bindings));
      return acc;
    }
    case ExprKind::Poly: {
      Matrix base = denote_rec(e->child, bindings);
      Matrix acc = Matrix::Zero(base.rows(), base.cols());
      // Horner evaluation on matrices.
      for (size_t j = e->coeffs.size(); j-- > 0;) {
        acc = acc * base;
        acc += e->coeffs[j] * Matrix::Identity(base.rows(), base.cols());
      }
      return acc;
    }
  }
  throw Error(ErrorKind::InternalArity, "unreachable expression kind");
}

// Structural dimension only; denote re-validates shapes as it multiplies.
int data_qubits_of(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Base:
      return e->oracle.n_qubits;
    case ExprKind::Adjoint:
    case ExprKind::Poly:
      return data_qubits_of(e->child);
    case ExprKind::Sum:
      return e->terms.empty() ? 0 : data_qubits_of(e->terms[0].child);
    case ExprKind::Prod:
      return e->factors.empty() ? 0 : data_qubits_of(e->factors[0]);
    case ExprKind::Choice:
      return e->factors.empty()
                 ? 0
                 : data_qubits_of(e->factors[0]) + ceil_log2(static_cast<int>(e->factors.size()));
    case ExprKind::Tensor: {
      int n = 0;
      for (const auto& f : e->factors) n += data_qubits_of(f);
      return n;
    }
    default:
      return 0;
  }
}

}  // namespace

Matrix denote(const ExprPtr& e, const OracleBindings& bindings) {
  int n = data_qubits_of(e);
  if (n > kMaxDenoteQubits)
    throw Error(ErrorKind::OversizeDenotation,
                "expression acts on " + std::to_string(n) + " qubits, limit is " +
                    std::to_string(kMaxDenoteQubits));
  return denote_rec(e, bindings);
}

}  // namespace cobble
