#include "cobble/rewrite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstring>
#include <map>
#include <optional>
#include <unordered_set>

#include "cobble/cost.hpp"
#include "cobble/error.hpp"
#include "cobble/frontend.hpp"

namespace cobble {

namespace {

constexpr double kCancelTol = 1e-12;

ExprPtr mk_sum_raw(std::vector<SumTerm> terms) {
  if (terms.size() == 1 && terms[0].coeff == 1.0) return terms[0].child;
  return make_sum(std::move(terms));
}

// Canonical form: commutative sum terms sorted by the total order on ASTs.
ExprPtr mk_sum_canon(std::vector<SumTerm> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const SumTerm& a, const SumTerm& b) { return compare(a.child, b.child) < 0; });
  return mk_sum_raw(std::move(terms));
}

ExprPtr mk_prod(std::vector<ExprPtr> factors) {
  if (factors.size() == 1) return factors[0];
  return make_prod(std::move(factors));
}

ExprPtr mk_tensor(std::vector<ExprPtr> factors) {
  if (factors.size() == 1) return factors[0];
  return make_tensor(std::move(factors));
}

ExprPtr replace_child(const ExprPtr& e, size_t index, ExprPtr child) {
  Expr copy = *e;
  switch (e->kind) {
    case ExprKind::Adjoint:
    case ExprKind::Poly:
      copy.child = std::move(child);
      break;
    case ExprKind::Sum:
      copy.terms[index].child = std::move(child);
      break;
    default:
      copy.factors[index] = std::move(child);
      break;
  }
  return std::make_shared<const Expr>(std::move(copy));
}

bool is_trivial_poly(const std::vector<double>& coeffs) {
  if (coeffs.size() != 2) return false;
  return std::fabs(coeffs[0]) <= kCancelTol && std::fabs(coeffs[1] - 1.0) <= kCancelTol;
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<double> poly_compose(const std::vector<double>& outer,
                                 const std::vector<double>& inner) {
  std::vector<double> out = {0.0};
  for (size_t k = outer.size(); k-- > 0;) {
    out = poly_mul(out, inner);
    if (out.empty()) out = {0.0};
    out[0] += outer[k];
  }
  return out;
}

void trim_poly(std::vector<double>& c) {
  while (c.size() > 1 && std::fabs(c.back()) <= kCancelTol) c.pop_back();
}

// Memoized structural hash; equal trees hash equal, so buckets cut the
// quadratic duplicate scans on wide sums down to verified collisions.
class StructuralHasher {
 public:
  uint64_t operator()(const ExprPtr& e) {
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    mix(static_cast<uint64_t>(e->kind));
    for (char c : e->name) mix(static_cast<unsigned char>(c));
    if (e->kind == ExprKind::Base) {
      uint64_t bits;
      std::memcpy(&bits, &e->oracle.subnorm, sizeof bits);
      mix(bits);
      mix(static_cast<uint64_t>(e->oracle.n_qubits));
      mix(static_cast<uint64_t>(e->oracle.ancillas));
    }
    for (double c : e->coeffs) {
      uint64_t bits;
      std::memcpy(&bits, &c, sizeof bits);
      mix(bits);
    }
    if (e->child) mix((*this)(e->child));
    for (const auto& t : e->terms) {
      uint64_t bits;
      std::memcpy(&bits, &t.coeff, sizeof bits);
      mix(bits);
      mix((*this)(t.child));
    }
    for (const auto& f : e->factors) mix((*this)(f));
    memo_[e.get()] = h;
    keepalive_.push_back(e);
    return h;
  }

 private:
  std::unordered_map<const Expr*, uint64_t> memo_;
  std::vector<ExprPtr> keepalive_;
};

// ---------------------------------------------------------------------------
// Local sum fusion: flatten + merge + drop, one Sum node at a time.

struct SumFusionResult {
  std::vector<SumTerm> terms;
  bool changed = false;
};

SumFusionResult fuse_sum_terms(const std::vector<SumTerm>& in) {
  SumFusionResult r;
  std::vector<SumTerm> flat;
  for (const auto& t : in) {
    if (t.child->kind == ExprKind::Sum) {
      r.changed = true;
      for (const auto& inner : t.child->terms)
        flat.push_back({t.coeff * inner.coeff, inner.child});
    } else {
      flat.push_back(t);
    }
  }
  std::sort(flat.begin(), flat.end(),
            [](const SumTerm& a, const SumTerm& b) { return compare(a.child, b.child) < 0; });
  std::vector<SumTerm> merged;
  for (const auto& t : flat) {
    if (!merged.empty() && structurally_equal(merged.back().child, t.child)) {
      merged.back().coeff += t.coeff;
      r.changed = true;
    } else {
      merged.push_back(t);
    }
  }
  for (const auto& t : merged) {
    if (std::fabs(t.coeff) <= kCancelTol) {
      r.changed = true;
      continue;
    }
    r.terms.push_back(t);
  }
  return r;
}

ExprPtr local_sum_fuse(const ExprPtr& e, bool* fired) {
  SumFusionResult r = fuse_sum_terms(e->terms);
  if (r.terms.empty())
    throw Error(ErrorKind::AllTermsCancel,
                "all summands cancel: " + std::to_string(e->terms.size()) +
                    " terms reduce to the empty sum");
  if (!r.changed && !(r.terms.size() == 1 && r.terms[0].coeff == 1.0)) {
    if (fired) *fired = false;
    return e;
  }
  if (fired) *fired = true;
  return mk_sum_raw(std::move(r.terms));
}

// ---------------------------------------------------------------------------
// Polynomial grouping over a (fused) Sum.

struct PowerView {
  ExprPtr base;
  int exponent = 0;             // >= 1 when a plain power
  const std::vector<double>* poly = nullptr;  // set for Poly terms
  bool identity = false;
};

std::optional<PowerView> view_term(const ExprPtr& child) {
  PowerView v;
  if (is_identity_expr(child)) {
    v.identity = true;
    return v;
  }
  if (child->kind == ExprKind::Poly) {
    v.base = child->child;
    v.poly = &child->coeffs;
    return v;
  }
  if (child->kind == ExprKind::Prod) {
    for (size_t i = 1; i < child->factors.size(); ++i)
      if (!structurally_equal(child->factors[0], child->factors[i])) return std::nullopt;
    v.base = child->factors[0];
    v.exponent = static_cast<int>(child->factors.size());
    return v;
  }
  v.base = child;
  v.exponent = 1;
  return v;
}

struct PolyGroupRewrite {
  ExprPtr result;
  bool used_powers = false;  // PolyFusion if true, PolyAddMerge otherwise
};

// Merges one qualifying same-base group of a Sum into a Poly node. A group
// qualifies when its base is judged Hermitian and it contains a power of
// exponent >= 2, an existing Poly, or a foldable scalar on a lone Poly.
std::optional<PolyGroupRewrite> poly_group_sum(const ExprPtr& e, Analyzer& an,
                                               StructuralHasher& hash) {
  struct Member {
    size_t term;
    int exponent;  // -1 for a Poly member
    const std::vector<double>* poly;
  };
  struct Group {
    ExprPtr base;
    std::vector<Member> members;
  };
  std::vector<Group> groups;
  std::unordered_map<uint64_t, std::vector<size_t>> buckets;
  std::vector<size_t> identity_terms;

  for (size_t i = 0; i < e->terms.size(); ++i) {
    auto view = view_term(e->terms[i].child);
    if (!view) continue;
    if (view->identity) {
      identity_terms.push_back(i);
      continue;
    }
    if (!an.hermitian(view->base)) continue;
    Member m{i, view->poly ? -1 : view->exponent, view->poly};
    bool placed = false;
    for (size_t gi : buckets[hash(view->base)])
      if (structurally_equal(groups[gi].base, view->base)) {
        groups[gi].members.push_back(m);
        placed = true;
        break;
      }
    if (!placed) {
      buckets[hash(view->base)].push_back(groups.size());
      groups.push_back({view->base, {m}});
    }
  }
  // Deterministic scan: canonically smallest qualifying base first.
  std::sort(groups.begin(), groups.end(),
            [](const Group& a, const Group& b) { return compare(a.base, b.base) < 0; });

  for (const auto& [base, members] : groups) {
    bool has_power = false, has_poly = false;
    for (const auto& m : members) {
      if (m.exponent >= 2) has_power = true;
      if (m.exponent == -1) has_poly = true;
    }

    std::vector<bool> consumed(e->terms.size(), false);
    std::vector<double> coeffs;
    auto add_coeff = [&](size_t j, double v) {
      if (coeffs.size() <= j) coeffs.resize(j + 1, 0.0);
      coeffs[j] += v;
    };
    for (const auto& m : members) {
      consumed[m.term] = true;
      double c = e->terms[m.term].coeff;
      if (m.exponent == -1) {
        for (size_t j = 0; j < m.poly->size(); ++j) add_coeff(j, c * (*m.poly)[j]);
      } else {
        add_coeff(static_cast<size_t>(m.exponent), c);
      }
    }
    size_t merged_count = members.size();

    // Carve a dissolved copy of a Sum base out of the loose terms: sum
    // flattening inlines the exponent-one occurrence of a compound base.
    if (base->kind == ExprKind::Sum && (has_power || has_poly)) {
      std::unordered_map<uint64_t, std::vector<size_t>> loose;
      for (size_t i = 0; i < e->terms.size(); ++i)
        if (!consumed[i]) loose[hash(e->terms[i].child)].push_back(i);
      double lambda = 0.0;
      bool feasible = true;
      std::vector<size_t> carve;
      for (const auto& bt : base->terms) {
        if (std::fabs(bt.coeff) <= kCancelTol) {
          feasible = false;
          break;
        }
        bool found = false;
        auto bucket = loose.find(hash(bt.child));
        if (bucket != loose.end()) {
          for (size_t i : bucket->second) {
            if (consumed[i]) continue;
            if (std::find(carve.begin(), carve.end(), i) != carve.end()) continue;
            if (!structurally_equal(e->terms[i].child, bt.child)) continue;
            double cand = e->terms[i].coeff / bt.coeff;
            if (carve.empty()) lambda = cand;
            if (std::fabs(cand - lambda) <= 1e-9 * std::max(1.0, std::fabs(lambda))) {
              carve.push_back(i);
              found = true;
              break;
            }
          }
        }
        if (!found) {
          feasible = false;
          break;
        }
      }
      if (feasible && std::fabs(lambda) > kCancelTol) {
        for (size_t i : carve) consumed[i] = true;
        add_coeff(1, lambda);
        has_power = true;
        merged_count += 1;
      }
    }

    // Identity terms fold into the constant coefficient when nothing else
    // would remain beside this group.
    bool others_remain = false;
    size_t foldable_ids = 0;
    for (size_t i = 0; i < e->terms.size(); ++i) {
      if (consumed[i]) continue;
      bool is_id = std::find(identity_terms.begin(), identity_terms.end(), i) !=
                   identity_terms.end();
      if (is_id)
        ++foldable_ids;
      else
        others_remain = true;
    }

    // Fires only when it genuinely merges or rewrites structure.
    bool id_fold = !others_remain && foldable_ids > 0 && (has_power || has_poly);
    if (!(has_power || (has_poly && merged_count >= 2) || id_fold)) continue;

    if (!others_remain) {
      for (size_t i : identity_terms)
        if (!consumed[i]) {
          add_coeff(0, e->terms[i].coeff);
          consumed[i] = true;
        }
    }

    trim_poly(coeffs);
    std::vector<SumTerm> out;
    bool zero_poly = coeffs.size() == 1 && std::fabs(coeffs[0]) <= kCancelTol;
    if (!zero_poly) {
      ExprPtr poly = is_trivial_poly(coeffs) ? base : make_poly(base, coeffs);
      out.push_back({1.0, poly});
    }
    for (size_t i = 0; i < e->terms.size(); ++i)
      if (!consumed[i]) out.push_back(e->terms[i]);
    if (out.empty())
      throw Error(ErrorKind::AllTermsCancel, "polynomial fusion cancelled every term");
    return PolyGroupRewrite{mk_sum_canon(std::move(out)), has_power};
  }
  return std::nullopt;
}

// Adjacent same-base Poly/power run inside a product; at least one factor
// must already be a Poly.
std::optional<ExprPtr> poly_run_prod(const ExprPtr& e, Analyzer& an) {
  const auto& fs = e->factors;
  for (size_t start = 0; start < fs.size(); ++start) {
    // Powers inside a Prod appear as repeated factors, so a run consists of
    // Poly(base, .) nodes and bare base occurrences.
    ExprPtr base = fs[start]->kind == ExprKind::Poly ? fs[start]->child : fs[start];
    if (is_identity_expr(base)) continue;
    if (!an.hermitian(base)) continue;
    size_t end = start;
    bool any_poly = false;
    while (end < fs.size()) {
      const ExprPtr& f = fs[end];
      if (f->kind == ExprKind::Poly && structurally_equal(f->child, base)) {
        any_poly = true;
        ++end;
      } else if (structurally_equal(f, base)) {
        ++end;
      } else {
        break;
      }
    }
    if (end - start < 2 || !any_poly) continue;
    std::vector<double> acc = {1.0};
    for (size_t i = start; i < end; ++i) {
      const ExprPtr& f = fs[i];
      if (f->kind == ExprKind::Poly)
        acc = poly_mul(acc, f->coeffs);
      else
        acc = poly_mul(acc, {0.0, 1.0});
    }
    trim_poly(acc);
    ExprPtr merged = is_trivial_poly(acc) ? base : make_poly(base, acc);
    std::vector<ExprPtr> out(fs.begin(), fs.begin() + start);
    out.push_back(merged);
    out.insert(out.end(), fs.begin() + end, fs.end());
    return mk_prod(std::move(out));
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

struct Candidate {
  RuleId rule;
  ExprPtr replacement;
};

class Rewriter {
 public:
  explicit Rewriter(AnalysisContext ctx) : an_(std::move(ctx)) {}

  Analyzer& analyzer() { return an_; }

  // Finds the first (innermost, priority-ordered) step whose full-tree
  // replacement passes `accept`; returns the new root.
  std::optional<std::pair<ExprPtr, RewriteStep>> step(
      const ExprPtr& root,
      const std::function<bool(RuleId, const ExprPtr&)>& accept) {
    return visit(root, "main",
                 [](ExprPtr sub) { return sub; }, accept);
  }

 private:
  using Rebuild = std::function<ExprPtr(ExprPtr)>;
  using Accept = std::function<bool(RuleId, const ExprPtr&)>;

  std::optional<std::pair<ExprPtr, RewriteStep>> visit(const ExprPtr& e,
                                                       const std::string& path,
                                                       const Rebuild& rebuild,
                                                       const Accept& accept) {
    // Nodes are immutable and rule generation depends only on the subtree,
    // so a subtree once seen to generate no candidates stays quiescent.
    if (quiescent_.count(e.get())) return std::nullopt;
    bool subtree_generated = false;

    // Children first (innermost-first traversal).
    auto recurse = [&](const ExprPtr& child, size_t idx,
                       const std::string& sub) -> std::optional<std::pair<ExprPtr, RewriteStep>> {
      bool was_quiet = quiescent_.count(child.get()) > 0;
      Rebuild next = [&, idx](ExprPtr repl) { return rebuild(replace_child(e, idx, repl)); };
      auto r = visit(child, path + "." + sub, next, accept);
      if (!r && !was_quiet && !quiescent_.count(child.get())) subtree_generated = true;
      return r;
    };
    switch (e->kind) {
      case ExprKind::Adjoint:
      case ExprKind::Poly: {
        if (auto r = recurse(e->child, 0, e->kind == ExprKind::Poly ? "base" : "child"))
          return r;
        break;
      }
      case ExprKind::Sum:
        for (size_t i = 0; i < e->terms.size(); ++i)
          if (auto r = recurse(e->terms[i].child, i, "terms[" + std::to_string(i) + "]"))
            return r;
        break;
      case ExprKind::Prod:
      case ExprKind::Choice:
      case ExprKind::Tensor:
        for (size_t i = 0; i < e->factors.size(); ++i)
          if (auto r = recurse(e->factors[i], i, "factors[" + std::to_string(i) + "]")) return r;
        break;
      default:
        break;
    }
    // Then rules at this node, in priority order.
    std::vector<Candidate> cands = candidates(e);
    for (const Candidate& cand : cands) {
      ExprPtr new_root = rebuild(cand.replacement);
      if (!accept(cand.rule, new_root)) continue;
      RewriteStep step;
      step.rule = cand.rule;
      step.path = path;
      return std::make_pair(new_root, step);
    }
    // Only rejected-by-context candidates block the marking: acceptance can
    // depend on enclosing Choice constraints, generation cannot.
    if (cands.empty() && !subtree_generated) {
      quiescent_.insert(e.get());
      keepalive_.push_back(e);
    }
    return std::nullopt;
  }

  std::vector<Candidate> candidates(const ExprPtr& e) {
    std::vector<Candidate> out;
    switch (e->kind) {
      case ExprKind::Adjoint:
        adjoint_rules(e, out);
        break;
      case ExprKind::Prod:
        prod_identity(e, out);
        poly_mul_rule(e, out);
        break;
      case ExprKind::Choice:
        choice_idem(e, out);
        factor_choice(e, out);
        poly_choice_merge(e, out);
        break;
      case ExprKind::Sum:
        factor_sum(e, out);
        sum_fusion_rule(e, out);
        poly_sum_rules(e, out);
        break;
      case ExprKind::Poly:
        poly_node_rules(e, out);
        break;
      default:
        break;
    }
    return out;
  }

  void adjoint_rules(const ExprPtr& e, std::vector<Candidate>& out) {
    const ExprPtr& c = e->child;
    if (c->kind == ExprKind::Adjoint) out.push_back({RuleId::AdjInvolution, c->child});
    if (an_.hermitian(c)) out.push_back({RuleId::AdjHermitian, c});
    if (c->kind == ExprKind::Prod) {
      std::vector<ExprPtr> fs(c->factors.rbegin(), c->factors.rend());
      for (auto& f : fs) f = make_adjoint(f);
      out.push_back({RuleId::AdjProd, make_prod(std::move(fs))});
    }
    if (c->kind == ExprKind::Sum) {
      std::vector<SumTerm> ts;
      for (const auto& t : c->terms) ts.push_back({t.coeff, make_adjoint(t.child)});
      out.push_back({RuleId::AdjSum, make_sum(std::move(ts))});
    }
    if (c->kind == ExprKind::Tensor || c->kind == ExprKind::Choice) {
      std::vector<ExprPtr> fs;
      for (const auto& f : c->factors) fs.push_back(make_adjoint(f));
      out.push_back({c->kind == ExprKind::Tensor ? RuleId::AdjTensor : RuleId::AdjChoice,
                     c->kind == ExprKind::Tensor ? make_tensor(std::move(fs))
                                                 : make_choice(std::move(fs))});
    }
  }

  void prod_identity(const ExprPtr& e, std::vector<Candidate>& out) {
    if (e->factors.size() < 2) return;
    for (size_t i = 0; i < e->factors.size(); ++i) {
      if (!is_identity_expr(e->factors[i])) continue;
      std::vector<ExprPtr> fs = e->factors;
      fs.erase(fs.begin() + i);
      out.push_back({RuleId::ProdIdentity, mk_prod(std::move(fs))});
      return;
    }
  }

  void choice_idem(const ExprPtr& e, std::vector<Candidate>& out) {
    if (e->factors.size() < 2) return;
    for (size_t i = 1; i < e->factors.size(); ++i)
      if (!structurally_equal(e->factors[0], e->factors[i])) return;
    int disc = ceil_log2(static_cast<int>(e->factors.size()));
    std::vector<ExprPtr> fs;
    for (int i = 0; i < disc; ++i) fs.push_back(make_base(*find_builtin("I")));
    fs.push_back(e->factors[0]);
    out.push_back({RuleId::ChoiceIdem, make_tensor(std::move(fs))});
  }

  // Factoring out a shared leading/trailing factor from sum terms.
  void factor_sum(const ExprPtr& e, std::vector<Candidate>& out) {
    factor_sum_side(e, out, ExprKind::Prod, true, RuleId::FactorProdSumL);
    factor_sum_side(e, out, ExprKind::Prod, false, RuleId::FactorProdSumR);
    factor_sum_side(e, out, ExprKind::Tensor, true, RuleId::FactorTensorSumL);
    factor_sum_side(e, out, ExprKind::Tensor, false, RuleId::FactorTensorSumR);
  }

  void factor_sum_side(const ExprPtr& e, std::vector<Candidate>& out, ExprKind kind,
                       bool leading, RuleId rule) {
    // Group terms of the right shape by their shared edge factor.
    std::vector<std::pair<ExprPtr, std::vector<size_t>>> groups;
    std::unordered_map<uint64_t, std::vector<size_t>> buckets;
    for (size_t i = 0; i < e->terms.size(); ++i) {
      const ExprPtr& c = e->terms[i].child;
      if (c->kind != kind || c->factors.size() < 2) continue;
      const ExprPtr& edge = leading ? c->factors.front() : c->factors.back();
      bool placed = false;
      for (size_t gi : buckets[hash_(edge)])
        if (structurally_equal(groups[gi].first, edge)) {
          groups[gi].second.push_back(i);
          placed = true;
          break;
        }
      if (!placed) {
        buckets[hash_(edge)].push_back(groups.size());
        groups.push_back({edge, {i}});
      }
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
    for (const auto& [edge, members] : groups) {
      if (members.size() < 2) continue;
      double abs_sum = 0.0;
      for (size_t i : members) abs_sum += std::fabs(e->terms[i].coeff);
      if (abs_sum <= kCancelTol) continue;
      std::vector<SumTerm> inner;
      for (size_t i : members) {
        const ExprPtr& c = e->terms[i].child;
        std::vector<ExprPtr> rest(c->factors.begin() + (leading ? 1 : 0),
                                  c->factors.end() - (leading ? 0 : 1));
        ExprPtr rest_e = kind == ExprKind::Prod ? mk_prod(std::move(rest))
                                                : mk_tensor(std::move(rest));
        inner.push_back({e->terms[i].coeff, rest_e});
      }
      ExprPtr inner_sum = mk_sum_canon(std::move(inner));
      std::vector<ExprPtr> pair;
      if (leading) {
        pair = {edge, inner_sum};
      } else {
        pair = {inner_sum, edge};
      }
      ExprPtr factored = kind == ExprKind::Prod ? mk_prod(std::move(pair))
                                                : mk_tensor(std::move(pair));
      std::vector<SumTerm> terms;
      terms.push_back({1.0, factored});
      for (size_t i = 0; i < e->terms.size(); ++i)
        if (std::find(members.begin(), members.end(), i) == members.end())
          terms.push_back(e->terms[i]);
      out.push_back({rule, mk_sum_canon(std::move(terms))});
    }
  }

  void factor_choice(const ExprPtr& e, std::vector<Candidate>& out) {
    // (A.B) (+) (A.C) -> (I x A) . (B (+) C); the kron-over-choice variant
    // with a leading shared factor permutes qubits and is not emitted.
    auto try_side = [&](ExprKind kind, bool leading, RuleId rule) {
      if (e->factors.empty()) return;
      for (const auto& f : e->factors)
        if (f->kind != kind || f->factors.size() < 2) return;
      const ExprPtr& edge = leading ? e->factors[0]->factors.front()
                                    : e->factors[0]->factors.back();
      for (const auto& f : e->factors) {
        const ExprPtr& fe = leading ? f->factors.front() : f->factors.back();
        if (!structurally_equal(edge, fe)) return;
      }
      std::vector<ExprPtr> rests;
      for (const auto& f : e->factors) {
        std::vector<ExprPtr> rest(f->factors.begin() + (leading ? 1 : 0),
                                  f->factors.end() - (leading ? 0 : 1));
        rests.push_back(kind == ExprKind::Prod ? mk_prod(std::move(rest))
                                               : mk_tensor(std::move(rest)));
      }
      ExprPtr inner_choice = make_choice(std::move(rests));
      ExprPtr result;
      if (kind == ExprKind::Prod) {
        int disc = ceil_log2(static_cast<int>(e->factors.size()));
        std::vector<ExprPtr> widened;
        for (int i = 0; i < disc; ++i) widened.push_back(make_base(*find_builtin("I")));
        widened.push_back(edge);
        ExprPtr lifted = make_tensor(std::move(widened));
        result = leading ? mk_prod({lifted, inner_choice}) : mk_prod({inner_choice, lifted});
      } else {
        if (leading) return;  // unsound without a qubit permutation
        result = mk_tensor({inner_choice, edge});
      }
      out.push_back({rule, result});
    };
    try_side(ExprKind::Prod, true, RuleId::FactorChoiceProdL);
    try_side(ExprKind::Prod, false, RuleId::FactorChoiceProdR);
    try_side(ExprKind::Tensor, true, RuleId::FactorTensorChoiceL);
    try_side(ExprKind::Tensor, false, RuleId::FactorTensorChoiceR);
  }

  void sum_fusion_rule(const ExprPtr& e, std::vector<Candidate>& out) {
    // Cheap pre-checks before the full (sorting) fuse: nested sums, dropped
    // coefficients, unit single terms, or hash-detected duplicate children.
    bool plausible = e->terms.size() == 1 && e->terms[0].coeff == 1.0;
    for (const auto& t : e->terms)
      plausible = plausible || t.child->kind == ExprKind::Sum ||
                  std::fabs(t.coeff) <= kCancelTol;
    if (!plausible) {
      std::unordered_set<uint64_t> seen;
      for (const auto& t : e->terms)
        if (!seen.insert(hash_(t.child)).second) {
          plausible = true;
          break;
        }
    }
    if (!plausible) return;
    bool fired = false;
    ExprPtr fused = local_sum_fuse(e, &fired);
    if (fired) out.push_back({RuleId::SumFusion, fused});
  }

  void poly_sum_rules(const ExprPtr& e, std::vector<Candidate>& out) {
    if (auto r = poly_group_sum(e, an_, hash_))
      out.push_back({r->used_powers ? RuleId::PolyFusion : RuleId::PolyAddMerge, r->result});
  }

  void poly_mul_rule(const ExprPtr& e, std::vector<Candidate>& out) {
    if (auto r = poly_run_prod(e, an_)) out.push_back({RuleId::PolyMulMerge, *r});
  }

  void poly_choice_merge(const ExprPtr& e, std::vector<Candidate>& out) {
    if (e->factors.size() < 2) return;
    for (const auto& f : e->factors)
      if (f->kind != ExprKind::Poly) return;
    const auto& ref = e->factors[0]->coeffs;
    for (const auto& f : e->factors) {
      if (f->coeffs.size() != ref.size()) return;
      for (size_t j = 0; j < ref.size(); ++j)
        if (std::fabs(f->coeffs[j] - ref[j]) > kCancelTol) return;
    }
    std::vector<ExprPtr> bases;
    for (const auto& f : e->factors) bases.push_back(f->child);
    out.push_back({RuleId::PolyChoiceMerge, make_poly(make_choice(std::move(bases)), ref)});
  }

  void poly_node_rules(const ExprPtr& e, std::vector<Candidate>& out) {
    if (is_trivial_poly(e->coeffs)) out.push_back({RuleId::PolyFusion, e->child});
    if (e->child->kind == ExprKind::Poly) {
      std::vector<double> composed = poly_compose(e->coeffs, e->child->coeffs);
      trim_poly(composed);
      ExprPtr merged = is_trivial_poly(composed) ? e->child->child
                                                 : make_poly(e->child->child, composed);
      out.push_back({RuleId::PolyCompose, merged});
    }
  }

  Analyzer an_;
  StructuralHasher hash_;
  std::unordered_set<const Expr*> quiescent_;
  std::vector<ExprPtr> keepalive_;
};

bool is_poly_rule(RuleId id) {
  switch (id) {
    case RuleId::PolyFusion:
    case RuleId::PolyMulMerge:
    case RuleId::PolyAddMerge:
    case RuleId::PolyChoiceMerge:
    case RuleId::PolyCompose:
      return true;
    default:
      return false;
  }
}

// Returns the count of non-Adjoint nodes in the subtree. Each Adjoint
// weighs that count for everything below it, which pushing an adjoint one
// level down strictly decreases while leaving enclosing adjoint weights
// untouched (the new nodes are themselves adjoints).
long measure_rec(const ExprPtr& e, RewriteMeasure& m) {
  m.nodes += 1;
  long nonadj = 1;
  switch (e->kind) {
    case ExprKind::Base:
      m.leaves += 1;
      break;
    case ExprKind::Adjoint: {
      nonadj = measure_rec(e->child, m);
      m.adj_weight += nonadj;
      break;
    }
    case ExprKind::Poly:
      nonadj += measure_rec(e->child, m);
      break;
    case ExprKind::Sum:
      m.pcs += 1;
      for (const auto& t : e->terms) nonadj += measure_rec(t.child, m);
      break;
    case ExprKind::Prod:
    case ExprKind::Choice:
      m.pcs += 1;
      for (const auto& f : e->factors) nonadj += measure_rec(f, m);
      break;
    case ExprKind::Tensor:
      for (const auto& f : e->factors) nonadj += measure_rec(f, m);
      break;
    default:
      break;
  }
  return nonadj;
}

}  // namespace

RewriteMeasure rewrite_measure(const ExprPtr& e) {
  RewriteMeasure m;
  measure_rec(e, m);
  return m;
}

bool measure_less(const RewriteMeasure& a, const RewriteMeasure& b) {
  if (a.leaves != b.leaves) return a.leaves < b.leaves;
  if (a.adj_weight != b.adj_weight) return a.adj_weight < b.adj_weight;
  if (a.nodes != b.nodes) return a.nodes < b.nodes;
  return a.pcs < b.pcs;
}

const char* rule_name(RuleId id) {
  switch (id) {
    case RuleId::SumFusion: return "SumFusion";
    case RuleId::PolyFusion: return "PolyFusion";
    case RuleId::PolyMulMerge: return "PolyMulMerge";
    case RuleId::PolyAddMerge: return "PolyAddMerge";
    case RuleId::PolyChoiceMerge: return "PolyChoiceMerge";
    case RuleId::PolyCompose: return "PolyCompose";
    case RuleId::FactorProdSumL: return "FactorProdSumL";
    case RuleId::FactorProdSumR: return "FactorProdSumR";
    case RuleId::FactorChoiceProdL: return "FactorChoiceProdL";
    case RuleId::FactorChoiceProdR: return "FactorChoiceProdR";
    case RuleId::FactorTensorSumL: return "FactorTensorSumL";
    case RuleId::FactorTensorSumR: return "FactorTensorSumR";
    case RuleId::FactorTensorChoiceL: return "FactorTensorChoiceL";
    case RuleId::FactorTensorChoiceR: return "FactorTensorChoiceR";
    case RuleId::ChoiceIdem: return "ChoiceIdem";
    case RuleId::ProdIdentity: return "ProdIdentity";
    case RuleId::AdjHermitian: return "AdjHermitian";
    case RuleId::AdjInvolution: return "AdjInvolution";
    case RuleId::AdjProd: return "AdjProd";
    case RuleId::AdjSum: return "AdjSum";
    case RuleId::AdjTensor: return "AdjTensor";
    case RuleId::AdjChoice: return "AdjChoice";
  }
  return "?";
}

ExprPtr sum_fuse(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Adjoint:
      return make_adjoint(sum_fuse(e->child));
    case ExprKind::Poly:
      return make_poly(sum_fuse(e->child), e->coeffs);
    case ExprKind::Sum: {
      std::vector<SumTerm> ts;
      for (const auto& t : e->terms) ts.push_back({t.coeff, sum_fuse(t.child)});
      ExprPtr flat = make_sum(std::move(ts));
      bool fired = true;
      while (fired && flat->kind == ExprKind::Sum) flat = local_sum_fuse(flat, &fired);
      return flat;
    }
    case ExprKind::Prod:
    case ExprKind::Choice:
    case ExprKind::Tensor: {
      std::vector<ExprPtr> fs;
      for (const auto& f : e->factors) fs.push_back(sum_fuse(f));
      if (e->kind == ExprKind::Prod) return make_prod(std::move(fs));
      if (e->kind == ExprKind::Choice) return make_choice(std::move(fs));
      return make_tensor(std::move(fs));
    }
    default:
      return e;
  }
}

ExprPtr poly_fuse(const ExprPtr& e, const AnalysisContext& ctx) {
  Analyzer an(ctx);
  StructuralHasher hash;
  std::function<ExprPtr(const ExprPtr&)> walk = [&](const ExprPtr& x) -> ExprPtr {
    ExprPtr cur = x;
    switch (cur->kind) {
      case ExprKind::Adjoint:
        cur = make_adjoint(walk(cur->child));
        break;
      case ExprKind::Poly:
        cur = make_poly(walk(cur->child), cur->coeffs);
        break;
      case ExprKind::Sum: {
        std::vector<SumTerm> ts;
        for (const auto& t : cur->terms) ts.push_back({t.coeff, walk(t.child)});
        cur = make_sum(std::move(ts));
        break;
      }
      case ExprKind::Prod:
      case ExprKind::Choice:
      case ExprKind::Tensor: {
        std::vector<ExprPtr> fs;
        for (const auto& f : cur->factors) fs.push_back(walk(f));
        if (cur->kind == ExprKind::Prod)
          cur = make_prod(std::move(fs));
        else if (cur->kind == ExprKind::Choice)
          cur = make_choice(std::move(fs));
        else
          cur = make_tensor(std::move(fs));
        break;
      }
      default:
        return cur;
    }
    bool progress = true;
    while (progress) {
      progress = false;
      if (cur->kind == ExprKind::Sum) {
        if (auto r = poly_group_sum(cur, an, hash)) {
          cur = r->result;
          progress = true;
          continue;
        }
      }
      if (cur->kind == ExprKind::Prod) {
        if (auto r = poly_run_prod(cur, an)) {
          cur = *r;
          progress = true;
          continue;
        }
      }
      if (cur->kind == ExprKind::Poly) {
        if (is_trivial_poly(cur->coeffs)) {
          cur = cur->child;
          progress = true;
          continue;
        }
        if (cur->child->kind == ExprKind::Poly) {
          std::vector<double> composed = poly_compose(cur->coeffs, cur->child->coeffs);
          trim_poly(composed);
          cur = is_trivial_poly(composed) ? cur->child->child
                                          : make_poly(cur->child->child, composed);
          progress = true;
          continue;
        }
      }
    }
    return cur;
  };
  return walk(e);
}

namespace {

bool contains_choice(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Choice:
      return true;
    case ExprKind::Adjoint:
    case ExprKind::Poly:
      return contains_choice(e->child);
    case ExprKind::Sum:
      for (const auto& t : e->terms)
        if (contains_choice(t.child)) return true;
      return false;
    case ExprKind::Prod:
    case ExprKind::Tensor:
      for (const auto& f : e->factors)
        if (contains_choice(f)) return true;
      return false;
    default:
      return false;
  }
}

// Rules that can alter a subexpression's subnormalization or rebuild a
// Choice, and so may invalidate a T-Choice side condition up the tree.
bool may_break_typing(RuleId id) {
  switch (id) {
    case RuleId::SumFusion:
    case RuleId::PolyFusion:
    case RuleId::PolyAddMerge:
    case RuleId::PolyMulMerge:
    case RuleId::PolyCompose:
    case RuleId::PolyChoiceMerge:
    case RuleId::FactorChoiceProdL:
    case RuleId::FactorChoiceProdR:
    case RuleId::FactorTensorChoiceL:
    case RuleId::FactorTensorChoiceR:
      return true;
    default:
      return false;
  }
}

}  // namespace

RewriteResult apply_rules(const TypedExpr& e) {
  Rewriter rw(e.ctx);
  Analyzer& an = rw.analyzer();
  an.type_of(e.expr);

  RewriteResult result;
  result.expr = e.expr;
  const long step_limit = 10L * node_count(e.expr) * 22;
  CostReport current_cost = an.cost(e.expr);
  RewriteMeasure current_measure = rewrite_measure(e.expr);
  const bool has_choice = contains_choice(e.expr);

  long steps = 0;
  while (true) {
    CostReport before = current_cost;
    auto accept = [&](RuleId rule, const ExprPtr& new_root) {
      if (has_choice && may_break_typing(rule)) {
        try {
          Analyzer probe(e.ctx);
          probe.type_of(new_root);
        } catch (const Error& err) {
          if (err.kind() == ErrorKind::AllTermsCancel) throw;
          return false;
        }
      }
      if (is_poly_rule(rule)) {
        CostReport after = an.cost(new_root);
        if (after.queries > before.queries + 1e-9) return false;
        if (after.total > before.total + 1e-9 * std::max(1.0, before.total)) return false;
      }
      return true;
    };
    auto next = rw.step(result.expr, accept);
    if (!next) break;
    if (++steps > step_limit)
      throw Error(ErrorKind::StepLimitExceeded,
                  "rewrite exceeded " + std::to_string(step_limit) + " steps");
    result.expr = next->first;
    RewriteMeasure m = rewrite_measure(result.expr);
    if (!measure_less(m, current_measure))
      throw Error(ErrorKind::StepLimitExceeded,
                  std::string("rewrite measure failed to decrease under rule ") +
                      rule_name(next->second.rule) + " at " + next->second.path +
                      " [leaves " + std::to_string(current_measure.leaves) + "->" +
                      std::to_string(m.leaves) + ", adj " +
                      std::to_string(current_measure.adj_weight) + "->" +
                      std::to_string(m.adj_weight) + ", nodes " +
                      std::to_string(current_measure.nodes) + "->" +
                      std::to_string(m.nodes) + "]: " + print_expr(result.expr));
    current_measure = m;
    CostReport after = an.cost(result.expr);
    next->second.before = before;
    next->second.after = after;
    current_cost = after;
    result.trace.steps.push_back(std::move(next->second));
  }
  return result;
}

}  // namespace cobble
