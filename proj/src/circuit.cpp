#include "cobble/circuit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include "cobble/error.hpp"

namespace cobble {

namespace {

constexpr double kQsvtRescale = 1.0 - 1e-6;

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

double next_angle(std::mt19937_64& rng) {
  return 2.0 * M_PI * ((rng() >> 11) * 0x1.0p-53) - M_PI;
}

struct Span {
  int first = 0;
  int size = 0;
  int operator[](int i) const { return first + i; }
  Span prefix(int n) const { return {first, n}; }
  Span drop(int n) const { return {first + n, size - n}; }
};

class Emitter {
 public:
  Emitter(Analyzer& an, const CompileOptions& opts, int n_anc)
      : an_(an), opts_(opts), claims_(n_anc) {}

  std::vector<Gate> take_gates() { return std::move(gates_); }

  const std::vector<std::pair<std::string, RegisterKind>>& claims() const { return claims_; }

  // Subnormalization the emitted fragment actually realizes; differs from
  // the model only by the QSVT solver rescale margin.
  double realized_alpha(const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::Base:
        return e->oracle.subnorm;
      case ExprKind::Adjoint:
        return realized_alpha(e->child);
      case ExprKind::Sum: {
        double a = 0.0;
        for (const auto& t : e->terms) a += std::fabs(t.coeff) * realized_alpha(t.child);
        return a;
      }
      case ExprKind::Prod:
      case ExprKind::Tensor: {
        double a = 1.0;
        for (const auto& f : e->factors) a *= realized_alpha(f);
        return a;
      }
      case ExprKind::Choice:
        return realized_alpha(e->factors[0]);
      case ExprKind::Poly: {
        double base = realized_alpha(e->child);
        PolySpec p{e->coeffs};
        switch (an_.method_for(e, opts_.method)) {
          case PolyMethod::QSVT: {
            ParitySplit parts = split_parity(p);
            double a = 0.0;
            for (const PolySpec* part : {&parts.even, &parts.odd})
              if (!part->is_zero()) a += linf_norm(*part, base) / kQsvtRescale;
            return a;
          }
          default:
            return l1_norm(p, base);
        }
      }
      default:
        throw Error(ErrorKind::InternalArity, "unexpected expression kind in emitter");
    }
  }

  void emit(const ExprPtr& e, Span anc, Span data) {
    switch (e->kind) {
      case ExprKind::Base:
        emit_base(e, anc, data);
        break;
      case ExprKind::Adjoint: {
        size_t mark = gates_.size();
        emit(e->child, anc, data);
        dagger_range(mark);
        break;
      }
      case ExprKind::Sum:
        emit_sum(e, anc, data);
        break;
      case ExprKind::Prod:
        emit_prod(e, anc, data);
        break;
      case ExprKind::Choice:
        emit_choice(e, anc, data);
        break;
      case ExprKind::Tensor:
        emit_tensor(e, anc, data);
        break;
      case ExprKind::Poly:
        emit_poly(e, anc, data);
        break;
      default:
        throw Error(ErrorKind::InternalArity, "unexpected expression kind in emitter");
    }
  }

 private:
  void claim(Span s, const std::string& name, RegisterKind kind) {
    for (int i = 0; i < s.size; ++i)
      if (claims_[s[i]].first.empty()) claims_[s[i]] = {name, kind};
  }

  void push_gate(Gate g) {
    g.controls.insert(g.controls.end(), ctx_.begin(), ctx_.end());
    gates_.push_back(std::move(g));
  }

  void g1(GateKind k, int q, double angle = 0.0) {
    Gate g;
    g.kind = k;
    g.targets = {q};
    g.angle = angle;
    push_gate(std::move(g));
  }

  void g1_extra(GateKind k, int q, double angle, const std::vector<Control>& extra) {
    Gate g;
    g.kind = k;
    g.targets = {q};
    g.angle = angle;
    g.controls = extra;
    push_gate(std::move(g));
  }

  void dagger_range(size_t mark) {
    std::reverse(gates_.begin() + mark, gates_.end());
    for (size_t i = mark; i < gates_.size(); ++i) {
      Gate& g = gates_[i];
      switch (g.kind) {
        case GateKind::Ry:
        case GateKind::Rz:
          g.angle = -g.angle;
          break;
        case GateKind::Oracle:
          g.dagger = !g.dagger;
          break;
        default:
          break;  // H, X, Z, CX are involutions
      }
    }
  }

  static std::vector<Control> pattern_controls(Span sel, int value) {
    std::vector<Control> cs;
    cs.reserve(sel.size);
    for (int b = 0; b < sel.size; ++b) {
      bool bit = (value >> (sel.size - 1 - b)) & 1;
      cs.push_back({sel[b], bit});
    }
    return cs;
  }

  void push_pattern(Span sel, int value) {
    auto cs = pattern_controls(sel, value);
    ctx_.insert(ctx_.end(), cs.begin(), cs.end());
  }

  void pop_controls(size_t n) { ctx_.resize(ctx_.size() - n); }

  void emit_base(const ExprPtr& e, Span anc, Span data) {
    const OracleDecl& d = e->oracle;
    Span own = anc.prefix(d.ancillas);
    if (!d.builtin) claim(own, "orc_" + d.name + "_anc", RegisterKind::Ancilla);
    Gate g;
    g.kind = GateKind::Oracle;
    g.oracle = d.name;
    for (int i = 0; i < own.size; ++i) g.targets.push_back(own[i]);
    for (int i = 0; i < d.n_qubits; ++i) g.targets.push_back(data[i]);
    push_gate(std::move(g));
  }

  // Uniformly controlled Ry tree realizing amplitudes sqrt(w_j / W).
  // Returns the emitted gate range so callers can append the inverse.
  std::pair<size_t, size_t> emit_prepare(Span sel, const std::vector<double>& weights) {
    size_t start = gates_.size();
    for (int level = 0; level < sel.size; ++level) {
      int groups = 1 << level;
      int span = 1 << (sel.size - level);
      for (int g = 0; g < groups; ++g) {
        double w_sub = 0.0, w_left = 0.0;
        for (int i = 0; i < span; ++i) {
          double w = weights[g * span + i];
          w_sub += w;
          if (i < span / 2) w_left += w;
        }
        if (w_sub <= 0.0) continue;
        double ratio = std::clamp(w_left / w_sub, 0.0, 1.0);
        double theta = 2.0 * std::acos(std::sqrt(ratio));
        g1_extra(GateKind::Ry, sel[level], theta,
                 pattern_controls(sel.prefix(level), g));
      }
    }
    return {start, gates_.size()};
  }

  void emit_unprepare(std::pair<size_t, size_t> range) {
    std::vector<Gate> copy(gates_.begin() + range.first, gates_.begin() + range.second);
    std::reverse(copy.begin(), copy.end());
    for (Gate& g : copy) {
      g.angle = -g.angle;
      gates_.push_back(std::move(g));
    }
  }

  // Phase flip of exactly the |value> selector branch (under ctx_ only).
  void emit_branch_flip(Span sel, int value, Span data) {
    if (sel.size == 0) {
      // Global -1 within the enclosing controls: (ZX)^2 = -I.
      int q = data[0];
      for (int rep = 0; rep < 2; ++rep) {
        g1(GateKind::X, q);
        g1(GateKind::Z, q);
      }
      return;
    }
    int target = -1;
    for (int b = sel.size - 1; b >= 0; --b)
      if ((value >> (sel.size - 1 - b)) & 1) {
        target = b;
        break;
      }
    if (target >= 0) {
      std::vector<Control> cs;
      for (int b = 0; b < sel.size; ++b) {
        if (b == target) continue;
        cs.push_back({sel[b], ((value >> (sel.size - 1 - b)) & 1) != 0});
      }
      g1_extra(GateKind::Z, sel[target], 0.0, cs);
      return;
    }
    // value == 0: conjugate by X on the last selector qubit.
    int q = sel.size - 1;
    g1(GateKind::X, sel[q]);
    std::vector<Control> cs;
    for (int b = 0; b < sel.size - 1; ++b) cs.push_back({sel[b], false});
    g1_extra(GateKind::Z, sel[q], 0.0, cs);
    g1(GateKind::X, sel[q]);
  }

  void emit_sum(const ExprPtr& e, Span anc, Span data) {
    int n = static_cast<int>(e->terms.size());
    int sel_bits = ceil_log2(n);
    Span sel = anc.prefix(sel_bits);
    Span pool = anc.drop(sel_bits);
    claim(sel, "sum_sel_" + std::to_string(sum_id_++), RegisterKind::Selector);
    std::vector<double> weights(static_cast<size_t>(1) << sel_bits, 0.0);
    for (int j = 0; j < n; ++j)
      weights[j] = std::fabs(e->terms[j].coeff) * realized_alpha(e->terms[j].child);

    auto prep = emit_prepare(sel, weights);
    for (int j = 0; j < n; ++j) {
      if (e->terms[j].coeff < 0.0) emit_branch_flip(sel, j, data);
      push_pattern(sel, j);
      int m = an_.cost(e->terms[j].child, opts_.method).ancillas;
      emit(e->terms[j].child, pool.prefix(m), data);
      pop_controls(sel.size);
    }
    emit_unprepare(prep);
  }

  // Ripple increment: flip bit k (MSB first) when all lower bits are 1.
  void emit_increment(Span ctr, const std::vector<Control>& extra) {
    for (int k = 0; k < ctr.size; ++k) {
      std::vector<Control> cs = extra;
      for (int b = k + 1; b < ctr.size; ++b) cs.push_back({ctr[b], true});
      g1_extra(GateKind::X, ctr[k], 0.0, cs);
    }
  }

  void emit_decrement(Span ctr, const std::vector<Control>& extra) {
    for (int k = ctr.size - 1; k >= 0; --k) {
      std::vector<Control> cs = extra;
      for (int b = k + 1; b < ctr.size; ++b) cs.push_back({ctr[b], true});
      g1_extra(GateKind::X, ctr[k], 0.0, cs);
    }
  }

  // Factors execute right to left over a shared ancilla pool; an
  // anti-controlled counter increment between factors and a final
  // subtraction by n-1 guarantee intermediate post-selection.
  void emit_prod_factors(const std::vector<ExprPtr>& factors, Span anc, Span data) {
    int n = static_cast<int>(factors.size());
    int ctr_bits = ceil_log2(n);
    Span ctr = anc.prefix(ctr_bits);
    Span pool = anc.drop(ctr_bits);
    if (ctr_bits > 0) claim(ctr, "prod_ctr_" + std::to_string(prod_id_++), RegisterKind::Counter);
    int pool_width = 0;
    for (const auto& f : factors)
      pool_width = std::max(pool_width, an_.cost(f, opts_.method).ancillas);
    std::vector<Control> anti_pool;
    for (int i = 0; i < pool_width; ++i) anti_pool.push_back({pool[i], false});

    for (int i = n - 1; i >= 0; --i) {
      int m = an_.cost(factors[i], opts_.method).ancillas;
      emit(factors[i], pool.prefix(m), data);
      if (i > 0) emit_increment(ctr, anti_pool);
    }
    for (int rep = 0; rep < n - 1; ++rep) emit_decrement(ctr, {});
  }

  void emit_prod(const ExprPtr& e, Span anc, Span data) {
    emit_prod_factors(e->factors, anc, data);
  }

  void emit_choice(const ExprPtr& e, Span anc, Span data) {
    int n = static_cast<int>(e->factors.size());
    int disc_bits = ceil_log2(n);
    Span disc{data.first, disc_bits};
    Span inner{data.first + disc_bits, data.size - disc_bits};
    for (int j = 0; j < n; ++j) {
      push_pattern(disc, j);
      int m = an_.cost(e->factors[j], opts_.method).ancillas;
      emit(e->factors[j], anc.prefix(m), inner);
      pop_controls(disc.size);
    }
  }

  void emit_tensor(const ExprPtr& e, Span anc, Span data) {
    int aoff = 0, doff = 0;
    for (const auto& f : e->factors) {
      int m = an_.cost(f, opts_.method).ancillas;
      int nq = an_.type_of(f).n_qubits;
      emit(f, Span{anc.first + aoff, m}, Span{data.first + doff, nq});
      aoff += m;
      doff += nq;
    }
  }

  void emit_poly(const ExprPtr& e, Span anc, Span data) {
    PolyMethod method = an_.method_for(e, opts_.method);
    if (method == PolyMethod::GQET)
      throw Error(ErrorKind::QsvtInadmissible, "GQET is costed but never compiled");
    switch (method) {
      case PolyMethod::QSVT:
        emit_poly_qsvt(e, anc, data);
        break;
      case PolyMethod::LCU:
        emit_poly_lcu(e, anc, data);
        break;
      case PolyMethod::Horner:
        emit_poly_horner(e, anc, data);
        break;
      default:
        break;
    }
    claim(anc, "poly_pad_" + std::to_string(pad_id_++), RegisterKind::Ancilla);
  }

  PhaseSequence solve_part(const PolySpec& target) {
    auto t0 = std::chrono::steady_clock::now();
    PhaseSequence phi = solve_phases(target, opts_.qsp_tol);
    if (opts_.stats) {
      opts_.stats->solver_seconds +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      opts_.stats->solver_calls += 1;
      opts_.stats->phases.push_back(phi);
    }
    return phi;
  }

  // One fixed-parity QSVT template instance realizing part(alpha_base x)
  // rescaled to the solver margin; block = target(encoded base block).
  void emit_qsvt_part(const PolySpec& part, const ExprPtr& base, int qsvt_q, Span pool,
                      Span data, double base_alpha) {
    double norm = linf_norm(part, base_alpha);
    PolySpec target;
    target.coeffs.resize(part.coeffs.size());
    double scale = kQsvtRescale / norm, pw = 1.0;
    for (size_t j = 0; j < part.coeffs.size(); ++j) {
      target.coeffs[j] = part.coeffs[j] * pw * scale;
      pw *= base_alpha;
    }
    PhaseSequence phi = solve_part(target);
    int d = static_cast<int>(phi.angles.size()) - 1;
    int base_m = an_.cost(base, opts_.method).ancillas;

    std::vector<Control> anti_pool;
    for (int i = 0; i < base_m; ++i) anti_pool.push_back({pool[i], false});
    auto sandwich = [&](double theta) {
      g1_extra(GateKind::X, qsvt_q, 0.0, anti_pool);
      g1(GateKind::Rz, qsvt_q, theta);
      g1_extra(GateKind::X, qsvt_q, 0.0, anti_pool);
    };

    g1(GateKind::H, qsvt_q);
    if (d == 0) {
      sandwich(2.0 * phi.angles[0]);
    } else {
      sandwich(2.0 * phi.angles[d] - M_PI / 2.0);
      for (int i = 1; i <= d; ++i) {
        size_t mark = gates_.size();
        emit(base, pool.prefix(base_m), data);
        if (i % 2 == 0) dagger_range(mark);
        if (i < d)
          sandwich(2.0 * phi.angles[d - i] - M_PI);
        else
          sandwich(2.0 * phi.angles[0] - M_PI / 2.0 + d * M_PI);
      }
    }
    g1(GateKind::H, qsvt_q);
  }

  void emit_poly_qsvt(const ExprPtr& e, Span anc, Span data) {
    double base_alpha = realized_alpha(e->child);
    ParitySplit parts = split_parity(PolySpec{e->coeffs});
    std::vector<const PolySpec*> live;
    for (const PolySpec* part : {&parts.even, &parts.odd})
      if (!part->is_zero()) live.push_back(part);
    if (live.empty())
      throw Error(ErrorKind::QsvtInadmissible, "cannot compile the zero polynomial");

    if (live.size() == 1) {
      int qsvt_q = anc[0];
      claim(anc.prefix(1), "qsvt_anc_" + std::to_string(qsvt_id_++), RegisterKind::Qsvt);
      emit_qsvt_part(*live[0], e->child, qsvt_q, anc.drop(1), data, base_alpha);
      return;
    }
    // Mixed parity: a two-branch sum of the even and odd templates sharing
    // the QSVT ancilla and base pool.
    Span sel = anc.prefix(1);
    claim(sel, "sum_sel_" + std::to_string(sum_id_++), RegisterKind::Selector);
    int qsvt_q = anc[1];
    claim(Span{anc[1], 1}, "qsvt_anc_" + std::to_string(qsvt_id_++), RegisterKind::Qsvt);
    Span pool = anc.drop(2);
    double w_even = linf_norm(parts.even, base_alpha) / kQsvtRescale;
    double w_odd = linf_norm(parts.odd, base_alpha) / kQsvtRescale;
    auto prep = emit_prepare(sel, {w_even, w_odd});
    for (int j = 0; j < 2; ++j) {
      push_pattern(sel, j);
      emit_qsvt_part(j == 0 ? parts.even : parts.odd, e->child, qsvt_q, pool, data, base_alpha);
      pop_controls(1);
    }
    emit_unprepare(prep);
  }

  void emit_poly_lcu(const ExprPtr& e, Span anc, Span data) {
    PolySpec p{e->coeffs};
    double base_alpha = realized_alpha(e->child);
    int base_m = an_.cost(e->child, opts_.method).ancillas;
    std::vector<int> exps;
    for (int j = 0; j < static_cast<int>(p.coeffs.size()); ++j)
      if (std::fabs(p.coeffs[j]) > kCoeffZeroTol) exps.push_back(j);
    int n = static_cast<int>(exps.size());
    int sel_bits = ceil_log2(n);
    int ctr_bits = 0;
    for (int j : exps) ctr_bits = std::max(ctr_bits, ceil_log2(j));
    Span sel = anc.prefix(sel_bits);
    if (sel_bits > 0) claim(sel, "sum_sel_" + std::to_string(sum_id_++), RegisterKind::Selector);
    Span rest = anc.drop(sel_bits + ctr_bits);

    std::vector<double> weights(static_cast<size_t>(1) << sel_bits, 0.0);
    for (int idx = 0; idx < n; ++idx)
      weights[idx] = std::fabs(p.coeffs[exps[idx]]) * std::pow(base_alpha, exps[idx]);

    auto prep = emit_prepare(sel, weights);
    for (int idx = 0; idx < n; ++idx) {
      int j = exps[idx];
      if (p.coeffs[j] < 0.0) emit_branch_flip(sel, idx, data);
      push_pattern(sel, idx);
      if (j > 0) {
        std::vector<ExprPtr> copies(static_cast<size_t>(j), e->child);
        emit_prod_factors(copies, Span{anc.first + sel_bits, ctr_bits + base_m}, data);
      }
      pop_controls(sel.size);
    }
    emit_unprepare(prep);
    (void)rest;
  }

  void emit_poly_horner(const ExprPtr& e, Span anc, Span data) {
    PolySpec p{e->coeffs};
    int d = p.degree();
    double base_alpha = realized_alpha(e->child);
    int base_m = an_.cost(e->child, opts_.method).ancillas;
    if (d == 0) {
      if (p.coeffs[0] < 0.0) emit_branch_flip(Span{0, 0}, 0, data);
      return;
    }
    // Level k realizes E_k = E_{k-1} * M + a_{d-k} I (E_0 = a_d M absorbed
    // into level 1). Outer levels own lower ancilla indices so each inner
    // footprint is a contiguous suffix ending at the base pool.
    struct Level {
      double add_coeff = 0.0;
      bool has_add = false;
      int offset = 0;  // first own ancilla qubit (within anc)
      int width = 0;
    };
    std::vector<Level> levels(static_cast<size_t>(d) + 1);
    int off = 0;
    for (int k = d; k >= 1; --k) {
      Level& lv = levels[k];
      lv.add_coeff = p.coeffs[d - k];
      lv.has_add = std::fabs(lv.add_coeff) > kCoeffZeroTol;
      lv.width = (k >= 2 ? 1 : 0) + (lv.has_add ? 1 : 0);
      lv.offset = off;
      off += lv.width;
    }
    int pool_off = off;

    // realized alpha of E_k
    std::vector<double> alphas(static_cast<size_t>(d) + 1, 0.0);
    alphas[1] = std::fabs(p.coeffs[d]) * base_alpha +
                (levels[1].has_add ? std::fabs(levels[1].add_coeff) : 0.0);
    for (int k = 2; k <= d; ++k)
      alphas[k] = alphas[k - 1] * base_alpha +
                  (levels[k].has_add ? std::fabs(levels[k].add_coeff) : 0.0);

    // Footprint of E_k: its own qubits through the end of the base pool.
    auto footprint_first = [&](int k) { return anc.first + levels[k].offset; };
    int footprint_end = anc.first + pool_off + base_m;
    Span pool{anc.first + pool_off, base_m};

    std::function<void(int)> emit_level = [&](int k) {
      const Level& lv = levels[k];
      if (k == 1) {
        if (!lv.has_add) {
          if (p.coeffs[d] < 0.0) emit_branch_flip(Span{0, 0}, 0, data);
          emit(e->child, pool, data);
          return;
        }
        Span sel{anc.first + lv.offset, 1};
        claim(sel, "sum_sel_" + std::to_string(sum_id_++), RegisterKind::Selector);
        auto prep = emit_prepare(sel, {std::fabs(p.coeffs[d]) * base_alpha,
                                       std::fabs(lv.add_coeff)});
        if (p.coeffs[d] < 0.0) emit_branch_flip(sel, 0, data);
        push_pattern(sel, 0);
        emit(e->child, pool, data);
        pop_controls(1);
        if (lv.add_coeff < 0.0) emit_branch_flip(sel, 1, data);
        emit_unprepare(prep);
        return;
      }
      // Product part: E_{k-1} * M with one counter qubit, anti-controlled
      // on the inner footprint.
      int ctr_q = anc.first + lv.offset + (lv.has_add ? 1 : 0);
      auto product = [&]() {
        claim(Span{ctr_q, 1}, "prod_ctr_" + std::to_string(prod_id_++), RegisterKind::Counter);
        std::vector<Control> anti;
        for (int q = footprint_first(k - 1); q < footprint_end; ++q) anti.push_back({q, false});
        emit(e->child, pool, data);
        g1_extra(GateKind::X, ctr_q, 0.0, anti);
        emit_level(k - 1);
        g1(GateKind::X, ctr_q);
      };
      if (!lv.has_add) {
        product();
        return;
      }
      Span sel{anc.first + lv.offset, 1};
      claim(sel, "sum_sel_" + std::to_string(sum_id_++), RegisterKind::Selector);
      auto prep = emit_prepare(sel, {alphas[k - 1] * base_alpha, std::fabs(lv.add_coeff)});
      push_pattern(sel, 0);
      product();
      pop_controls(1);
      if (lv.add_coeff < 0.0) emit_branch_flip(sel, 1, data);
      emit_unprepare(prep);
    };
    emit_level(d);
  }

  Analyzer& an_;
  const CompileOptions& opts_;
  std::vector<Gate> gates_;
  std::vector<Control> ctx_;
  std::vector<std::pair<std::string, RegisterKind>> claims_;
  int sum_id_ = 0, prod_id_ = 0, qsvt_id_ = 0, pad_id_ = 0;
};

void collect_oracles(const ExprPtr& e, std::map<std::string, OracleDecl>& out) {
  switch (e->kind) {
    case ExprKind::Base:
      out.emplace(e->oracle.name, e->oracle);
      break;
    case ExprKind::Adjoint:
    case ExprKind::Poly:
      collect_oracles(e->child, out);
      break;
    case ExprKind::Sum:
      for (const auto& t : e->terms) collect_oracles(t.child, out);
      break;
    case ExprKind::Prod:
    case ExprKind::Choice:
    case ExprKind::Tensor:
      for (const auto& f : e->factors) collect_oracles(f, out);
      break;
    default:
      break;
  }
}

std::map<std::string, std::string> commute_classes(
    const std::map<std::string, OracleDecl>& oracles,
    const std::vector<std::pair<ExprPtr, ExprPtr>>& commutes) {
  std::map<std::string, std::string> parent;
  for (const auto& [name, decl] : oracles) parent[name] = name;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (const auto& [l, r] : commutes) {
    if (l->kind != ExprKind::Base || r->kind != ExprKind::Base) continue;
    if (l->oracle.builtin || r->oracle.builtin) continue;
    if (!parent.count(l->name) || !parent.count(r->name)) continue;
    std::string a = find(l->name), b = find(r->name);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<std::string, std::string> out;
  for (const auto& [name, decl] : oracles) out[name] = find(name);
  return out;
}

}  // namespace

Circuit compile(const TypedExpr& e, const CompileOptions& opts) {
  Analyzer an(e.ctx);
  an.type_of(e.expr);
  CostReport model = an.cost(e.expr, opts.method);
  int n_anc = model.ancillas;
  int n_data = an.type_of(e.expr).n_qubits;

  Emitter em(an, opts, n_anc);
  double realized = em.realized_alpha(e.expr);
  em.emit(e.expr, Span{0, n_anc}, Span{n_anc, n_data});

  Circuit c;
  c.n_qubits = n_anc + n_data;
  c.n_data = n_data;
  c.gates = em.take_gates();
  c.predicted = {model.queries, realized, model.ancillas, model.queries * realized};

  // Coalesce per-qubit claims into registers; duplicate names get suffixed.
  const auto& claims = em.claims();
  std::map<std::string, int> seen;
  int q = 0;
  while (q < n_anc) {
    std::string name = claims[q].first.empty() ? "anc_pad" : claims[q].first;
    RegisterKind kind = claims[q].first.empty() ? RegisterKind::Ancilla : claims[q].second;
    int start = q;
    while (q < n_anc && claims[q].first == claims[start].first) ++q;
    int count = ++seen[name];
    std::string unique = count == 1 ? name : name + "_" + std::to_string(count);
    c.registers.push_back({unique, start, q - start, kind});
    c.postselect.push_back(unique);
  }
  c.registers.push_back({"data", n_anc, n_data, RegisterKind::Data});

  collect_oracles(e.expr, c.oracles);
  c.commute_class = commute_classes(c.oracles, e.ctx.commutes);
  return c;
}

double count_queries(const Circuit& c) {
  double n = 0.0;
  for (const auto& g : c.gates)
    if (g.kind == GateKind::Oracle) n += 1.0;
  return n;
}

Circuit build_qsvt(const Circuit& base, const PhaseSequence& phi) {
  int d = static_cast<int>(phi.angles.size()) - 1;
  int base_anc = base.n_qubits - base.n_data;
  Circuit c;
  c.n_qubits = base.n_qubits + 1;
  c.n_data = base.n_data;
  c.oracles = base.oracles;
  c.commute_class = base.commute_class;
  c.registers.push_back({"qsvt_anc_0", 0, 1, RegisterKind::Qsvt});
  c.postselect.push_back("qsvt_anc_0");
  for (const auto& r : base.registers) {
    Register shifted = r;
    shifted.first += 1;
    if (shifted.name == "qsvt_anc_0") shifted.name = "qsvt_anc_0_2";
    c.registers.push_back(shifted);
    if (r.kind != RegisterKind::Data) c.postselect.push_back(shifted.name);
  }

  auto shifted_base = [&](bool dag) {
    std::vector<Gate> gs = base.gates;
    for (Gate& g : gs) {
      for (int& t : g.targets) t += 1;
      for (Control& ctl : g.controls) ctl.qubit += 1;
    }
    if (dag) gs = dagger_gates(std::move(gs));
    return gs;
  };
  std::vector<Control> anti_pool;
  for (int i = 0; i < base_anc; ++i) anti_pool.push_back({1 + i, false});
  auto sandwich = [&](double theta) {
    Gate cx1{GateKind::X, {0}, anti_pool, 0.0, "", false};
    Gate rz{GateKind::Rz, {0}, {}, theta, "", false};
    c.gates.push_back(cx1);
    c.gates.push_back(rz);
    c.gates.push_back(cx1);
  };

  c.gates.push_back({GateKind::H, {0}, {}, 0.0, "", false});
  if (d == 0) {
    sandwich(2.0 * phi.angles[0]);
  } else {
    sandwich(2.0 * phi.angles[d] - M_PI / 2.0);
    for (int i = 1; i <= d; ++i) {
      auto gs = shifted_base(i % 2 == 0);
      c.gates.insert(c.gates.end(), gs.begin(), gs.end());
      if (i < d)
        sandwich(2.0 * phi.angles[d - i] - M_PI);
      else
        sandwich(2.0 * phi.angles[0] - M_PI / 2.0 + d * M_PI);
    }
  }
  c.gates.push_back({GateKind::H, {0}, {}, 0.0, "", false});
  c.predicted = make_cost(d * base.predicted.queries, base.predicted.subnorm,
                          base.predicted.ancillas + 1);
  return c;
}

std::vector<Gate> dagger_gates(std::vector<Gate> gates) {
  std::reverse(gates.begin(), gates.end());
  for (Gate& g : gates) {
    switch (g.kind) {
      case GateKind::Ry:
      case GateKind::Rz:
        g.angle = -g.angle;
        break;
      case GateKind::Oracle:
        g.dagger = !g.dagger;
        break;
      default:
        break;
    }
  }
  return gates;
}

std::vector<Gate> oracle_instance_gates(const OracleDecl& d, const std::string& class_key,
                                        uint64_t seed) {
  if (d.builtin) {
    if (d.name == "I") return {};
    if (d.name == "X") return {{GateKind::X, {0}, {}, 0.0, "", false}};
    if (d.name == "Z") return {{GateKind::Z, {0}, {}, 0.0, "", false}};
    if (d.name == "H") return {{GateKind::H, {0}, {}, 0.0, "", false}};
    if (d.name == "Y")
      return {{GateKind::X, {0}, {}, 0.0, "", false},
              {GateKind::Rz, {0}, {}, M_PI, "", false}};
    throw Error(ErrorKind::UnknownIdentifier, "unknown builtin oracle " + d.name);
  }
  int q = d.n_qubits + d.ancillas;
  bool in_class = class_key != d.name;
  std::mt19937_64 frame_rng(fnv1a(in_class ? class_key : d.name) ^ (seed * 0x9e3779b97f4a7c15ull));
  std::mt19937_64 local_rng(fnv1a(d.name + "#local") ^ (seed * 0xc2b2ae3d27d4eb4full));

  std::vector<Gate> frame;
  for (int i = 0; i < q; ++i) {
    frame.push_back({GateKind::Ry, {i}, {}, next_angle(frame_rng), "", false});
    frame.push_back({GateKind::Rz, {i}, {}, next_angle(frame_rng), "", false});
  }
  for (int i = 0; i + 1 < q; ++i) frame.push_back({GateKind::CX, {i, i + 1}, {}, 0.0, "", false});

  if (!d.hermitian && !in_class) {
    // Unconstrained: a second rotation layer completes a generic unitary.
    std::vector<Gate> gs = frame;
    for (int i = 0; i < q; ++i) {
      gs.push_back({GateKind::Ry, {i}, {}, next_angle(local_rng), "", false});
      gs.push_back({GateKind::Rz, {i}, {}, next_angle(local_rng), "", false});
    }
    return gs;
  }

  // Shared-frame diagonal form V D V^dagger: declared-commuting oracles use
  // one frame per class, hermitian oracles a +-1 diagonal.
  std::vector<Gate> diag;
  if (d.hermitian) {
    uint64_t bits = local_rng();
    bool any = false;
    for (int i = 0; i < q; ++i)
      if ((bits >> i) & 1) {
        diag.push_back({GateKind::Z, {i}, {}, 0.0, "", false});
        any = true;
      }
    if (!any) diag.push_back({GateKind::Z, {0}, {}, 0.0, "", false});
  } else {
    for (int i = 0; i < q; ++i)
      diag.push_back({GateKind::Rz, {i}, {}, next_angle(local_rng), "", false});
  }
  std::vector<Gate> gs = frame;
  gs.insert(gs.end(), diag.begin(), diag.end());
  auto inv = dagger_gates(frame);
  gs.insert(gs.end(), inv.begin(), inv.end());
  return gs;
}

Circuit instantiate_oracles(const Circuit& c, uint64_t seed) {
  Circuit out = c;
  out.gates.clear();
  for (const auto& g : c.gates) {
    if (g.kind != GateKind::Oracle) {
      out.gates.push_back(g);
      continue;
    }
    auto it = c.oracles.find(g.oracle);
    if (it == c.oracles.end())
      throw Error(ErrorKind::UnboundOracle, "no declaration for oracle '" + g.oracle + "'");
    auto cls = c.commute_class.count(g.oracle) ? c.commute_class.at(g.oracle) : g.oracle;
    std::vector<Gate> inst = oracle_instance_gates(it->second, cls, seed);
    if (g.dagger) inst = dagger_gates(std::move(inst));
    for (Gate ig : inst) {
      for (int& t : ig.targets) t = g.targets[t];
      for (Control& ctl : ig.controls) ctl.qubit = g.targets[ctl.qubit];
      ig.controls.insert(ig.controls.end(), g.controls.begin(), g.controls.end());
      out.gates.push_back(std::move(ig));
    }
  }
  return out;
}

}  // namespace cobble
