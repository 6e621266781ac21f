#include "cobble/cost.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>

#include "cobble/error.hpp"

namespace cobble {

int PolySpec::degree() const {
  for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j)
    if (std::fabs(coeffs[j]) > kCoeffZeroTol) return j;
  return -1;
}

Parity PolySpec::parity() const {
  bool even = false, odd = false;
  for (size_t j = 0; j < coeffs.size(); ++j) {
    if (std::fabs(coeffs[j]) <= kCoeffZeroTol) continue;
    (j % 2 == 0 ? even : odd) = true;
  }
  if (even && odd) return Parity::Mixed;
  if (even) return Parity::Even;
  if (odd) return Parity::Odd;
  return Parity::Zero;
}

double PolySpec::eval(double x) const {
  double v = 0.0;
  for (size_t j = coeffs.size(); j-- > 0;) v = v * x + coeffs[j];
  return v;
}

ParitySplit split_parity(const PolySpec& p) {
  ParitySplit out;
  for (size_t j = 0; j < p.coeffs.size(); ++j) {
    double c = p.coeffs[j];
    if (j % 2 == 0) {
      out.even.coeffs.resize(j + 1, 0.0);
      out.even.coeffs[j] = c;
    } else {
      out.odd.coeffs.resize(j + 1, 0.0);
      out.odd.coeffs[j] = c;
    }
  }
  auto trim = [](PolySpec& q) {
    while (!q.coeffs.empty() && std::fabs(q.coeffs.back()) <= kCoeffZeroTol)
      q.coeffs.pop_back();
  };
  trim(out.even);
  trim(out.odd);
  return out;
}

const char* poly_method_name(PolyMethod m) {
  switch (m) {
    case PolyMethod::LCU:
      return "lcu";
    case PolyMethod::Horner:
      return "horner";
    case PolyMethod::QSVT:
      return "qsvt";
    case PolyMethod::GQET:
      return "gqet";
  }
  return "?";
}

int ceil_log2(int n) {
  int bits = 0;
  while ((1 << bits) < n) ++bits;
  return bits;
}

double l1_norm(const PolySpec& p, double alpha) {
  double sum = 0.0, pw = 1.0;
  for (double c : p.coeffs) {
    sum += std::fabs(c) * pw;
    pw *= alpha;
  }
  return sum;
}

namespace {

// Golden-section maximization of f on [lo, hi] down to a 1e-12 bracket.
double golden_max(const std::function<double(double)>& f, double lo, double hi) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-12) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return std::max(fc, fd);
}

double grid_refine_max(const std::function<double(double)>& f, const std::vector<double>& xs) {
  const size_t n = xs.size();
  std::vector<double> vals(n);
  for (size_t i = 0; i < n; ++i) vals[i] = f(xs[i]);
  double best = std::max(vals.front(), vals.back());
  for (size_t i = 1; i + 1 < n; ++i) {
    if (vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1]) {
      double lo = std::min(xs[i - 1], xs[i + 1]);
      double hi = std::max(xs[i - 1], xs[i + 1]);
      best = std::max(best, golden_max(f, lo, hi));
    }
  }
  return best;
}

// Double-double arithmetic, enough for the basis-change recurrence.
struct DD {
  double hi = 0.0, lo = 0.0;
};

DD dd_from(double x) { return {x, 0.0}; }

DD dd_add(DD a, DD b) {
  double s = a.hi + b.hi;
  double bb = s - a.hi;
  double err = (a.hi - (s - bb)) + (b.hi - bb);
  err += a.lo + b.lo;
  double hi = s + err;
  return {hi, err - (hi - s)};
}

DD dd_mul_d(DD a, double b) {
  double p = a.hi * b;
  double e = std::fma(a.hi, b, -p);
  e += a.lo * b;
  double hi = p + e;
  return {hi, e - (hi - p)};
}

}  // namespace

double linf_norm(const PolySpec& p, double alpha) {
  if (p.is_zero()) return 0.0;
  auto f = [&](double x) { return std::fabs(p.eval(alpha * x)); };
  constexpr int kN = 4096;
  std::vector<double> xs(kN + 1);
  for (int k = 0; k <= kN; ++k) xs[k] = std::cos(M_PI * (kN - k) / kN);
  return grid_refine_max(f, xs);
}

std::vector<double> monomial_to_chebyshev(const std::vector<double>& coeffs) {
  // cur holds the Chebyshev expansion of x^j; multiply by x step by step via
  // x T_0 = T_1 and x T_k = (T_{k+1} + T_{k-1}) / 2.
  std::vector<DD> acc(coeffs.size(), DD{});
  std::vector<DD> cur = {dd_from(1.0)};
  for (size_t j = 0; j < coeffs.size(); ++j) {
    if (j > 0) {
      std::vector<DD> next(j + 1, DD{});
      for (size_t k = 0; k < cur.size(); ++k) {
        if (k == 0) {
          next[1] = dd_add(next[1], cur[0]);
        } else {
          next[k + 1] = dd_add(next[k + 1], dd_mul_d(cur[k], 0.5));
          next[k - 1] = dd_add(next[k - 1], dd_mul_d(cur[k], 0.5));
        }
      }
      cur = std::move(next);
    }
    if (coeffs[j] != 0.0)
      for (size_t k = 0; k < cur.size(); ++k)
        acc[k] = dd_add(acc[k], dd_mul_d(cur[k], coeffs[j]));
  }
  std::vector<double> out(coeffs.size());
  for (size_t k = 0; k < out.size(); ++k) out[k] = acc[k].hi;
  return out;
}

double gqet_norm(const PolySpec& p, double alpha) {
  if (p.is_zero()) return 0.0;
  std::vector<double> cheb = monomial_to_chebyshev(p.coeffs);
  auto f = [&](double theta) {
    std::complex<double> w = alpha * std::exp(std::complex<double>(0.0, theta));
    // T_j(w) by the recurrence, complex argument.
    std::complex<double> tkm1 = 1.0, tk = w, sum = cheb[0];
    for (size_t j = 1; j < cheb.size(); ++j) {
      if (j > 1) {
        std::complex<double> t = 2.0 * w * tk - tkm1;
        tkm1 = tk;
        tk = t;
      }
      sum += cheb[j] * tk;
    }
    return std::abs(sum);
  };
  // Real coefficients make |f| symmetric about theta = 0, so [0, pi] covers
  // the circle.
  constexpr int kN = 4096;
  std::vector<double> ts(kN + 1);
  for (int k = 0; k <= kN; ++k) ts[k] = M_PI * k / kN;
  return grid_refine_max(f, ts);
}

CostReport poly_cost(const PolySpec& p, const CostReport& base, PolyMethod method,
                     bool base_hermitian) {
  int d = p.degree();
  if (d < 0) throw Error(ErrorKind::QsvtInadmissible, "cannot cost the zero polynomial");
  switch (method) {
    case PolyMethod::LCU: {
      double weighted = 0.0;
      for (int j = 0; j <= d; ++j)
        if (std::fabs(p.coeffs[j]) > kCoeffZeroTol) weighted += j;
      int m = d == 0 ? base.ancillas : ceil_log2(d) + d + base.ancillas;
      return make_cost(base.queries * weighted, l1_norm(p, base.subnorm), m);
    }
    case PolyMethod::Horner:
      return make_cost(base.queries * d, l1_norm(p, base.subnorm), 2 * d + base.ancillas);
    case PolyMethod::QSVT: {
      if (!base_hermitian)
        throw Error(ErrorKind::QsvtInadmissible, "QSVT requires a Hermitian base");
      ParitySplit parts = split_parity(p);
      double queries = 0.0, alpha = 0.0;
      int live = 0;
      for (const PolySpec* part : {&parts.even, &parts.odd}) {
        if (part->is_zero()) continue;
        ++live;
        queries += base.queries * part->degree();
        alpha += linf_norm(*part, base.subnorm);
      }
      int m = base.ancillas + (live == 2 ? 2 : 1);
      return make_cost(queries, alpha, m);
    }
    case PolyMethod::GQET:
      if (!base_hermitian)
        throw Error(ErrorKind::QsvtInadmissible, "GQET requires a Hermitian base");
      return make_cost(base.queries * d, gqet_norm(p, base.subnorm), 1 + base.ancillas);
  }
  throw Error(ErrorKind::InternalArity, "unknown poly method");
}

PolyMethod select_poly_method(const PolySpec& p, const CostReport& base, bool base_hermitian) {
  PolyMethod order[] = {PolyMethod::QSVT, PolyMethod::Horner, PolyMethod::LCU};
  PolyMethod best = PolyMethod::LCU;
  double best_total = 0.0;
  bool have = false;
  for (PolyMethod m : order) {
    if (m == PolyMethod::QSVT && !base_hermitian) continue;
    double total = poly_cost(p, base, m, base_hermitian).total;
    if (!have || total < best_total) {
      have = true;
      best = m;
      best_total = total;
    }
  }
  return best;
}

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::DuplicateDeclaration: return "DuplicateDeclaration";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::ChoiceSubnormMismatch: return "ChoiceSubnormMismatch";
    case ErrorKind::NonHermitianPolyBase: return "NonHermitianPolyBase";
    case ErrorKind::AllTermsCancel: return "AllTermsCancel";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::OversizeDenotation: return "OversizeDenotation";
    case ErrorKind::OversizeCircuit: return "OversizeCircuit";
    case ErrorKind::StepLimitExceeded: return "StepLimitExceeded";
    case ErrorKind::QsvtInadmissible: return "QsvtInadmissible";
    case ErrorKind::NotFixedParity: return "NotFixedParity";
    case ErrorKind::SupNormExceedsOne: return "SupNormExceedsOne";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::UnboundOracle: return "UnboundOracle";
    case ErrorKind::InternalArity: return "InternalArity";
    case ErrorKind::VerificationFailed: return "VerificationFailed";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "?";
}

}  // namespace cobble
