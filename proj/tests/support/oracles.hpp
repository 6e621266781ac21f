#pragma once

// Independent brute-force oracles used to freeze expected values; these
// stay deliberately naive and share no code with the library paths they
// check.

#include <cmath>
#include <complex>
#include <vector>

namespace cobble::testing {

// Dense-grid sup norm of sum_j c_j (alpha x)^j over [-1, 1].
inline double grid_linf(const std::vector<double>& coeffs, double alpha, int points) {
  double best = 0.0;
  for (int k = 0; k < points; ++k) {
    double x = -1.0 + 2.0 * k / (points - 1);
    double v = 0.0, pw = 1.0;
    for (double c : coeffs) {
      v += c * pw;
      pw *= alpha * x;
    }
    best = std::max(best, std::fabs(v));
  }
  return best;
}

// Circle-grid max of |sum_j c_j T_j(alpha z)| for |z| = 1, c in the
// Chebyshev basis.
inline double grid_gqet(const std::vector<double>& cheb, double alpha, int points) {
  double best = 0.0;
  for (int k = 0; k < points; ++k) {
    double theta = 2.0 * M_PI * k / points;
    std::complex<double> w = alpha * std::exp(std::complex<double>(0.0, theta));
    std::complex<double> tprev = 1.0, tcur = w, sum = cheb.empty() ? 0.0 : cheb[0];
    for (size_t j = 1; j < cheb.size(); ++j) {
      if (j > 1) {
        std::complex<double> t = 2.0 * w * tcur - tprev;
        tprev = tcur;
        tcur = t;
      }
      sum += cheb[j] * tcur;
    }
    best = std::max(best, std::abs(sum));
  }
  return best;
}

// T_n(x) by the three-term recurrence.
inline double chebyshev_t(int n, double x) {
  double prev = 1.0, cur = x;
  if (n == 0) return prev;
  for (int k = 1; k < n; ++k) {
    double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// Absolute-coefficient polynomial evaluation sum_j |a_j| alpha^j.
inline double abs_coeff_eval(const std::vector<double>& coeffs, double alpha) {
  double v = 0.0, pw = 1.0;
  for (double c : coeffs) {
    v += std::fabs(c) * pw;
    pw *= alpha;
  }
  return v;
}

}  // namespace cobble::testing
