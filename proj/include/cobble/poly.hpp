#pragma once

#include <vector>

namespace cobble {

enum class Parity { Even, Odd, Mixed, Zero };

// Real polynomial in the monomial basis, a0 + a1 x + ... + ad x^d.
// User-facing instances have a nonzero trailing coefficient; parity parts
// produced by split_parity may be all-zero.
struct PolySpec {
  std::vector<double> coeffs;

  // Highest index with |a_j| > 1e-12; -1 for the zero polynomial.
  int degree() const;
  Parity parity() const;
  bool is_zero() const { return degree() < 0; }
  double eval(double x) const;
};

// Splits into even- and odd-index parts; the two sum back to the input.
// A fixed-parity input returns (itself, zero) or (zero, itself).
struct ParitySplit {
  PolySpec even;
  PolySpec odd;
};
ParitySplit split_parity(const PolySpec& p);

// Coefficient threshold used for parity classification and trailing-term
// trimming throughout.
inline constexpr double kCoeffZeroTol = 1e-12;

}  // namespace cobble
