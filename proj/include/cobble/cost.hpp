#pragma once

#include "cobble/poly.hpp"

namespace cobble {

// Queries k, subnormalization alpha, ancilla count m, and k * alpha.
struct CostReport {
  double queries = 0.0;
  double subnorm = 0.0;
  int ancillas = 0;
  double total = 0.0;
};

inline CostReport make_cost(double queries, double subnorm, int ancillas) {
  return {queries, subnorm, ancillas, queries * subnorm};
}

enum class PolyMethod { LCU, Horner, QSVT, GQET };

const char* poly_method_name(PolyMethod m);

// sum_j |a_j| alpha^j
double l1_norm(const PolySpec& p, double alpha);

// max over x in [-1,1] of |p(alpha x)|. Evaluated on 4097 Chebyshev nodes
// with golden-section refinement of each bracketed local maximum.
double linf_norm(const PolySpec& p, double alpha);

// max over |z| = 1 of |sum_j c_j T_j(alpha z)| where c is p converted to
// the Chebyshev basis (double-double recurrence, exact halving).
double gqet_norm(const PolySpec& p, double alpha);

// Monomial -> Chebyshev change of basis, p(x) = sum_j out[j] T_j(x).
std::vector<double> monomial_to_chebyshev(const std::vector<double>& coeffs);

// Worst-case cost of realizing Poly(M, p) given the base cost, per method.
// QSVT/GQET require a Hermitian base; throws QsvtInadmissible otherwise.
CostReport poly_cost(const PolySpec& p, const CostReport& base, PolyMethod method,
                     bool base_hermitian = true);

// Cheapest admissible compile method among {LCU, Horner, QSVT}; ties break
// QSVT > Horner > LCU. GQET is costed for reporting only, never compiled.
PolyMethod select_poly_method(const PolySpec& p, const CostReport& base, bool base_hermitian);

int ceil_log2(int n);

}  // namespace cobble
