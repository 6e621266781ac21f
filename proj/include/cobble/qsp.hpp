#pragma once

#include <complex>
#include <string>
#include <vector>

#include "cobble/poly.hpp"

namespace cobble {

// QSP angles in radians under the Wx convention: the signal operator is
// W(x) = [[x, i sqrt(1-x^2)], [i sqrt(1-x^2), x]], phases enter as
// e^{i phi Z}, and correctness means Re<0|U|0> reproduces the target.
struct PhaseSequence {
  std::vector<double> angles;  // phi_0..phi_d, each in (-pi, pi]
  std::string convention = "wx-real";
};

// Top-left entry of e^{i phi_0 Z} W(x) e^{i phi_1 Z} ... W(x) e^{i phi_d Z}.
std::complex<double> evaluate_phases(const PhaseSequence& phi, double x);

// Computes phases for a fixed-parity real polynomial with sup norm at most
// 1 - 1e-9 on [-1,1] and degree <= 64, such that Re of the QSP product
// matches p within tol at the Chebyshev nodes cos(k pi / 2d), k = 0..2d.
// Damped Newton on the symmetric-phase residual at Chebyshev nodes, with a
// numerical Jacobian and deterministic reseeding on stagnation.
PhaseSequence solve_phases(const PolySpec& p, double tol = 1e-11);

}  // namespace cobble
