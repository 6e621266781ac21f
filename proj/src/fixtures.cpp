#include "cobble/fixtures.hpp"

#include <cmath>

#include "cobble/error.hpp"
#include "cobble/frontend.hpp"

namespace cobble {

namespace {

// Two-site interaction: energy swap plus joint excitation at relative
// intensities 1 and 0.3. Sum fusion cancels half the queries.
const char* kSimulationExample = R"(# Two-site spin interaction with relative intensities.
A = kron(X, X) + kron(Y, Y);
B = kron(X, X) - kron(Y, Y);
H = A + 0.3 * B;
H
)";

// Huber-style loss between a data oracle and a model oracle; polynomial
// fusion turns the product of the two branches into a single quartic.
const char* kRegressionExample = R"(# Interpolated linear/quadratic loss on the residual A - B.
oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;
oracle B : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;
f = (A - B) + 1/2 * (A - B) ** 2;
g = (A - B) - 1/2 * (A - B) ** 2;
L = f * g;
L
)";

const char* kPenalizedCoupler = R"(# Coupled two-site system with a penalty well on aligned spins.
J = kron(X, X) + kron(Y, Y);
P = kron(Z, Z) - kron(Z, I) - kron(I, Z);
0.8 * (J + 0.25 * P) + 0.2 * (J - 0.25 * P)
)";

const char* kLaplacianFilter = R"(# Difference of shifted separable stencils built from a shift oracle.
oracle S : qubits=2, ancillas=1, subnorm=1.0, hermitian=false;
T = S + adj(S);
A = kron(T, I) + kron(I, T);
A - 0.5 * (kron(T, I) - kron(I, T))
)";

const char* kOlsRidge = R"(# Ridge-regularized Gram matrix under a quadratic loss polynomial.
oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;
G = 0.6 * A ** 2 + 0.4 * I;
Poly(G, [0.2, -0.9, 1.0])
)";

// Odd minimax-style approximation of (1/kappa)/x on [1/kappa, 1], kappa=4.
const char* kMatrixInversion = R"(# Truncated odd approximation of the inverse on [1/4, 1].
oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;
Poly(A, [0.0, 7.0762876453, 0.0, -67.6023665447, 0.0, 309.6941096714, 0.0,
         -755.5977016244, 0.0, 1004.4595123171, 0.0, -685.6563195289, 0.0,
         187.935951086])
)";

// Jacobi-Anger expansion of exp(-i 6 x): cosine part (even, degree 14) plus
// sine part (odd, degree 15), each scaled to sup norm 1/2.
const char* kHamiltonianSimulation = R"(# Degree-15 Jacobi-Anger expansion of the evolution kernel, t = 6.
oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;
Poly(A, [0.4999987596, 2.9999961637, -8.9998398907, -17.9998143998,
         26.9966009932, 32.3973750705, -32.3724102184, -27.7547034188,
         20.7179513596, 13.8288910281, -8.0881053805, -4.433848185,
         1.9696531769, 0.9238402578, -0.2437648217, -0.1014444782])
)";

// Odd polynomial approximating sign(x) via a tanh(8x) fit, degree 19.
const char* kSpectralThresholding = R"(# Smoothed spectral sign function for eigenvalue thresholding.
oracle A : qubits=1, ancillas=1, subnorm=1.0, hermitian=true;
Poly(A, [0.0, 7.1864827368, 0.0, -94.016640515, 0.0, 872.08864179, 0.0,
         -4876.7342903898, 0.0, 16833.5515158044, 0.0, -36664.7896826958,
         0.0, 50416.3943672145, 0.0, -42392.4471621671, 0.0,
         19881.9303469257, 0.0, -3982.2172757473])
)";

std::vector<BenchFixture> make_fixtures() {
  std::vector<BenchFixture> out;
  out.push_back({"simulation-example", kSimulationExample, true, 8.0, 2.6, 4.0, 2.0});
  out.push_back({"regression-example", kRegressionExample, true, 12.0, 16.0, 8.0, 1.0});
  out.push_back({"penalized-coupler", kPenalizedCoupler, false});
  out.push_back({"laplacian-filter", kLaplacianFilter, false});
  out.push_back({"ols-ridge", kOlsRidge, false});
  out.push_back({"matrix-inversion", kMatrixInversion, false});
  out.push_back({"hamiltonian-simulation", kHamiltonianSimulation, false});
  out.push_back({"spectral-thresholding", kSpectralThresholding, false});
  return out;
}

}  // namespace

const std::vector<BenchFixture>& bench_fixtures() {
  static const std::vector<BenchFixture> fixtures = make_fixtures();
  return fixtures;
}

const BenchFixture& fixture(const std::string& name) {
  for (const auto& f : bench_fixtures())
    if (f.name == name) return f;
  throw Error(ErrorKind::UsageError, "unknown fixture '" + name + "'");
}

std::string chebyshev_program(int n) {
  // Integer coefficient recurrence: T_{k+1} = 2x T_k - T_{k-1}.
  std::vector<double> prev = {1.0}, cur = {0.0, 1.0};
  for (int k = 1; k < n; ++k) {
    std::vector<double> next(k + 2, 0.0);
    for (size_t j = 0; j < cur.size(); ++j) next[j + 1] += 2.0 * cur[j];
    for (size_t j = 0; j < prev.size(); ++j) next[j] -= prev[j];
    prev = std::move(cur);
    cur = std::move(next);
  }
  const std::vector<double>& c = n == 0 ? prev : cur;
  std::string body;
  bool first = true;
  for (size_t j = 0; j < c.size(); ++j) {
    if (c[j] == 0.0) continue;
    double mag = std::fabs(c[j]);
    if (first) {
      if (c[j] < 0) body += "-";
      first = false;
    } else {
      body += c[j] < 0 ? " - " : " + ";
    }
    body += fmt_double(mag) + " * ";
    if (j == 0)
      body += "I";
    else if (j == 1)
      body += "X";
    else
      body += "X ** " + std::to_string(j);
  }
  return body + "\n";
}

}  // namespace cobble
