#include "cobble/qsp.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "cobble/cost.hpp"
#include "cobble/error.hpp"
#include "cobble/frontend.hpp"

namespace cobble {

namespace {

constexpr int kMaxDegree = 64;
constexpr int kNewtonBudget = 500;

double wrap_angle(double phi) {
  double w = std::fmod(phi + M_PI, 2.0 * M_PI);
  if (w <= 0.0) w += 2.0 * M_PI;
  return w - M_PI;
}

// Re<0|U|0> for the full symmetric expansion of the reduced phase vector.
std::vector<double> expand_symmetric(const Eigen::VectorXd& z, int d) {
  std::vector<double> full(static_cast<size_t>(d) + 1);
  for (int j = 0; j <= d; ++j) full[j] = z[std::min(j, d - j)];
  return full;
}

std::complex<double> qsp_entry(const std::vector<double>& phases, double x) {
  using C = std::complex<double>;
  double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  // Row-vector propagation of <0| through the product.
  C r0 = std::exp(C(0.0, phases[0]));
  C r1 = 0.0;
  for (size_t j = 1; j < phases.size(); ++j) {
    C w0 = r0 * x + r1 * C(0.0, s);
    C w1 = r0 * C(0.0, s) + r1 * x;
    C ph = std::exp(C(0.0, phases[j]));
    r0 = w0 * ph;
    r1 = w1 / ph;
  }
  return r0;
}

}  // namespace

std::complex<double> evaluate_phases(const PhaseSequence& phi, double x) {
  if (phi.angles.empty())
    throw Error(ErrorKind::InternalArity, "empty phase sequence");
  return qsp_entry(phi.angles, x);
}

PhaseSequence solve_phases(const PolySpec& p, double tol) {
  Parity parity = p.parity();
  if (parity == Parity::Mixed || parity == Parity::Zero)
    throw Error(ErrorKind::NotFixedParity,
                "QSP solve requires a nonzero fixed-parity polynomial");
  int d = p.degree();
  if (d > kMaxDegree)
    throw Error(ErrorKind::NoConvergence,
                "polynomial degree " + std::to_string(d) + " exceeds the solver limit " +
                    std::to_string(kMaxDegree));
  // Callers wanting the solver's comfort margin rescale to 1 - 1e-6 first;
  // exact-boundary targets (T_n, the identity) are still attempted.
  double sup = linf_norm(p, 1.0);
  if (sup > 1.0 + 1e-9)
    throw Error(ErrorKind::SupNormExceedsOne,
                "sup norm " + fmt_double(sup) + " exceeds 1");

  PhaseSequence out;
  if (d == 0) {
    out.angles = {wrap_angle(std::acos(std::clamp(p.coeffs[0], -1.0, 1.0)))};
    return out;
  }

  // Monomial coefficients of high-degree polynomials are huge with massive
  // cancellation; Horner on them loses the accuracy the solve needs. The
  // Chebyshev coefficients are tame, so evaluate the target via Clenshaw on
  // the exact (double-double) basis change.
  const std::vector<double> cheb = monomial_to_chebyshev(p.coeffs);
  auto eval_target = [&](double x) {
    double b1 = 0.0, b2 = 0.0;
    for (size_t j = cheb.size(); j-- > 1;) {
      double b0 = 2.0 * x * b1 - b2 + cheb[j];
      b2 = b1;
      b1 = b0;
    }
    return x * b1 - b2 + cheb[0];
  };

  const int reduced = (d + 2) / 2;
  Eigen::VectorXd nodes(reduced), target(reduced);
  for (int k = 0; k < reduced; ++k) {
    nodes[k] = std::cos((2.0 * k + 1.0) * M_PI / (4.0 * reduced));
    target[k] = eval_target(nodes[k]);
  }

  auto residual = [&](const Eigen::VectorXd& z) {
    std::vector<double> full = expand_symmetric(z, d);
    Eigen::VectorXd r(reduced);
    for (int k = 0; k < reduced; ++k)
      r[k] = qsp_entry(full, nodes[k]).real() - target[k];
    return r;
  };

  // Check residual on the spec'd verification grid cos(k pi / 2d).
  auto check_residual = [&](const Eigen::VectorXd& z) {
    std::vector<double> full = expand_symmetric(z, d);
    double worst = 0.0;
    for (int k = 0; k <= 2 * d; ++k) {
      double x = std::cos(k * M_PI / (2.0 * d));
      worst = std::max(worst, std::fabs(qsp_entry(full, x).real() - eval_target(x)));
    }
    return worst;
  };

  // Damped Newton with a central-difference Jacobian against scaled target
  // values; returns convergence and charges iterations to the budget.
  int budget = kNewtonBudget;
  auto newton = [&](Eigen::VectorXd& z, double scale, double goal, int max_iters) {
    // residual() is against the full target; shift to the scaled one.
    auto scaled_residual = [&](const Eigen::VectorXd& zz) {
      return Eigen::VectorXd(residual(zz) + (1.0 - scale) * target);
    };
    Eigen::VectorXd r = scaled_residual(z);
    double rn = r.norm();
    for (int it = 0; it < max_iters && budget > 0; ++it) {
      --budget;
      if (r.lpNorm<Eigen::Infinity>() < goal) return true;
      Eigen::MatrixXd jac(reduced, reduced);
      const double h = 1e-6;
      for (int i = 0; i < reduced; ++i) {
        Eigen::VectorXd zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        jac.col(i) = (scaled_residual(zp) - scaled_residual(zm)) / (2.0 * h);
      }
      Eigen::VectorXd step = jac.colPivHouseholderQr().solve(r);
      double t = 1.0;
      bool improved = false;
      while (t > 1e-8) {
        Eigen::VectorXd znew = z - t * step;
        Eigen::VectorXd rnew = scaled_residual(znew);
        double rnnew = rnew.norm();
        if (rnnew < rn * (1.0 - 1e-4 * t)) {
          z = znew;
          r = rnew;
          rn = rnnew;
          improved = true;
          break;
        }
        t *= 0.5;
      }
      if (!improved) return r.lpNorm<Eigen::Infinity>() < goal;
    }
    return r.lpNorm<Eigen::Infinity>() < goal;
  };

  auto finish = [&](const Eigen::VectorXd& z) {
    std::vector<double> full = expand_symmetric(z, d);
    for (double& a : full) a = wrap_angle(a);
    out.angles = std::move(full);
    return out;
  };

  // Node residuals interpolate to the full interval with some roughness, so
  // converge the nodes two orders tighter than the requested tolerance.
  const double node_goal = std::max(tol * 0.01, 1e-13);

  // Phases (eta/2, 0, ..., 0, eta/2) reproduce cos(eta) T_d(x) exactly, so
  // seeding eta from the target's leading Chebyshev coefficient starts at
  // the solution for near-Chebyshev targets. The all-zero point itself has
  // a singular Jacobian (the real part responds only at second order), so
  // boundary targets must start here rather than at zero.
  Eigen::VectorXd cheb_seed = Eigen::VectorXd::Zero(reduced);
  cheb_seed[0] = std::acos(std::clamp(cheb[d], -1.0, 1.0)) / 2.0;

  std::vector<Eigen::VectorXd> seeds;
  {
    Eigen::VectorXd s1 = Eigen::VectorXd::Constant(reduced, M_PI / (2.0 * (d + 1)));
    Eigen::VectorXd s3 = Eigen::VectorXd::Zero(reduced);
    seeds = {cheb_seed, s1, s3};
  }
  double best_residual = 1e300;
  for (const Eigen::VectorXd& seed : seeds) {
    Eigen::VectorXd z = seed;
    if (newton(z, 1.0, node_goal, std::min(100, budget))) {
      double worst = check_residual(z);
      if (worst <= tol) return finish(z);
      best_residual = std::min(best_residual, worst);
    }
  }

  // Continuation on the target amplitude for the hard instances: grow the
  // polynomial from a small multiple where the symmetric seed converges.
  Eigen::VectorXd z = cheb_seed;
  double scale = 0.25, reached = 0.0;
  if (!newton(z, scale, 1e-11, std::min(80, budget))) scale = 0.1;
  while (budget > 0) {
    Eigen::VectorXd trial = z;
    if (newton(trial, scale, scale >= 1.0 ? node_goal : 1e-11, std::min(80, budget))) {
      z = trial;
      reached = scale;
      if (scale >= 1.0) {
        double worst = check_residual(z);
        best_residual = std::min(best_residual, worst);
        if (worst <= tol) return finish(z);
        break;
      }
      scale = std::min(1.0, scale + std::max(0.05, (1.0 - scale) * 0.5));
    } else {
      double next = (reached + scale) / 2.0;
      if (scale - next < 1e-3) break;
      scale = next;
    }
  }
  throw Error(ErrorKind::NoConvergence,
              "phase solve did not converge; best residual " + fmt_double(best_residual));
}

}  // namespace cobble
