#include "cobble/sim.hpp"

#include <cmath>
#include <complex>
#include <random>

#include "cobble/error.hpp"

namespace cobble {

namespace {

constexpr int kMaxSimQubits = 14;
constexpr double kVerifyTolExact = 1e-9;
constexpr double kVerifyTolQsp = 1e-7;

using C = std::complex<double>;

// Row-major so left-multiplying a gate touches contiguous memory.
using RowMatrix = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Simulator {
  int n = 0;
  Eigen::Index dim = 0;
  RowMatrix u;

  explicit Simulator(int n_qubits) : n(n_qubits), dim(Eigen::Index(1) << n_qubits) {
    u = RowMatrix::Identity(dim, dim);
  }

  // qubit 0 is the most significant index bit
  Eigen::Index bit(int qubit) const { return Eigen::Index(1) << (n - 1 - qubit); }

  bool controls_match(Eigen::Index idx, const std::vector<Control>& cs) const {
    for (const auto& ctl : cs) {
      bool on = (idx & bit(ctl.qubit)) != 0;
      if (on != ctl.positive) return false;
    }
    return true;
  }

  void apply_1q(const Eigen::Matrix2cd& g, int target, const std::vector<Control>& cs) {
    Eigen::Index tb = bit(target);
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (i & tb) continue;
      if (!controls_match(i, cs)) continue;
      Eigen::Index j = i | tb;
      Eigen::RowVectorXcd r0 = u.row(i), r1 = u.row(j);
      u.row(i) = g(0, 0) * r0 + g(0, 1) * r1;
      u.row(j) = g(1, 0) * r0 + g(1, 1) * r1;
    }
  }

  // Dense k-qubit gate on an arbitrary qubit list (qubits[0] most
  // significant within the gate's own ordering).
  void apply_kq(const Matrix& g, const std::vector<int>& qubits,
                const std::vector<Control>& cs) {
    int k = static_cast<int>(qubits.size());
    Eigen::Index sub = Eigen::Index(1) << k;
    std::vector<Eigen::Index> bits(k);
    Eigen::Index mask = 0;
    for (int i = 0; i < k; ++i) {
      bits[i] = bit(qubits[i]);
      mask |= bits[i];
    }
    Matrix gathered(sub, dim);
    for (Eigen::Index base = 0; base < dim; ++base) {
      if (base & mask) continue;
      if (!controls_match(base, cs)) continue;
      for (Eigen::Index s = 0; s < sub; ++s) {
        Eigen::Index idx = base;
        for (int i = 0; i < k; ++i)
          if ((s >> (k - 1 - i)) & 1) idx |= bits[i];
        gathered.row(s) = u.row(idx);
      }
      Matrix mixed = g * gathered;
      for (Eigen::Index s = 0; s < sub; ++s) {
        Eigen::Index idx = base;
        for (int i = 0; i < k; ++i)
          if ((s >> (k - 1 - i)) & 1) idx |= bits[i];
        u.row(idx) = mixed.row(s);
      }
    }
  }

  void apply(const Gate& g, const OracleUnitaries* bindings) {
    switch (g.kind) {
      case GateKind::H: {
        Eigen::Matrix2cd m;
        double s = 1.0 / std::sqrt(2.0);
        m << s, s, s, -s;
        apply_1q(m, g.targets[0], g.controls);
        break;
      }
      case GateKind::X: {
        Eigen::Matrix2cd m;
        m << 0, 1, 1, 0;
        apply_1q(m, g.targets[0], g.controls);
        break;
      }
      case GateKind::Z: {
        Eigen::Matrix2cd m;
        m << 1, 0, 0, -1;
        apply_1q(m, g.targets[0], g.controls);
        break;
      }
      case GateKind::Ry: {
        Eigen::Matrix2cd m;
        double c = std::cos(g.angle / 2), s = std::sin(g.angle / 2);
        m << c, -s, s, c;
        apply_1q(m, g.targets[0], g.controls);
        break;
      }
      case GateKind::Rz: {
        Eigen::Matrix2cd m;
        m << std::exp(C(0, -g.angle / 2)), 0, 0, std::exp(C(0, g.angle / 2));
        apply_1q(m, g.targets[0], g.controls);
        break;
      }
      case GateKind::CX: {
        Eigen::Matrix2cd m;
        m << 0, 1, 1, 0;
        std::vector<Control> cs = g.controls;
        cs.push_back({g.targets[0], true});
        apply_1q(m, g.targets[1], cs);
        break;
      }
      case GateKind::Oracle: {
        if (!bindings)
          throw Error(ErrorKind::UnboundOracle,
                      "oracle '" + g.oracle + "' reached the simulator uninstantiated");
        auto it = bindings->find(g.oracle);
        if (it == bindings->end())
          throw Error(ErrorKind::UnboundOracle, "no unitary bound for oracle '" + g.oracle + "'");
        Matrix m = g.dagger ? Matrix(it->second.adjoint()) : it->second;
        apply_kq(m, g.targets, g.controls);
        break;
      }
    }
  }
};

void check_size(const Circuit& c) {
  if (c.n_qubits > kMaxSimQubits)
    throw Error(ErrorKind::OversizeCircuit,
                "circuit uses " + std::to_string(c.n_qubits) + " qubits, simulator limit is " +
                    std::to_string(kMaxSimQubits));
}

}  // namespace

DenseUnitary simulate(const Circuit& c, const OracleUnitaries& bindings) {
  check_size(c);
  Simulator sim(c.n_qubits);
  for (const auto& g : c.gates) sim.apply(g, &bindings);
  return {c.n_qubits, Matrix(sim.u)};
}

DenseUnitary simulate(const Circuit& c, uint64_t seed) {
  Circuit inst = instantiate_oracles(c, seed);
  check_size(inst);
  Simulator sim(inst.n_qubits);
  for (const auto& g : inst.gates) sim.apply(g, nullptr);
  return {inst.n_qubits, Matrix(sim.u)};
}

Matrix oracle_instance_unitary(const OracleDecl& d, const std::string& class_key,
                               uint64_t seed) {
  int q = d.n_qubits + d.ancillas;
  Simulator sim(q);
  for (const auto& g : oracle_instance_gates(d, class_key, seed)) sim.apply(g, nullptr);
  return Matrix(sim.u);
}

OracleBindings instance_bindings(const Circuit& c, uint64_t seed) {
  OracleBindings out;
  for (const auto& [name, decl] : c.oracles) {
    if (decl.builtin) continue;  // denote binds builtins itself
    auto cls = c.commute_class.count(name) ? c.commute_class.at(name) : name;
    Matrix u = oracle_instance_unitary(decl, cls, seed);
    Eigen::Index dim = Eigen::Index(1) << decl.n_qubits;
    out[name] = decl.subnorm * u.topLeftCorner(dim, dim);
  }
  return out;
}

bool contains_qsp_path(const TypedExpr& e, const CompileOptions& opts) {
  Analyzer an(e.ctx);
  std::function<bool(const ExprPtr&)> walk = [&](const ExprPtr& x) -> bool {
    switch (x->kind) {
      case ExprKind::Poly:
        if (an.method_for(x, opts.method) == PolyMethod::QSVT) return true;
        return walk(x->child);
      case ExprKind::Adjoint:
        return walk(x->child);
      case ExprKind::Sum:
        for (const auto& t : x->terms)
          if (walk(t.child)) return true;
        return false;
      case ExprKind::Prod:
      case ExprKind::Choice:
      case ExprKind::Tensor:
        for (const auto& f : x->factors)
          if (walk(f)) return true;
        return false;
      default:
        return false;
    }
  };
  return walk(e.expr);
}

VerifyReport verify(const TypedExpr& e, uint64_t seed, const CompileOptions& opts) {
  Circuit c = compile(e, opts);
  DenseUnitary full = simulate(c, seed);

  Eigen::Index dim = Eigen::Index(1) << e.type.n_qubits;
  VerifyReport r;
  r.block = full.u.topLeftCorner(dim, dim);
  r.target = denote(e.expr, instance_bindings(c, seed));
  r.alpha_pred = c.predicted.subnorm;
  r.max_dev = (r.block - r.target / r.alpha_pred).cwiseAbs().maxCoeff();
  r.queries_measured = count_queries(c);
  r.tolerance = contains_qsp_path(e, opts) ? kVerifyTolQsp : kVerifyTolExact;
  r.pass = r.max_dev <= r.tolerance;

  // Success probability of post-selection for a random input state, against
  // the ||target x||^2 / alpha^2 bound.
  std::mt19937_64 rng(seed ^ 0x5eedu);
  Eigen::VectorXcd x(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    x[i] = C(((rng() >> 11) * 0x1.0p-53) - 0.5, ((rng() >> 11) * 0x1.0p-53) - 0.5);
  x.normalize();
  Eigen::VectorXcd in = Eigen::VectorXcd::Zero(full.u.rows());
  in.head(dim) = x;  // ancillas |0..0>, data x
  Eigen::VectorXcd out_state = full.u * in;
  r.success_prob_measured = out_state.head(dim).squaredNorm();
  r.success_prob_bound = (r.target * x).squaredNorm() / (r.alpha_pred * r.alpha_pred);
  return r;
}

}  // namespace cobble
