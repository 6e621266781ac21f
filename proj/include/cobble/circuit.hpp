#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cobble/analysis.hpp"
#include "cobble/cost.hpp"
#include "cobble/qsp.hpp"

namespace cobble {

enum class GateKind { H, X, Z, Ry, Rz, CX, Oracle };

struct Control {
  int qubit = 0;
  bool positive = true;
};

struct Gate {
  GateKind kind = GateKind::X;
  std::vector<int> targets;        // CX: {control, target}; Oracle: ancillas then data
  std::vector<Control> controls;
  double angle = 0.0;              // Ry, Rz
  std::string oracle;              // Oracle name
  bool dagger = false;             // Oracle adjoint instances
};

enum class RegisterKind { Data, Ancilla, Selector, Counter, Qsvt };

struct Register {
  std::string name;
  int first = 0;
  int size = 0;
  RegisterKind kind = RegisterKind::Ancilla;
};

struct CompileStats {
  double solver_seconds = 0.0;
  int solver_calls = 0;
  std::vector<PhaseSequence> phases;  // every solved sequence, in order
};

struct CompileOptions {
  std::optional<PolyMethod> method;  // force one realization for every Poly
  double qsp_tol = 1e-10;
  CompileStats* stats = nullptr;
};

// Qubit 0 is the most significant index; ancilla registers come first and
// the data register last, so the encoded block is the top-left corner.
struct Circuit {
  int n_qubits = 0;
  int n_data = 0;
  std::vector<Register> registers;
  std::vector<Gate> gates;
  std::vector<std::string> postselect;  // every non-data register
  // Model queries/ancillas; subnorm is the realized value (any phase-solver
  // rescale margin folded in), which is what verification divides by.
  CostReport predicted;
  std::map<std::string, OracleDecl> oracles;
  std::map<std::string, std::string> commute_class;  // oracle -> class representative
};

Circuit compile(const TypedExpr& e, const CompileOptions& opts = {});

// Number of Oracle gates, dagger or controlled included.
double count_queries(const Circuit& c);

// Raw QSVT template around an existing block-encoding circuit: one extra
// projector ancilla, d = angles-1 alternating base/daggered-base instances.
Circuit build_qsvt(const Circuit& base, const PhaseSequence& phi);

// Replaces every Oracle gate by a seeded, per-name-consistent rotation
// ladder; dagger instances get the exact inverse gate list. Declared
// Hermitian oracles instantiate to Hermitian unitaries, and oracles joined
// by commute declarations share a diagonalizing frame so the declared
// facts hold numerically.
Circuit instantiate_oracles(const Circuit& c, uint64_t seed);

// The instance gate list on the oracle's local qubits (ancillas then data).
std::vector<Gate> oracle_instance_gates(const OracleDecl& d, const std::string& class_key,
                                        uint64_t seed);
std::vector<Gate> dagger_gates(std::vector<Gate> gates);

struct QasmOptions {
  bool opaque = false;  // emit uninstantiated oracles as opaque declarations
};

// OpenQASM 2.0 text. Multi-controlled gates are lowered to ccx chains over
// a dedicated mcx_anc register, negative controls via X conjugation.
// Throws UnboundOracle for oracle gates unless opts.opaque.
std::string emit_qasm(const Circuit& c, const QasmOptions& opts = {});

}  // namespace cobble
