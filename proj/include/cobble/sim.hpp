#pragma once

#include <cstdint>

#include "cobble/analysis.hpp"
#include "cobble/circuit.hpp"

namespace cobble {

struct DenseUnitary {
  int n_qubits = 0;
  Matrix u;  // 2^n x 2^n, qubit 0 most significant
};

// Exact gate-by-gate dense product. Oracle gates are applied through the
// matrices in `bindings` (full (ancillas+data)-qubit unitaries). Circuits
// above 14 qubits are rejected (OversizeCircuit).
using OracleUnitaries = std::map<std::string, Matrix>;
DenseUnitary simulate(const Circuit& c, const OracleUnitaries& bindings);

// Instantiates oracles from the seed first, so no bindings are needed.
DenseUnitary simulate(const Circuit& c, uint64_t seed);

// The full unitary a (name, class, seed) oracle instance realizes.
Matrix oracle_instance_unitary(const OracleDecl& d, const std::string& class_key, uint64_t seed);

// Denotation bindings induced by the seeded instantiation: each oracle
// maps to subnorm * (top-left block of its instance unitary).
OracleBindings instance_bindings(const Circuit& c, uint64_t seed);

struct VerifyReport {
  Matrix block;        // extracted top-left 2^n x 2^n block
  Matrix target;       // denotation
  double alpha_pred = 0.0;
  double max_dev = 0.0;
  double queries_measured = 0.0;
  double success_prob_bound = 0.0;
  double success_prob_measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Compiles, instantiates, simulates, extracts the block indexed by all
// non-data registers at |0...0>, and compares against denote / alpha.
// Tolerance 1e-9, widened to 1e-7 when a QSVT phase solve is on the path.
VerifyReport verify(const TypedExpr& e, uint64_t seed, const CompileOptions& opts = {});

bool contains_qsp_path(const TypedExpr& e, const CompileOptions& opts = {});

}  // namespace cobble
