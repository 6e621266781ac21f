#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "cobble/circuit.hpp"
#include "cobble/error.hpp"
#include "cobble/frontend.hpp"

namespace cobble {

namespace {

struct QasmWriter {
  const Circuit& c;
  QasmOptions opts;
  std::ostringstream body;
  std::map<int, std::pair<std::string, int>> qubit_ref;  // index -> (reg, offset)
  std::set<std::string> opaque_decls;
  int mcx_width = 0;

  std::string ref(int q) const {
    const auto& [reg, off] = qubit_ref.at(q);
    return reg + "[" + std::to_string(off) + "]";
  }

  std::string anc_ref(int i) const { return "mcx_anc[" + std::to_string(i) + "]"; }

  static std::string fmt_angle(double a) { return fmt_double(a); }

  // Emits `stmt` on targets, conditioned on a single positive control when
  // ctrl is non-empty, from the {h,x,z,ry,rz,cx,ccx} vocabulary.
  void base_stmt(const Gate& g, const std::string& ctrl) {
    switch (g.kind) {
      case GateKind::H:
        if (ctrl.empty())
          body << "h " << ref(g.targets[0]) << ";\n";
        else
          body << "ry(" << fmt_angle(M_PI / 4) << ") " << ref(g.targets[0]) << ";\ncx " << ctrl
               << "," << ref(g.targets[0]) << ";\nry(" << fmt_angle(-M_PI / 4) << ") "
               << ref(g.targets[0]) << ";\n";
        break;
      case GateKind::X:
        if (ctrl.empty())
          body << "x " << ref(g.targets[0]) << ";\n";
        else
          body << "cx " << ctrl << "," << ref(g.targets[0]) << ";\n";
        break;
      case GateKind::Z:
        if (ctrl.empty())
          body << "z " << ref(g.targets[0]) << ";\n";
        else
          body << "h " << ref(g.targets[0]) << ";\ncx " << ctrl << "," << ref(g.targets[0])
               << ";\nh " << ref(g.targets[0]) << ";\n";
        break;
      case GateKind::Ry:
        if (ctrl.empty())
          body << "ry(" << fmt_angle(g.angle) << ") " << ref(g.targets[0]) << ";\n";
        else
          body << "ry(" << fmt_angle(g.angle / 2) << ") " << ref(g.targets[0]) << ";\ncx "
               << ctrl << "," << ref(g.targets[0]) << ";\nry(" << fmt_angle(-g.angle / 2)
               << ") " << ref(g.targets[0]) << ";\ncx " << ctrl << "," << ref(g.targets[0])
               << ";\n";
        break;
      case GateKind::Rz:
        if (ctrl.empty())
          body << "rz(" << fmt_angle(g.angle) << ") " << ref(g.targets[0]) << ";\n";
        else
          body << "rz(" << fmt_angle(g.angle / 2) << ") " << ref(g.targets[0]) << ";\ncx "
               << ctrl << "," << ref(g.targets[0]) << ";\nrz(" << fmt_angle(-g.angle / 2)
               << ") " << ref(g.targets[0]) << ";\ncx " << ctrl << "," << ref(g.targets[0])
               << ";\n";
        break;
      case GateKind::Oracle: {
        std::string name = "orc_" + g.oracle + (g.dagger ? "_dg" : "");
        int extra = ctrl.empty() ? 0 : 1;
        if (extra) name += "_c1";
        std::string decl = "opaque " + name + " ";
        std::string args;
        int total = static_cast<int>(g.targets.size()) + extra;
        for (int i = 0; i < total; ++i) {
          if (i) {
            decl += ",";
            args += ",";
          }
          decl += "q" + std::to_string(i);
          args += i == 0 && extra ? ctrl : ref(g.targets[i - extra]);
        }
        opaque_decls.insert(decl + ";");
        body << name << " " << args << ";\n";
        break;
      }
      default:
        throw Error(ErrorKind::InternalArity, "unexpected gate in emission");
    }
  }

  void emit_gate(const Gate& gate) {
    Gate g = gate;
    if (g.kind == GateKind::CX) {
      // Fold the intrinsic control into the control list.
      g.kind = GateKind::X;
      g.controls.push_back({g.targets[0], true});
      g.targets.erase(g.targets.begin());
    }
    if (g.kind == GateKind::Oracle && !opts.opaque)
      throw Error(ErrorKind::UnboundOracle,
                  "oracle '" + g.oracle + "' is uninstantiated; emit with --opaque or "
                  "instantiate first");

    // Negative controls become X conjugation.
    std::vector<int> neg;
    for (const auto& ctl : g.controls)
      if (!ctl.positive) neg.push_back(ctl.qubit);
    for (int q : neg) body << "x " << ref(q) << ";\n";

    std::vector<int> pos;
    for (const auto& ctl : g.controls) pos.push_back(ctl.qubit);
    int n_ctl = static_cast<int>(pos.size());
    if (n_ctl == 0) {
      base_stmt(g, "");
    } else if (n_ctl == 1) {
      base_stmt(g, ref(pos[0]));
    } else {
      // AND-accumulate the controls onto mcx ancillas with a ccx chain.
      mcx_width = std::max(mcx_width, n_ctl - 1);
      body << "ccx " << ref(pos[0]) << "," << ref(pos[1]) << "," << anc_ref(0) << ";\n";
      for (int i = 2; i < n_ctl; ++i)
        body << "ccx " << ref(pos[i]) << "," << anc_ref(i - 2) << "," << anc_ref(i - 1)
             << ";\n";
      base_stmt(g, anc_ref(n_ctl - 2));
      for (int i = n_ctl - 1; i >= 2; --i)
        body << "ccx " << ref(pos[i]) << "," << anc_ref(i - 2) << "," << anc_ref(i - 1)
             << ";\n";
      body << "ccx " << ref(pos[0]) << "," << ref(pos[1]) << "," << anc_ref(0) << ";\n";
    }

    for (auto it = neg.rbegin(); it != neg.rend(); ++it) body << "x " << ref(*it) << ";\n";
  }

  std::string run() {
    for (const auto& r : c.registers)
      for (int i = 0; i < r.size; ++i) qubit_ref[r.first + i] = {r.name, i};
    for (const auto& g : c.gates) emit_gate(g);

    std::ostringstream out;
    out << "OPENQASM 2.0;\n";
    out << "include \"qelib1.inc\";\n";
    for (const auto& d : opaque_decls) out << d << "\n";
    for (const auto& r : c.registers)
      if (r.size > 0) out << "qreg " << r.name << "[" << r.size << "];\n";
    if (mcx_width > 0) out << "qreg mcx_anc[" << mcx_width << "];\n";
    out << body.str();
    // OpenQASM 2.0 has no post-selection primitive; record the protocol.
    for (const auto& name : c.postselect)
      out << "// post-select: measure " << name << " and retry unless all zero\n";
    return out.str();
  }
};

}  // namespace

std::string emit_qasm(const Circuit& c, const QasmOptions& opts) {
  QasmWriter w{c, opts};
  return w.run();
}

}  // namespace cobble
