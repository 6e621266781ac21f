// Command-line driver: type checking, cost reports, optimization, circuit
// emission, simulation-backed verification, and the benchmark suite.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cobble/analysis.hpp"
#include "cobble/circuit.hpp"
#include "cobble/error.hpp"
#include "cobble/fixtures.hpp"
#include "cobble/frontend.hpp"
#include "cobble/qsp.hpp"
#include "cobble/rewrite.hpp"
#include "cobble/sim.hpp"

using json = nlohmann::json;
using namespace cobble;

namespace {

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::SyntaxError:
    case ErrorKind::UsageError:
      return 2;
    case ErrorKind::VerificationFailed:
      return 3;
    default:
      return 1;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::UsageError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

uint64_t default_seed() {
  if (const char* env = std::getenv("COBBLE_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

std::optional<PolyMethod> parse_method(const std::string& m) {
  if (m.empty()) return std::nullopt;
  if (m == "lcu") return PolyMethod::LCU;
  if (m == "horner") return PolyMethod::Horner;
  if (m == "qsvt") return PolyMethod::QSVT;
  if (m == "gqet") return PolyMethod::GQET;
  throw Error(ErrorKind::UsageError, "unknown method '" + m + "'");
}

struct Pipeline {
  Program program;
  TypedExpr typed;

  explicit Pipeline(const std::string& path) : program(parse(read_file(path))) {
    typed = typecheck(program);
  }

  TypedExpr optimized() const {
    RewriteResult r = apply_rules(typed);
    return typecheck_expr(r.expr, typed.ctx);
  }
};

void print_cost(const CostReport& c) {
  std::cout << "queries       " << fmt_double(c.queries) << "\n";
  std::cout << "subnorm       " << fmt_double(c.subnorm) << "\n";
  std::cout << "ancillas      " << c.ancillas << "\n";
  std::cout << "total         " << fmt_double(c.total) << "\n";
}

json cost_json(const CostReport& c) {
  return json{{"queries", c.queries},
              {"subnorm", c.subnorm},
              {"ancillas", c.ancillas},
              {"total", c.total}};
}

int cmd_check(const std::string& file) {
  Pipeline p(file);
  std::cout << qtype_to_string(p.typed.type) << ", "
            << (p.typed.hermitian ? "hermitian" : "non-hermitian") << "\n";
  print_cost(p.typed.cost);
  return 0;
}

int cmd_cost(const std::string& file, bool opt, const std::string& method, bool as_json) {
  Pipeline p(file);
  auto m = parse_method(method);
  TypedExpr e = opt ? p.optimized() : p.typed;
  Analyzer an(e.ctx);
  CostReport c = an.cost(e.expr, m);
  if (as_json)
    std::cout << cost_json(c).dump(2) << "\n";
  else
    print_cost(c);
  return 0;
}

int cmd_opt(const std::string& file, bool trace) {
  Pipeline p(file);
  RewriteResult r = apply_rules(p.typed);
  if (trace) {
    for (const auto& s : r.trace.steps)
      std::cout << "# " << rule_name(s.rule) << " at " << s.path << ": total "
                << fmt_double(s.before.total) << " -> " << fmt_double(s.after.total) << "\n";
  }
  Program out;
  out.oracles = p.program.oracles;
  out.commutes = p.program.commutes;
  out.main = r.expr;
  std::cout << print(out);
  return 0;
}

int cmd_compile(const std::string& file, const std::string& emit, const std::string& out_path,
                uint64_t seed, bool opaque, bool no_opt, const std::string& method,
                const std::string& phases_path) {
  Pipeline p(file);
  CompileStats stats;
  CompileOptions opts;
  opts.method = parse_method(method);
  opts.stats = &stats;
  if (opts.method && *opts.method == PolyMethod::GQET)
    throw Error(ErrorKind::UsageError, "GQET is costed for reporting only, not compiled");
  TypedExpr e = no_opt ? p.typed : p.optimized();
  Circuit c = compile(e, opts);

  if (!phases_path.empty()) {
    json seqs = json::array();
    for (const auto& phi : stats.phases)
      seqs.push_back(json{{"convention", phi.convention}, {"angles", phi.angles}});
    std::ofstream out(phases_path, std::ios::binary);
    out << seqs.dump(2) << "\n";
  }

  std::string text;
  if (emit == "qasm") {
    Circuit final_c = opaque ? c : instantiate_oracles(c, seed);
    text = emit_qasm(final_c, {opaque});
  } else if (emit == "json") {
    json gates = json::array();
    for (const auto& g : c.gates) {
      json jg;
      switch (g.kind) {
        case GateKind::H: jg["kind"] = "h"; break;
        case GateKind::X: jg["kind"] = "x"; break;
        case GateKind::Z: jg["kind"] = "z"; break;
        case GateKind::Ry: jg["kind"] = "ry"; jg["angle"] = g.angle; break;
        case GateKind::Rz: jg["kind"] = "rz"; jg["angle"] = g.angle; break;
        case GateKind::CX: jg["kind"] = "cx"; break;
        case GateKind::Oracle:
          jg["kind"] = "oracle";
          jg["name"] = g.oracle;
          jg["dagger"] = g.dagger;
          break;
      }
      jg["qubits"] = g.targets;
      json ctl = json::array();
      for (const auto& ctrl : g.controls)
        ctl.push_back(json{{"qubit", ctrl.qubit}, {"positive", ctrl.positive}});
      jg["controls"] = ctl;
      gates.push_back(jg);
    }
    json regs = json::array();
    for (const auto& r : c.registers)
      regs.push_back(json{{"name", r.name}, {"first", r.first}, {"size", r.size}});
    json doc{{"qubits", c.n_qubits},   {"data_qubits", c.n_data},
             {"registers", regs},      {"gates", gates},
             {"postselect", c.postselect}, {"predicted", cost_json(c.predicted)}};
    text = doc.dump(2) + "\n";
  } else {
    throw Error(ErrorKind::UsageError, "unknown emit format '" + emit + "'");
  }
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    out << text;
  }
  return 0;
}

int cmd_phases(const std::string& coeffs_text, double tol) {
  PolySpec p;
  std::istringstream ss(coeffs_text);
  std::string tok;
  while (std::getline(ss, tok, ',')) p.coeffs.push_back(std::stod(tok));
  PhaseSequence phi = solve_phases(p, tol);
  json doc{{"convention", phi.convention}, {"angles", phi.angles}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

json verify_json(const VerifyReport& r) {
  return json{{"alpha", r.alpha_pred},
              {"max_dev", r.max_dev},
              {"queries_measured", r.queries_measured},
              {"success_prob_bound", r.success_prob_bound},
              {"success_prob_measured", r.success_prob_measured},
              {"tolerance", r.tolerance},
              {"pass", r.pass}};
}

int cmd_verify(const std::string& file, uint64_t seed, bool as_json) {
  Pipeline p(file);
  VerifyReport pre = verify(p.typed, seed);
  TypedExpr opt = p.optimized();
  VerifyReport post = verify(opt, seed);

  // Both encode the same denotation, so the alpha-rescaled blocks agree.
  double cross = (pre.block * pre.alpha_pred - post.block * post.alpha_pred)
                     .cwiseAbs()
                     .maxCoeff();
  bool ok = pre.pass && post.pass && cross <= std::max(pre.tolerance, post.tolerance) * 4;
  if (as_json) {
    json doc{{"unoptimized", verify_json(pre)},
             {"optimized", verify_json(post)},
             {"cross_max_dev", cross},
             {"pass", ok}};
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "unoptimized: max_dev " << fmt_double(pre.max_dev) << " (alpha "
              << fmt_double(pre.alpha_pred) << ", queries "
              << fmt_double(pre.queries_measured) << ")\n";
    std::cout << "optimized:   max_dev " << fmt_double(post.max_dev) << " (alpha "
              << fmt_double(post.alpha_pred) << ", queries "
              << fmt_double(post.queries_measured) << ")\n";
    std::cout << "cross-check: " << fmt_double(cross) << "\n";
    std::cout << (ok ? "PASS" : "FAIL") << "\n";
  }
  if (!ok) throw Error(ErrorKind::VerificationFailed, "block deviates beyond tolerance");
  return 0;
}

struct BenchRow {
  std::string name;
  CostReport before, after;
  double speedup = 0.0;
  bool ok = false;
};

BenchRow run_fixture(const BenchFixture& f) {
  BenchRow row;
  row.name = f.name;
  Program prog = parse(f.source);
  TypedExpr typed = typecheck(prog);
  RewriteResult opt = apply_rules(typed);
  Analyzer an(typed.ctx);
  row.before = an.cost(typed.expr);
  row.after = an.cost(opt.expr);
  row.speedup = row.before.total / row.after.total;
  if (f.exact) {
    auto near = [](double a, double b) { return std::fabs(a - b) < 0.05; };
    row.ok = near(row.before.queries, f.queries_unopt) &&
             near(row.before.subnorm, f.subnorm_unopt) &&
             near(row.after.queries, f.queries_opt) && near(row.after.subnorm, f.subnorm_opt);
  } else {
    row.ok = row.after.total <= row.before.total + 1e-9;
  }
  return row;
}

int cmd_bench(const std::string& suite, bool timing, bool as_json) {
  json rows = json::array();
  bool all_ok = true;
  if (!timing) {
    if (!as_json)
      std::cout << "name                       unoptimized              optimized      speedup\n";
    // Fixtures are independent pure jobs; run them on a worker pool.
    std::vector<std::future<BenchRow>> jobs;
    for (const auto& f : bench_fixtures()) {
      if (!suite.empty() && f.name != suite) continue;
      jobs.push_back(std::async(std::launch::async, run_fixture, std::cref(f)));
    }
    for (auto& job : jobs) {
      BenchRow row = job.get();
      all_ok = all_ok && row.ok;
      if (!as_json) {
        char line[200];
        std::snprintf(line, sizeof line, "%-24s %5.1f x %-9.6g= %-9.6g %5.1f x %-7.4g %7.2fx%s",
                      row.name.c_str(), row.before.queries, row.before.subnorm,
                      row.before.total, row.after.queries, row.after.subnorm, row.speedup,
                      row.ok ? "" : "  [MISMATCH]");
        std::cout << line << "\n";
      }
      rows.push_back(json{{"name", row.name},
                          {"queries_unopt", row.before.queries},
                          {"subnorm_unopt", row.before.subnorm},
                          {"queries_opt", row.after.queries},
                          {"subnorm_opt", row.after.subnorm},
                          {"total_unopt", row.before.total},
                          {"total_opt", row.after.total},
                          {"speedup", row.speedup}});
    }
  } else {
    if (!as_json) std::cout << "n     gates        nonsolver_ms   solver_ms\n";
    for (int n = 2; n <= 30; ++n) {
      Program prog = parse(chebyshev_program(n));
      auto t0 = std::chrono::steady_clock::now();
      CompileStats stats;
      CompileOptions opts;
      opts.stats = &stats;
      TypedExpr typed = typecheck(prog);
      RewriteResult opt = apply_rules(typed);
      TypedExpr opt_typed = typecheck_expr(opt.expr, typed.ctx);
      Circuit c = compile(opt_typed, opts);
      double total_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      double nonsolver_ms = (total_s - stats.solver_seconds) * 1e3;
      double solver_ms = stats.solver_seconds * 1e3;
      if (!as_json) {
        char line[120];
        std::snprintf(line, sizeof line, "%-5d %-12zu %-14.3f %-10.3f", n, c.gates.size(),
                      nonsolver_ms, solver_ms);
        std::cout << line << "\n";
      }
      rows.push_back(json{{"n", n}, {"nonsolver_ms", nonsolver_ms}, {"solver_ms", solver_ms}});
    }
  }
  if (as_json) std::cout << rows.dump(2) << "\n";
  if (!all_ok) throw Error(ErrorKind::VerificationFailed, "fixture assertions failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cobble: block-encoding compiler and cost analyzer"};
  app.require_subcommand(1);

  std::string file, method, emit = "qasm", out_path, suite, coeffs, phases_path;
  bool opt = false, as_json = false, trace = false, opaque = false, no_opt = false,
       timing = false;
  uint64_t seed = default_seed();
  double tol = 1e-10;

  auto* check = app.add_subcommand("check", "parse and type-check a program");
  check->add_option("file", file)->required();

  auto* cost = app.add_subcommand("cost", "report queries, subnormalization, ancillas");
  cost->add_option("file", file)->required();
  cost->add_flag("--opt", opt, "report the optimized program");
  cost->add_option("--method", method, "force a Poly method: lcu|horner|qsvt|gqet");
  cost->add_flag("--json", as_json);

  auto* optc = app.add_subcommand("opt", "print the optimized program");
  optc->add_option("file", file)->required();
  optc->add_flag("--trace", trace, "print rewrite steps with costs");

  auto* compile_c = app.add_subcommand("compile", "compile to a circuit artifact");
  compile_c->add_option("file", file)->required();
  compile_c->add_option("--emit", emit, "qasm|json (default qasm)");
  compile_c->add_option("-o,--output", out_path);
  compile_c->add_option("--seed", seed, "oracle instantiation seed");
  compile_c->add_flag("--opaque", opaque, "leave oracles as opaque gates");
  compile_c->add_flag("--no-opt", no_opt, "skip optimization");
  compile_c->add_option("--method", method, "force a Poly method: lcu|horner|qsvt");
  compile_c->add_option("--phases-json", phases_path,
                        "write solved QSP phase sequences (radians + convention) to a file");

  auto* verify_c = app.add_subcommand("verify", "simulate and check the encoded block");
  verify_c->add_option("file", file)->required();
  verify_c->add_option("--seed", seed);
  verify_c->add_flag("--json", as_json);

  auto* bench = app.add_subcommand("bench", "run the benchmark fixtures");
  bench->add_option("--suite", suite, "run a single fixture");
  bench->add_flag("--timing", timing, "compile-time scaling over Chebyshev programs");
  bench->add_flag("--json", as_json);

  auto* phases = app.add_subcommand("phases", "solve QSP phases for comma-separated coeffs");
  phases->add_option("coeffs", coeffs)->required();
  phases->add_option("--tol", tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage errors exit 2; --help exits 0
  }

  try {
    if (check->parsed()) return cmd_check(file);
    if (cost->parsed()) return cmd_cost(file, opt, method, as_json);
    if (optc->parsed()) return cmd_opt(file, trace);
    if (compile_c->parsed())
      return cmd_compile(file, emit, out_path, seed, opaque, no_opt, method, phases_path);
    if (verify_c->parsed()) return cmd_verify(file, seed, as_json);
    if (bench->parsed()) return cmd_bench(suite, timing, as_json);
    if (phases->parsed()) return cmd_phases(coeffs, tol);
  } catch (const Error& e) {
    std::cerr << "error [" << error_kind_name(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
