// Copyright 2026 The qsrand Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qsrand/experiments.hpp"
#include "qsrand/io.hpp"

namespace {

using namespace qsrand;
using io::Json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitExhausted = 3;
constexpr int kExitAcceptance = 4;
constexpr int kDefaultDepth = 20;

struct Options {
  std::string state;
  std::string test;
  std::optional<int> depth;
  std::optional<int> terms;
  std::optional<int> n_cap;
  std::vector<std::string> delta;
  std::string theta;
  std::string s;
  std::string t;
  std::optional<int> window;
  std::uint64_t seed = experiments::kDefaultSeed;
  std::string out;
  std::string format = "csv";
  std::string builder;
  std::string name;
};

/// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw Error(ErrorCode::kParse, "cannot open output file " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

Rational scalar_delta(const Options& o, const char* fallback) {
  if (o.delta.empty()) return Rational::parse(fallback);
  if (o.delta.size() != 1) throw Error(ErrorCode::kPrecondition, "this command takes a single --delta");
  return Rational::parse(o.delta.front());
}

StateSequence require_state(const Options& o, int default_depth) {
  if (o.state.empty()) throw Error(ErrorCode::kPrecondition, "--state is required");
  return io::load_state(o.state, default_depth);
}

int resolved_depth(const Options& o, const StateSequence& s) {
  const int d = o.depth.value_or(s.max_depth());
  if (d < 1 || d > s.max_depth()) {
    throw Error(ErrorCode::kDepthMismatch, "depth " + std::to_string(d) + " outside [1, " + std::to_string(s.max_depth()) + "]");
  }
  return d;
}

/// Small documents verbatim; large ones (explicit matrices, long index lists) by hash.
Json digest(const Json& j) {
  const std::string text = j.dump();
  if (text.size() <= 1024) return j;
  return Json{{"fnv1a", io::spec_hash(j)}, {"bytes", text.size()}};
}

Json base_spec(const std::string& command, const Options& o, const StateSequence& s) {
  return Json{{"command", command}, {"state", digest(io::to_json(s))}, {"seed", o.seed}};
}

int cmd_entropy_profile(const Options& o) {
  const auto s = require_state(o, o.depth.value_or(kDefaultDepth));
  const int depth = resolved_depth(o, s);
  const int window = o.window.value_or(std::min(5, depth));
  Json spec = base_spec("entropy-profile", o, s);
  spec["depth"] = depth;
  spec["window"] = window;
  const auto prof = entropy_profile(s, depth);
  const auto rate = entropy_rate_estimate(prof, window);
  Output out(o.out);
  if (o.format == "json") {
    Json rows = Json::array();
    for (const auto& e : prof.entries) rows.push_back({{"n", e.n}, {"H", e.entropy}, {"H_over_n", e.rate}});
    Json doc{{"spec_hash", io::spec_hash(spec)}, {"spec", spec}, {"rows", rows},
             {"rate_estimate", {{"window", rate.window}, {"from_n", rate.from_n}, {"to_n", rate.to_n}, {"value", rate.value}}}};
    out.stream() << doc.dump(2) << "\n";
    return kExitOk;
  }
  io::CsvWriter w(out.stream(), spec, {"n", "H", "H_over_n"});
  for (const auto& e : prof.entries) w.row({e.n, e.entropy, e.rate});
  w.comment("rate_estimate window=" + std::to_string(rate.window) + " from_n=" + std::to_string(rate.from_n) +
            " to_n=" + std::to_string(rate.to_n) + " value=" + io::format_real(rate.value));
  return kExitOk;
}

std::string resolve_builder(const Options& o) {
  if (!o.builder.empty()) return o.builder;
  if (!o.s.empty()) return "s";
  if (!o.theta.empty()) return "deficiency";
  return "ui";
}

/// The canonical test failed by the block state: G^m on xi(m) qubits.
int emit_block_test(const Options& o, const StateSequence& rho, int terms) {
  const auto t = block_qstest(terms);
  Json spec = base_spec("build-test", o, rho);
  spec["builder"] = "block";
  spec["terms"] = terms;
  Output out(o.out);
  if (o.format == "json") {
    Json doc = io::to_json(t.seq, "qs", terms);
    doc["spec_hash"] = io::spec_hash(spec);
    doc["spec"] = spec;
    out.stream() << doc.dump(2) << "\n";
    return kExitOk;
  }
  io::CsvWriter w(out.stream(), spec, {"m", "n_m", "rank", "tau"});
  for (const auto& term : t.seq.terms(terms)) {
    w.row({term.m, term.qubits, term.projector.rank(), tau_weight(term.projector)});
  }
  return kExitOk;
}

int cmd_build_test(const Options& o) {
  const auto rho = require_state(o, o.depth.value_or(kDefaultDepth));
  const std::string builder = resolve_builder(o);
  const int terms = o.terms.value_or(8);
  const int n_cap = o.n_cap.value_or(o.depth.value_or(rho.max_depth()));
  const Rational delta = scalar_delta(o, "1/2");
  if (builder == "block") return emit_block_test(o, rho, terms);
  BuildOutcome b;
  if (builder == "deficiency") {
    b = build_entropy_deficiency_test(rho, Rational::parse(o.theta.empty() ? "1/2" : o.theta), delta, terms, n_cap);
  } else if (builder == "s") {
    if (o.s.empty() || o.t.empty()) throw Error(ErrorCode::kPrecondition, "the s builder needs --s and --t");
    b = build_s_test(rho, Rational::parse(o.s), Rational::parse(o.t), delta, terms, n_cap);
  } else if (builder == "ui") {
    b = build_ui_test(rho, delta, terms, n_cap);
  } else {
    throw Error(ErrorCode::kPrecondition, "unknown builder '" + builder + "' (deficiency, s, ui, block)");
  }

  Json spec = base_spec("build-test", o, rho);
  spec["builder"] = builder;
  spec["terms"] = terms;
  spec["n_cap"] = n_cap;
  spec["delta"] = delta.str();
  if (builder == "deficiency") spec["theta"] = o.theta.empty() ? "1/2" : o.theta;
  if (builder == "s") {
    spec["s"] = o.s;
    spec["t"] = o.t;
  }

  const bool certified = b.all_certified();
  Output out(o.out);
  if (o.format == "json") {
    Json doc = io::to_json(b);
    doc["spec_hash"] = io::spec_hash(spec);
    doc["spec"] = spec;
    doc["report"] = {{"complete", b.complete()},
                     {"all_certified", certified},
                     {"scan_limit", b.scan_limit},
                     {"limited_by_representation", b.limited_by_representation}};
    out.stream() << doc.dump(2) << "\n";
  } else {
    io::CsvWriter w(out.stream(), spec, {"m", "n_m", "rank", "tau", "budget", "rho", "budget_ok", "weight_ok"});
    for (const auto& c : b.certificates) w.row({c.m, c.qubits, c.rank, c.tau, c.budget, c.weight, c.budget_ok, c.weight_ok});
    w.comment("exhausted_at=" + (b.exhausted_at ? std::to_string(*b.exhausted_at) : std::string("none")) +
              " scan_limit=" + std::to_string(b.scan_limit) +
              " limited_by_representation=" + (b.limited_by_representation ? "1" : "0"));
  }
  if (b.exhausted_at) {
    std::cerr << "search exhausted at m = " << *b.exhausted_at << " (scanned n <= " << b.scan_limit << ")\n";
    return kExitExhausted;
  }
  return certified ? kExitOk : kExitValidation;
}

struct Validity {
  bool valid = true;
  std::string reason;
};

Validity validate_loaded(const io::LoadedTest& t, int terms) {
  if (t.kind == "null") return {};
  if (t.kind == "qs") {
    const auto r = validate_qstest(QSTest{t.seq, t.certificate}, terms);
    return {r.valid, r.reason};
  }
  if (!t.s) return {false, "s-test without s"};
  for (int m = 1; m <= terms; ++m) {
    const auto term = t.seq.term(m);
    const double w = std::exp2(-t.s->value() * term.qubits) * static_cast<double>(term.projector.rank());
    if (!(w < std::ldexp(1.0, -m))) return {false, "2^-s n_m Tr(S^m) >= 2^-m at m = " + std::to_string(m)};
  }
  return {};
}

int cmd_evaluate(const Options& o) {
  if (o.test.empty()) throw Error(ErrorCode::kPrecondition, "--test is required");
  const auto t = io::load_test(o.test);
  const int terms = o.terms.value_or(t.seq.max_terms());
  int needed = 1;
  for (int m = 1; m <= std::min(terms, t.seq.max_terms()); ++m) needed = std::max(needed, t.seq.term(m).qubits);
  const auto rho = require_state(o, o.depth.value_or(needed));
  const Rational delta = scalar_delta(o, "1/2");
  const auto report = evaluate_failure(rho, t.seq, delta.value(), terms);
  const Validity v = validate_loaded(t, terms);

  Json spec = base_spec("evaluate", o, rho);
  spec["test"] = digest(io::to_json(t.seq, t.kind, terms));
  spec["terms"] = terms;
  spec["delta"] = delta.str();

  Output out(o.out);
  if (o.format == "json") {
    Json rows = Json::array();
    for (int m = 1; m <= terms; ++m) {
      const auto i = static_cast<std::size_t>(m - 1);
      rows.push_back({{"m", m}, {"n_m", report.qubits[i]}, {"tau", report.taus[i]}, {"rho", report.weights[i]},
                      {"witness", report.weights[i] > report.delta}});
    }
    Json doc{{"spec_hash", io::spec_hash(spec)}, {"spec", spec}, {"rows", rows}, {"witnesses", report.witnesses},
             {"validation", {{"valid", v.valid}, {"reason", v.reason}}}};
    out.stream() << doc.dump(2) << "\n";
  } else {
    io::CsvWriter w(out.stream(), spec, {"m", "n_m", "tau", "rho", "witness"});
    for (int m = 1; m <= terms; ++m) {
      const auto i = static_cast<std::size_t>(m - 1);
      w.row({m, report.qubits[i], report.taus[i], report.weights[i], report.weights[i] > report.delta});
    }
    w.comment("witnesses=" + std::to_string(report.witnesses.size()) + " valid=" + (v.valid ? "1" : "0") +
              (v.reason.empty() ? "" : " reason=" + v.reason));
  }
  if (!v.valid) {
    std::cerr << "test validation failed: " << v.reason << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

int cmd_ui_profile(const Options& o) {
  const auto rho = require_state(o, o.depth.value_or(kDefaultDepth));
  const int depth = resolved_depth(o, rho);
  std::vector<double> deltas;
  for (const auto& d : o.delta) deltas.push_back(Rational::parse(d).value());
  if (deltas.empty()) deltas = {0.5, 0.25, 0.1};
  const auto prof = ui_profile(step_family(rho, depth), deltas, depth);

  Json spec = base_spec("ui-profile", o, rho);
  spec["depth"] = depth;
  spec["deltas"] = deltas;
  Output out(o.out);
  if (o.format == "json") {
    Json rows = Json::array();
    for (const auto& r : prof.rows) {
      rows.push_back({{"delta", r.delta}, {"level", r.level ? Json(*r.level) : Json(nullptr)}, {"epsilon", r.epsilon},
                      {"sup_tail", r.sup_tail}, {"verdict", r.level ? "modulus" : "none"}});
    }
    out.stream() << Json{{"spec_hash", io::spec_hash(spec)}, {"spec", spec}, {"rows", rows}}.dump(2) << "\n";
    return kExitOk;
  }
  io::CsvWriter w(out.stream(), spec, {"delta", "level", "epsilon", "sup_tail", "verdict"});
  for (const auto& r : prof.rows) {
    w.row({r.delta, r.level ? std::to_string(*r.level) : std::string(), r.epsilon, r.sup_tail, r.level ? "modulus" : "none"});
  }
  return kExitOk;
}

/// Summary without wall-clock values so that replays are byte-identical.
std::string summarize(const std::vector<experiments::Experiment>& exps) {
  std::ostringstream s;
  for (const auto& e : exps) {
    s << (e.passed() ? "PASS" : "FAIL");
    if (e.criterion > 0) s << " criterion " << e.criterion;
    s << ": " << e.name << "\n";
    for (const auto& c : e.checks) {
      s << "    [" << (c.passed ? "ok" : "FAILED") << "] " << c.name;
      if (!c.timing && !c.detail.empty()) s << ": " << c.detail;
      s << "\n";
    }
  }
  return s.str();
}

Json summary_json(const std::vector<experiments::Experiment>& exps) {
  Json arr = Json::array();
  for (const auto& e : exps) {
    Json checks = Json::array();
    for (const auto& c : e.checks) {
      Json j{{"name", c.name}, {"passed", c.passed}};
      if (!c.timing) j["detail"] = c.detail;
      checks.push_back(std::move(j));
    }
    arr.push_back({{"criterion", e.criterion}, {"name", e.name}, {"passed", e.passed()}, {"checks", checks}});
  }
  return arr;
}

int report_experiments(const std::string& command, const std::vector<experiments::Experiment>& exps, const Options& o) {
  const bool ok = std::all_of(exps.begin(), exps.end(), [](const auto& e) { return e.passed(); });
  if (o.out.empty()) {
    if (o.format == "json") {
      std::cout << summary_json(exps).dump(2) << "\n";
    } else {
      std::cout << summarize(exps);
    }
    return ok ? kExitOk : kExitAcceptance;
  }
  const std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);
  for (const auto& e : exps) {
    for (const auto& t : e.tables) {
      const Json spec{{"command", command}, {"name", o.name}, {"table", t.name}, {"seed", o.seed}};
      Output out((dir / (t.name + ".csv")).string());
      io::CsvWriter w(out.stream(), spec, t.columns);
      for (const auto& r : t.rows) w.row(r);
    }
  }
  if (o.format == "json") {
    Output(dir.string() + "/summary.json").stream() << summary_json(exps).dump(2) << "\n";
  } else {
    Output((dir / "summary.txt").string()).stream() << summarize(exps);
  }
  std::cout << (ok ? "PASS" : "FAIL") << " " << (o.name.empty() ? command : o.name) << ": artifacts in " << dir.string()
            << "\n";
  return ok ? kExitOk : kExitAcceptance;
}

int cmd_reproduce(const Options& o) {
  const auto exps = experiments::reproduce(o.name, o.seed);
  if (exps.empty()) throw Error(ErrorCode::kPrecondition, "unknown experiment '" + o.name + "'");
  return report_experiments("reproduce", exps, o);
}

int cmd_acceptance(const Options& o) { return report_experiments("acceptance", experiments::acceptance_suite(o.seed), o); }

void add_common(CLI::App* c, Options& o) {
  c->add_option("--seed", o.seed, "Seed for randomized fixtures");
  c->add_option("--out", o.out, "Output path (directory for reproduce and acceptance)");
  c->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

void add_state(CLI::App* c, Options& o) {
  c->add_option("--state", o.state, "State: inline JSON, builtin:kind(key=value,...), or a JSON file");
  c->add_option("--depth", o.depth, "Depth N (default: the state's N_max)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum Schnorr randomness toolkit"};
  app.require_subcommand(1);
  Options o;

  auto* profile = app.add_subcommand("entropy-profile", "CSV of n, H(rho_n), H(rho_n)/n plus a trailing-window rate");
  add_state(profile, o);
  profile->add_option("--window", o.window, "Trailing window for the rate estimate");
  add_common(profile, o);

  auto* build = app.add_subcommand("build-test", "Construct a test that the state fails");
  add_state(build, o);
  build->add_option("--builder", o.builder, "deficiency, s, ui or block (default inferred from --theta / --s)");
  build->add_option("--terms", o.terms, "Number of terms M");
  build->add_option("--n-cap", o.n_cap, "Largest n to scan");
  build->add_option("--delta", o.delta, "Witness threshold");
  build->add_option("--theta", o.theta, "Entropy deficiency theta");
  build->add_option("--s", o.s, "s for s-tests");
  build->add_option("--t", o.t, "t < s for s-tests");
  add_common(build, o);

  auto* eval = app.add_subcommand("evaluate", "Weight table of a serialized test on a state");
  add_state(eval, o);
  eval->add_option("--test", o.test, "Test: inline JSON or a JSON file")->required();
  eval->add_option("--terms", o.terms, "Number of terms M");
  eval->add_option("--delta", o.delta, "Witness threshold");
  add_common(eval, o);

  auto* ui = app.add_subcommand("ui-profile", "Uniform-integrability modulus over a delta grid");
  add_state(ui, o);
  ui->add_option("--delta", o.delta, "Delta grid, comma separated")->delimiter(',');
  add_common(ui, o);

  auto* repro = app.add_subcommand("reproduce", "Run an experiment and write its CSVs and summary");
  repro->add_option("name", o.name, "Experiment name")->required()->check(CLI::IsMember(experiments::reproduce_names()));
  add_common(repro, o);

  auto* accept = app.add_subcommand("acceptance", "Run every acceptance criterion");
  add_common(accept, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (profile->parsed()) return cmd_entropy_profile(o);
    if (build->parsed()) return cmd_build_test(o);
    if (eval->parsed()) return cmd_evaluate(o);
    if (ui->parsed()) return cmd_ui_profile(o);
    if (repro->parsed()) return cmd_reproduce(o);
    if (accept->parsed()) return cmd_acceptance(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Json::exception& e) {
    std::cerr << "error: json: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitValidation;
}
