// specflow command line: data generation, evolution, diagnostics, property
// suites and report regeneration.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "specflow/harness.hpp"

namespace {

using namespace specflow;

struct CommonOpts {
  std::string config;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
};

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig cfg = o.preset.empty() ? RunConfig() : RunConfig::preset(o.preset);
  if (!o.config.empty()) cfg.merge_file(o.config);
  if (!o.out.empty()) cfg.io_outdir = o.out;
  if (o.has_seed) cfg.data_seed = o.seed;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config, "configuration file (dotted keys)");
  cmd->add_option("--preset", o.preset,
                  "preset name: cascade-default, steady-shear, rates-default");
  cmd->add_option("--out", o.out, "output directory (overrides io.outdir)");
  cmd->add_option("--seed", o.seed, "data seed (overrides data.seed)")
      ->each([&o](const std::string&) { o.has_seed = true; });
}

int cmd_gen_data(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  std::filesystem::create_directories(cfg.io_outdir);
  Grid2D grid(cfg.grid_n, cfg.grid_L);
  DataSpec ds;
  ds.kind = cfg.data_kind;
  ds.s = cfg.data_s;
  ds.seed = cfg.data_seed;
  ds.amplitude = cfg.data_amplitude;
  ds.band_limit = cfg.solver_dealias ? cfg.grid_n / 3 : 0;
  GeneratedData data = generate_initial_data(ds, grid);
  write_pcf1(cfg.io_outdir + "/omega0.pcf1", inverse(data.omega0));
  write_tail_csv(cfg.io_outdir + "/tail_omega0.csv", data.ctx.reference);
  if (!data.ctx.C.empty())
    write_slow_varying_csv(cfg.io_outdir + "/slow_varying.csv", data.ctx);
  std::printf("wrote %s/omega0.pcf1  |omega0| = %.6g  tail exponent = %.3f\n",
              cfg.io_outdir.c_str(), l2_norm(data.omega0),
              data.fitted_tail_exponent);
  return 0;
}

int cmd_evolve(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  run_evolve(cfg);
  std::printf("run log written to %s/runlog.csv\n", cfg.io_outdir.c_str());
  return 0;
}

int cmd_diagnose(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  ExperimentResult res = run_experiment(cfg);
  std::printf("pairing series and verdicts written under %s\n",
              res.outdir.c_str());
  std::printf("verdicts: %s\n", res.verdicts_ok ? "pass" : "FAIL");
  return res.verdicts_ok ? 0 : 1;
}

int cmd_verify(const CommonOpts& o, const std::string& suite) {
  RunConfig cfg = resolve_config(o);
  bool ok = verify_suite(suite, cfg);
  std::printf("suite %s: %s\n", suite.c_str(), ok ? "pass" : "FAIL");
  return ok ? 0 : 1;
}

int cmd_report(const CommonOpts& o) {
  RunConfig cfg = resolve_config(o);
  std::ifstream in(cfg.io_outdir + "/pairing.csv");
  if (!in) {
    std::fprintf(stderr, "no pairing.csv under %s; run diagnose first\n",
                 cfg.io_outdir.c_str());
    return 1;
  }
  std::string line;
  std::getline(in, line);  // header
  std::map<double, std::pair<double, double>> by_eps;  // eps -> (max |res|/bound, rows)
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    double vals[7];
    for (int i = 0; i < 7; ++i) {
      std::getline(ls, tok, ',');
      vals[i] = std::stod(tok);
    }
    std::getline(ls, tok, ',');
    bool trusted = tok == "1";
    if (!trusted || vals[5] <= 0.0) continue;
    double res = std::abs(vals[4] - vals[3]) / vals[5];
    auto& slot = by_eps[vals[1]];
    slot.first = std::max(slot.first, res);
    slot.second += 1.0;
  }
  std::printf("eps, fitted kappa (trusted rows)\n");
  for (const auto& [eps, v] : by_eps)
    std::printf("%.6g, %.6g  (%d rows)\n", eps, v.first, int(v.second));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudo-spectral 2D Euler/gSQG simulator with frequency-cascade diagnostics"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string suite = "appendix-a";

  CLI::App* gen = app.add_subcommand("gen-data", "generate initial vorticity");
  add_common(gen, opts);
  CLI::App* evo = app.add_subcommand("evolve", "advance the solver, write snapshots and run log");
  add_common(evo, opts);
  CLI::App* diag = app.add_subcommand("diagnose", "full lockstep run with pairing series and verdicts");
  add_common(diag, opts);
  CLI::App* ver = app.add_subcommand("verify", "run a named property suite");
  add_common(ver, opts);
  ver->add_option("suite", suite, "appendix-a, rates or cascade");
  CLI::App* rep = app.add_subcommand("report", "summarize an existing pairing series");
  add_common(rep, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(opts);
    if (evo->parsed()) return cmd_evolve(opts);
    if (diag->parsed()) return cmd_diagnose(opts);
    if (ver->parsed()) return cmd_verify(opts, suite);
    if (rep->parsed()) return cmd_report(opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
