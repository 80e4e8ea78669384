// CLI for the ksmpc pipeline; a thin wrapper over the shared C API.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "ksmpc/ksmpc.h"

namespace {

int finish(ksmpc_status s) {
  if (s == KSMPC_OK) return 0;
  std::fprintf(stderr, "error: %s\n", ksmpc_last_error());
  if (s == KSMPC_ERR_CONFIG) return 2;
  return 3;
}

const char* opt_cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman-operator stochastic MPC for lane keeping"};
  app.require_subcommand(1);

  std::string config, dataset, model, sets, out, controller = "ksmpc";
  std::string run_dir, projection;
  uint64_t seed = 0;
  bool seed_given = false;
  int trials = 100000;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "config file (json)");
  };

  auto* collect = app.add_subcommand("collect", "run excitation episodes, save dataset");
  add_config(collect);
  collect->add_option("--out", out, "output dataset csv")->required();

  auto* fit = app.add_subcommand("fit", "EDMD fit of the lifted model");
  add_config(fit);
  fit->add_option("--dataset", dataset, "dataset csv")->required();
  fit->add_option("--out", out, "output model json")->required();

  auto* setscmd = app.add_subcommand("sets", "compute C_T and the robust invariant set");
  add_config(setscmd);
  setscmd->add_option("--model", model, "model json")->required();
  setscmd->add_option("--out", out, "output sets json")->required();
  setscmd->add_option("--projection", projection, "optional 2-D projection csv");

  auto* sim = app.add_subcommand("simulate", "closed-loop episode on the scenario");
  add_config(sim);
  sim->add_option("--model", model, "model json")->required();
  sim->add_option("--sets", sets, "sets json (required for ksmpc)");
  sim->add_option("--controller", controller, "ksmpc | lsmpc | klq");
  sim->add_option("--out", out, "output run log csv")->required();
  sim->add_option("--seed", seed, "override the scenario seed")
      ->each([&](const std::string&) { seed_given = true; });

  auto* cmp = app.add_subcommand("compare", "run all three controllers and report");
  add_config(cmp);
  cmp->add_option("--model", model, "model json")->required();
  cmp->add_option("--sets", sets, "sets json")->required();
  cmp->add_option("--out", out, "output directory")->required();

  auto* rep = app.add_subcommand("report", "metrics and plots from saved run logs");
  add_config(rep);
  rep->add_option("--runs", run_dir, "directory with runlog_*.csv")->required();
  rep->add_option("--out", out, "output directory")->required();

  auto* val = app.add_subcommand("validate", "Monte Carlo chance-constraint check");
  add_config(val);
  val->add_option("--model", model, "model json")->required();
  val->add_option("--out", out, "output json")->required();
  val->add_option("--trials", trials, "number of Monte Carlo trials");

  auto* trk = app.add_subcommand("track", "export the scenario centerline csv");
  add_config(trk);
  trk->add_option("--out", out, "output csv")->required();

  CLI11_PARSE(app, argc, argv);

  if (collect->parsed())
    return finish(ksmpc_collect(opt_cstr(config), out.c_str()));
  if (fit->parsed())
    return finish(ksmpc_fit(opt_cstr(config), dataset.c_str(), out.c_str()));
  if (setscmd->parsed())
    return finish(ksmpc_compute_sets(opt_cstr(config), model.c_str(), out.c_str(),
                                     opt_cstr(projection)));
  if (sim->parsed())
    return finish(ksmpc_simulate(opt_cstr(config), model.c_str(), opt_cstr(sets),
                                 controller.c_str(), seed, seed_given ? 1 : 0,
                                 out.c_str()));
  if (cmp->parsed())
    return finish(ksmpc_compare(opt_cstr(config), model.c_str(), sets.c_str(),
                                out.c_str()));
  if (rep->parsed())
    return finish(ksmpc_report(opt_cstr(config), run_dir.c_str(), out.c_str()));
  if (val->parsed())
    return finish(ksmpc_validate(opt_cstr(config), model.c_str(), out.c_str(),
                                 trials));
  if (trk->parsed())
    return finish(ksmpc_track_csv(opt_cstr(config), out.c_str()));
  return 2;
}
