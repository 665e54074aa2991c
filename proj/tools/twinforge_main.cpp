// twinforge command-line driver.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "twinforge/error.hpp"
#include "twinforge/pipeline.hpp"

namespace tp = twinforge::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Oven digital-twin experiments: signal bank, FOM runs, ROM training and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--jobs", jobs, "parallel tasks")->check(CLI::PositiveNumber);
  };

  std::vector<std::string> signal_ids, model_ids;
  std::string testset = "Mixed";

  auto* synth = app.add_subcommand("synth", "write the signal bank");
  auto* simulate = app.add_subcommand("simulate", "run the full-order model (cached)");
  simulate->add_option("--signal", signal_ids, "signal ids (default: all)");
  auto* train = app.add_subcommand("train", "train 1-signal ROMs");
  train->add_option("--signal", signal_ids, "signal ids (default: every signal outside the test sets)");
  auto* evaluate = app.add_subcommand("eval", "evaluate ROMs on a test set");
  evaluate->add_option("--model", model_ids, "model ids (default: all)");
  evaluate->add_option("--testset", testset, "test set id")->capture_default_str();
  auto* testset_cmd = app.add_subcommand("testset", "select chi-square fair test sets");
  auto* kpi = app.add_subcommand("kpi", "signal KPIs");
  auto* correlate = app.add_subcommand("correlate", "KPI-to-error Pearson table");
  auto* pipeline = app.add_subcommand("pipeline", "every stage plus the report");
  for (auto* sub : {synth, simulate, train, evaluate, testset_cmd, kpi, correlate, pipeline}) common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = tp::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    const tp::Workspace ws(cfg);

    if (synth->parsed()) {
      tp::cmd_synth(ws);
    } else if (simulate->parsed()) {
      const auto s = tp::cmd_simulate(ws, signal_ids);
      for (const auto& [id, msg] : s.failures) std::cerr << "failed: " << id << ": " << msg << '\n';
      return s.failures.empty() ? 0 : 1;
    } else if (train->parsed()) {
      if (signal_ids.empty()) signal_ids = tp::training_candidates(ws, tp::load_testsets(ws));
      const auto done = tp::cmd_train(ws, signal_ids);
      for (const auto& d : done) std::cout << d.rom_id << " train RMSE " << d.train_rmse << " K\n";
    } else if (evaluate->parsed()) {
      if (model_ids.empty()) model_ids = ws.model_ids();
      const auto sets = tp::load_testsets(ws);
      tp::cmd_eval(ws, model_ids, tp::find_testset(sets, testset));
    } else if (testset_cmd->parsed()) {
      for (const auto& t : tp::cmd_testset(ws)) {
        std::cout << t.id << ": " << t.signal_ids.size() << " signals";
        if (t.chi2) std::cout << ", chi2 p = " << t.chi2->p_value;
        std::cout << '\n';
      }
    } else if (kpi->parsed()) {
      tp::cmd_kpi(ws);
    } else if (correlate->parsed()) {
      if (!tp::cmd_correlate(ws)) return 1;
    } else if (pipeline->parsed()) {
      return tp::cmd_pipeline(ws);
    }
  } catch (const twinforge::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
