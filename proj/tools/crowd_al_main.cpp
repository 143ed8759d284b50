// crowd-al: run active-learning experiments or a plain full-pool fit.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crowd_al/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> data;
  std::optional<std::string> strategy;
  std::optional<std::size_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::string> out;
  std::optional<std::string> format;
};

crowd_al::ExperimentConfig resolve(const Overrides& o) {
  crowd_al::ExperimentConfig c;
  if (!o.config.empty()) c = crowd_al::load_config(o.config);
  if (o.data) c.dataset_path = *o.data;
  if (o.strategy) c.strategy = crowd_al::parse_strategy(*o.strategy);
  if (o.budget) c.budget = *o.budget;
  if (o.seed) c.base_seed = *o.seed;
  if (o.reps) c.repetitions = *o.reps;
  if (o.out) c.output_path = *o.out;
  if (o.format) c.format = crowd_al::parse_record_format(*o.format);
  c.validate();
  return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--data", o.data, "CSV dataset (final column is the target)");
  cmd->add_option("--seed", o.seed, "Base seed; repetition r uses seed + r");
  cmd->add_option("--reps", o.reps, "Number of repetitions");
}

int run(const Overrides& o) {
  const auto config = resolve(o);
  const auto result = crowd_al::run_experiment(config);
  if (!config.output_path.empty()) {
    crowd_al::emit_records(result.records, config.output_path, config.format);
  } else {
    crowd_al::write_records(result.records, std::cout, config.format);
  }
  for (const auto& s : result.summaries) {
    std::printf("rep=%zu strategy=%s rounds=%zu final_rmse=%.6f regret=%.6f discarded=%zu paid=%.6f%s\n",
                s.rep, std::string(crowd_al::to_string(config.strategy)).c_str(), s.rounds,
                s.final_rmse, s.regret, s.discarded, s.paid, s.truncated ? " truncated=1" : "");
  }
  return 0;
}

int fit(const Overrides& o) {
  const auto config = resolve(o);
  const auto raw = crowd_al::load_dataset(config);
  const auto fits = crowd_al::run_fit(config, raw);
  double total = 0.0;
  for (const auto& f : fits) {
    std::printf("rep=%zu rmse=%.6f scale=%g sweeps=%zu converged=%d\n", f.rep, f.rmse, f.scale,
                f.sweeps, f.converged ? 1 : 0);
    total += f.rmse;
  }
  std::printf("mean_rmse=%.6f\n", total / static_cast<double>(fits.size()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian crowd regression with active learning and Robust-UCB annotator selection"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run_cmd = app.add_subcommand("run", "Run an active-learning experiment");
  run_cmd->add_option("--config", run_opts.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  add_common(run_cmd, run_opts);
  run_cmd->add_option("--strategy", run_opts.strategy, "robust_ucb|random|instance_only|single_source");
  run_cmd->add_option("--budget", run_opts.budget, "Number of active-learning rounds");
  run_cmd->add_option("--out", run_opts.out, "Record file (stdout when omitted)");
  run_cmd->add_option("--format", run_opts.format, "csv|jsonl");

  Overrides fit_opts;
  auto* fit_cmd = app.add_subcommand("fit", "Fit on the full labeled pool and report test RMSE");
  fit_cmd->add_option("--config", fit_opts.config, "JSON experiment config")->check(CLI::ExistingFile);
  add_common(fit_cmd, fit_opts);
  fit_cmd->get_option("--data")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run_cmd) return run(run_opts);
    return fit(fit_opts);
  } catch (const std::exception& e) {
    std::cerr << "crowd-al: " << e.what() << '\n';
    return 1;
  }
}
