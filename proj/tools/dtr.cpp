// Command-line front end: simulate benchmark scenarios, fit list-based
// treatment regimes from trajectory CSVs, evaluate regimes by Monte Carlo and
// run the benchmark harness.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "dtr/csv.hpp"
#include "dtr/pipeline.hpp"
#include "dtr/run_config.hpp"
#include "dtr/scenarios.hpp"

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) dtr::fail("io", "cannot open '" + path + "' for writing");
  out << content;
  if (!out) dtr::fail("io", "failed writing '" + path + "'");
}

int cmd_simulate(const std::string& scenario, int n, std::uint64_t seed,
                 const std::string& out_path) {
  const dtr::ScenarioId id = dtr::scenario_from_name(scenario);
  const dtr::TrajectoryDataset data = dtr::generate(dtr::ScenarioSpec{id, n, seed});
  dtr::write_trajectories_csv_file(out_path, data);
  std::cout << "wrote " << data.n() << " trajectories to " << out_path << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& config_path,
            const std::string& out_prefix, std::uint64_t seed_flag, bool seed_flag_set,
            int threads_flag, bool threads_flag_set) {
  dtr::RunConfig cfg;
  if (!config_path.empty()) cfg = dtr::load_run_config(config_path);
  if (seed_flag_set) cfg.seed = seed_flag;
  if (!cfg.seed) dtr::fail("bad_config", "a seed is required (config key 'seed' or --seed)");
  if (threads_flag_set) cfg.threads = threads_flag;
  cfg.fit.seed = *cfg.seed;
  cfg.fit.threads = cfg.threads;
  cfg.fit.krr.threads = cfg.threads;
  cfg.fit.list.threads = cfg.threads;

  dtr::CsvReadReport read_report;
  const dtr::TrajectoryDataset data =
      dtr::read_trajectories_csv_file(data_path, cfg.schema, cfg.missing, &read_report);
  if (read_report.rows_dropped > 0)
    std::cout << "dropped " << read_report.rows_dropped << " incomplete rows of "
              << read_report.rows_read << "\n";

  const dtr::RegimeFit fit = dtr::fit_regime(data, cfg.fit);

  write_file(out_prefix + ".regime.json", dtr::serialize_regime(fit.regime, fit.action_labels));
  write_file(out_prefix + ".report.json", dtr::fit_report_json(fit));
  std::string rendered;
  for (int t = 1; t <= data.stage_count(); ++t) {
    rendered += "Stage " + std::to_string(t) + ":\n";
    rendered += dtr::render_list(fit.regime.stages[static_cast<std::size_t>(t - 1)],
                                 data.history_names(t), data.stage(t).action_labels);
    rendered += "\n\n";
  }
  write_file(out_prefix + ".txt", rendered);
  std::cout << rendered;
  std::cout << "regime written to " << out_prefix << ".regime.json\n";
  return 0;
}

int cmd_evaluate(const std::string& regime_path, const std::string& scenario, int n_test,
                 std::uint64_t seed, int threads) {
  std::ifstream in(regime_path);
  if (!in) dtr::fail("io", "cannot open '" + regime_path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const dtr::ParsedRegime parsed = dtr::deserialize_regime(buf.str());
  const dtr::ScenarioId id = dtr::scenario_from_name(scenario);

  // Regime actions are labels; map them onto the scenario's action indexing.
  dtr::Regime regime = parsed.regime;
  for (std::size_t s = 0; s < regime.stages.size(); ++s) {
    const std::vector<std::string> want =
        dtr::scenario_action_labels(id, static_cast<int>(s) + 1);
    for (dtr::Clause& c : regime.stages[s].clauses) {
      const std::string& label = parsed.action_labels[s][static_cast<std::size_t>(c.action)];
      const auto it = std::find(want.begin(), want.end(), label);
      if (it == want.end())
        dtr::fail("stage_mismatch", "action '" + label + "' is not a scenario " + scenario +
                                        " treatment");
      c.action = static_cast<int>(it - want.begin());
    }
  }

  const double value = dtr::monte_carlo_value(id, regime, n_test, seed, threads);
  std::cout << "mean_outcome " << dtr::format_double(value) << "\n";
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["n_test"] = n_test;
  j["seed"] = seed;
  j["mean_outcome"] = value;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_bench(const std::string& scenario, int n, int replications, const std::string& out_csv,
              const std::string& config_path, int n_test, std::uint64_t seed, int threads) {
  const dtr::ScenarioId id = dtr::scenario_from_name(scenario);
  dtr::RunConfig cfg;
  if (!config_path.empty()) cfg = dtr::load_run_config(config_path);
  cfg.fit.threads = threads;
  cfg.fit.krr.threads = 1;
  cfg.fit.list.threads = 1;

  const dtr::ValueReport report = dtr::run_benchmark(id, n, replications, cfg.fit, n_test, seed);
  const std::string row = dtr::benchmark_csv_row(id, n, report);
  std::ofstream out(out_csv);
  if (!out) dtr::fail("io", "cannot open '" + out_csv + "' for writing");
  out << dtr::kBenchmarkCsvHeader << "\n" << row << "\n";
  std::cout << dtr::kBenchmarkCsvHeader << "\n" << row << "\n";
  if (report.failures > 0) {
    std::cerr << "ERROR replication: " << report.failures << " of " << replications
              << " replications failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"List-based dynamic treatment regimes"};
  app.require_subcommand(1);

  std::string scenario = "I";
  std::string data_path, config_path, out_path, regime_path;
  int n = 100, n_test = 100000, replications = 1, threads = 1;
  std::uint64_t seed = 1;

  auto* sim = app.add_subcommand("simulate", "Draw scenario trajectories to CSV");
  sim->add_option("--scenario", scenario, "Scenario id (I..V)")->required();
  sim->add_option("--n", n, "Number of trajectories")->required();
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--out", out_path, "Output CSV path")->required();

  auto* fit = app.add_subcommand("fit", "Fit a regime from a trajectory CSV");
  fit->add_option("--data", data_path, "Input CSV")->required();
  fit->add_option("--config", config_path, "Configuration file");
  fit->add_option("--out", out_path, "Output path prefix")->required();
  auto* fit_seed = fit->add_option("--seed", seed, "RNG seed (overrides config)");
  auto* fit_threads = fit->add_option("--threads", threads, "Worker cap");

  auto* eval = app.add_subcommand("evaluate", "Monte Carlo value of a regime JSON");
  eval->add_option("--data", regime_path, "Regime JSON path")->required();
  eval->add_option("--scenario", scenario, "Scenario id (I..V)")->required();
  eval->add_option("--n-test", n_test, "Test trajectories");
  eval->add_option("--seed", seed, "RNG seed");
  eval->add_option("--threads", threads, "Worker cap");

  auto* bench = app.add_subcommand("bench", "Replicated fit/evaluate benchmark");
  bench->add_option("--scenario", scenario, "Scenario id (I..V)")->required();
  bench->add_option("--n", n, "Training sample size")->required();
  bench->add_option("--replications", replications, "Replication count")->required();
  bench->add_option("--out", out_path, "Output CSV path")->required();
  bench->add_option("--config", config_path, "Configuration file");
  bench->add_option("--n-test", n_test, "Test trajectories per replication");
  bench->add_option("--seed", seed, "RNG seed");
  bench->add_option("--threads", threads, "Worker cap");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(scenario, n, seed, out_path);
    if (fit->parsed())
      return cmd_fit(data_path, config_path, out_path, seed, fit_seed->count() > 0, threads,
                     fit_threads->count() > 0);
    if (eval->parsed()) return cmd_evaluate(regime_path, scenario, n_test, seed, threads);
    if (bench->parsed())
      return cmd_bench(scenario, n, replications, out_path, config_path, n_test, seed, threads);
  } catch (const dtr::Error& e) {
    std::cerr << "ERROR " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ERROR internal: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
