#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rbf/analyze.hpp"
#include "rbf/errors.hpp"
#include "rbf/oracle.hpp"
#include "rbf/report.hpp"
#include "rbf/simulate.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitOracle = 3;
constexpr int kExitCapacity = 4;

struct RbfOptions {
  double a = 1.0;
  double rho = 0.3;
  std::string weight_scheme = "sd-ratio";
  std::string parameter_mode = "collapse";

  rbf::RbfConfig to_config() const {
    rbf::RbfConfig config;
    if (!(a >= 0.0 && a <= 1.0)) throw rbf::ValidationError("--a must be in [0, 1]");
    if (!(rho >= 0.0 && rho <= 1.0)) throw rbf::ValidationError("--rho must be in [0, 1]");
    config.a = a;
    config.rho = rho;
    if (weight_scheme == "sd-ratio") {
      config.weight_scheme = rbf::WeightScheme::kSdRatio;
    } else if (weight_scheme == "inverse-variance") {
      config.weight_scheme = rbf::WeightScheme::kInverseVariance;
    } else {
      throw rbf::ValidationError("--weight-scheme must be sd-ratio or inverse-variance");
    }
    if (parameter_mode == "collapse") {
      config.parameter_mode = rbf::ParameterMode::kCollapse;
    } else if (parameter_mode == "jeffreys") {
      config.parameter_mode = rbf::ParameterMode::kJeffreys;
    } else {
      throw rbf::ValidationError("--parameter-mode must be collapse or jeffreys");
    }
    return config;
  }
};

void add_rbf_options(CLI::App* cmd, RbfOptions& options) {
  cmd->add_option("--a", options.a, "Mixing weight between flat and distance prior")
      ->capture_default_str();
  cmd->add_option("--rho", options.rho, "Correlation threshold for auxiliary blocks")
      ->capture_default_str();
  cmd->add_option("--weight-scheme", options.weight_scheme, "sd-ratio | inverse-variance")
      ->capture_default_str();
  cmd->add_option("--parameter-mode", options.parameter_mode, "collapse | jeffreys")
      ->capture_default_str();
}

ordered_json rbf_json(const rbf::RbfConfig& config) {
  return {{"a", config.a},
          {"rho", config.rho},
          {"weight_scheme",
           config.weight_scheme == rbf::WeightScheme::kSdRatio ? "sd-ratio" : "inverse-variance"},
          {"parameter_mode",
           config.parameter_mode == rbf::ParameterMode::kCollapse ? "collapse" : "jeffreys"}};
}

void write_reports(const std::string& out_dir, const std::vector<rbf::ReplicationRecord>& records,
                   const ordered_json& run_info, const std::string& label_header = "",
                   const std::vector<std::string>& labels = {}) {
  std::filesystem::create_directories(out_dir);
  const rbf::MetricsSummary summary = rbf::aggregate(records);
  ordered_json doc = rbf::summary_json(summary);
  doc["run"] = run_info;
  rbf::write_file(out_dir + "/reps.csv", rbf::rep_csv_string(records, label_header, labels));
  rbf::write_file(out_dir + "/tidy.csv", rbf::tidy_csv_string(records));
  rbf::write_file(out_dir + "/summary.json", doc.dump(2) + "\n");
}

int run_simulate(const rbf::ScenarioConfig& config, int threads, const std::string& out_dir) {
  const auto records = rbf::run_scenario(config, threads);
  ordered_json run_info = {{"mode", "simulate"},
                           {"scenario", config.scenario},
                           {"seed", config.seed},
                           {"reps", config.reps},
                           {"truncation", rbf::truncation_name(config.truncation)},
                           {"rbf", rbf_json(config.rbf)}};
  write_reports(out_dir, records, run_info);
  std::cout << "wrote " << out_dir << "/reps.csv, tidy.csv, summary.json\n";
  return kExitOk;
}

int run_analyze(const rbf::AnalyzeConfig& config, int threads, const std::string& out_dir) {
  const rbf::AnalyzeResult result = rbf::run_analyze(config, threads);
  ordered_json run_info = {{"mode", "analyze"},
                           {"data", config.data_path},
                           {"primary", config.primary_id},
                           {"subsample", config.subsample_n},
                           {"whole_supplements", config.whole_supplements},
                           {"seed", config.seed},
                           {"reps", config.reps},
                           {"rbf", rbf_json(config.rbf)}};
  write_reports(out_dir, result.records, run_info, "primary", result.record_labels);
  rbf::write_file(out_dir + "/weights_mem.csv",
                  rbf::borrow_weights_csv(result.source_ids, result.primaries,
                                          result.mem_borrow_weights));
  rbf::write_file(out_dir + "/weights_rbf.csv",
                  rbf::borrow_weights_csv(result.source_ids, result.primaries,
                                          result.rbf_borrow_weights));
  std::cout << "wrote " << out_dir
            << "/reps.csv, tidy.csv, summary.json, weights_mem.csv, weights_rbf.csv\n";
  return kExitOk;
}

int run_validate(const rbf::OracleSuiteConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const rbf::OracleSuiteResult result = rbf::run_oracle_suite(config);
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                            start);
  for (const auto& check : result.checks) {
    std::printf("[%s] %s: worst %.3g (limit %.3g)\n", check.passed ? "ok" : "FAIL",
                check.name.c_str(), check.worst, check.limit);
  }
  std::printf("%d instances in %.1fs\n", config.instances,
              static_cast<double>(elapsed.count()) / 1000.0);
  return result.passed() ? kExitOk : kExitOracle;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multisource exchangeability borrowing with distance-embedded priors"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file (flags win)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Subsample-and-repeat analysis of a CSV dataset");
  analyze->fallthrough();  // lets --config appear after the subcommand
  rbf::AnalyzeConfig analyze_config;
  RbfOptions analyze_rbf;
  int analyze_threads = 1;
  std::string analyze_out = "rbf-report";
  analyze->add_option("--data", analyze_config.data_path, "Long-format CSV file")->required();
  analyze->add_option("--primary", analyze_config.primary_id,
                      "Primary source id, or 'all' to rotate through every source")
      ->required();
  analyze->add_option("--subsample", analyze_config.subsample_n,
                      "Target samples drawn per source per replication")
      ->capture_default_str();
  analyze->add_flag("--whole-supplements", analyze_config.whole_supplements,
                    "Use supplement samples whole instead of subsampling them");
  analyze->add_option("--reps", analyze_config.reps, "Replications per primary")
      ->capture_default_str();
  analyze->add_option("--seed", analyze_config.seed, "Base seed")->capture_default_str();
  analyze->add_option("--out", analyze_out, "Output directory")->capture_default_str();
  analyze->add_option("--threads", analyze_threads, "Worker threads")->capture_default_str();
  add_rbf_options(analyze, analyze_rbf);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a replication study on generated data");
  simulate->fallthrough();
  rbf::ScenarioConfig scenario_config;
  RbfOptions simulate_rbf;
  simulate_rbf.rho = 0.0;  // the study default; presets and --rho override
  int simulate_threads = 1;
  std::string simulate_out = "rbf-report";
  std::string correlation_matrix_path;
  std::string base_dist = "normal";
  std::string truncation = "primary-above";
  std::string preset;
  auto* scenario_opt =
      simulate->add_option("--scenario", scenario_config.scenario, "Scenario 1, 2, or 3");
  simulate->add_option("--reps", scenario_config.reps, "Replication count")
      ->capture_default_str();
  simulate->add_option("--seed", scenario_config.seed, "Base seed")->capture_default_str();
  simulate->add_option("--out", simulate_out, "Output directory")->capture_default_str();
  simulate->add_option("--threads", simulate_threads, "Worker threads")->capture_default_str();
  simulate->add_option("--correlations", scenario_config.correlations,
                       "Target correlations of the auxiliary blocks")
      ->delimiter(',')
      ->capture_default_str();
  simulate->add_option("--exchangeable", scenario_config.num_exchangeable,
                       "Exchangeable supplemental sources")
      ->capture_default_str();
  simulate->add_option("--nonexchangeable", scenario_config.num_nonexchangeable,
                       "Nonexchangeable supplemental sources")
      ->capture_default_str();
  simulate->add_option("--n-primary", scenario_config.n_primary, "Primary sample size")
      ->capture_default_str();
  simulate->add_option("--supp-min", scenario_config.supp_size_min, "Smallest supplement size")
      ->capture_default_str();
  simulate->add_option("--supp-max", scenario_config.supp_size_max, "Largest supplement size")
      ->capture_default_str();
  simulate->add_option("--mu0", scenario_config.mu_exchangeable, "Exchangeable mean")
      ->capture_default_str();
  simulate->add_option("--mu1", scenario_config.mu_nonexchangeable, "Nonexchangeable mean")
      ->capture_default_str();
  simulate->add_option("--base-dist", base_dist, "Scenario 2 base draws: normal | exponential")
      ->capture_default_str();
  simulate->add_option("--correlation-matrix", correlation_matrix_path,
                       "Scenario 2: full correlation matrix file (default: single-factor)");
  auto* truncation_opt = simulate->add_option(
      "--truncation", truncation,
      "Scenario 3 layout: primary-above | primary-below | supp-unif | supp-mixed");
  auto* preset_opt = simulate->add_option("--preset", preset,
                                          "Named scenario-3 preset (see data/scenario3_presets.tsv)");
  auto* rho_opt = simulate->add_option("--rho", simulate_rbf.rho,
                                       "Correlation threshold for auxiliary blocks")
                      ->capture_default_str();
  simulate->add_option("--a", simulate_rbf.a, "Mixing weight between flat and distance prior")
      ->capture_default_str();
  simulate->add_option("--weight-scheme", simulate_rbf.weight_scheme,
                       "sd-ratio | inverse-variance")
      ->capture_default_str();
  auto* mode_opt = simulate->add_option("--parameter-mode", simulate_rbf.parameter_mode,
                                        "collapse | jeffreys (scenario 2 defaults to jeffreys)");

  // validate
  auto* validate = app.add_subcommand("validate", "Cross-check closed forms against brute force");
  validate->fallthrough();
  rbf::OracleSuiteConfig oracle_config;
  bool quick = false;
  validate->add_flag("--quick", quick, "Run 25 instances instead of 200");
  validate->add_option("--instances", oracle_config.instances, "Random instance count")
      ->capture_default_str();
  validate->add_option("--seed", oracle_config.seed, "Base seed")->capture_default_str();
  validate->add_option("--draws", oracle_config.kl_draws, "Monte Carlo draws per KL check")
      ->capture_default_str();
  validate
      ->add_option("--self-test-perturb", oracle_config.perturb_log_marginal,
                   "Offset the closed-form log marginal to prove the suite catches errors")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (analyze->parsed()) {
      analyze_config.rbf = analyze_rbf.to_config();
      return run_analyze(analyze_config, analyze_threads, analyze_out);
    }
    if (simulate->parsed()) {
      if (!preset.empty()) {
        const auto& presets = rbf::scenario3_presets();
        const auto it = std::find_if(presets.begin(), presets.end(),
                                     [&](const auto& p) { return p.name == preset; });
        if (it == presets.end()) throw rbf::ValidationError("unknown preset '" + preset + "'");
        if (scenario_opt->count() > 0 && scenario_config.scenario != 3) {
          throw rbf::ValidationError("presets apply to scenario 3 only");
        }
        scenario_config.scenario = 3;
        scenario_config.truncation = it->truncation;
        if (rho_opt->count() == 0) simulate_rbf.rho = it->rho;
        if (truncation_opt->count() > 0) {
          throw rbf::ValidationError("--preset and --truncation are mutually exclusive");
        }
      } else {
        if (scenario_opt->count() == 0) {
          throw rbf::ValidationError("simulate needs --scenario or --preset");
        }
        scenario_config.truncation = scenario_config.scenario == 3
                                         ? rbf::truncation_from_name(truncation)
                                         : rbf::Truncation::kNone;
      }
      if (base_dist == "normal") {
        scenario_config.base_dist = rbf::BaseDist::kNormal;
      } else if (base_dist == "exponential") {
        scenario_config.base_dist = rbf::BaseDist::kExponential;
      } else {
        throw rbf::ValidationError("--base-dist must be normal or exponential");
      }
      if (!correlation_matrix_path.empty()) {
        scenario_config.correlation_matrix = rbf::load_matrix(correlation_matrix_path);
      }
      if (scenario_config.scenario == 2 && mode_opt->count() == 0) {
        simulate_rbf.parameter_mode = "jeffreys";
      }
      scenario_config.rbf = simulate_rbf.to_config();
      return run_simulate(scenario_config, simulate_threads, simulate_out);
    }
    if (validate->parsed()) {
      if (quick) oracle_config.instances = std::min(oracle_config.instances, 25);
      return run_validate(oracle_config);
    }
  } catch (const rbf::CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const rbf::OracleFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOracle;
  } catch (const rbf::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const rbf::DegenerateWeightsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
