#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "benign/config.hpp"
#include "benign/data_model.hpp"
#include "benign/diagnostics.hpp"
#include "benign/evaluation.hpp"
#include "benign/network.hpp"

namespace benign {

/// Theory-side quantities derived from one trajectory.
struct RunAnalysis {
  std::optional<double> delta_hat;
  std::optional<double> delta;  // override if given, else delta_hat
  TheoryParams params;
  double mass_fraction = 0.5;
  long burn_in = 0;
  StoppingTimes stops;
  std::optional<long> t_v;
  std::array<CrossingReport, 2> crossings;  // per label slot; single-data uses slot 0 only
  std::array<std::optional<double>, 2> beta_star_0;
  int accumulation_label = 1;
  long accumulation_first = 0;
  long accumulation_last = -1;
  std::array<Accumulation, 2> accumulation;  // per label slot
  std::optional<long> sign_violation;
  std::optional<EtaThresholds> thresholds;
  double psi_initial = 0.0;
  double psi_final = 0.0;
  double psi_max = 0.0;
  double upsilon_max_to_t_v = 0.0;
};

RunAnalysis analyze(const std::vector<TraceRecord>& trace, const Weights<double>& initial,
                    const Weights<double>& final_weights, const Dataset<double>& dataset,
                    const ExperimentConfig& config, double eta);

struct RunOutcome {
  double eta = 0.0;
  std::uint64_t seed = 0;
  Dataset<double> dataset;
  Weights<double> initial;
  Weights<double> final_weights;
  std::vector<TraceRecord> trace;
  std::vector<NeuronSnapshot> snapshots;
  RunAnalysis analysis;
  EvalReport eval;
  nlohmann::json report;
};

/// Directory name of one run, e.g. "eta1.2_seed0".
std::string run_name(double eta, std::uint64_t seed);

Dataset<double> training_set(const ExperimentConfig& config, std::uint64_t seed);
Weights<double> initial_weights(const ExperimentConfig& config, std::uint64_t seed);

/// Generate, train, analyze, evaluate. Nothing is written.
RunOutcome run_one(const ExperimentConfig& config, double eta, std::uint64_t seed);

/// trace.csv, neurons.csv, report.json, weights.json into `dir`.
void write_run(const RunOutcome& run, const std::filesystem::path& dir);

/// Aggregates by eta. A pure function of the report objects.
nlohmann::json summarize(const std::vector<nlohmann::json>& reports);

struct ExperimentResult {
  std::vector<nlohmann::json> reports;  // eta-major, then seed order
  nlohmann::json summary;
};

/// Every (eta, seed) pair; writes config.json, one directory per run and
/// summary.json under config.out_dir when `write` is set.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write = true);

}  // namespace benign
