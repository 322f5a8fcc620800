#include "benign/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "benign/io.hpp"
#include "benign/random.hpp"
#include "benign/trainer.hpp"

namespace benign {

using nlohmann::json;

namespace {

json opt(const std::optional<long>& x) { return x ? json(*x) : json(nullptr); }
json opt(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

std::string run_name(double eta, std::uint64_t seed) {
  return "eta" + format_double(eta) + "_seed" + std::to_string(seed);
}

Dataset<double> training_set(const ExperimentConfig& config, std::uint64_t seed) {
  const auto basis = config.basis();
  if (config.mode == TrainMode::SingleData) {
    auto ds = single_sample_dataset(basis, 1);
    ds.seed = seed;
    return ds;
  }
  return sample_dataset(basis, config.n, config.weak_mode(), config.label_mode, seed, "dataset");
}

Weights<double> initial_weights(const ExperimentConfig& config, std::uint64_t seed) {
  auto rng = CounterRng::derive(seed, "init");
  return init_weights(config.m, config.d, config.resolved_sigma_0(), rng);
}

RunAnalysis analyze(const std::vector<TraceRecord>& trace, const Weights<double>& initial,
                    const Weights<double>& final_weights, const Dataset<double>& dataset,
                    const ExperimentConfig& config, double eta) {
  RunAnalysis a;
  const bool single = config.mode == TrainMode::SingleData;
  a.mass_fraction = single ? 1.0 : 0.5;
  a.burn_in = config.burn_in();
  const long steps = static_cast<long>(trace.size());

  try {
    // single-data: only the branch of the one label is ever trained
    const auto label = single ? std::optional<int>(dataset.samples.front().label) : std::nullopt;
    a.delta_hat = estimate_delta(trace, a.burn_in, a.mass_fraction, label).delta;
  } catch (const std::domain_error&) {
    // too short to see a post-transient strong step
  }
  a.delta = config.delta_override ? config.delta_override : a.delta_hat;
  a.params = TheoryParams::make(a.delta.value_or(std::numeric_limits<double>::quiet_NaN()), eta,
                                config.m, dataset.basis.u_norm(), dataset.basis.v_norm(), config.p);

  if (a.delta) {
    a.stops = stopping_times(trace, a.params, a.mass_fraction);
    a.t_v = single ? a.stops.t_v[static_cast<std::size_t>(branch_slot(dataset.samples.front().label))]
                   : a.stops.first_t_v();
    if (*a.delta > 0.0 && *a.delta < 1.0) a.thresholds = necessary_eta(*a.delta);
  }

  if (single) {
    a.crossings[0] = crossings(trace);
  } else {
    for (int slot = 0; slot < 2; ++slot)
      a.crossings[static_cast<std::size_t>(slot)] = crossings(trace, {branch_label(slot), true});
  }

  for (int slot = 0; slot < 2; ++slot)
    a.beta_star_0[static_cast<std::size_t>(slot)] = beta_star(initial, dataset.basis, branch_label(slot));

  a.accumulation_first = a.burn_in;
  a.accumulation_last = a.t_v ? *a.t_v : steps - 1;
  if (a.t_v && a.stops.t_v[1] && (!a.stops.t_v[0] || *a.stops.t_v[1] < *a.stops.t_v[0]))
    a.accumulation_label = -1;
  if (a.delta) {
    for (int slot = 0; slot < 2; ++slot)
      a.accumulation[static_cast<std::size_t>(slot)] = residual_accumulation(
          trace, branch_label(slot), a.accumulation_first, a.accumulation_last, a.params);
  }

  a.sign_violation = sign_stability(trace);
  if (!trace.empty()) a.psi_initial = trace.front().psi;
  a.psi_final = stage_trackers(final_weights, dataset).psi;
  a.psi_max = a.psi_final;
  const long upto = a.t_v ? *a.t_v : steps - 1;
  for (const auto& r : trace) {
    a.psi_max = std::max(a.psi_max, r.psi);
    if (r.t <= upto) a.upsilon_max_to_t_v = std::max(a.upsilon_max_to_t_v, r.upsilon);
  }
  return a;
}

namespace {

json accumulation_json(const Accumulation& acc) {
  return {{"sum", acc.sum}, {"floor", acc.floor}, {"satisfied", acc.satisfied}};
}

json build_report(const RunOutcome& r, const ExperimentConfig& config) {
  const auto& a = r.analysis;
  const bool single = config.mode == TrainMode::SingleData;
  const int acc_slot = branch_slot(a.accumulation_label);

  json j;
  j["name"] = run_name(r.eta, r.seed);
  j["seed"] = r.seed;
  j["eta"] = r.eta;
  j["mode"] = single ? "single" : "multi";
  j["steps"] = static_cast<long>(r.trace.size());
  j["delta_hat"] = opt(a.delta_hat);
  j["delta"] = opt(a.delta);
  j["eta_tilde"] = a.params.eta_tilde;
  j["alpha"] = a.params.alpha;
  j["t_v_plus"] = opt(a.stops.t_v[0]);
  j["t_v_minus"] = opt(a.stops.t_v[1]);
  j["t_v"] = opt(a.t_v);
  j["t_xi"] = opt(a.stops.t_xi);
  if (single) {
    j["crossings_up"] = a.crossings[0].up;
    j["crossings_down"] = a.crossings[0].down;
    j["crossings_alternate"] = a.crossings[0].alternates();
  } else {
    j["crossings_up"] = {{"plus", a.crossings[0].up}, {"minus", a.crossings[1].up}};
    j["crossings_down"] = {{"plus", a.crossings[0].down}, {"minus", a.crossings[1].down}};
    j["crossings_alternate"] = a.crossings[0].alternates() && a.crossings[1].alternates();
  }
  j["beta_star_plus"] = opt(a.beta_star_0[0]);
  j["beta_star_minus"] = opt(a.beta_star_0[1]);
  if (a.delta) {
    j["accumulation"] = accumulation_json(a.accumulation[static_cast<std::size_t>(acc_slot)]);
    j["accumulation"]["label"] = a.accumulation_label;
    j["accumulation"]["first"] = a.accumulation_first;
    j["accumulation"]["last"] = a.accumulation_last;
    j["accumulation_by_label"] = {{"plus", accumulation_json(a.accumulation[0])},
                                  {"minus", accumulation_json(a.accumulation[1])}};
  } else {
    j["accumulation"] = nullptr;
  }
  // last step whose neuron sets still match step 0
  j["sign_stable_until"] = a.sign_violation ? *a.sign_violation - 1 : static_cast<long>(r.trace.size()) - 1;
  if (a.thresholds)
    j["necessary_eta"] = {{"weak", a.thresholds->weak},
                          {"strong", a.thresholds->strong},
                          {"eta_tilde_passes", a.params.eta_tilde >= a.thresholds->weak}};
  else
    j["necessary_eta"] = nullptr;
  j["psi_initial"] = a.psi_initial;
  j["psi_final"] = a.psi_final;
  j["psi_max"] = a.psi_max;
  j["psi_ratio"] = a.psi_initial > 0.0 ? json(a.psi_final / a.psi_initial) : json(nullptr);
  j["upsilon_initial"] = r.trace.empty() ? 0.0 : r.trace.front().upsilon;
  j["upsilon_max_to_t_v"] = a.upsilon_max_to_t_v;

  double train_loss = 0.0;
  int train_correct = 0;
  for (const auto& s : r.dataset.samples) {
    const double f = forward(r.final_weights, s);
    train_loss += 0.5 * (f - s.label) * (f - s.label);
    train_correct += s.label * f > 0.0;
  }
  j["train_loss"] = train_loss / r.dataset.size();
  j["train_accuracy"] = static_cast<double>(train_correct) / r.dataset.size();
  j["evaluation"] = eval_to_json(r.eval);
  return j;
}

}  // namespace

RunOutcome run_one(const ExperimentConfig& config, double eta, std::uint64_t seed) {
  RunOutcome r;
  r.eta = eta;
  r.seed = seed;
  try {
    r.dataset = training_set(config, seed);
    r.initial = initial_weights(config, seed);
    TraceRecorder recorder(r.dataset, config.snapshot_every);
    r.final_weights = run(r.initial, r.dataset, config.train_config(eta), recorder.observer());
    r.trace = recorder.records();
    r.snapshots = recorder.snapshots();
    r.analysis = analyze(r.trace, r.initial, r.final_weights, r.dataset, config, eta);
    r.eval = evaluate(r.final_weights, r.dataset.basis, config.test_config(seed));
    r.report = build_report(r, config);
  } catch (const std::exception& e) {
    throw std::runtime_error("run " + run_name(eta, seed) + ": " + e.what());
  }
  return r;
}

void write_run(const RunOutcome& run, const std::filesystem::path& dir) {
  std::ostringstream trace;
  write_trace_csv(trace, run.trace, run.dataset.size());
  write_text(dir / "trace.csv", trace.str());
  std::ostringstream neurons;
  write_neurons_csv(neurons, run.snapshots);
  write_text(dir / "neurons.csv", neurons.str());
  write_text(dir / "report.json", run.report.dump(2) + "\n");
  write_text(dir / "weights.json", json{{"initial", weights_to_json(run.initial)},
                                        {"final", weights_to_json(run.final_weights)}}
                                       .dump() + "\n");
}

namespace {

// mean/min/max over the non-null values
json stats(const std::vector<json>& values) {
  double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  int count = 0;
  for (const auto& v : values) {
    if (!v.is_number()) continue;
    const double x = v.get<double>();
    sum += x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    ++count;
  }
  if (count == 0) return {{"mean", nullptr}, {"min", nullptr}, {"max", nullptr}, {"count", 0}};
  return {{"mean", sum / count}, {"min", lo}, {"max", hi}, {"count", count}};
}

}  // namespace

json summarize(const std::vector<json>& reports) {
  std::map<double, std::vector<const json*>> by_eta;
  for (const auto& r : reports) by_eta[r.at("eta").get<double>()].push_back(&r);

  json runs = json::array();
  for (const auto& r : reports) {
    const auto& ev = r.at("evaluation");
    runs.push_back({{"name", r.at("name")},
                    {"eta", r.at("eta")},
                    {"seed", r.at("seed")},
                    {"delta_hat", r.at("delta_hat")},
                    {"t_v", r.at("t_v")},
                    {"t_xi", r.at("t_xi")},
                    {"psi_ratio", r.at("psi_ratio")},
                    {"psi_max", r.at("psi_max")},
                    {"accuracy_overall", ev.at("accuracy_overall")},
                    {"accuracy_strong", ev.at("accuracy_strong")},
                    {"accuracy_weak", ev.at("accuracy_weak")},
                    {"misclassified", ev.at("misclassified")},
                    {"misclassified_weak", ev.at("misclassified_weak")}});
  }

  json aggregates = json::array();
  for (const auto& [eta, group] : by_eta) {
    auto column = [&group](auto&& get) {
      std::vector<json> out;
      for (const json* r : group) out.push_back(get(*r));
      return out;
    };
    auto eval_field = [&column](const char* key) {
      return stats(column([key](const json& r) { return r.at("evaluation").at(key); }));
    };
    auto top_field = [&column](const char* key) {
      return stats(column([key](const json& r) { return r.at(key); }));
    };
    int miss = 0, miss_weak = 0;
    for (const json* r : group) {
      miss += r->at("evaluation").at("misclassified").get<int>();
      miss_weak += r->at("evaluation").at("misclassified_weak").get<int>();
    }
    aggregates.push_back({{"eta", eta},
                          {"runs", group.size()},
                          {"accuracy_overall", eval_field("accuracy_overall")},
                          {"accuracy_strong", eval_field("accuracy_strong")},
                          {"accuracy_weak", eval_field("accuracy_weak")},
                          {"delta_hat", top_field("delta_hat")},
                          {"t_v", top_field("t_v")},
                          {"t_xi", top_field("t_xi")},
                          {"psi_ratio", top_field("psi_ratio")},
                          {"psi_max", top_field("psi_max")},
                          {"misclassified_total", miss},
                          {"misclassified_weak_total", miss_weak}});
  }
  return {{"runs", runs}, {"by_eta", aggregates}};
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool write) {
  std::vector<std::pair<double, std::uint64_t>> jobs;
  for (double eta : config.etas)
    for (std::uint64_t seed : config.seeds) jobs.emplace_back(eta, seed);

  const std::filesystem::path out = config.out_dir;
  if (write) write_text(out / "config.json", config_to_json(config).dump(2) + "\n");

  ExperimentResult result;
  result.reports.resize(jobs.size());
  auto work = [&](std::size_t k) {
    auto r = run_one(config, jobs[k].first, jobs[k].second);
    if (write) write_run(r, out / run_name(r.eta, r.seed));
    result.reports[k] = std::move(r.report);
  };

  const std::size_t width = static_cast<std::size_t>(std::max(1, config.jobs));
  for (std::size_t start = 0; start < jobs.size(); start += width) {
    std::vector<std::future<void>> batch;
    const std::size_t stop = std::min(jobs.size(), start + width);
    for (std::size_t k = start; k < stop; ++k)
      batch.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred, work, k));
    for (auto& f : batch) f.get();
  }

  result.summary = summarize(result.reports);
  if (write) write_text(out / "summary.json", result.summary.dump(2) + "\n");
  return result;
}

}  // namespace benign
