#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "benign/config.hpp"
#include "benign/diagnostics.hpp"
#include "benign/experiment.hpp"
#include "benign/io.hpp"
#include "benign/verify.hpp"

using namespace benign;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "use this single seed");
  cmd->add_option("--steps", c.steps, "number of SGD steps")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory (file for gen)");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  if (c.steps) cfg.steps = *c.steps;
  if (!c.out.empty()) cfg.out_dir = c.out;
  return cfg;
}

std::string cell(const nlohmann::json& v) {
  if (v.is_null()) return "-";
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v.get<double>());
    return buf;
  }
  return v.dump();
}

void print_summary(const nlohmann::json& summary) {
  std::printf("%-22s %8s %8s %8s %8s %10s %8s\n", "run", "acc", "acc_weak", "delta^", "t_v", "psi_ratio",
              "miss_w");
  for (const auto& r : summary.at("runs"))
    std::printf("%-22s %8s %8s %8s %8s %10s %8s\n", r.at("name").get<std::string>().c_str(),
                cell(r.at("accuracy_overall")).c_str(), cell(r.at("accuracy_weak")).c_str(),
                cell(r.at("delta_hat")).c_str(), cell(r.at("t_v")).c_str(), cell(r.at("psi_ratio")).c_str(),
                cell(r.at("misclassified_weak")).c_str());
  for (const auto& a : summary.at("by_eta"))
    std::printf("eta=%-8s mean acc %s (min %s, max %s), weak errors %d of %d\n",
                cell(a.at("eta")).c_str(), cell(a.at("accuracy_overall").at("mean")).c_str(),
                cell(a.at("accuracy_overall").at("min")).c_str(), cell(a.at("accuracy_overall").at("max")).c_str(),
                a.at("misclassified_weak_total").get<int>(), a.at("misclassified_total").get<int>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benign: SGD oscillation lab for a two-layer ReLU^2 CNN"};
  app.require_subcommand(1);

  Common gen_c, train_c, cmp_c, sweep_c, ver_c;
  auto* gen = app.add_subcommand("gen", "emit a training dataset as JSON");
  add_common(gen, gen_c);

  auto* train = app.add_subcommand("train", "one training run");
  add_common(train, train_c);
  std::optional<double> train_eta;
  train->add_option("--eta", train_eta, "learning rate (default: first of the config)");

  auto* cmp = app.add_subcommand("compare", "large vs small learning-rate experiment");
  add_common(cmp, cmp_c);

  auto* sweep = app.add_subcommand("sweep", "grid over eta x seed");
  add_common(sweep, sweep_c);
  std::vector<double> sweep_etas;
  std::vector<std::uint64_t> sweep_seeds;
  sweep->add_option("--etas", sweep_etas, "learning rates")->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "seeds")->delimiter(',');
  int sweep_jobs = 0;
  sweep->add_option("--jobs", sweep_jobs, "parallel runs");

  auto* ver = app.add_subcommand("verify", "property suite");
  add_common(ver, ver_c);
  bool corrupt = false;
  ver->add_flag("--corrupt-gradient", corrupt)->group("");  // test hook

  auto* roots = app.add_subcommand("roots", "roots of h(z) = 1 and necessary-condition thresholds");
  double eta_tilde = 0.0;
  double delta = 0.5;
  roots->add_option("--eta-tilde", eta_tilde, "eta~ = 2 eta |u|^2 / m")->required();
  roots->add_option("--delta", delta, "oscillation magnitude for the thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const auto cfg = resolve(gen_c);
      const auto ds = training_set(cfg, cfg.seeds.front());
      const auto text = dataset_to_json(ds).dump() + "\n";
      if (gen_c.out.empty())
        std::cout << text;
      else
        write_text(gen_c.out, text);
      return 0;
    }
    if (*train) {
      const auto cfg = resolve(train_c);
      const double eta = train_eta.value_or(cfg.etas.front());
      const auto r = run_one(cfg, eta, cfg.seeds.front());
      const std::filesystem::path dir = cfg.out_dir;
      write_text(dir / "config.json", config_to_json(cfg).dump(2) + "\n");
      write_run(r, dir);
      std::printf("%s: test accuracy %s (weak %s), delta^ %s, t_v %s -> %s\n", run_name(eta, r.seed).c_str(),
                  cell(r.report.at("evaluation").at("accuracy_overall")).c_str(),
                  cell(r.report.at("evaluation").at("accuracy_weak")).c_str(), cell(r.report.at("delta_hat")).c_str(),
                  cell(r.report.at("t_v")).c_str(), dir.string().c_str());
      return 0;
    }
    if (*cmp || *sweep) {
      auto cfg = resolve(*cmp ? cmp_c : sweep_c);
      if (*sweep) {
        if (!sweep_etas.empty()) cfg.etas = sweep_etas;
        if (!sweep_seeds.empty()) cfg.seeds = sweep_seeds;
        if (sweep_jobs > 0) cfg.jobs = sweep_jobs;
      }
      const auto result = run_experiment(cfg);
      print_summary(result.summary);
      return 0;
    }
    if (*ver) {
      const auto cfg = resolve(ver_c);
      VerifyOptions opt;
      opt.corrupt_gradient = corrupt;
      const auto rep = verify(cfg, opt);
      std::cout << rep.format();
      return rep.ok() ? 0 : 2;
    }
    if (*roots) {
      const auto r = h_roots(eta_tilde);
      std::printf("eta~ = %.10g\n", eta_tilde);
      std::printf("z1 = %.10g  h(z1) = %.10g\n", r.z1, h_map(eta_tilde, r.z1));
      std::printf("z2 = %.10g  h(z2) = %.10g\n", r.z2, h_map(eta_tilde, r.z2));
      std::printf("z3 = %.10g  h(z3) = %.10g\n", r.z3, h_map(eta_tilde, r.z3));
      const auto t = necessary_eta(delta);
      std::printf("delta = %.10g: weak threshold %.10g (%s), strong threshold %.10g (%s)\n", delta, t.weak,
                  eta_tilde >= t.weak ? "met" : "not met", t.strong, eta_tilde >= t.strong ? "met" : "not met");
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
