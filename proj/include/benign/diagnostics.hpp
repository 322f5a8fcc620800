#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "benign/data_model.hpp"
#include "benign/network.hpp"
#include "benign/trainer.hpp"

namespace benign {

/// Branch position in per-branch arrays: j = +1 -> 0, j = -1 -> 1.
constexpr int branch_slot(int j) { return j > 0 ? 0 : 1; }
constexpr int branch_label(int slot) { return slot == 0 ? 1 : -1; }

struct TheoryParams {
  double delta = 0.5;
  double eta = 1.2;
  double eta_tilde = 0.0;  // 2 eta |u|^2 / m
  double alpha = 0.0;      // |v|^2 / |u|^2
  int m = 8;
  double u_norm = 2.0;
  double v_norm = 0.4;
  double p = 0.01;

  static TheoryParams make(double delta, double eta, int m, double u_norm, double v_norm,
                           double p = 0.01);
};

// ---------------------------------------------------------------------------
// Inner-product tables

/// Raw inner products <w_{j,r}, .> (not multiplied by j). Row 0 is branch +1.
struct InnerProductTable {
  Eigen::MatrixXd u;                    // 2 x m
  Eigen::MatrixXd v;                    // 2 x m
  std::array<Eigen::MatrixXd, 2> xi;        // per branch, m x n
  std::array<Eigen::MatrixXd, 2> xi_tilde;  // per branch, m x |W|
  std::vector<int> weak_indices;            // column c of xi_tilde is sample weak_indices[c]
};

InnerProductTable inner_products(const Weights<double>& w, const Dataset<double>& dataset);

/// y * f of sample i recomputed from the table alone.
double reconstruct_forward(const InnerProductTable& table, const Dataset<double>& dataset, int i);

// ---------------------------------------------------------------------------
// Neuron sets and beta*

/// Membership in the "+" sets; "-" is the complement. Index by branch_slot(j).
/// r is in U_{j,+} iff <w_{j,r}, j u> >= 0, and in V_{j,+} iff <w_{j,r}, j v> >= 0.
struct NeuronSets {
  std::array<std::vector<bool>, 2> u_plus;
  std::array<std::vector<bool>, 2> v_plus;

  std::vector<int> u_set(int j, bool positive) const;
  std::vector<int> v_set(int j, bool positive) const;
  std::uint64_t fingerprint() const;
  bool operator==(const NeuronSets&) const = default;
};

NeuronSets neuron_sets(const Weights<double>& w, const SignalBasis<double>& basis);

/// max_r act(<w_{j,r}, j u>) / sum_r act(<w_{j,r}, j u>); nullopt when no
/// neuron of the branch has a positive pre-activation.
std::optional<double> beta_star(const Weights<double>& w, const SignalBasis<double>& basis, int j);

// ---------------------------------------------------------------------------
// Stage trackers

struct StageTrackers {
  double phi = 0.0;          // max_{j,r} |<w, u>|
  double psi = 0.0;          // max_{j,r} |<w, v>|
  Eigen::VectorXd gamma;        // per sample i: max_{j,r} |<w, xi_i>|
  Eigen::VectorXd gamma_tilde;  // per weak sample: max_{j,r} |<w, xi~_i>|
  std::array<double, 2> a{};    // A_j = max_r <w_{j,r}, j u>

  double upsilon() const;
};

StageTrackers stage_trackers(const InnerProductTable& table);
StageTrackers stage_trackers(const Weights<double>& w, const Dataset<double>& dataset);

// ---------------------------------------------------------------------------
// Trace

struct TraceRecord {
  long t = 0;
  int index = 0;
  SampleKind kind = SampleKind::Strong;
  int label = 1;
  double y_f = 0.0;
  double loss = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double upsilon = 0.0;
  double gamma_max = 0.0;
  double gamma_tilde_max = 0.0;
  std::array<double, 2> signal_mass{};  // (1/m) sum_r act(<w_{j,r}, j v>)
  std::array<double, 2> strong_mass{};  // (1/m) sum_r act(<w_{j,r}, j u>)
  std::array<double, 2> a{};            // A_j
  std::uint64_t neuron_set_hash = 0;
};

struct NeuronSnapshot {
  long t = 0;
  int j = 1;
  int r = 0;
  double ip_u = 0.0;
  double ip_v = 0.0;
  double max_abs_ip_xi = 0.0;
};

/// Observer that records one TraceRecord per step (from the weights before
/// the step) and per-neuron snapshots every `snapshot_every` steps.
class TraceRecorder {
 public:
  TraceRecorder(const Dataset<double>& dataset, long snapshot_every);

  void operator()(const StepView& step);
  StepObserver observer();

  const std::vector<TraceRecord>& records() const { return records_; }
  const std::vector<NeuronSnapshot>& snapshots() const { return snapshots_; }

 private:
  const Dataset<double>* dataset_;
  long snapshot_every_;
  Eigen::MatrixXd noise_;  // d x (n + |W|): xi_0..xi_{n-1}, then xi~ for weak samples
  int n_;
  std::vector<TraceRecord> records_;
  std::vector<NeuronSnapshot> snapshots_;
};

/// Per-step record for the given weights; `y_f` and `loss` left to the caller.
TraceRecord make_record(const Weights<double>& w, const Dataset<double>& dataset);

// ---------------------------------------------------------------------------
// Stopping times, oscillation, crossings

struct StoppingTimes {
  std::array<std::optional<long>, 2> t_v;    // per branch slot
  std::optional<long> t_xi;
  std::array<std::optional<long>, 2> t_max;  // min(t_v^j, t_xi)

  /// Earliest t_v over both branches.
  std::optional<long> first_t_v() const;
};

/// First t with signal_mass_j >= mass_fraction * delta, and first t with
/// upsilon >= delta / 4. mass_fraction is 1/2 in the multi-data setting.
StoppingTimes stopping_times(const std::vector<TraceRecord>& trace, const TheoryParams& params,
                             double mass_fraction = 0.5);

/// Half-open step range [begin, end).
struct StepWindow {
  long begin = 0;
  long end = 0;
};

/// min |y_f - 1| over steps in the window (strong-data steps only if asked).
/// Throws std::domain_error when no step qualifies.
double oscillation_magnitude(const std::vector<TraceRecord>& trace, StepWindow window,
                             bool strong_only);

struct DeltaEstimate {
  double delta = 0.0;
  long window_end = 0;              // exclusive end of the window that produced delta
  std::optional<long> t_v;          // first step with max_j mass >= mass_fraction * delta
};

/// Largest realized |y_f - 1| on strong steps after `burn_in` that still
/// lower-bounds |y_f - 1| on every strong step of [burn_in, T_v(delta)].
/// Mass is the max over both branches, or only the branch of `label` if given.
/// Throws std::domain_error when no strong step follows the burn-in.
DeltaEstimate estimate_delta(const std::vector<TraceRecord>& trace, long burn_in,
                             double mass_fraction = 0.5, std::optional<int> label = std::nullopt);

struct Accumulation {
  double sum = 0.0;
  double floor = 0.0;
  bool satisfied = false;
};

/// Sum of (1 - y_f) over label-j steps in the inclusive window [first, last],
/// against the linear lower bound
///   (delta/16)(1 - sqrt(1.05 - delta/4)) (last - first + 1)
///     - m sqrt(1.05) / (2 eta |u|^2 sqrt(1.05 - delta/4)).
/// An empty window (last < first) gives sum 0 and floor = -intercept.
Accumulation residual_accumulation(const std::vector<TraceRecord>& trace, int j, long first,
                                   long last, const TheoryParams& params);

/// First step whose neuron sets differ from step 0, or nullopt when stable.
std::optional<long> sign_stability(const std::vector<TraceRecord>& trace);

struct CrossingFilter {
  std::optional<int> label;
  bool exclude_weak = false;
};

struct CrossingReport {
  std::vector<long> up;    // y_f >= 1 after a qualifying step with y_f < 1
  std::vector<long> down;  // y_f < 1 after a qualifying step with y_f >= 1

  /// Up and down crossings strictly interleave.
  bool alternates() const;
};

CrossingReport crossings(const std::vector<TraceRecord>& trace, CrossingFilter filter = {});

/// Steps t with y_{i_t} = j (effective running times t_j(s), s = 0, 1, ...).
std::vector<long> effective_times(const std::vector<TraceRecord>& trace, int j);

// ---------------------------------------------------------------------------
// Closed forms

/// h(z) = (1 + eta_tilde (1 - z))^2 z.
double h_map(double eta_tilde, double z);

struct HRoots {
  double z1 = 1.0;
  double z2 = 0.0;
  double z3 = 0.0;
};

/// Roots of h(z) = 1. Throws for eta_tilde <= 0.
HRoots h_roots(double eta_tilde);

struct EtaThresholds {
  double weak = 0.0;    // (1 + 1/delta)(sqrt(1 + delta) - 1)
  double strong = 0.0;  // (1/delta)((1 - delta)^{-1/2} - 1)
};

/// Throws for delta outside (0, 1).
EtaThresholds necessary_eta(double delta);

}  // namespace benign
