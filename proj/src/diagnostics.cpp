#include "benign/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace benign {

TheoryParams TheoryParams::make(double delta, double eta, int m, double u_norm, double v_norm,
                                double p) {
  TheoryParams t;
  t.delta = delta;
  t.eta = eta;
  t.m = m;
  t.u_norm = u_norm;
  t.v_norm = v_norm;
  t.p = p;
  t.eta_tilde = 2.0 * eta * u_norm * u_norm / m;
  t.alpha = (v_norm * v_norm) / (u_norm * u_norm);
  return t;
}

// ---------------------------------------------------------------------------

InnerProductTable inner_products(const Weights<double>& w, const Dataset<double>& dataset) {
  const auto& basis = dataset.basis;
  if (w.d() != basis.d) throw std::invalid_argument("inner_products: dimension mismatch");
  const int m = w.m();
  const int n = dataset.size();
  const int nw = static_cast<int>(dataset.weak_indices.size());

  Eigen::MatrixXd xi(basis.d, n);
  for (int i = 0; i < n; ++i) xi.col(i) = dataset.samples[static_cast<std::size_t>(i)].xi();
  Eigen::MatrixXd xt(basis.d, nw);
  for (int c = 0; c < nw; ++c)
    xt.col(c) = *dataset.samples[static_cast<std::size_t>(dataset.weak_indices[static_cast<std::size_t>(c)])].xi_tilde();

  InnerProductTable t;
  t.u.resize(2, m);
  t.v.resize(2, m);
  t.u.row(0) = (w.plus * basis.u).transpose();
  t.u.row(1) = (w.minus * basis.u).transpose();
  t.v.row(0) = (w.plus * basis.v).transpose();
  t.v.row(1) = (w.minus * basis.v).transpose();
  t.xi[0] = w.plus * xi;
  t.xi[1] = w.minus * xi;
  t.xi_tilde[0] = w.plus * xt;
  t.xi_tilde[1] = w.minus * xt;
  t.weak_indices = dataset.weak_indices;
  return t;
}

double reconstruct_forward(const InnerProductTable& table, const Dataset<double>& dataset, int i) {
  const auto& s = dataset.samples.at(static_cast<std::size_t>(i));
  const double y = s.label;
  const long m = table.u.cols();
  long weak_col = -1;
  if (s.is_weak()) {
    const auto it = std::lower_bound(table.weak_indices.begin(), table.weak_indices.end(), i);
    if (it == table.weak_indices.end() || *it != i)
      throw std::invalid_argument("reconstruct_forward: weak sample missing from table");
    weak_col = it - table.weak_indices.begin();
  }
  double f = 0.0;
  for (int slot = 0; slot < 2; ++slot) {
    double branch = 0.0;
    for (long r = 0; r < m; ++r) {
      const double first = s.is_weak() ? table.xi_tilde[static_cast<std::size_t>(slot)](r, weak_col)
                                       : y * table.u(slot, r);
      branch += act(first) + act(y * table.v(slot, r)) + act(table.xi[static_cast<std::size_t>(slot)](r, i));
    }
    f += branch_label(slot) * branch / static_cast<double>(m);
  }
  return y * f;
}

// ---------------------------------------------------------------------------

std::vector<int> NeuronSets::u_set(int j, bool positive) const {
  std::vector<int> out;
  const auto& bits = u_plus[static_cast<std::size_t>(branch_slot(j))];
  for (std::size_t r = 0; r < bits.size(); ++r)
    if (bits[r] == positive) out.push_back(static_cast<int>(r));
  return out;
}

std::vector<int> NeuronSets::v_set(int j, bool positive) const {
  std::vector<int> out;
  const auto& bits = v_plus[static_cast<std::size_t>(branch_slot(j))];
  for (std::size_t r = 0; r < bits.size(); ++r)
    if (bits[r] == positive) out.push_back(static_cast<int>(r));
  return out;
}

std::uint64_t NeuronSets::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::uint64_t x) {
    h ^= x;
    h *= 0x100000001b3ULL;
  };
  for (const auto* family : {&u_plus, &v_plus})
    for (const auto& bits : *family) {
      mix(bits.size());
      for (bool b : bits) mix(b ? 0x9eU : 0x35U);
    }
  return h;
}

NeuronSets neuron_sets(const Weights<double>& w, const SignalBasis<double>& basis) {
  NeuronSets s;
  for (int slot = 0; slot < 2; ++slot) {
    const double j = branch_label(slot);
    const Eigen::VectorXd ipu = j * (w.branch(branch_label(slot)) * basis.u);
    const Eigen::VectorXd ipv = j * (w.branch(branch_label(slot)) * basis.v);
    auto& up = s.u_plus[static_cast<std::size_t>(slot)];
    auto& vp = s.v_plus[static_cast<std::size_t>(slot)];
    for (Eigen::Index r = 0; r < ipu.size(); ++r) {
      up.push_back(ipu(r) >= 0.0);
      vp.push_back(ipv(r) >= 0.0);
    }
  }
  return s;
}

std::optional<double> beta_star(const Weights<double>& w, const SignalBasis<double>& basis, int j) {
  const Eigen::VectorXd ip = static_cast<double>(j) * (w.branch(j) * basis.u);
  double total = 0.0, best = 0.0;
  for (Eigen::Index r = 0; r < ip.size(); ++r) {
    const double a = act(ip(r));
    total += a;
    best = std::max(best, a);
  }
  if (!(total > 0.0)) return std::nullopt;
  return best / total;
}

// ---------------------------------------------------------------------------

double StageTrackers::upsilon() const {
  double u = 0.0;
  if (gamma.size() > 0) u = std::max(u, gamma.maxCoeff());
  if (gamma_tilde.size() > 0) u = std::max(u, gamma_tilde.maxCoeff());
  return u;
}

StageTrackers stage_trackers(const InnerProductTable& table) {
  StageTrackers s;
  s.phi = table.u.cwiseAbs().maxCoeff();
  s.psi = table.v.cwiseAbs().maxCoeff();
  const auto col_max = [](const std::array<Eigen::MatrixXd, 2>& t) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(t[0].cols());
    for (const auto& b : t)
      if (b.cols() > 0 && b.rows() > 0)
        out = out.cwiseMax(b.cwiseAbs().colwise().maxCoeff().transpose());
    return out;
  };
  s.gamma = col_max(table.xi);
  s.gamma_tilde = col_max(table.xi_tilde);
  s.a[0] = table.u.row(0).maxCoeff();
  s.a[1] = (-table.u.row(1)).maxCoeff();
  return s;
}

StageTrackers stage_trackers(const Weights<double>& w, const Dataset<double>& dataset) {
  return stage_trackers(inner_products(w, dataset));
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd noise_matrix(const Dataset<double>& dataset) {
  const int n = dataset.size();
  const int nw = static_cast<int>(dataset.weak_indices.size());
  Eigen::MatrixXd out(dataset.basis.d, n + nw);
  for (int i = 0; i < n; ++i) out.col(i) = dataset.samples[static_cast<std::size_t>(i)].xi();
  for (int c = 0; c < nw; ++c)
    out.col(n + c) =
        *dataset.samples[static_cast<std::size_t>(dataset.weak_indices[static_cast<std::size_t>(c)])].xi_tilde();
  return out;
}

TraceRecord record_from(const Weights<double>& w, const SignalBasis<double>& basis,
                        const Eigen::MatrixXd& noise, int n) {
  TraceRecord rec;
  const double m = w.m();
  for (int slot = 0; slot < 2; ++slot) {
    const int j = branch_label(slot);
    const auto& b = w.branch(j);
    const Eigen::VectorXd ipu = b * basis.u;
    const Eigen::VectorXd ipv = b * basis.v;
    rec.phi = std::max(rec.phi, ipu.cwiseAbs().maxCoeff());
    rec.psi = std::max(rec.psi, ipv.cwiseAbs().maxCoeff());
    double su = 0.0, sv = 0.0;
    for (Eigen::Index r = 0; r < ipu.size(); ++r) {
      su += act(j * ipu(r));
      sv += act(j * ipv(r));
    }
    rec.strong_mass[static_cast<std::size_t>(slot)] = su / m;
    rec.signal_mass[static_cast<std::size_t>(slot)] = sv / m;
    rec.a[static_cast<std::size_t>(slot)] = (static_cast<double>(j) * ipu).maxCoeff();
    if (noise.cols() > 0) {
      const Eigen::MatrixXd ipn = (b * noise).cwiseAbs();
      if (n > 0) rec.gamma_max = std::max(rec.gamma_max, ipn.leftCols(n).maxCoeff());
      if (noise.cols() > n)
        rec.gamma_tilde_max = std::max(rec.gamma_tilde_max, ipn.rightCols(noise.cols() - n).maxCoeff());
    }
  }
  rec.upsilon = std::max(rec.gamma_max, rec.gamma_tilde_max);
  rec.neuron_set_hash = neuron_sets(w, basis).fingerprint();
  return rec;
}

}  // namespace

TraceRecord make_record(const Weights<double>& w, const Dataset<double>& dataset) {
  return record_from(w, dataset.basis, noise_matrix(dataset), dataset.size());
}

TraceRecorder::TraceRecorder(const Dataset<double>& dataset, long snapshot_every)
    : dataset_(&dataset),
      snapshot_every_(snapshot_every),
      noise_(noise_matrix(dataset)),
      n_(dataset.size()) {
  if (snapshot_every < 1) throw std::invalid_argument("TraceRecorder: snapshot_every must be >= 1");
}

void TraceRecorder::operator()(const StepView& step) {
  TraceRecord rec = record_from(step.weights, dataset_->basis, noise_, n_);
  rec.t = step.t;
  rec.index = step.index;
  rec.kind = step.sample.kind;
  rec.label = step.sample.label;
  rec.y_f = step.sample.label * step.f;
  rec.loss = step.loss;
  records_.push_back(rec);

  if (step.t % snapshot_every_ == 0) {
    for (int slot = 0; slot < 2; ++slot) {
      const int j = branch_label(slot);
      const auto& b = step.weights.branch(j);
      const Eigen::VectorXd ipu = b * dataset_->basis.u;
      const Eigen::VectorXd ipv = b * dataset_->basis.v;
      Eigen::VectorXd ipn = Eigen::VectorXd::Zero(b.rows());
      if (noise_.cols() > 0) ipn = (b * noise_).cwiseAbs().rowwise().maxCoeff();
      for (Eigen::Index r = 0; r < b.rows(); ++r)
        snapshots_.push_back({step.t, j, static_cast<int>(r), ipu(r), ipv(r), ipn(r)});
    }
  }
}

StepObserver TraceRecorder::observer() {
  return [this](const StepView& s) { (*this)(s); };
}

// ---------------------------------------------------------------------------

std::optional<long> StoppingTimes::first_t_v() const {
  if (t_v[0] && t_v[1]) return std::min(*t_v[0], *t_v[1]);
  return t_v[0] ? t_v[0] : t_v[1];
}

StoppingTimes stopping_times(const std::vector<TraceRecord>& trace, const TheoryParams& params,
                             double mass_fraction) {
  StoppingTimes st;
  const double mass_threshold = mass_fraction * params.delta;
  const double noise_threshold = params.delta / 4.0;
  for (const auto& rec : trace) {
    for (std::size_t slot = 0; slot < 2; ++slot)
      if (!st.t_v[slot] && rec.signal_mass[slot] >= mass_threshold) st.t_v[slot] = rec.t;
    if (!st.t_xi && rec.upsilon >= noise_threshold) st.t_xi = rec.t;
  }
  for (std::size_t slot = 0; slot < 2; ++slot) {
    if (st.t_v[slot] && st.t_xi)
      st.t_max[slot] = std::min(*st.t_v[slot], *st.t_xi);
    else
      st.t_max[slot] = st.t_v[slot] ? st.t_v[slot] : st.t_xi;
  }
  return st;
}

double oscillation_magnitude(const std::vector<TraceRecord>& trace, StepWindow window,
                             bool strong_only) {
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& rec : trace) {
    if (rec.t < window.begin || rec.t >= window.end) continue;
    if (strong_only && rec.kind != SampleKind::Strong) continue;
    best = std::min(best, std::abs(rec.y_f - 1.0));
    any = true;
  }
  if (!any) throw std::domain_error("oscillation_magnitude: no qualifying step in window");
  return best;
}

DeltaEstimate estimate_delta(const std::vector<TraceRecord>& trace, long burn_in,
                             double mass_fraction, std::optional<int> label) {
  const long size = static_cast<long>(trace.size());
  // prefix_min[k]: min |y_f - 1| over strong steps in [burn_in, burn_in + k].
  // running_mass[t]: max over s <= t of max_j signal mass.
  std::vector<double> prefix_min;
  std::vector<double> candidates;
  std::vector<double> running_mass(trace.size());
  double cur_min = std::numeric_limits<double>::infinity();
  double cur_mass = -std::numeric_limits<double>::infinity();
  for (long t = 0; t < size; ++t) {
    const auto& rec = trace[static_cast<std::size_t>(t)];
    const double mass = label ? rec.signal_mass[static_cast<std::size_t>(branch_slot(*label))]
                              : std::max(rec.signal_mass[0], rec.signal_mass[1]);
    cur_mass = std::max(cur_mass, mass);
    running_mass[static_cast<std::size_t>(t)] = cur_mass;
    if (t < burn_in) continue;
    if (rec.kind == SampleKind::Strong) {
      const double dev = std::abs(rec.y_f - 1.0);
      cur_min = std::min(cur_min, dev);
      candidates.push_back(dev);
    }
    prefix_min.push_back(cur_min);
  }
  if (candidates.empty())
    throw std::domain_error("estimate_delta: no strong-data step after the burn-in");

  std::sort(candidates.begin(), candidates.end(), std::greater<>());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const auto first_mass_hit = [&](double threshold) -> std::optional<long> {
    const auto it = std::lower_bound(running_mass.begin(), running_mass.end(), threshold);
    if (it == running_mass.end()) return std::nullopt;
    return static_cast<long>(it - running_mass.begin());
  };

  for (double c : candidates) {
    const auto tv = first_mass_hit(mass_fraction * c);
    const long end = tv ? std::max(*tv, burn_in) + 1 : size;
    const double g = prefix_min[static_cast<std::size_t>(end - 1 - burn_in)];
    if (c <= g) return {c, end, tv};
  }
  // Unreachable: the smallest candidate is the global minimum.
  throw std::logic_error("estimate_delta: no consistent delta");
}

Accumulation residual_accumulation(const std::vector<TraceRecord>& trace, int j, long first,
                                   long last, const TheoryParams& params) {
  Accumulation acc;
  for (const auto& rec : trace)
    if (rec.t >= first && rec.t <= last && rec.label == j) acc.sum += 1.0 - rec.y_f;
  const double delta = params.delta;
  const double root = std::sqrt(1.05 - delta / 4.0);
  const double slope = delta / 16.0 * (1.0 - root);
  const double intercept =
      params.m * std::sqrt(1.05) / (2.0 * params.eta * params.u_norm * params.u_norm * root);
  const double length = last >= first ? static_cast<double>(last - first + 1) : 0.0;
  acc.floor = slope * length - intercept;
  acc.satisfied = acc.sum >= acc.floor;
  return acc;
}

std::optional<long> sign_stability(const std::vector<TraceRecord>& trace) {
  if (trace.empty()) return std::nullopt;
  const auto ref = trace.front().neuron_set_hash;
  for (const auto& rec : trace)
    if (rec.neuron_set_hash != ref) return rec.t;
  return std::nullopt;
}

bool CrossingReport::alternates() const {
  std::vector<std::pair<long, int>> events;
  for (long t : up) events.emplace_back(t, 1);
  for (long t : down) events.emplace_back(t, -1);
  std::sort(events.begin(), events.end());
  for (std::size_t k = 1; k < events.size(); ++k)
    if (events[k].second == events[k - 1].second || events[k].first == events[k - 1].first)
      return false;
  return true;
}

CrossingReport crossings(const std::vector<TraceRecord>& trace, CrossingFilter filter) {
  CrossingReport out;
  std::optional<double> prev;
  for (const auto& rec : trace) {
    if (filter.label && rec.label != *filter.label) continue;
    if (filter.exclude_weak && rec.kind == SampleKind::Weak) continue;
    if (prev) {
      if (rec.y_f >= 1.0 && *prev < 1.0) out.up.push_back(rec.t);
      if (rec.y_f < 1.0 && *prev >= 1.0) out.down.push_back(rec.t);
    }
    prev = rec.y_f;
  }
  return out;
}

std::vector<long> effective_times(const std::vector<TraceRecord>& trace, int j) {
  std::vector<long> out;
  for (const auto& rec : trace)
    if (rec.label == j) out.push_back(rec.t);
  return out;
}

// ---------------------------------------------------------------------------

double h_map(double eta_tilde, double z) {
  const double a = 1.0 + eta_tilde * (1.0 - z);
  return a * a * z;
}

HRoots h_roots(double eta_tilde) {
  if (!(eta_tilde > 0.0)) throw std::domain_error("h_roots: eta_tilde must be positive");
  const double disc = std::sqrt(eta_tilde * eta_tilde + 4.0 * eta_tilde);
  return {1.0, (eta_tilde + 2.0 - disc) / (2.0 * eta_tilde), (eta_tilde + 2.0 + disc) / (2.0 * eta_tilde)};
}

EtaThresholds necessary_eta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("necessary_eta: delta must lie in (0, 1)");
  // expm1/log1p keep the small-delta limit accurate.
  const double weak = (1.0 + 1.0 / delta) * std::expm1(0.5 * std::log1p(delta));
  const double strong = std::expm1(-0.5 * std::log1p(-delta)) / delta;
  return {weak, strong};
}

}  // namespace benign
