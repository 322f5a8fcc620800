#include "benign/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace benign {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

json vec_to_json(const Vec<double>& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

Vec<double> vec_from_json(const json& a, int d, const char* what) {
  if (!a.is_array() || static_cast<int>(a.size()) != d)
    throw std::invalid_argument(std::string(what) + ": expected an array of length " + std::to_string(d));
  Vec<double> v(d);
  for (int k = 0; k < d; ++k) v(k) = a[static_cast<std::size_t>(k)].get<double>();
  return v;
}

json rows_to_json(const RowMat<double>& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_to_json(m.row(r).transpose()));
  return a;
}

}  // namespace

json dataset_to_json(const Dataset<double>& ds) {
  json j;
  j["seed"] = ds.seed;
  j["d"] = ds.basis.d;
  j["n"] = ds.size();
  j["u_norm"] = ds.basis.u_norm();
  j["v_norm"] = ds.basis.v_norm();
  j["sigma_p"] = ds.basis.sigma_p;
  j["weak_indices"] = ds.weak_indices;
  json samples = json::array();
  for (const auto& s : ds.samples) {
    json patches = json::array();
    for (const auto& p : s.patches) patches.push_back(vec_to_json(p));
    samples.push_back({{"y", s.label}, {"kind", std::string(to_string(s.kind))}, {"patches", patches}});
  }
  j["samples"] = samples;
  return j;
}

Dataset<double> dataset_from_json(const json& j) {
  Dataset<double> ds;
  ds.seed = j.at("seed").get<std::uint64_t>();
  const int d = j.at("d").get<int>();
  ds.basis = make_basis(d, j.at("u_norm").get<double>(), j.at("v_norm").get<double>(),
                        j.at("sigma_p").get<double>());
  ds.weak_indices = j.at("weak_indices").get<std::vector<int>>();
  for (const auto& sj : j.at("samples")) {
    Sample<double> s;
    s.label = sj.at("y").get<int>();
    const auto kind = sj.at("kind").get<std::string>();
    if (kind != "strong" && kind != "weak") throw std::invalid_argument("dataset: unknown kind " + kind);
    s.kind = kind == "weak" ? SampleKind::Weak : SampleKind::Strong;
    const auto& pj = sj.at("patches");
    if (!pj.is_array() || pj.size() != 3) throw std::invalid_argument("dataset: a sample needs 3 patches");
    for (std::size_t p = 0; p < 3; ++p) s.patches[p] = vec_from_json(pj[p], d, "dataset patch");
    ds.samples.push_back(std::move(s));
  }
  if (static_cast<int>(ds.samples.size()) != j.at("n").get<int>())
    throw std::invalid_argument("dataset: n does not match the number of samples");
  std::vector<int> derived;
  for (int i = 0; i < ds.size(); ++i)
    if (ds.is_weak(i)) derived.push_back(i);
  if (derived != ds.weak_indices)
    throw std::invalid_argument("dataset: weak_indices disagree with sample kinds");
  return ds;
}

json weights_to_json(const Weights<double>& w) {
  return {{"m", w.m()},
          {"d", w.d()},
          {"sigma_0", w.sigma_0},
          {"w_plus", rows_to_json(w.plus)},
          {"w_minus", rows_to_json(w.minus)}};
}

Weights<double> weights_from_json(const json& j) {
  const int m = j.at("m").get<int>();
  const int d = j.at("d").get<int>();
  Weights<double> w(m, d, j.at("sigma_0").get<double>());
  for (const auto& [key, mat] : {std::pair{"w_plus", &w.plus}, std::pair{"w_minus", &w.minus}}) {
    const auto& rows = j.at(key);
    if (!rows.is_array() || static_cast<int>(rows.size()) != m)
      throw std::invalid_argument(std::string("weights: ") + key + " must have m rows");
    for (int r = 0; r < m; ++r) mat->row(r) = vec_from_json(rows[static_cast<std::size_t>(r)], d, key).transpose();
  }
  if (!w.all_finite()) throw std::invalid_argument("weights: non-finite entry");
  return w;
}

json eval_to_json(const EvalReport& r, bool include_samples) {
  json j{{"accuracy_overall", r.accuracy_overall},
         {"accuracy_strong", r.accuracy_strong},
         {"accuracy_weak", r.accuracy_weak},
         {"n_test", r.n_test},
         {"n_weak_test", r.n_weak_test},
         {"misclassified", r.misclassified()},
         {"misclassified_weak", r.misclassified_weak()}};
  if (include_samples) {
    json per = json::array();
    for (const auto& s : r.per_sample)
      per.push_back({{"seed", s.seed},
                     {"y", s.y},
                     {"kind", std::string(to_string(s.kind))},
                     {"f", s.f},
                     {"correct", s.correct},
                     {"strong_component", s.parts.strong},
                     {"weak_component", s.parts.weak},
                     {"noise_component", s.parts.noise}});
    j["per_sample"] = per;
  }
  return j;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace, int n) {
  os << "t,epoch,i_t,kind,y_f,loss,phi,psi,upsilon,gamma_max,gamma_tilde_max,"
        "signal_mass_plus,signal_mass_minus,sets_stable\n";
  const std::uint64_t ref = trace.empty() ? 0 : trace.front().neuron_set_hash;
  for (const auto& r : trace) {
    os << r.t << ',' << r.t / n << ',' << r.index << ',' << to_string(r.kind) << ','
       << format_double(r.y_f) << ',' << format_double(r.loss) << ',' << format_double(r.phi) << ','
       << format_double(r.psi) << ',' << format_double(r.upsilon) << ','
       << format_double(r.gamma_max) << ',' << format_double(r.gamma_tilde_max) << ','
       << format_double(r.signal_mass[0]) << ',' << format_double(r.signal_mass[1]) << ','
       << (r.neuron_set_hash == ref ? 1 : 0) << '\n';
  }
}

void write_neurons_csv(std::ostream& os, const std::vector<NeuronSnapshot>& snapshots) {
  os << "t,j,r,ip_u,ip_v,max_abs_ip_xi\n";
  for (const auto& s : snapshots)
    os << s.t << ',' << s.j << ',' << s.r << ',' << format_double(s.ip_u) << ','
       << format_double(s.ip_v) << ',' << format_double(s.max_abs_ip_xi) << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace benign
