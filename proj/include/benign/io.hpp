#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "benign/data_model.hpp"
#include "benign/diagnostics.hpp"
#include "benign/evaluation.hpp"
#include "benign/network.hpp"

namespace benign {

using json = nlohmann::json;

/// Shortest representation that round-trips exactly ('.' decimal, no locale).
std::string format_double(double x);

json dataset_to_json(const Dataset<double>& ds);
Dataset<double> dataset_from_json(const json& j);

json weights_to_json(const Weights<double>& w);
Weights<double> weights_from_json(const json& j);

json eval_to_json(const EvalReport& r, bool include_samples = true);

/// Columns: t, epoch, i_t, kind, y_f, loss, phi, psi, upsilon, gamma_max,
/// gamma_tilde_max, signal_mass_plus, signal_mass_minus, sets_stable.
void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace, int n);

/// Columns: t, j, r, ip_u, ip_v, max_abs_ip_xi.
void write_neurons_csv(std::ostream& os, const std::vector<NeuronSnapshot>& snapshots);

/// Writes with LF endings, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace benign
