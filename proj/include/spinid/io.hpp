#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "spinid/dynamics.hpp"
#include "spinid/equivalence.hpp"
#include "spinid/identify.hpp"
#include "spinid/liealg.hpp"

namespace spinid::io {

using nlohmann::json;

/// Malformed or unreadable input (CLI exit code 1).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input describing an invalid density matrix (CLI exit code 2).
class InvalidState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rounds to 15 significant digits so serialized output is reproducible.
double round15(double x);
std::string format15(double x);

std::string read_file(const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Model file: {"n", "gamma", "couplings": [{"k","l","J"}], "initial_state"?}.
struct ModelFile {
  SpinNetwork net;
  std::optional<DensityMatrix> state;
};

SpinNetwork parse_network(const json& j);
/// {"strings": [{"sites": [[1, "z"]], "coeff": c}, ...]} added to 2^{-n} I,
/// or {"dense": [[[re, im], ...], ...]}.
DensityMatrix parse_state(const json& j, int n, DensityMatrix::Positivity policy = DensityMatrix::Positivity::require);
ModelFile parse_model(const json& j, DensityMatrix::Positivity policy = DensityMatrix::Positivity::require);
ModelFile load_model(const std::filesystem::path& path,
                     DensityMatrix::Positivity policy = DensityMatrix::Positivity::require);
ModelStatePair load_pair(const std::filesystem::path& path,
                         DensityMatrix::Positivity policy = DensityMatrix::Positivity::require);

json network_to_json(const SpinNetwork& net);
/// Pauli form over the traceless part (entries below 1e-15 dropped).
json state_to_json(const DensityMatrix& rho);
json pair_to_json(const ModelStatePair& pair);

ControlSchedule parse_schedule(const json& j);
json schedule_to_json(const ControlSchedule& sched);

/// Header `t,Mx,My,Mz`, one row per sample, 15 significant digits.
std::string trace_to_csv(const Trace& trace);
Trace parse_trace_csv(const std::string& text);

json report_to_json(const AnalysisReport& r);
json verdict_to_json(const EquivalenceVerdict& v);
json fit_to_json(const FitResult& r);

/// Dataset directory: hypothesis.json plus schedule_<i>.json / trace_<i>.csv
/// pairs numbered from 0.
struct DatasetDir {
  Dataset data;
  bool known_state = false;
  std::optional<DensityMatrix> state;
  std::optional<ParameterVector> initial_guess;
};

DatasetDir load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const Dataset& data, const DensityMatrix* known_state);

}  // namespace spinid::io
