#pragma once
// Reproducible experiment runs: spec parsing, replicate scheduling,
// JSON-lines persistence with resume, and per-kind summaries.
//
// Replicate j of grid size n[i] draws from StreamKey{seed, purpose(kind), i, j}.
// The derivation is injective for i < 2^24, so the record is a pure
// function of the experiment spec whatever the worker count or interruption history.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dlpp/weight_model.hpp"

namespace dlpp {

enum class ExperimentKind { kMomentScaling, kCouplingCheck, kMnGrowth, kLipschitzFrequency, kCylinderVariance, kShapeCurve };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(const std::string& name);
std::uint8_t purpose_of(ExperimentKind kind);

struct ExperimentConstants {
  std::optional<double> epsilon;
  std::optional<double> c1;
  std::optional<double> c5;
  std::optional<double> c_ell;
  std::optional<double> gap;
  std::vector<int> widths;      // cylinder_variance
  std::vector<double> a;        // shape_curve aspect ratios
  int bootstrap = 1000;         // resamples per moment
  int fit_resamples = 1000;     // resamples for the slope interval
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kMomentScaling;
  std::vector<Atom> atoms;
  double threshold = 0.0;
  double alpha = 0.25;
  std::vector<double> r;
  std::vector<int> n;
  int replicates = 0;
  std::uint64_t seed = 0;
  ExperimentConstants constants;

  WeightModel model() const;
  /// Number of size slots i; shape_curve crosses n with a.
  std::size_t slot_count() const;
};

/// Raised for schema violations; the message names the offending field.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

ExperimentSpec parse_spec(const nlohmann::json& doc);
/// Parses JSON text; syntax errors report the line and column.
ExperimentSpec parse_spec_text(const std::string& text);
ExperimentSpec load_spec(const std::filesystem::path& path);

/// Canonical form with every default filled in. Keys are sorted, so dump()
/// of this value is a stable byte string.
nlohmann::json to_json(const ExperimentSpec& spec);
/// Hex SHA-256 of the canonical dump.
std::string spec_hash(const ExperimentSpec& spec);

/// Outputs of one (i, j) work unit. Values are plain JSON numbers/booleans.
nlohmann::json run_replicate(const ExperimentSpec& spec, std::size_t i, std::uint32_t j);

struct RunOptions {
  std::filesystem::path directory;
  int parallelism = 1;
  bool resume = false;
  /// Stop after this many newly computed units (simulates an interrupted run).
  std::optional<std::size_t> max_units;
};

struct ExperimentRecord {
  std::string spec_hash;
  std::size_t units_total = 0;
  std::size_t units_done = 0;
  bool complete = false;
  nlohmann::json summary;  // null until complete
};

/// Writes spec.json, replicates.jsonl, summary.json and meta.json under
/// options.directory. Without resume an existing record is an error; with
/// resume, completed units are skipped and a truncated last line is dropped.
ExperimentRecord run_experiment(const ExperimentSpec& spec, const RunOptions& options);

/// Loads every complete replicate line of a record, keyed by (i, j).
std::vector<nlohmann::json> load_replicates(const std::filesystem::path& directory);

/// Summary of a complete set of replicates (sorted by i, then j).
nlohmann::json summarize(const ExperimentSpec& spec, const std::vector<nlohmann::json>& replicates);

struct CheckResult {
  bool passed = true;
  std::vector<std::string> failures;
};

/// Acceptance thresholds for a summary, by kind.
CheckResult check_summary(const nlohmann::json& summary);

/// Fluctuation exponent targets: r (1 - alpha) / 2 and r (1/2 - alpha/6).
double lower_bound_exponent(double r, double alpha);
double universality_exponent(double r, double alpha);

const char* software_version();

}  // namespace dlpp
