#pragma once
// Standalone SVG plots of experiment records and trajectory tables.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlpp/coupling.hpp"

namespace dlpp {

enum class PlotKind { kLoglogMoments, kTrajectory, kDecayCurve, kShapeCurve };

std::optional<PlotKind> parse_plot_kind(const std::string& name);
std::string to_string(PlotKind kind);

struct PlotSpec {
  PlotKind kind = PlotKind::kLoglogMoments;
  std::filesystem::path input;   // record directory, summary.json, or trajectory table
  std::filesystem::path output;  // .svg
};

class PlotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Columnar trajectory export. The first line is a '#' header of key=value
/// pairs (shape, p, window I and the resolved constants); then "k L M" and
/// one row per step, L in real units.
void write_trajectory_table(std::ostream& out, const CoupledTrajectory& trajectory, const LipschitzReport& report,
                            std::uint64_t seed);

struct TrajectoryTable {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<double> k;
  std::vector<double> L;
  std::vector<double> M;
  std::string value(const std::string& key) const;  // throws PlotError when absent
};

TrajectoryTable read_trajectory_table(std::istream& in);

/// Renders the plot as SVG text. Throws PlotError when the input is missing
/// or is a record of a different kind.
std::string render_plot(PlotKind kind, const std::filesystem::path& input);

void make_plot(const PlotSpec& spec);

}  // namespace dlpp
