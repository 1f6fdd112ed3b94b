#include "dlpp/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dlpp/coupling.hpp"
#include "dlpp/experiments.hpp"
#include "dlpp/geodesic.hpp"
#include "dlpp/passage.hpp"
#include "dlpp/plot.hpp"
#include "dlpp/stats.hpp"

namespace dlpp {

using nlohmann::json;

namespace {

double parse_double(const std::string& text, const std::string& literal) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw std::invalid_argument("invalid model literal '" + literal + "'");
  return value;
}

GridShape shape_for(int n, double alpha, std::optional<int> rows) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (rows) {
    if (*rows < 1) throw std::invalid_argument("rows must be at least 1");
    return GridShape::with_rows(n, *rows);
  }
  return GridShape::from_alpha(n, alpha);
}

// Prints every scalar of a JSON object on one line as key=value, using the
// same number formatting as the persisted summary.
void print_scalars(std::ostream& out, const json& object, const std::string& indent) {
  out << indent;
  bool first = true;
  for (const auto& [key, value] : object.items()) {
    if (value.is_structured()) continue;
    out << (first ? "" : "  ") << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump());
    first = false;
  }
  out << '\n';
}

void print_summary(std::ostream& out, const json& summary) {
  out << "summary\n";
  for (const auto& [key, value] : summary.items()) {
    if (!value.is_structured()) {
      out << "  " << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
    }
  }
  for (const char* section : {"points", "fits"}) {
    if (!summary.contains(section)) continue;
    out << section << '\n';
    for (const auto& entry : summary.at(section)) {
      print_scalars(out, entry, "  ");
      for (const auto& [key, value] : entry.items()) {
        if (!value.is_array()) continue;
        for (const auto& nested : value) {
          if (nested.is_object()) print_scalars(out, nested, "    " + key + ": ");
        }
      }
    }
  }
  if (summary.at("kind") == "moment_scaling") {
    const double alpha = summary.at("alpha").get<double>();
    for (const auto& fit : summary.at("fits")) {
      const double r = fit.at("r").get<double>();
      out << "r=" << json(r).dump() << ": slope " << fit.at("slope").dump() << " CI [" << fit.value("ci_lo", json()).dump()
          << ", " << fit.value("ci_hi", json()).dump() << "]; target r(1-alpha)/2 = "
          << json(lower_bound_exponent(r, alpha)).dump() << ", universality reference r(1/2-alpha/6) = "
          << json(universality_exponent(r, alpha)).dump() << '\n';
    }
  }
  if (summary.contains("warnings")) {
    for (const auto& w : summary.at("warnings")) out << "warning: " << w.get<std::string>() << '\n';
  }
}

struct ModelArgs {
  int n = 0;
  double alpha = 0.25;
  std::optional<int> rows;
  std::string model = "bernoulli:0.5";
  std::uint64_t seed = 0;
};

void add_model_args(CLI::App* cmd, ModelArgs& a) {
  cmd->add_option("-n,--n", a.n, "columns n")->required();
  cmd->add_option("--alpha", a.alpha, "rows = floor(n^alpha)")->capture_default_str();
  cmd->add_option("--rows", a.rows, "explicit row count (overrides --alpha)");
  cmd->add_option("--model", a.model, "bernoulli:P or v:p,v:p,...@m")->capture_default_str();
  cmd->add_option("--seed", a.seed, "master seed")->capture_default_str();
}

int cmd_simulate(const ModelArgs& a, const std::string& dump_path, std::ostream& out) {
  const WeightModel model = parse_model_literal(a.model);
  const GridShape shape = shape_for(a.n, a.alpha, a.rows);
  RandomStream rng(StreamKey{a.seed, purpose::kCli, 0, 0});
  const WeightGrid grid = sample_grid(shape, model, rng);
  const PassageResult result = last_passage(grid);
  const GeodesicSet set = geodesics(grid, result);
  const int hi_max = hi_mode_max(grid);
  out << "n = " << shape.cols << "\nrows = " << shape.rows << "\nmodel = " << model.describe()
      << "\nseed = " << a.seed << "\nL = " << json(model.to_real(result.value)).dump() << "\nM_n = " << hi_max
      << "\nM_n/n = " << json(static_cast<double>(hi_max) / shape.cols).dump()
      << "\nCard(G) = " << set.intersection.size() << "\ngeodesic length = " << set.canonical.size() << '\n';
  if (!dump_path.empty()) {
    if (dump_path == "-") {
      dump_grid(out, grid);
    } else {
      std::ofstream file(dump_path);
      if (!file) throw std::runtime_error("cannot open " + dump_path + " for writing");
      dump_grid(file, grid);
    }
  }
  return kExitOk;
}

struct RunArgs {
  std::string config;
  std::string out_dir;
  int parallel = 1;
  bool resume = false;
  bool check = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_units;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec = load_spec(a.config);
  if (a.seed) spec.seed = *a.seed;
  std::filesystem::path dir = a.out_dir;
  if (dir.empty()) dir = std::filesystem::path(a.config).replace_extension(".record");
  RunOptions options;
  options.directory = dir;
  options.parallelism = a.parallel;
  options.resume = a.resume;
  options.max_units = a.max_units;
  const ExperimentRecord record = run_experiment(spec, options);
  out << "record: " << dir.string() << "\nspec_hash: " << record.spec_hash << "\nunits: " << record.units_done << '/'
      << record.units_total << '\n';
  if (!record.complete) {
    out << "interrupted; rerun with --resume to finish\n";
    if (a.check) {
      err << "check: record is incomplete\n";
      return kExitCheckFailed;
    }
    return kExitOk;
  }
  print_summary(out, record.summary);
  if (a.check) {
    const CheckResult check = check_summary(record.summary);
    if (!check.passed) {
      for (const auto& f : check.failures) err << "check failed: " << f << '\n';
      return kExitCheckFailed;
    }
    out << "check: passed\n";
  }
  return kExitOk;
}

int cmd_couple(const ModelArgs& a, const std::string& out_path, bool full, const LipschitzOptions& lip,
               std::ostream& out) {
  const WeightModel model = parse_model_literal(a.model);
  const GridShape shape = shape_for(a.n, a.alpha, a.rows);
  RandomStream rng(StreamKey{a.seed, purpose::kCli, 1, 0});
  const auto trajectory =
      build_trajectory(shape, model, rng, full ? TrajectoryMode::kFullRecompute : TrajectoryMode::kIncremental);
  const auto report = check_reversed_lipschitz(trajectory, lip);
  if (out_path.empty() || out_path == "-") {
    write_trajectory_table(out, trajectory, report, a.seed);
  } else {
    std::ofstream file(out_path);
    if (!file) throw std::runtime_error("cannot open " + out_path + " for writing");
    write_trajectory_table(file, trajectory, report, a.seed);
    out << "wrote " << trajectory.L.size() << " rows to " << out_path << '\n';
  }
  return kExitOk;
}

int cmd_lipschitz(const ModelArgs& a, int trajectories, const LipschitzOptions& lip, std::ostream& out) {
  if (trajectories < 1) throw std::invalid_argument("--trajectories must be at least 1");
  const WeightModel model = parse_model_literal(a.model);
  const GridShape shape = shape_for(a.n, a.alpha, a.rows);
  std::uint64_t on = 0, a_count = 0;
  LipschitzReport last;
  for (int j = 0; j < trajectories; ++j) {
    RandomStream rng(StreamKey{a.seed, purpose::kLipschitzFrequency, 0, static_cast<std::uint32_t>(j)});
    last = check_reversed_lipschitz(build_trajectory(shape, model, rng), lip);
    on += last.on_holds ? 1 : 0;
    a_count += last.a_holds.value_or(false) ? 1 : 0;
  }
  const auto total = static_cast<std::uint64_t>(trajectories);
  const auto ci = wilson_interval(on, total);
  const auto& c = last.constants;
  out << "n = " << shape.cols << "\nrows = " << shape.rows << "\nwindow I = [" << last.window.first << ", "
      << last.window.last << "]\nepsilon = " << json(c.epsilon).dump() << "\nc1 = " << json(c.c1).dump()
      << "\nc5 = " << json(c.c5).dump() << "\nc_ell = " << json(c.c_ell).dump() << "\ngap = " << json(c.gap).dump()
      << "\nslope = " << json(c.slope).dump() << "\ntrajectories = " << total
      << "\nO_n frequency = " << json(static_cast<double>(on) / total).dump() << " (Wilson 95% ["
      << json(ci.lo).dump() << ", " << json(ci.hi).dump() << "])"
      << "\nA_n frequency = " << json(static_cast<double>(a_count) / total).dump() << '\n';
  return kExitOk;
}

}  // namespace

WeightModel parse_model_literal(const std::string& literal) {
  const std::string prefix = "bernoulli:";
  if (literal.rfind(prefix, 0) == 0) return WeightModel::bernoulli(parse_double(literal.substr(prefix.size()), literal));
  const auto at = literal.find('@');
  if (at == std::string::npos) throw std::invalid_argument("invalid model literal '" + literal + "'");
  std::vector<Atom> atoms;
  std::istringstream list(literal.substr(0, at));
  std::string item;
  while (std::getline(list, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("invalid model literal '" + literal + "'");
    atoms.push_back({parse_double(item.substr(0, colon), literal), parse_double(item.substr(colon + 1), literal)});
  }
  return WeightModel::make(atoms, parse_double(literal.substr(at + 1), literal));
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Directed last-passage percolation on thin grids"};
  app.require_subcommand(1);

  ModelArgs sim;
  std::string dump_path;
  auto* simulate = app.add_subcommand("simulate", "sample one grid and report L, M_n and geodesic structure");
  add_model_args(simulate, sim);
  simulate->add_option("--dump-grid", dump_path, "write the weight matrix ('-' for stdout)");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run an experiment from a JSON config");
  run_cmd->add_option("config", run.config, "experiment spec (JSON)")->required();
  run_cmd->add_option("--out", run.out_dir, "record directory (default: <config>.record)");
  run_cmd->add_option("--parallel", run.parallel, "worker threads")->capture_default_str();
  run_cmd->add_flag("--resume", run.resume, "continue an interrupted record");
  run_cmd->add_flag("--check", run.check, "exit 2 when acceptance thresholds fail");
  run_cmd->add_option("--seed", run.seed, "override the config's master seed");
  run_cmd->add_option("--max-units", run.max_units, "stop after this many new replicates");

  std::string plot_kind, plot_in, plot_out;
  std::uint64_t plot_seed = 0;
  auto* plot = app.add_subcommand("plot", "render a record or trajectory table as SVG");
  plot->add_option("--kind", plot_kind, "loglog_moments, trajectory, decay_curve or shape_curve")->required();
  plot->add_option("--input", plot_in, "record directory or trajectory table")->required();
  plot->add_option("--output", plot_out, "SVG file")->required();
  plot->add_option("--seed", plot_seed, "accepted for uniformity; plots are deterministic");

  ModelArgs couple_args;
  std::string couple_out;
  bool full = false;
  LipschitzOptions lip;
  auto* couple = app.add_subcommand("couple", "export one coupled trajectory k, L(k), M(k)");
  add_model_args(couple, couple_args);
  couple->add_option("--out", couple_out, "output table ('-' for stdout)");
  couple->add_flag("--full", full, "recompute every step from scratch");

  ModelArgs lip_args;
  int trajectories = 100;
  auto* lipschitz = app.add_subcommand("lipschitz", "frequency of the reversed Lipschitz event O_n");
  add_model_args(lipschitz, lip_args);
  lipschitz->add_option("--trajectories", trajectories, "number of trajectories")->capture_default_str();

  for (auto* cmd : {couple, lipschitz}) {
    cmd->add_option("--epsilon", lip.epsilon, "default (1 - p) / 4");
    cmd->add_option("--c5", lip.c5, "default (1 - c1)(E(w|hi) - m)");
    cmd->add_option("--c-ell", lip.c_ell, "default sqrt(p (1 - p))");
    cmd->add_option("--gap", lip.gap, "default c_ell sqrt(rows n)");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*simulate) return cmd_simulate(sim, dump_path, out);
    if (*run_cmd) return cmd_run(run, out, err);
    if (*plot) {
      const auto kind = parse_plot_kind(plot_kind);
      if (!kind) throw std::invalid_argument("unknown plot kind '" + plot_kind + "'");
      make_plot(PlotSpec{*kind, plot_in, plot_out});
      out << "wrote " << plot_out << '\n';
      return kExitOk;
    }
    if (*couple) return cmd_couple(couple_args, couple_out, full, lip, out);
    if (*lipschitz) return cmd_lipschitz(lip_args, trajectories, lip, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace dlpp
