#include "dlpp/experiments.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dlpp/coupling.hpp"
#include "dlpp/estimation.hpp"
#include "dlpp/grid.hpp"
#include "dlpp/passage.hpp"
#include "dlpp/shape.hpp"
#include "dlpp/stats.hpp"

namespace dlpp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::map<ExperimentKind, std::string>& kind_names() {
  static const std::map<ExperimentKind, std::string> names = {
      {ExperimentKind::kMomentScaling, "moment_scaling"},
      {ExperimentKind::kCouplingCheck, "coupling_check"},
      {ExperimentKind::kMnGrowth, "mn_growth"},
      {ExperimentKind::kLipschitzFrequency, "lipschitz_frequency"},
      {ExperimentKind::kCylinderVariance, "cylinder_variance"},
      {ExperimentKind::kShapeCurve, "shape_curve"},
  };
  return names;
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw SpecError("spec: field '" + field + "' " + what);
}

template <typename T>
T get_as(const json& value, const std::string& field, const char* type_name) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    fail(field, std::string("must be ") + type_name);
  }
}

const json& require(const json& doc, const std::string& key, const std::string& field) {
  if (!doc.contains(key)) throw SpecError("spec: missing required field '" + field + "'");
  return doc.at(key);
}

void reject_unknown(const json& doc, const std::set<std::string>& allowed, const std::string& prefix) {
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) throw SpecError("spec: unknown field '" + prefix + key + "'");
  }
}

std::optional<double> optional_number(const json& doc, const std::string& key, const std::string& field) {
  if (!doc.contains(key)) return std::nullopt;
  return get_as<double>(doc.at(key), field, "a number");
}

void parse_model(const json& doc, ExperimentSpec& spec) {
  if (!doc.is_object()) fail("model", "must be an object");
  reject_unknown(doc, {"atoms", "m", "bernoulli"}, "model.");
  if (doc.contains("bernoulli")) {
    if (doc.contains("atoms") || doc.contains("m")) fail("model", "takes either 'bernoulli' or 'atoms' and 'm'");
    const double p = get_as<double>(doc.at("bernoulli"), "model.bernoulli", "a number");
    spec.atoms = {{0.0, 1.0 - p}, {1.0, p}};
    spec.threshold = 0.0;
  } else {
    const json& atoms = require(doc, "atoms", "model.atoms");
    if (!atoms.is_array() || atoms.empty()) fail("model.atoms", "must be a non-empty array of [value, probability]");
    spec.atoms.clear();
    for (const auto& atom : atoms) {
      if (!atom.is_array() || atom.size() != 2) fail("model.atoms", "entries must be [value, probability] pairs");
      spec.atoms.push_back({get_as<double>(atom[0], "model.atoms", "numeric pairs"),
                            get_as<double>(atom[1], "model.atoms", "numeric pairs")});
    }
    spec.threshold = get_as<double>(require(doc, "m", "model.m"), "model.m", "a number");
  }
  try {
    (void)spec.model();
  } catch (const std::invalid_argument& e) {
    fail("model", std::string("is invalid: ") + e.what());
  }
}

std::string hex(const unsigned char* bytes, unsigned length) {
  std::ostringstream out;
  for (unsigned k = 0; k < length; ++k) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(bytes[k]);
  return out.str();
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

LipschitzOptions lipschitz_options(const ExperimentConstants& c) {
  LipschitzOptions o;
  o.epsilon = c.epsilon;
  o.c1 = c.c1;
  o.c5 = c.c5;
  o.c_ell = c.c_ell;
  o.gap = c.gap;
  return o;
}

int shape_rows(int n, double a) {
  return static_cast<int>(std::floor(static_cast<double>(n) * a + 1e-9));
}

struct Slot {
  int n = 0;
  int rows = 0;
  double a = 0.0;  // shape_curve only
};

Slot slot_of(const ExperimentSpec& spec, std::size_t i) {
  if (spec.kind == ExperimentKind::kShapeCurve) {
    const std::size_t per_n = spec.constants.a.size();
    Slot s;
    s.n = spec.n[i / per_n];
    s.a = spec.constants.a[i % per_n];
    s.rows = shape_rows(s.n, s.a);
    return s;
  }
  return Slot{spec.n[i], rows_for(spec.n[i], spec.alpha), 0.0};
}

GridShape grid_of(const Slot& slot) { return GridShape::with_rows(slot.n, slot.rows); }

json replicate_values(const ExperimentSpec& spec, const WeightModel& model, std::size_t i, std::uint32_t j) {
  const Slot slot = slot_of(spec, i);
  const GridShape shape = grid_of(slot);
  RandomStream rng(StreamKey{spec.seed, purpose_of(spec.kind), static_cast<std::uint32_t>(i), j});
  json out = json::object();
  switch (spec.kind) {
    case ExperimentKind::kMomentScaling: {
      const WeightGrid grid = sample_grid(shape, model, rng);
      out["L"] = model.to_real(last_passage_value(grid));
      out["M"] = hi_mode_max(grid);
      break;
    }
    case ExperimentKind::kMnGrowth:
    case ExperimentKind::kShapeCurve: {
      const WeightGrid grid = sample_grid(shape, model, rng);
      out["M"] = hi_mode_max(grid);
      break;
    }
    case ExperimentKind::kCouplingCheck: {
      const auto trajectory = build_trajectory(shape, model, rng, TrajectoryMode::kIncremental, false);
      const auto [hi_count, coupled] = evaluate_at_N(trajectory, rng);
      const WeightGrid direct = sample_grid(shape, model, rng);
      bool monotone = true;
      for (std::size_t k = 0; k + 1 < trajectory.L.size(); ++k) {
        const Weight step = trajectory.L[k + 1] - trajectory.L[k];
        monotone = monotone && step >= 0 && step <= model.scaled_max();
      }
      out["N"] = hi_count;
      out["L_coupled"] = model.to_real(coupled);
      out["L_direct"] = model.to_real(last_passage_value(direct));
      out["monotone"] = monotone;
      break;
    }
    case ExperimentKind::kLipschitzFrequency: {
      const auto trajectory = build_trajectory(shape, model, rng);
      const auto report = check_reversed_lipschitz(trajectory, lipschitz_options(spec.constants));
      out["on"] = report.on_holds;
      out["a"] = report.a_holds.value_or(false);
      out["pairs"] = report.pairs_checked;
      out["violations"] = report.violations.size();
      break;
    }
    case ExperimentKind::kCylinderVariance: {
      const WeightGrid grid = sample_grid(shape, model, rng);
      out["L"] = model.to_real(last_passage_value(grid));
      json restricted = json::array();
      for (int width : spec.constants.widths) restricted.push_back(model.to_real(cylinder_last_passage(grid, width)));
      out["L_cyl"] = restricted;
      break;
    }
  }
  return out;
}

// ---- summaries -------------------------------------------------------------

std::vector<double> column(const std::vector<const json*>& rows, const char* key) {
  std::vector<double> values;
  values.reserve(rows.size());
  for (const json* row : rows) values.push_back(row->at("values").at(key).get<double>());
  return values;
}

std::size_t count_true(const std::vector<const json*>& rows, const char* key) {
  std::size_t count = 0;
  for (const json* row : rows) count += row->at("values").at(key).get<bool>() ? 1 : 0;
  return count;
}

double variance_stderr(std::span<const double> xs) {
  // Plug-in standard error of the sample variance, sqrt((m4 - m2^2) / S).
  const double m2 = central_moment_value(xs, 2.0);
  const double m4 = central_moment_value(xs, 4.0);
  return std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(xs.size()));
}

json summarize_moments(const ExperimentSpec& spec, const std::vector<std::vector<const json*>>& slots) {
  json points = json::array();
  std::vector<std::vector<FitPoint>> per_r(spec.r.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot slot = slot_of(spec, i);
    const auto L = column(slots[i], "L");
    const auto M = column(slots[i], "M");
    BootstrapConfig boot;
    boot.resamples = spec.constants.bootstrap;
    boot.seed = spec.seed;
    boot.stream = static_cast<std::uint32_t>(i);
    const auto estimates = central_moments(L, spec.r, boot);
    json moments = json::array();
    for (std::size_t k = 0; k < estimates.size(); ++k) {
      moments.push_back({{"r", spec.r[k]}, {"value", estimates[k].central_moment}, {"stderr", estimates[k].bootstrap_stderr}});
      per_r[k].push_back(FitPoint{static_cast<double>(slot.n), estimates[k]});
    }
    points.push_back({{"n", slot.n}, {"rows", slot.rows}, {"mean_L", mean(L)}, {"mean_M_over_n", mean(M) / slot.n},
                      {"moments", moments}});
  }
  json fits = json::array();
  json warnings = json::array();
  for (std::size_t k = 0; k < spec.r.size(); ++k) {
    const double r = spec.r[k];
    const double target = lower_bound_exponent(r, spec.alpha);
    json entry = {{"r", r}, {"target", target}, {"threshold", target - 0.05},
                  {"universality", universality_exponent(r, spec.alpha)}};
    try {
      FitConfig config;
      config.resamples = spec.constants.fit_resamples;
      config.seed = spec.seed;
      config.stream = static_cast<std::uint32_t>(k);
      const auto fit = fit_exponent(per_r[k], r, config);
      entry["slope"] = fit.slope;
      entry["intercept"] = fit.intercept;
      entry["r_squared"] = fit.r_squared;
      entry["ci_lo"] = fit.slope_ci_lo;
      entry["ci_hi"] = fit.slope_ci_hi;
      entry["root_slope"] = fit.root_slope;
      for (const auto& w : fit.warnings) warnings.push_back(w);
    } catch (const std::invalid_argument& e) {
      entry["slope"] = nullptr;
      warnings.push_back(std::string("r=") + std::to_string(r) + ": " + e.what());
    }
    fits.push_back(entry);
  }
  return {{"points", points}, {"fits", fits}, {"warnings", warnings}};
}

json summarize_coupling(const ExperimentSpec& spec, const std::vector<std::vector<const json*>>& slots) {
  json points = json::array();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot slot = slot_of(spec, i);
    const auto coupled = column(slots[i], "L_coupled");
    const auto direct = column(slots[i], "L_direct");
    const auto ks = ks_two_sample(coupled, direct);
    points.push_back({{"n", slot.n}, {"rows", slot.rows}, {"mean_coupled", mean(coupled)},
                      {"mean_direct", mean(direct)}, {"ks_statistic", ks.statistic}, {"ks_p", ks.p_value},
                      {"monotone_failures", slots[i].size() - count_true(slots[i], "monotone")}});
  }
  return {{"points", points}};
}

json summarize_growth(const ExperimentSpec& spec, const WeightModel& model,
                      const std::vector<std::vector<const json*>>& slots) {
  json points = json::array();
  std::vector<double> fit_n, fit_log;
  bool fitting = true;
  double c1 = 0.0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot slot = slot_of(spec, i);
    c1 = resolve_constants(model, grid_of(slot), lipschitz_options(spec.constants)).c1;
    const double cutoff = c1 * slot.n;
    std::uint64_t exceed = 0;
    for (double m : column(slots[i], "M")) exceed += m >= cutoff ? 1 : 0;
    const auto trials = static_cast<std::uint64_t>(slots[i].size());
    const auto ci = wilson_interval(exceed, trials);
    const double frequency = static_cast<double>(exceed) / static_cast<double>(trials);
    json point = {{"n", slot.n}, {"rows", slot.rows}, {"cutoff", cutoff}, {"exceed", exceed},
                  {"trials", trials}, {"frequency", frequency}, {"ci_lo", ci.lo}, {"ci_hi", ci.hi},
                  {"zero", exceed == 0}};
    if (exceed == 0) {
      point["label"] = "< 1/" + std::to_string(trials);
      fitting = false;
    } else {
      point["label"] = nullptr;
      if (fitting) {
        fit_n.push_back(slot.n);
        fit_log.push_back(std::log(frequency));
      }
    }
    points.push_back(point);
  }
  json summary = {{"c1", c1}, {"points", points}};
  if (fit_n.size() >= 2) {
    const auto line = least_squares(fit_n, fit_log);
    summary["log_slope"] = line.slope;
    summary["c2_hat"] = -line.slope;
    summary["fit_points"] = fit_n.size();
  } else {
    summary["log_slope"] = nullptr;
    summary["c2_hat"] = nullptr;
    summary["fit_points"] = fit_n.size();
  }
  return summary;
}

json summarize_lipschitz(const ExperimentSpec& spec, const WeightModel& model,
                         const std::vector<std::vector<const json*>>& slots) {
  json curve = json::array();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot slot = slot_of(spec, i);
    const GridShape shape = grid_of(slot);
    const auto constants = resolve_constants(model, shape, lipschitz_options(spec.constants));
    const auto window = window_for(shape.sites(), model.p());
    const auto trials = static_cast<std::uint64_t>(slots[i].size());
    const auto on = count_true(slots[i], "on");
    const auto a = count_true(slots[i], "a");
    const auto ci = wilson_interval(on, trials);
    curve.push_back({{"n", slot.n}, {"rows", slot.rows}, {"window_first", window.first},
                     {"window_last", window.last}, {"epsilon", constants.epsilon}, {"c1", constants.c1},
                     {"c5", constants.c5}, {"c_ell", constants.c_ell}, {"gap", constants.gap},
                     {"slope", constants.slope}, {"trials", trials},
                     {"on_frequency", static_cast<double>(on) / static_cast<double>(trials)}, {"on_ci_lo", ci.lo},
                     {"on_ci_hi", ci.hi}, {"a_frequency", static_cast<double>(a) / static_cast<double>(trials)},
                     {"mean_violations", mean(column(slots[i], "violations"))}});
  }
  return {{"points", curve}};
}

json summarize_cylinder(const ExperimentSpec& spec, const WeightModel& model,
                        const std::vector<std::vector<const json*>>& slots) {
  json points = json::array();
  const double C = model.max_value();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot slot = slot_of(spec, i);
    const auto L = column(slots[i], "L");
    const double var_L = sample_variance(L);
    const double mean_L = mean(L);
    const double spread = 8.0 * (C * slot.n) * (C * slot.n);
    json widths = json::array();
    for (std::size_t w = 0; w < spec.constants.widths.size(); ++w) {
      std::vector<double> restricted;
      bool per_sample_ok = true;
      bool identical = true;
      std::size_t lost = 0;
      for (std::size_t s = 0; s < slots[i].size(); ++s) {
        const double value = slots[i][s]->at("values").at("L_cyl").at(w).get<double>();
        restricted.push_back(value);
        per_sample_ok = per_sample_ok && value <= L[s];
        identical = identical && value == L[s];
        lost += value < L[s] ? 1 : 0;
      }
      const double var_cyl = sample_variance(restricted);
      const double mean_cyl = mean(restricted);
      const double p_lost = static_cast<double>(lost) / static_cast<double>(restricted.size());
      const double bias = mean_L - mean_cyl;
      widths.push_back({{"width", spec.constants.widths[w]}, {"var_cyl", var_cyl},
                        {"var_cyl_stderr", variance_stderr(restricted)}, {"mean_cyl", mean_cyl},
                        {"p_lost", p_lost}, {"upper", var_cyl + spread * p_lost - bias * bias},
                        {"lower", var_cyl - spread * p_lost}, {"per_sample_ok", per_sample_ok},
                        {"identical", identical}, {"full_width", spec.constants.widths[w] >= slot.rows}});
    }
    points.push_back({{"n", slot.n}, {"rows", slot.rows}, {"var_L", var_L}, {"var_L_stderr", variance_stderr(L)},
                      {"mean_L", mean_L}, {"widths", widths}});
  }
  return {{"points", points}};
}

json summarize_shape(const ExperimentSpec& spec, const WeightModel& model,
                     const std::vector<std::vector<const json*>>& slots) {
  json points = json::array();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot slot = slot_of(spec, i);
    std::vector<double> ratio = column(slots[i], "M");
    for (auto& x : ratio) x /= slot.n;
    points.push_back({{"n", slot.n}, {"a", slot.a}, {"rows", slot.rows}, {"g_hat", mean(ratio)},
                      {"stderr", std::sqrt(sample_variance(ratio) / static_cast<double>(ratio.size()))},
                      {"approximation", shape_function_estimate(model.p(), slot.a)}});
  }
  return {{"points", points}};
}

// ---- persistence -----------------------------------------------------------

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Reads replicates.jsonl; a final line without a newline or that fails to
// parse is an interrupted write and gets cut off the file.
std::vector<json> read_replicates(const fs::path& path, bool repair) {
  std::vector<json> rows;
  if (!fs::exists(path)) return rows;
  const std::string content = read_file(path);
  std::size_t start = 0, good_end = 0, line_number = 0;
  while (start < content.size()) {
    const std::size_t newline = content.find('\n', start);
    ++line_number;
    const bool last = newline == std::string::npos || newline + 1 >= content.size();
    const std::string line = content.substr(start, newline == std::string::npos ? std::string::npos : newline - start);
    json row = json::parse(line, nullptr, false);
    const bool ok = newline != std::string::npos && !row.is_discarded() && row.contains("i") && row.contains("j") &&
                    row.contains("values");
    if (!ok) {
      if (!last) throw std::runtime_error("corrupt record line " + std::to_string(line_number) + " in " + path.string());
      break;
    }
    rows.push_back(std::move(row));
    good_end = newline + 1;
    start = newline + 1;
  }
  if (repair && good_end < content.size()) fs::resize_file(path, good_end);
  return rows;
}

using UnitKey = std::pair<std::size_t, std::uint32_t>;

UnitKey key_of(const json& row) { return {row.at("i").get<std::size_t>(), row.at("j").get<std::uint32_t>()}; }

}  // namespace

std::string to_string(ExperimentKind kind) { return kind_names().at(kind); }

std::optional<ExperimentKind> parse_kind(const std::string& name) {
  for (const auto& [kind, label] : kind_names()) {
    if (label == name) return kind;
  }
  return std::nullopt;
}

std::uint8_t purpose_of(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kMomentScaling: return purpose::kMomentScaling;
    case ExperimentKind::kCouplingCheck: return purpose::kCouplingCheck;
    case ExperimentKind::kMnGrowth: return purpose::kMnGrowth;
    case ExperimentKind::kLipschitzFrequency: return purpose::kLipschitzFrequency;
    case ExperimentKind::kCylinderVariance: return purpose::kCylinderVariance;
    case ExperimentKind::kShapeCurve: return purpose::kShapeCurve;
  }
  return purpose::kGeneric;
}

WeightModel ExperimentSpec::model() const { return WeightModel::make(atoms, threshold); }

std::size_t ExperimentSpec::slot_count() const {
  return kind == ExperimentKind::kShapeCurve ? n.size() * constants.a.size() : n.size();
}

ExperimentSpec parse_spec(const json& doc) {
  if (!doc.is_object()) throw SpecError("spec: top level must be a JSON object");
  reject_unknown(doc, {"kind", "model", "alpha", "r", "n", "replicates", "seed", "constants"}, "");
  ExperimentSpec spec;

  const auto kind_name = get_as<std::string>(require(doc, "kind", "kind"), "kind", "a string");
  const auto kind = parse_kind(kind_name);
  if (!kind) {
    fail("kind", "must be one of moment_scaling, coupling_check, mn_growth, lipschitz_frequency, "
                 "cylinder_variance, shape_curve (got '" + kind_name + "')");
  }
  spec.kind = *kind;
  parse_model(require(doc, "model", "model"), spec);

  if (doc.contains("alpha")) spec.alpha = get_as<double>(doc.at("alpha"), "alpha", "a number");
  if (!(spec.alpha > 0.0) || !(spec.alpha <= 1.0)) fail("alpha", "must lie in (0, 1]");

  spec.n = get_as<std::vector<int>>(require(doc, "n", "n"), "n", "an array of integers");
  if (spec.n.empty()) fail("n", "must not be empty");
  for (std::size_t k = 0; k < spec.n.size(); ++k) {
    if (spec.n[k] < 1) fail("n", "entries must be at least 1");
    if (k > 0 && spec.n[k] <= spec.n[k - 1]) fail("n", "must be strictly increasing");
  }

  spec.replicates = get_as<int>(require(doc, "replicates", "replicates"), "replicates", "an integer");
  if (spec.replicates < 2) fail("replicates", "must be at least 2");
  spec.seed = get_as<std::uint64_t>(require(doc, "seed", "seed"), "seed", "a non-negative integer");

  if (doc.contains("r")) spec.r = get_as<std::vector<double>>(doc.at("r"), "r", "an array of numbers");
  for (double r : spec.r) {
    if (!(r >= 1.0)) fail("r", "entries must be at least 1");
  }
  if (spec.kind == ExperimentKind::kMomentScaling && spec.r.empty()) {
    throw SpecError("spec: missing required field 'r'");
  }

  if (doc.contains("constants")) {
    const json& c = doc.at("constants");
    if (!c.is_object()) fail("constants", "must be an object");
    reject_unknown(c, {"epsilon", "c1", "c5", "c_ell", "gap", "widths", "a", "bootstrap", "fit_resamples"},
                   "constants.");
    auto& k = spec.constants;
    k.epsilon = optional_number(c, "epsilon", "constants.epsilon");
    k.c1 = optional_number(c, "c1", "constants.c1");
    k.c5 = optional_number(c, "c5", "constants.c5");
    k.c_ell = optional_number(c, "c_ell", "constants.c_ell");
    k.gap = optional_number(c, "gap", "constants.gap");
    if (c.contains("widths")) {
      k.widths = get_as<std::vector<int>>(c.at("widths"), "constants.widths", "an array of integers");
    }
    if (c.contains("a")) k.a = get_as<std::vector<double>>(c.at("a"), "constants.a", "an array of numbers");
    if (c.contains("bootstrap")) k.bootstrap = get_as<int>(c.at("bootstrap"), "constants.bootstrap", "an integer");
    if (c.contains("fit_resamples")) {
      k.fit_resamples = get_as<int>(c.at("fit_resamples"), "constants.fit_resamples", "an integer");
    }
  }
  const auto& k = spec.constants;
  const double p = spec.model().p();
  if (k.epsilon && !(*k.epsilon > 0.0 && *k.epsilon < (1.0 - p) / 2.0)) {
    fail("constants.epsilon", "must lie in (0, (1 - p) / 2)");
  }
  if (k.gap && !(*k.gap >= 0.0)) fail("constants.gap", "must be non-negative");
  if (k.bootstrap < 2) fail("constants.bootstrap", "must be at least 2");
  if (k.fit_resamples < 2) fail("constants.fit_resamples", "must be at least 2");
  for (int w : k.widths) {
    if (w < 1) fail("constants.widths", "entries must be at least 1");
  }
  for (double a : k.a) {
    if (!(a > 0.0 && a <= 1.0)) fail("constants.a", "entries must lie in (0, 1]");
  }
  if (spec.kind == ExperimentKind::kCylinderVariance && k.widths.empty()) {
    throw SpecError("spec: missing required field 'constants.widths'");
  }
  if (spec.kind == ExperimentKind::kShapeCurve) {
    if (k.a.empty()) throw SpecError("spec: missing required field 'constants.a'");
    for (int n : spec.n) {
      for (double a : k.a) {
        if (shape_rows(n, a) < 1) fail("constants.a", "gives floor(n a) < 1 at n = " + std::to_string(n));
      }
    }
  }
  if (spec.slot_count() >= (1u << 24)) fail("n", "has too many entries for the stream derivation");
  return spec;
}

ExperimentSpec parse_spec_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t k = 0; k < stop; ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw SpecError("spec: JSON syntax error at line " + std::to_string(line) + ", column " +
                    std::to_string(column));
  }
  return parse_spec(doc);
}

ExperimentSpec load_spec(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("config not found: " + path.string());
  try {
    return parse_spec_text(read_file(path));
  } catch (const SpecError& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
}

json to_json(const ExperimentSpec& spec) {
  json atoms = json::array();
  for (const auto& a : spec.atoms) atoms.push_back({a.value, a.probability});
  json constants = {{"widths", spec.constants.widths},
                    {"a", spec.constants.a},
                    {"bootstrap", spec.constants.bootstrap},
                    {"fit_resamples", spec.constants.fit_resamples}};
  const auto put = [&](const char* key, const std::optional<double>& value) {
    if (value) constants[key] = *value;
  };
  put("epsilon", spec.constants.epsilon);
  put("c1", spec.constants.c1);
  put("c5", spec.constants.c5);
  put("c_ell", spec.constants.c_ell);
  put("gap", spec.constants.gap);
  return {{"kind", to_string(spec.kind)}, {"model", {{"atoms", atoms}, {"m", spec.threshold}}},
          {"alpha", spec.alpha},          {"r", spec.r},
          {"n", spec.n},                  {"replicates", spec.replicates},
          {"seed", spec.seed},            {"constants", constants}};
}

std::string spec_hash(const ExperimentSpec& spec) {
  const std::string canonical = to_json(spec).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned length = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha-256 digest failed");
  }
  return hex(digest, length);
}

json run_replicate(const ExperimentSpec& spec, std::size_t i, std::uint32_t j) {
  if (i >= spec.slot_count()) throw std::out_of_range("run_replicate: slot index out of range");
  return replicate_values(spec, spec.model(), i, j);
}

std::vector<json> load_replicates(const fs::path& directory) {
  auto rows = read_replicates(directory / "replicates.jsonl", false);
  std::sort(rows.begin(), rows.end(), [](const json& a, const json& b) { return key_of(a) < key_of(b); });
  rows.erase(std::unique(rows.begin(), rows.end(), [](const json& a, const json& b) { return key_of(a) == key_of(b); }),
             rows.end());
  return rows;
}

json summarize(const ExperimentSpec& spec, const std::vector<json>& replicates) {
  const WeightModel model = spec.model();
  std::vector<std::vector<const json*>> slots(spec.slot_count());
  for (const auto& row : replicates) {
    const auto [i, j] = key_of(row);
    if (i >= slots.size()) throw std::runtime_error("summarize: replicate slot out of range");
    slots[i].push_back(&row);
  }
  for (const auto& slot : slots) {
    if (slot.size() != static_cast<std::size_t>(spec.replicates)) {
      throw std::runtime_error("summarize: record is incomplete");
    }
  }
  json body;
  switch (spec.kind) {
    case ExperimentKind::kMomentScaling: body = summarize_moments(spec, slots); break;
    case ExperimentKind::kCouplingCheck: body = summarize_coupling(spec, slots); break;
    case ExperimentKind::kMnGrowth: body = summarize_growth(spec, model, slots); break;
    case ExperimentKind::kLipschitzFrequency: body = summarize_lipschitz(spec, model, slots); break;
    case ExperimentKind::kCylinderVariance: body = summarize_cylinder(spec, model, slots); break;
    case ExperimentKind::kShapeCurve: body = summarize_shape(spec, model, slots); break;
  }
  body["kind"] = to_string(spec.kind);
  body["spec_hash"] = spec_hash(spec);
  body["model"] = model.describe();
  body["p"] = model.p();
  body["alpha"] = spec.alpha;
  body["replicates"] = spec.replicates;
  body["seed"] = spec.seed;
  return body;
}

ExperimentRecord run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  if (options.parallelism < 1) throw std::invalid_argument("run: parallelism must be at least 1");
  const auto started = std::chrono::steady_clock::now();
  const std::string started_utc = utc_now();
  const fs::path& dir = options.directory;
  const fs::path spec_path = dir / "spec.json";
  const fs::path rows_path = dir / "replicates.jsonl";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  ExperimentRecord record;
  record.spec_hash = spec_hash(spec);
  record.units_total = spec.slot_count() * static_cast<std::size_t>(spec.replicates);

  std::set<UnitKey> done;
  if (fs::exists(spec_path) || fs::exists(rows_path)) {
    if (!options.resume) throw std::runtime_error("record already exists at " + dir.string() + " (use resume)");
    if (fs::exists(spec_path)) {
      const std::string stored = spec_hash(parse_spec_text(read_file(spec_path)));
      if (stored != record.spec_hash) {
        throw std::runtime_error("spec hash mismatch on resume: " + spec_path.string() + " has " + stored +
                                 ", requested spec has " + record.spec_hash);
      }
    }
    for (const auto& row : read_replicates(rows_path, true)) done.insert(key_of(row));
  }
  write_file(spec_path, to_json(spec).dump(2) + "\n");

  std::vector<UnitKey> work;
  for (std::size_t i = 0; i < spec.slot_count(); ++i) {
    for (std::uint32_t j = 0; j < static_cast<std::uint32_t>(spec.replicates); ++j) {
      if (!done.count({i, j})) work.emplace_back(i, j);
    }
  }
  const std::size_t limit = options.max_units ? std::min(*options.max_units, work.size()) : work.size();

  std::ofstream appender(rows_path, std::ios::binary | std::ios::app);
  if (!appender) throw std::runtime_error("cannot open " + rows_path.string() + " for appending");

  const WeightModel model = spec.model();
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::string> queue;
  std::exception_ptr failure;

  auto worker = [&] {
    while (!stop) {
      const std::size_t index = next.fetch_add(1);
      if (index >= limit) return;
      const auto [i, j] = work[index];
      std::string line;
      try {
        json row = {{"i", i}, {"j", j}, {"n", slot_of(spec, i).n}, {"values", replicate_values(spec, model, i, j)}};
        line = row.dump();
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
        ready.notify_all();
        return;
      }
      std::lock_guard lock(mutex);
      queue.push_back(std::move(line));
      ready.notify_all();
    }
  };

  const int thread_count = static_cast<int>(std::min<std::size_t>(options.parallelism, std::max<std::size_t>(limit, 1)));
  std::vector<std::thread> pool;
  for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);

  std::size_t written = 0;
  while (written < limit) {
    std::unique_lock lock(mutex);
    ready.wait(lock, [&] { return !queue.empty() || failure; });
    if (failure && queue.empty()) break;
    std::deque<std::string> batch;
    batch.swap(queue);
    lock.unlock();
    for (const auto& line : batch) {
      appender << line << '\n';
      ++written;
    }
    appender.flush();
    if (!appender) {
      stop = true;
      for (auto& t : pool) t.join();
      throw std::runtime_error("write failed: " + rows_path.string());
    }
  }
  for (auto& t : pool) t.join();
  appender.close();
  if (failure) std::rethrow_exception(failure);

  record.units_done = done.size() + written;
  record.complete = record.units_done == record.units_total;
  if (!record.complete) return record;

  record.summary = summarize(spec, load_replicates(dir));
  write_file(dir / "summary.json", record.summary.dump(2) + "\n");
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const json meta = {{"version", software_version()}, {"spec_hash", record.spec_hash},
                     {"started", started_utc},        {"finished", utc_now()},
                     {"elapsed_seconds", elapsed},    {"parallelism", options.parallelism}};
  write_file(dir / "meta.json", meta.dump(2) + "\n");
  return record;
}

CheckResult check_summary(const json& summary) {
  CheckResult result;
  const auto failed = [&](const std::string& why) {
    result.passed = false;
    result.failures.push_back(why);
  };
  const std::string kind = summary.at("kind").get<std::string>();
  const json& points = summary.at(kind == "moment_scaling" ? "fits" : "points");

  if (kind == "moment_scaling") {
    for (const auto& fit : points) {
      const double r = fit.at("r").get<double>();
      if (fit.at("slope").is_null()) {
        failed("r=" + std::to_string(r) + ": no slope fitted");
      } else if (fit.at("slope").get<double>() < fit.at("threshold").get<double>()) {
        failed("r=" + std::to_string(r) + ": slope " + std::to_string(fit.at("slope").get<double>()) +
               " below threshold " + std::to_string(fit.at("threshold").get<double>()));
      }
    }
  } else if (kind == "coupling_check") {
    for (const auto& pt : points) {
      const std::string at = "n=" + std::to_string(pt.at("n").get<int>());
      if (pt.at("ks_p").get<double>() <= 0.001) failed(at + ": coupled and direct laws differ (KS p <= 0.001)");
      if (pt.at("monotone_failures").get<std::size_t>() != 0) failed(at + ": non-monotone coupling step");
    }
  } else if (kind == "mn_growth") {
    for (std::size_t k = 1; k < points.size(); ++k) {
      if (points[k].at("ci_lo").get<double>() > points[k - 1].at("ci_hi").get<double>()) {
        failed("n=" + std::to_string(points[k].at("n").get<int>()) + ": exceedance frequency increases");
      }
    }
    if (!points.empty() && points.back().at("frequency").get<double>() >= 1e-3) {
      failed("largest n: exceedance frequency not below 1e-3");
    }
  } else if (kind == "lipschitz_frequency") {
    if (!points.empty() && points.back().at("on_frequency").get<double>() < 0.9) {
      failed("largest n: O_n frequency " + std::to_string(points.back().at("on_frequency").get<double>()) +
             " below 0.9");
    }
  } else if (kind == "cylinder_variance") {
    for (const auto& pt : points) {
      const std::string at = "n=" + std::to_string(pt.at("n").get<int>());
      const json& widths = pt.at("widths");
      for (std::size_t w = 0; w < widths.size(); ++w) {
        const json& cur = widths[w];
        const std::string where = at + " width=" + std::to_string(cur.at("width").get<int>());
        if (!cur.at("per_sample_ok").get<bool>()) failed(where + ": restricted value exceeds L");
        if (cur.at("full_width").get<bool>() &&
            (!cur.at("identical").get<bool>() || cur.at("var_cyl").get<double>() != pt.at("var_L").get<double>())) {
          failed(where + ": full-width variance differs from Var L");
        }
      }
    }
  } else if (kind == "shape_curve") {
    const double p = summary.at("p").get<double>();
    for (const auto& pt : points) {
      // A single row gives M/n with mean exactly p, so allow sampling noise below p.
      const double g = pt.at("g_hat").get<double>();
      const double slack = 4.0 * pt.at("stderr").get<double>();
      const double ceiling = (pt.at("n").get<double>() + pt.at("rows").get<double>() - 1.0) / pt.at("n").get<double>();
      if (g < p - slack || g > ceiling) {
        failed("a=" + std::to_string(pt.at("a").get<double>()) + ": g_hat outside [p, (n + rows - 1) / n]");
      }
    }
  } else {
    failed("unknown experiment kind '" + kind + "'");
  }
  return result;
}

double lower_bound_exponent(double r, double alpha) { return r * (1.0 - alpha) / 2.0; }

double universality_exponent(double r, double alpha) { return r * (0.5 - alpha / 6.0); }

const char* software_version() { return "0.1.0"; }

}  // namespace dlpp
