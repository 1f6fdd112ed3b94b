#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "dlpp/experiments.hpp"
#include "dlpp/grid.hpp"
#include "dlpp/passage.hpp"
#include "temp_dir.hpp"

using namespace dlpp;
using nlohmann::json;

namespace {

json base_doc() {
  return json::parse(R"({"kind":"moment_scaling","model":{"bernoulli":0.5},"alpha":0.25,"r":[1,2],
                         "n":[16,32,64],"replicates":40,"seed":3,
                         "constants":{"bootstrap":50,"fit_resamples":50}})");
}

void check_spec_error(const json& doc, const std::string& field) {
  try {
    parse_spec(doc);
    FAIL("expected a SpecError naming " << field);
  } catch (const SpecError& e) {
    INFO(e.what());
    CHECK(std::string(e.what()).find("'" + field + "'") != std::string::npos);
  }
}

std::vector<json> small_specs() {
  std::vector<json> docs;
  docs.push_back(base_doc());
  docs.push_back(json::parse(R"({"kind":"coupling_check","model":{"atoms":[[0,0.25],[1,0.25],[2,0.5]],"m":1},
                                "alpha":0.5,"n":[4,9],"replicates":30,"seed":4})"));
  docs.push_back(json::parse(R"({"kind":"mn_growth","model":{"bernoulli":0.5},"alpha":0.25,"n":[8,16,32],
                                "replicates":50,"seed":5})"));
  docs.push_back(json::parse(R"({"kind":"lipschitz_frequency","model":{"bernoulli":0.5},"alpha":0.25,
                                "n":[64,128],"replicates":12,"seed":6})"));
  docs.push_back(json::parse(R"({"kind":"cylinder_variance","model":{"bernoulli":0.5},"alpha":0.5,"n":[16,64],
                                "replicates":40,"seed":7,"constants":{"widths":[1,2,8]}})"));
  docs.push_back(json::parse(R"({"kind":"shape_curve","model":{"bernoulli":0.3},"n":[100,200],
                                "replicates":20,"seed":8,"constants":{"a":[0.05,0.2]}})"));
  return docs;
}

ExperimentRecord run_in(const ExperimentSpec& spec, const std::filesystem::path& dir, int parallelism,
                        bool resume = false, std::optional<std::size_t> max_units = std::nullopt) {
  RunOptions options;
  options.directory = dir;
  options.parallelism = parallelism;
  options.resume = resume;
  options.max_units = max_units;
  return run_experiment(spec, options);
}

}  // namespace

TEST_CASE("spec parsing fills defaults and names offending fields") {
  const auto spec = parse_spec(base_doc());
  CHECK(spec.kind == ExperimentKind::kMomentScaling);
  CHECK(spec.model().p() == 0.5);
  CHECK(spec.n == std::vector<int>{16, 32, 64});
  CHECK(spec.constants.bootstrap == 50);
  CHECK_FALSE(spec.constants.epsilon.has_value());

  auto doc = base_doc();
  doc.erase("replicates");
  check_spec_error(doc, "replicates");
  doc = base_doc();
  doc.erase("seed");
  check_spec_error(doc, "seed");
  doc = base_doc();
  doc["n"] = {64, 32};
  check_spec_error(doc, "n");
  doc["n"] = {16, 16};
  check_spec_error(doc, "n");
  doc = base_doc();
  doc["replicates"] = 1;
  check_spec_error(doc, "replicates");
  doc = base_doc();
  doc["alpha"] = 0.0;
  check_spec_error(doc, "alpha");
  doc["alpha"] = 1.5;
  check_spec_error(doc, "alpha");
  doc = base_doc();
  doc["kind"] = "nonsense";
  check_spec_error(doc, "kind");
  doc = base_doc();
  doc["replicats"] = 5;
  check_spec_error(doc, "replicats");
  doc = base_doc();
  doc["model"] = {{"bernoulli", 1.0}};
  check_spec_error(doc, "model");
  doc = base_doc();
  doc["model"] = {{"atoms", {{0, 0.5}, {1, 0.5}}}};
  check_spec_error(doc, "model.m");
  doc = base_doc();
  doc["r"] = "two";
  check_spec_error(doc, "r");
  doc = base_doc();
  doc.erase("r");
  check_spec_error(doc, "r");
  doc = base_doc();
  doc["constants"]["epsilon"] = 0.3;
  check_spec_error(doc, "constants.epsilon");

  doc = base_doc();
  doc["kind"] = "cylinder_variance";
  check_spec_error(doc, "constants.widths");
  doc["constants"]["widths"] = {0};
  check_spec_error(doc, "constants.widths");
  doc = base_doc();
  doc["kind"] = "shape_curve";
  check_spec_error(doc, "constants.a");
  doc["constants"]["a"] = {0.01};  // floor(16 * 0.01) = 0
  check_spec_error(doc, "constants.a");
}

TEST_CASE("syntax errors report line and column") {
  try {
    parse_spec_text("{\n  \"kind\": \"mn_growth\",\n  \"n\": [1, 2,\n");
    FAIL("expected a SpecError");
  } catch (const SpecError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("canonical form and hash") {
  const auto spec = parse_spec(base_doc());
  CHECK(parse_spec(to_json(spec)).n == spec.n);
  CHECK(spec_hash(parse_spec(to_json(spec))) == spec_hash(spec));
  CHECK(spec_hash(spec).size() == 64);

  auto explicit_atoms = base_doc();
  explicit_atoms["model"] = json::parse(R"({"atoms":[[0,0.5],[1,0.5]],"m":0})");
  CHECK(spec_hash(parse_spec(explicit_atoms)) == spec_hash(spec));

  auto other_seed = base_doc();
  other_seed["seed"] = 4;
  CHECK(spec_hash(parse_spec(other_seed)) != spec_hash(spec));
}

TEST_CASE("replicates draw from the documented stream") {
  const auto spec = parse_spec(base_doc());
  const auto model = spec.model();
  for (std::size_t i = 0; i < spec.n.size(); ++i) {
    for (std::uint32_t j = 0; j < 5; ++j) {
      RandomStream rng(StreamKey{spec.seed, purpose::kMomentScaling, static_cast<std::uint32_t>(i), j});
      const auto grid = sample_grid(GridShape::from_alpha(spec.n[i], spec.alpha), model, rng);
      const json values = run_replicate(spec, i, j);
      CHECK(values.at("L").get<double>() == static_cast<double>(last_passage_value(grid)));
      CHECK(values.at("M").get<int>() == hi_mode_max(grid));
      CHECK(run_replicate(spec, i, j) == values);
    }
  }
  CHECK_THROWS(run_replicate(spec, 3, 0));
}

TEST_CASE("parallelism 1 and 8 give byte-identical summaries for every kind") {
  for (const auto& doc : small_specs()) {
    const auto spec = parse_spec(doc);
    INFO(to_string(spec.kind));
    TempDir tmp;
    const auto serial = run_in(spec, tmp / "serial", 1);
    const auto parallel = run_in(spec, tmp / "parallel", 8);
    REQUIRE(serial.complete);
    REQUIRE(parallel.complete);
    CHECK(slurp(tmp / "serial/summary.json") == slurp(tmp / "parallel/summary.json"));
    CHECK(load_replicates(tmp / "serial") == load_replicates(tmp / "parallel"));
    CHECK_FALSE(serial.summary.contains("started"));
    const json meta = json::parse(slurp(tmp / "serial/meta.json"));
    CHECK(meta.contains("started"));
    CHECK(meta.at("version") == software_version());
    CHECK(meta.at("spec_hash") == spec_hash(spec));
  }
}

TEST_CASE("interrupted runs resume to the uninterrupted record") {
  const auto spec = parse_spec(base_doc());
  TempDir tmp;
  const auto fresh = run_in(spec, tmp / "fresh", 2);

  for (std::size_t stop_after : {std::size_t{0}, std::size_t{1}, std::size_t{60}, std::size_t{119}}) {
    INFO("stop after " << stop_after);
    const auto dir = tmp / ("resumed" + std::to_string(stop_after));
    const auto partial = run_in(spec, dir, 3, false, stop_after);
    CHECK_FALSE(partial.complete);
    CHECK(partial.units_done == stop_after);
    CHECK_FALSE(std::filesystem::exists(dir / "summary.json"));
    const auto finished = run_in(spec, dir, 2, true);
    CHECK(finished.complete);
    CHECK(slurp(dir / "summary.json") == slurp(tmp / "fresh/summary.json"));
    CHECK(load_replicates(dir) == load_replicates(tmp / "fresh"));
  }

  SUBCASE("a torn final line is dropped and recomputed") {
    const auto dir = tmp / "torn";
    run_in(spec, dir, 1, false, 50);
    std::ofstream(dir / "replicates.jsonl", std::ios::app) << R"({"i":1,"j":)";
    CHECK(run_in(spec, dir, 1, true).complete);
    CHECK(slurp(dir / "summary.json") == slurp(tmp / "fresh/summary.json"));
  }
  SUBCASE("resuming a complete record is a no-op") {
    const auto again = run_in(spec, tmp / "fresh", 4, true);
    CHECK(again.complete);
    CHECK(again.units_done == again.units_total);
  }
}

TEST_CASE("record errors") {
  const auto spec = parse_spec(base_doc());
  TempDir tmp;
  run_in(spec, tmp / "r", 1, false, 10);
  SUBCASE("existing record without resume") {
    CHECK_THROWS_WITH_AS(run_in(spec, tmp / "r", 1), doctest::Contains("already exists"), std::runtime_error);
  }
  SUBCASE("spec hash mismatch on resume") {
    auto doc = base_doc();
    doc["seed"] = 99;
    CHECK_THROWS_WITH_AS(run_in(parse_spec(doc), tmp / "r", 1, true), doctest::Contains("hash mismatch"),
                         std::runtime_error);
  }
  SUBCASE("corrupt interior line names the file") {
    const std::string content = slurp(tmp / "r/replicates.jsonl");
    spit(tmp / "r/replicates.jsonl", "garbage\n" + content);
    CHECK_THROWS_WITH_AS(run_in(spec, tmp / "r", 1, true), doctest::Contains("replicates.jsonl"), std::runtime_error);
  }
  SUBCASE("unwritable directory") {
    spit(tmp / "file", "x");
    CHECK_THROWS_WITH_AS(run_in(spec, tmp / "file/sub", 1), doctest::Contains("file"), std::runtime_error);
  }
  SUBCASE("bad parallelism") { CHECK_THROWS(run_in(spec, tmp / "p", 0)); }
}

TEST_CASE("moment_scaling summary") {
  const auto spec = parse_spec(base_doc());
  TempDir tmp;
  const auto summary = run_in(spec, tmp / "m", 1).summary;
  CHECK(summary.at("kind") == "moment_scaling");
  REQUIRE(summary.at("points").size() == 3);
  REQUIRE(summary.at("fits").size() == 2);
  CHECK(summary.at("fits")[1].at("target").get<double>() == 0.75);
  CHECK(summary.at("fits")[1].at("threshold").get<double>() == doctest::Approx(0.70));
  CHECK(summary.at("fits")[0].at("universality").get<double>() == doctest::Approx(0.5 - 0.25 / 6));
  CHECK(summary.at("points")[2].at("rows") == 2);
  CHECK(lower_bound_exponent(1.0, 0.25) == 0.375);
  CHECK(universality_exponent(2.0, 0.25) == doctest::Approx(2 * (0.5 - 0.25 / 6)));

  auto two_n = base_doc();
  two_n["n"] = {16, 32};
  const auto short_summary = run_in(parse_spec(two_n), tmp / "short", 1).summary;
  CHECK(short_summary.at("fits")[0].at("slope").is_null());
  CHECK(short_summary.at("warnings").size() == 2);
  CHECK_FALSE(check_summary(short_summary).passed);
}

TEST_CASE("mn_growth marks zero frequencies and stops the log fit there") {
  const auto spec = parse_spec(small_specs()[2]);
  TempDir tmp;
  const auto summary = run_in(spec, tmp / "g", 1).summary;
  CHECK(summary.at("c1").get<double>() == doctest::Approx(0.875));
  for (const auto& pt : summary.at("points")) {
    CHECK(pt.at("cutoff").get<double>() == doctest::Approx(0.875 * pt.at("n").get<double>()));
    if (pt.at("zero").get<bool>()) {
      CHECK(pt.at("label") == "< 1/50");
      CHECK(pt.at("ci_lo").get<double>() == 0.0);
    } else {
      CHECK(pt.at("label").is_null());
    }
  }
}

TEST_CASE("cylinder_variance pairs samples on identical grids") {
  const auto spec = parse_spec(small_specs()[4]);
  TempDir tmp;
  const auto summary = run_in(spec, tmp / "c", 2).summary;
  for (const auto& pt : summary.at("points")) {
    for (const auto& w : pt.at("widths")) {
      CHECK(w.at("per_sample_ok").get<bool>());
      CHECK(w.at("upper").get<double>() >= w.at("lower").get<double>());
      if (w.at("width").get<int>() >= pt.at("rows").get<int>()) {
        CHECK(w.at("identical").get<bool>());
        CHECK(w.at("var_cyl").get<double>() == pt.at("var_L").get<double>());
        CHECK(w.at("p_lost").get<double>() == 0.0);
      }
    }
  }
  CHECK(check_summary(summary).passed);
}

TEST_CASE("check_summary flags failures by kind") {
  json moments = {{"kind", "moment_scaling"},
                  {"fits", json::array({{{"r", 2.0}, {"slope", 0.69}, {"threshold", 0.70}}})}};
  CHECK_FALSE(check_summary(moments).passed);
  moments["fits"][0]["slope"] = 0.71;
  CHECK(check_summary(moments).passed);

  json growth = {{"kind", "mn_growth"},
                 {"points", json::array({{{"n", 32}, {"ci_lo", 0.0}, {"ci_hi", 0.01}, {"frequency", 0.005}},
                                         {{"n", 64}, {"ci_lo", 0.02}, {"ci_hi", 0.05}, {"frequency", 0.03}}})}};
  CHECK(check_summary(growth).failures.size() == 2);

  json lip = {{"kind", "lipschitz_frequency"}, {"points", json::array({{{"n", 256}, {"on_frequency", 0.89}}})}};
  CHECK_FALSE(check_summary(lip).passed);
  lip["points"][0]["on_frequency"] = 0.9;
  CHECK(check_summary(lip).passed);

  json coupling = {{"kind", "coupling_check"},
                   {"points", json::array({{{"n", 4}, {"ks_p", 0.0001}, {"monotone_failures", 1}}})}};
  CHECK(check_summary(coupling).failures.size() == 2);

  CHECK_FALSE(check_summary(json{{"kind", "other"}, {"points", json::array()}}).passed);
}
