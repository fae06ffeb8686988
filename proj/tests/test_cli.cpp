#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "obilc/config.hpp"
#include "obilc/demo.hpp"
#include "obilc/experiment.hpp"

using namespace obilc;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

json demo_doc() {
  return json::parse(R"({
    "plant": {"type": "demo"},
    "stop_eps": 1e-3,
    "k_max": 60,
    "seed": 1
  })");
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("obilc_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("demo config loads, runs, and converges") {
  const ExperimentConfig cfg = parse_config(demo_doc());
  const ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.points.size() == 1);
  REQUIRE_FALSE(result.points[0].failed());
  REQUIRE(result.points[0].runs.size() == 1);
  const auto& run = result.points[0].runs[0];
  CHECK(run.trace.status == RunStatus::converged);
  CHECK(run.constraints_ok);
  CHECK(run.envelope_ok);
}

TEST_CASE("inverted box bounds are rejected with the coordinate in the path") {
  json doc = demo_doc();
  doc["constraints"] = json::parse(R"({
    "U": {"type": "free"},
    "Y": {"type": "box_per_channel",
          "channels": [{"lower": null, "upper": null},
                       {"lower": 0.5, "upper": -0.5}]},
    "D": {"type": "box_per_channel",
          "channels": [{"lower": -1e-5, "upper": 1e-5},
                       {"lower": -1e-6, "upper": 1e-6}]}
  })");
  try {
    parse_config(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("constraints.Y") != std::string::npos);
    CHECK(msg.find("lower > upper") != std::string::npos);
    CHECK(msg.find("coordinate 1") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected with their path") {
  json doc = demo_doc();
  doc["plannt"] = json{{"type", "demo"}};
  try {
    parse_config(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("config.plannt") != std::string::npos);
  }
}

TEST_CASE("explicit plants require all physical sections") {
  const json doc = json::parse(R"({
    "plant": {"type": "explicit", "G": [[1.0]], "w": [0.0]}
  })");
  CHECK_THROWS_AS(parse_config(doc), ConfigError);
}

TEST_CASE("a small explicit config resolves every weight and set form") {
  const json doc = json::parse(R"({
    "plant": {"type": "explicit", "G": [[1.0, 0.0], [0.5, 1.0]], "w": [0.1, -0.1]},
    "uncertainty": {"scales": [0.9, 1.1], "weights": [0.5, 0.5]},
    "constraints": {
      "U": {"type": "polytope", "A": [[1.0, 1.0]], "b": [5.0]},
      "Y": {"type": "box", "lower": [-4.0, null], "upper": [4.0, null]},
      "D": {"type": "box", "lower": [-0.01, -0.01], "upper": [0.01, 0.01]}
    },
    "weights": {"Q": {"type": "kron_diag", "block": [2.0]},
                "R": {"type": "scaled_identity", "scale": 0.1}},
    "reference": [1.0, 0.5],
    "lambda": [0.5, 0.5],
    "stop_eps": 1e-10,
    "k_max": 200,
    "seed": 3
  })");
  const ExperimentConfig cfg = parse_config(doc);
  CHECK(cfg.plant.inputs() == 2);
  CHECK(cfg.Q(0, 0) == 2.0);
  CHECK(cfg.Q(1, 1) == 2.0);
  CHECK(cfg.R(1, 1) == doctest::Approx(0.1));
  CHECK(cfg.uncertainty.num_vertices() == 2);

  const ExperimentResult result = run_experiment(cfg);
  REQUIRE_FALSE(result.points[0].failed());
  CHECK(result.points[0].runs[0].constraints_ok);
}

TEST_CASE("an overridden step outside the window records a warning and still runs") {
  json doc = demo_doc();
  doc["alpha"] = 50.0;  // far outside any window
  doc["k_max"] = 3;
  const ExperimentConfig cfg = parse_config(doc);
  const ExperimentResult result = run_experiment(cfg);
  REQUIRE_FALSE(result.points[0].failed());
  CHECK(result.points[0].alpha_warning.find("outside the certified window") !=
        std::string::npos);
  // No contraction certificate: the rate-dependent constants degrade to NaN.
  CHECK(std::isnan(result.points[0].certificates.eta));
  REQUIRE(result.points[0].runs.size() == 1);
  CHECK(result.points[0].runs[0].trace.records.size() == 4);
  // Constraint satisfaction survives any step length (Lemma-style guarantee).
  CHECK(result.points[0].runs[0].constraints_ok);
}

TEST_CASE("exact-model noiseless run lands on the constrained optimum") {
  json doc = demo_doc();
  doc["constraints"] = json::parse(R"({
    "U": {"type": "free"},
    "Y": {"type": "box_per_channel",
          "channels": [{"lower": null, "upper": null},
                       {"lower": -0.5, "upper": 0.5}]},
    "D": {"type": "box_per_channel",
          "channels": [{"lower": 0.0, "upper": 0.0}, {"lower": 0.0, "upper": 0.0}]}
  })");
  doc["stop_eps"] = 1e-12;
  doc["k_max"] = 200;
  const ExperimentConfig cfg = parse_config(doc);
  const ExperimentResult result = run_experiment(cfg);
  REQUIRE_FALSE(result.points[0].failed());
  const auto& point = result.points[0];
  const auto& rec = point.runs[0].trace.records.back();
  CHECK(rec.dist_to_ustar <= 1e-6);
}

TEST_CASE("single-point sweep matches the plain run") {
  json doc = demo_doc();
  doc["sweep"] = json::parse(R"({"parameter": "rad_d", "grid": [1e-5]})");
  const ExperimentConfig cfg = parse_config(doc);
  const ExperimentResult swept = run_sweep(cfg);

  json doc2 = demo_doc();
  const ExperimentConfig cfg2 = parse_config(doc2);
  const ExperimentResult plain = run_experiment(cfg2);

  // rad_d = 1e-5 reproduces the demo disturbance box exactly, so the traces
  // must agree record by record.
  REQUIRE(swept.points.size() == 1);
  REQUIRE_FALSE(swept.points[0].failed());
  const auto& a = swept.points[0].runs[0].trace;
  const auto& b = plain.points[0].runs[0].trace;
  REQUIRE(a.records.size() == b.records.size());
  for (size_t k = 0; k < a.records.size(); ++k) {
    CHECK((a.records[k].u - b.records[k].u).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(a.records[k].surrogate_cost == b.records[k].surrogate_cost);
  }
}

TEST_CASE("an infeasible sweep point is isolated; the others complete") {
  json doc = demo_doc();
  // A disturbance radius beyond the velocity limit empties the tightening.
  doc["sweep"] = json::parse(R"({"parameter": "rad_d", "grid": [1e-4, 10.0]})");
  const ExperimentConfig cfg = parse_config(doc);
  const ExperimentResult result = run_sweep(cfg);
  REQUIRE(result.points.size() == 2);
  CHECK_FALSE(result.points[0].failed());
  CHECK(result.points[1].error == PointError::infeasible_tightening);
  CHECK_FALSE(result.points[1].error_message.empty());
}

TEST_CASE("emission: row counts, config echo, determinism, offline revalidation") {
  json doc = demo_doc();
  doc["k_max"] = 12;
  doc["stop_eps"] = 0.0;  // force a fixed-length run
  const ExperimentConfig cfg = parse_config(doc);
  const ExperimentResult result = run_experiment(cfg);

  const fs::path dir_a = fresh_dir("emit_a");
  const fs::path dir_b = fresh_dir("emit_b");
  EmitFormats formats;
  formats.plot = true;
  emit(result, dir_a.string(), formats);

  // Re-running the identical experiment must produce byte-identical files.
  const ExperimentResult result2 = run_experiment(parse_config(doc));
  emit(result2, dir_b.string(), formats);
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const fs::path other = dir_b / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(read_file(entry.path()) == read_file(other));
  }

  // CSV row count = iterations + 1 (plus the header line).
  const std::string csv = read_file(dir_a / "trace_p00_s1.csv");
  const long lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == result.points[0].runs[0].trace.iterations() + 2);

  // The report echoes the config verbatim.
  const json report = json::parse(read_file(dir_a / "report.json"));
  CHECK(report.at("config") == doc);

  // Offline revalidation: every emitted input row passes the robust check.
  const json trace = json::parse(read_file(dir_a / "trace_p00_s1.json"));
  const DemoPlant demo = make_demo_plant();
  for (const auto& rec : trace.at("records")) {
    Vector u(cfg.plant.inputs());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      u[i] = rec.at("u")[static_cast<size_t>(i)].get<double>();
    }
    CHECK(robust_output_check(cfg.uncertainty, cfg.U, cfg.Y, cfg.D, u).ok);
  }
}
