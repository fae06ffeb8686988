#include "obilc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace obilc {

namespace {

using nlohmann::json;

constexpr double kSlackTol = 1e-8;
constexpr double kEnvelopeTol = 1e-6;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

struct PointSetup {
  Matrix M;
  Vector w_M;
  Box D;
  RobustConstants rc;
  std::shared_ptr<const TightenedSet> X;
};

PointSetup prepare_point(const ExperimentConfig& cfg, const std::string& parameter,
                         double value) {
  PointSetup setup;
  if (parameter == "model_blend") {
    // Blend from the true map toward the hull vertex farthest from it.
    const auto& verts = cfg.uncertainty.vertices;
    size_t far = 0;
    double best = -1.0;
    for (size_t i = 0; i < verts.size(); ++i) {
      const double dist = (verts[i].G - cfg.plant.G).norm();
      if (dist > best) {
        best = dist;
        far = i;
      }
    }
    setup.M = (1.0 - value) * cfg.plant.G + value * verts[far].G;
    setup.w_M = (1.0 - value) * cfg.plant.w + value * verts[far].w;
  } else {
    auto [M, w_M] = blend_model(cfg.uncertainty, cfg.lambda);
    setup.M = std::move(M);
    setup.w_M = std::move(w_M);
  }

  setup.D = cfg.D;
  if (parameter == "rad_d") {
    const double base = cfg.D.radius();
    const double scale = base > 0.0 ? value / base : 0.0;
    setup.D = Box(scale * cfg.D.lower, scale * cfg.D.upper);
  }

  setup.rc = robust_constants(cfg.uncertainty, cfg.Q, cfg.R, setup.M);
  setup.X = std::make_shared<const TightenedSet>(cfg.U, cfg.Y, setup.D, cfg.uncertainty);
  return setup;
}

PointResult run_point(const ExperimentConfig& cfg, const std::string& parameter, double value,
                      const std::vector<std::uint64_t>& seeds, bool execute_runs) {
  PointResult point;
  point.parameter = value;

  const PointSetup setup = prepare_point(cfg, parameter, value);
  const StepWindow window = step_window(setup.rc.mu, setup.rc.L);

  PolicyConfig pc(cfg.Q, cfg.R, cfg.r, setup.M,
                  cfg.alpha_override.value_or(window.alpha_default), setup.X);
  pc.alpha_window = std::make_pair(window.lo, window.hi);
  pc.alpha_overridden = cfg.alpha_override.has_value();
  pc.stop_eps = cfg.stop_eps;
  pc.k_max = cfg.k_max;
  pc.check_alpha();
  point.alpha_warning = pc.alpha_warning;

  const CertificateBundle bundle = certify(setup.rc, cfg.uncertainty, pc, cfg.plant.G,
                                           cfg.plant.w);
  point.certificates = bundle.report;
  point.oracle = bundle.oracle;

  if (!execute_runs) return point;

  const Matrix H = cfg.plant.G.transpose() * cfg.Q * cfg.plant.G + cfg.R;
  const Vector f = cfg.plant.G.transpose() * (cfg.Q * (cfg.plant.w - cfg.r));
  TraceOracle oracle;
  if (bundle.oracle.u_bar.size() > 0) oracle.u_bar = bundle.oracle.u_bar;
  oracle.u_star = bundle.oracle.u_star;
  oracle.H = H;
  oracle.f = f;

  std::vector<double> final_costs, iteration_counts;
  for (const std::uint64_t seed : seeds) {
    RunOutput run;
    run.seed = seed;
    const DisturbanceModel noise(setup.D, seed);
    run.trace = run_ilc(cfg.plant, noise, pc, cfg.u0, oracle);

    for (const auto& rec : run.trace.records) {
      run.sup_noise = std::max(run.sup_noise, rec.d.norm());
      if (rec.max_violation > kSlackTol) run.constraints_ok = false;
      point.max_violation = std::max(point.max_violation, rec.max_violation);
    }
    const double eta = point.certificates.eta;
    const double gamma = point.certificates.gamma;
    if (!run.trace.records.empty()) {
      const double d0 = run.trace.records.front().dist_to_ubar;
      double eta_k = 1.0;
      const bool certified = std::isfinite(eta) && std::isfinite(gamma);
      for (const auto& rec : run.trace.records) {
        if (certified && rec.dist_to_ubar > eta_k * d0 + gamma * run.sup_noise + kEnvelopeTol) {
          run.envelope_ok = false;
        }
        eta_k *= eta;
      }
      final_costs.push_back(run.trace.records.back().surrogate_cost);
      iteration_counts.push_back(static_cast<double>(run.trace.iterations()));
    }
    point.runs.push_back(std::move(run));
  }
  point.median_final_cost = median(final_costs);
  point.median_iterations = median(iteration_counts);
  return point;
}

PointResult guarded_point(const ExperimentConfig& cfg, const std::string& parameter,
                          double value, const std::vector<std::uint64_t>& seeds,
                          bool execute_runs) {
  try {
    return run_point(cfg, parameter, value, seeds, execute_runs);
  } catch (const ConfigError& e) {
    PointResult p;
    p.parameter = value;
    p.error = PointError::config;
    p.error_message = e.what();
    return p;
  } catch (const EmptyTightenedSetError& e) {
    PointResult p;
    p.parameter = value;
    p.error = PointError::infeasible_tightening;
    p.error_message = e.what();
    return p;
  } catch (const NotStronglyMonotoneError& e) {
    PointResult p;
    p.parameter = value;
    p.error = PointError::certificate;
    p.error_message = e.what();
    return p;
  } catch (const StepOutOfRangeError& e) {
    PointResult p;
    p.parameter = value;
    p.error = PointError::certificate;
    p.error_message = e.what();
    return p;
  } catch (const Error& e) {
    PointResult p;
    p.parameter = value;
    p.error = PointError::numeric;
    p.error_message = e.what();
    return p;
  }
}

json certificates_to_json(const CertificateReport& rep) {
  json per_vertex = json::array();
  for (const auto& vc : rep.per_vertex) {
    per_vertex.push_back(json{{"mu", vc.mu}, {"L", vc.L}});
  }
  return json{{"mu", rep.mu},
              {"L", rep.L},
              {"per_vertex", per_vertex},
              {"mu_tilde", rep.mu_tilde},
              {"L_tilde", rep.L_tilde},
              {"alpha", rep.alpha},
              {"alpha_window", json::array({0.0, rep.alpha_window_hi})},
              {"alpha_default", rep.alpha_default},
              {"alpha_star", rep.alpha_star},
              {"rate_eps", rep.rate_eps},
              {"eta", rep.eta},
              {"gamma", rep.gamma},
              {"delta", rep.delta},
              {"delta_inverse_mu", rep.delta_inverse_mu},
              {"beta1", rep.beta1},
              {"beta2", rep.beta2},
              {"ubar_ustar_distance_w", rep.ubar_ustar_distance}};
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

const char* to_string(PointError e) {
  switch (e) {
    case PointError::none: return "none";
    case PointError::config: return "config";
    case PointError::infeasible_tightening: return "infeasible_tightening";
    case PointError::certificate: return "certificate";
    case PointError::numeric: return "numeric";
  }
  return "unknown";
}

}  // namespace

bool ExperimentResult::any_certificate_violation() const {
  for (const auto& point : points) {
    if (point.error == PointError::certificate) return true;
    for (const auto& run : point.runs) {
      if (!run.constraints_ok || !run.envelope_ok) return true;
    }
  }
  return false;
}

bool ExperimentResult::any_run_error() const {
  for (const auto& point : points) {
    for (const auto& run : point.runs) {
      if (run.trace.status == RunStatus::error) return true;
    }
  }
  return false;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config_echo = cfg.echo;
  result.reference = cfg.r;
  result.points.push_back(
      run_point(cfg, "", std::numeric_limits<double>::quiet_NaN(), {cfg.seed}, true));
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count();
  return result;
}

ExperimentResult run_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("config.sweep: missing sweep specification");
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config_echo = cfg.echo;
  result.reference = cfg.r;
  for (const double value : cfg.sweep->grid) {
    result.points.push_back(
        guarded_point(cfg, cfg.sweep->parameter, value, cfg.sweep->seeds, true));
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count();
  return result;
}

ExperimentResult certify_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config_echo = cfg.echo;
  result.reference = cfg.r;
  result.points.push_back(
      run_point(cfg, "", std::numeric_limits<double>::quiet_NaN(), {}, false));
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count();
  return result;
}

std::vector<std::string> emit(const ExperimentResult& result, const std::string& out_dir,
                              EmitFormats formats) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  fs::create_directories(out_dir);

  auto write_file = [&](const std::string& name, const std::string& content) {
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("emit: cannot write " + path.string());
    out << content;
    written.push_back(path.string());
  };

  json report;
  report["config"] = result.config_echo;
  report["versions"] = json{{"obilc", "0.1.0"},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                          std::to_string(EIGEN_MINOR_VERSION)},
                            {"trace_format", 1}};
  json points = json::array();

  for (size_t p = 0; p < result.points.size(); ++p) {
    const PointResult& point = result.points[p];
    json jp;
    jp["parameter"] = std::isnan(point.parameter) ? json(nullptr) : json(point.parameter);
    jp["error"] = to_string(point.error);
    jp["error_message"] = point.error_message;
    jp["alpha_warning"] = point.alpha_warning;
    if (!point.failed()) {
      jp["certificates"] = certificates_to_json(point.certificates);
      jp["oracle"] = json{{"u_star", vector_to_json(point.oracle.u_star)},
                          {"u_bar", vector_to_json(point.oracle.u_bar)},
                          {"u_star_kkt_residual", point.oracle.u_star_kkt_residual},
                          {"u_bar_vi_residual", point.oracle.u_bar_vi_residual},
                          {"u_bar_iterations", point.oracle.u_bar_iterations}};
      jp["summary"] = json{{"median_final_cost", point.median_final_cost},
                           {"median_iterations", point.median_iterations},
                           {"max_violation", point.max_violation}};
    }

    json jruns = json::array();
    for (const RunOutput& run : point.runs) {
      char tag[64];
      std::snprintf(tag, sizeof(tag), "trace_p%02zu_s%llu", p,
                    static_cast<unsigned long long>(run.seed));
      const std::string base(tag);

      if (formats.csv && !run.trace.records.empty()) {
        std::string csv =
            "k,surrogate_cost,true_cost,dist_to_ubar_W,dist_to_ustar_W,max_slack\n";
        for (const auto& rec : run.trace.records) {
          csv += std::to_string(rec.k) + "," + fmt17(rec.surrogate_cost) + "," +
                 fmt17(rec.true_cost) + "," + fmt17(rec.dist_to_ubar) + "," +
                 fmt17(rec.dist_to_ustar) + "," + fmt17(rec.max_violation) + "\n";
        }
        write_file(base + ".csv", csv);
      }
      if (formats.json) {
        json jt;
        jt["seed"] = run.seed;
        jt["status"] = to_string(run.trace.status);
        jt["error_message"] = run.trace.error_message;
        json recs = json::array();
        for (const auto& rec : run.trace.records) {
          recs.push_back(json{{"k", rec.k},
                              {"u", vector_to_json(rec.u)},
                              {"y", vector_to_json(rec.y)},
                              {"d", vector_to_json(rec.d)},
                              {"surrogate_cost", rec.surrogate_cost},
                              {"true_cost", rec.true_cost},
                              {"dist_to_ubar_W", rec.dist_to_ubar},
                              {"dist_to_ustar_W", rec.dist_to_ustar},
                              {"max_slack", rec.max_violation}});
        }
        jt["records"] = std::move(recs);
        write_file(base + ".json", jt.dump(2) + "\n");
      }
      if (formats.plot && !run.trace.records.empty()) {
        std::string overlay = "index,reference,final_output\n";
        const auto& last = run.trace.records.back();
        for (Eigen::Index i = 0; i < last.y.size(); ++i) {
          const double ref = i < result.reference.size() ? result.reference[i] : 0.0;
          overlay += std::to_string(i) + "," + fmt17(ref) + "," + fmt17(last.y[i]) + "\n";
        }
        write_file("plot_" + base + ".csv", overlay);
      }

      jruns.push_back(json{
          {"seed", run.seed},
          {"status", to_string(run.trace.status)},
          {"iterations", run.trace.iterations()},
          {"final_surrogate_cost",
           run.trace.records.empty() ? json(nullptr)
                                     : json(run.trace.records.back().surrogate_cost)},
          {"sup_noise", run.sup_noise},
          {"constraints_ok", run.constraints_ok},
          {"envelope_ok", run.envelope_ok},
          {"trace_base", base}});
    }
    jp["runs"] = std::move(jruns);
    points.push_back(std::move(jp));
  }
  report["points"] = std::move(points);
  write_file("report.json", report.dump(2) + "\n");
  return written;
}

}  // namespace obilc
