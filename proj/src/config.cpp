#include "obilc/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "obilc/demo.hpp"

namespace obilc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

void expect_object(const json& j, const std::string& path,
                   std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  const std::set<std::string> allowed_set(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed_set.count(key)) fail(path + "." + key, "unknown key");
  }
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) fail(path, std::string("missing required key '") + key + "'");
  return j.at(key);
}

double parse_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double parse_bound(const json& j, const std::string& path, double unbounded_sign) {
  if (j.is_null()) return unbounded_sign * kInf;
  return parse_number(j, path);
}

long parse_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long>();
}

Vector parse_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = parse_number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matrix parse_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) fail(path + "[0]", "expected a non-empty row");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != cols) {
      fail(row_path, "expected a row of length " + std::to_string(cols));
    }
    for (size_t k = 0; k < cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          parse_number(j[i][k], row_path + "[" + std::to_string(k) + "]");
    }
  }
  return m;
}

Box parse_box(const json& j, const std::string& path, Eigen::Index dim) {
  const std::string type = require(j, path, "type").get<std::string>();
  Vector lo, hi;
  if (type == "box") {
    expect_object(j, path, {"type", "lower", "upper"});
    const json& jl = require(j, path, "lower");
    const json& ju = require(j, path, "upper");
    if (!jl.is_array() || !ju.is_array()) fail(path, "lower/upper must be arrays");
    if (static_cast<Eigen::Index>(jl.size()) != dim ||
        static_cast<Eigen::Index>(ju.size()) != dim) {
      fail(path, "bounds must have length " + std::to_string(dim));
    }
    lo.resize(dim);
    hi.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      lo[i] = parse_bound(jl[static_cast<size_t>(i)],
                          path + ".lower[" + std::to_string(i) + "]", -1.0);
      hi[i] = parse_bound(ju[static_cast<size_t>(i)],
                          path + ".upper[" + std::to_string(i) + "]", 1.0);
    }
  } else if (type == "box_per_channel") {
    expect_object(j, path, {"type", "channels"});
    const json& jc = require(j, path, "channels");
    if (!jc.is_array() || jc.empty()) fail(path + ".channels", "expected a non-empty array");
    const Eigen::Index q = static_cast<Eigen::Index>(jc.size());
    if (dim % q != 0) {
      fail(path + ".channels",
           "channel count " + std::to_string(q) + " does not divide dimension " +
               std::to_string(dim));
    }
    lo.resize(dim);
    hi.resize(dim);
    for (Eigen::Index c = 0; c < q; ++c) {
      const std::string cpath = path + ".channels[" + std::to_string(c) + "]";
      const json& ch = jc[static_cast<size_t>(c)];
      expect_object(ch, cpath, {"lower", "upper"});
      const double l = parse_bound(require(ch, cpath, "lower"), cpath + ".lower", -1.0);
      const double u = parse_bound(require(ch, cpath, "upper"), cpath + ".upper", 1.0);
      for (Eigen::Index rep = c; rep < dim; rep += q) {
        lo[rep] = l;
        hi[rep] = u;
      }
    }
  } else {
    fail(path + ".type", "expected 'box' or 'box_per_channel', got '" + type + "'");
  }
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] > hi[i]) {
      fail(path, "lower > upper at coordinate " + std::to_string(i));
    }
  }
  return Box(std::move(lo), std::move(hi));
}

ConvexSet parse_set(const json& j, const std::string& path, Eigen::Index dim) {
  const std::string type = require(j, path, "type").get<std::string>();
  if (type == "free") {
    expect_object(j, path, {"type"});
    return Box::unbounded(dim);
  }
  if (type == "polytope") {
    expect_object(j, path, {"type", "A", "b"});
    Matrix A = parse_matrix(require(j, path, "A"), path + ".A");
    Vector b = parse_vector(require(j, path, "b"), path + ".b");
    if (A.cols() != dim) {
      fail(path + ".A", "expected " + std::to_string(dim) + " columns");
    }
    if (A.rows() != b.size()) fail(path + ".b", "length must match the rows of A");
    try {
      return Polytope(std::move(A), std::move(b));
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }
  try {
    return parse_box(j, path, dim);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

Matrix parse_weight(const json& j, const std::string& path, Eigen::Index dim) {
  const std::string type = require(j, path, "type").get<std::string>();
  if (type == "dense") {
    expect_object(j, path, {"type", "data"});
    Matrix m = parse_matrix(require(j, path, "data"), path + ".data");
    if (m.rows() != dim || m.cols() != dim) {
      fail(path + ".data", "expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                               " matrix");
    }
    return m;
  }
  if (type == "diag") {
    expect_object(j, path, {"type", "values"});
    const Vector v = parse_vector(require(j, path, "values"), path + ".values");
    if (v.size() != dim) fail(path + ".values", "expected length " + std::to_string(dim));
    return Matrix(v.asDiagonal());
  }
  if (type == "kron_diag") {
    expect_object(j, path, {"type", "block"});
    const Vector block = parse_vector(require(j, path, "block"), path + ".block");
    if (block.size() == 0 || dim % block.size() != 0) {
      fail(path + ".block",
           "block length " + std::to_string(block.size()) + " does not divide dimension " +
               std::to_string(dim));
    }
    Vector diag(dim);
    for (Eigen::Index i = 0; i < dim; ++i) diag[i] = block[i % block.size()];
    return Matrix(diag.asDiagonal());
  }
  if (type == "scaled_identity") {
    expect_object(j, path, {"type", "scale"});
    const double s = parse_number(require(j, path, "scale"), path + ".scale");
    return s * Matrix::Identity(dim, dim);
  }
  fail(path + ".type", "expected 'dense', 'diag', 'kron_diag', or 'scaled_identity'");
}

LiftedSystem parse_plant(const json& j, const std::string& path, bool& is_demo) {
  const std::string type = require(j, path, "type").get<std::string>();
  is_demo = false;
  if (type == "demo") {
    expect_object(j, path, {"type"});
    is_demo = true;
    return make_demo_plant().sys;
  }
  if (type == "explicit") {
    expect_object(j, path, {"type", "G", "w"});
    try {
      return LiftedSystem(parse_matrix(require(j, path, "G"), path + ".G"),
                          parse_vector(require(j, path, "w"), path + ".w"));
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }
  if (type == "ltv") {
    expect_object(j, path, {"type", "A", "B", "C", "c", "x0"});
    LtvRealization ltv;
    auto parse_list = [&](const char* key, std::vector<Matrix>& out) {
      const json& arr = require(j, path, key);
      if (!arr.is_array()) fail(path + "." + key, "expected an array of matrices");
      for (size_t i = 0; i < arr.size(); ++i) {
        out.push_back(parse_matrix(arr[i], path + "." + key + "[" + std::to_string(i) + "]"));
      }
    };
    parse_list("A", ltv.A);
    parse_list("B", ltv.B);
    parse_list("C", ltv.C);
    const json& jc = require(j, path, "c");
    if (!jc.is_array()) fail(path + ".c", "expected an array of vectors");
    for (size_t i = 0; i < jc.size(); ++i) {
      ltv.c.push_back(parse_vector(jc[i], path + ".c[" + std::to_string(i) + "]"));
    }
    ltv.x0 = parse_vector(require(j, path, "x0"), path + ".x0");
    try {
      return build_lifted(ltv);
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }
  fail(path + ".type", "expected 'demo', 'explicit', or 'ltv', got '" + type + "'");
}

UncertaintySet parse_uncertainty(const json& j, const std::string& path,
                                 const LiftedSystem& plant) {
  if (j.contains("vertices")) {
    expect_object(j, path, {"vertices", "weights"});
    const json& verts = j.at("vertices");
    if (!verts.is_array() || verts.empty()) {
      fail(path + ".vertices", "expected a non-empty array");
    }
    std::vector<UncertaintyVertex> list;
    for (size_t i = 0; i < verts.size(); ++i) {
      const std::string vpath = path + ".vertices[" + std::to_string(i) + "]";
      expect_object(verts[i], vpath, {"G", "w"});
      list.push_back({parse_matrix(require(verts[i], vpath, "G"), vpath + ".G"),
                      parse_vector(require(verts[i], vpath, "w"), vpath + ".w")});
    }
    const Vector weights = parse_vector(require(j, path, "weights"), path + ".weights");
    try {
      return UncertaintySet(std::move(list), weights);
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }
  if (j.contains("scales")) {
    expect_object(j, path, {"scales", "weights"});
    const Vector scales = parse_vector(j.at("scales"), path + ".scales");
    if (scales.size() == 0) fail(path + ".scales", "expected at least one scale factor");
    std::vector<UncertaintyVertex> list;
    for (Eigen::Index i = 0; i < scales.size(); ++i) {
      list.push_back({scales[i] * plant.G, plant.w});
    }
    const Vector weights = parse_vector(require(j, path, "weights"), path + ".weights");
    try {
      return UncertaintySet(std::move(list), weights);
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }
  fail(path, "expected either 'vertices' or 'scales'");
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  const std::string root = "config";
  expect_object(doc, root,
                {"plant", "uncertainty", "constraints", "weights", "reference", "lambda",
                 "alpha", "stop_eps", "k_max", "seed", "u0", "sweep"});

  ExperimentConfig cfg;
  cfg.echo = doc;

  bool is_demo = false;
  cfg.plant = parse_plant(require(doc, root, "plant"), root + ".plant", is_demo);
  const Eigen::Index n = cfg.plant.inputs();
  const Eigen::Index m = cfg.plant.outputs();

  std::optional<DemoPlant> demo;
  if (is_demo) demo = make_demo_plant();

  if (doc.contains("uncertainty")) {
    cfg.uncertainty = parse_uncertainty(doc.at("uncertainty"), root + ".uncertainty", cfg.plant);
  } else if (demo) {
    cfg.uncertainty = demo->uncertainty;
  } else {
    fail(root, "missing required key 'uncertainty'");
  }
  if (cfg.uncertainty.inputs() != n || cfg.uncertainty.outputs() != m) {
    fail(root + ".uncertainty", "vertex dimensions do not match the plant (" +
                                    std::to_string(m) + "x" + std::to_string(n) + ")");
  }

  if (doc.contains("constraints")) {
    const json& jc = doc.at("constraints");
    const std::string cpath = root + ".constraints";
    expect_object(jc, cpath, {"U", "Y", "D"});
    cfg.U = parse_set(require(jc, cpath, "U"), cpath + ".U", n);
    cfg.Y = parse_set(require(jc, cpath, "Y"), cpath + ".Y", m);
    cfg.D = parse_box(require(jc, cpath, "D"), cpath + ".D", m);
    if (!cfg.D.is_compact()) fail(cpath + ".D", "disturbance box must be compact");
    if (!cfg.D.contains_zero()) fail(cpath + ".D", "disturbance box must contain zero");
  } else if (demo) {
    cfg.U = demo->U;
    cfg.Y = demo->Y;
    cfg.D = demo->D;
  } else {
    fail(root, "missing required key 'constraints'");
  }

  if (doc.contains("weights")) {
    const json& jw = doc.at("weights");
    const std::string wpath = root + ".weights";
    expect_object(jw, wpath, {"Q", "R"});
    cfg.Q = parse_weight(require(jw, wpath, "Q"), wpath + ".Q", m);
    cfg.R = parse_weight(require(jw, wpath, "R"), wpath + ".R", n);
  } else if (demo) {
    cfg.Q = demo->Q;
    cfg.R = demo->R;
  } else {
    fail(root, "missing required key 'weights'");
  }

  if (doc.contains("reference")) {
    const json& jr = doc.at("reference");
    if (jr.is_string() && jr.get<std::string>() == "demo") {
      if (!demo) fail(root + ".reference", "'demo' requires the demo plant");
      cfg.r = demo->r;
    } else {
      cfg.r = parse_vector(jr, root + ".reference");
      if (cfg.r.size() != m) {
        fail(root + ".reference", "expected length " + std::to_string(m));
      }
    }
  } else if (demo) {
    cfg.r = demo->r;
  } else {
    fail(root, "missing required key 'reference'");
  }

  if (doc.contains("lambda")) {
    cfg.lambda = parse_vector(doc.at("lambda"), root + ".lambda");
    if (cfg.lambda.size() != cfg.uncertainty.num_vertices()) {
      fail(root + ".lambda",
           "expected length " + std::to_string(cfg.uncertainty.num_vertices()));
    }
  } else {
    cfg.lambda = cfg.uncertainty.nominal_weights;
  }
  try {
    blend_model(cfg.uncertainty, cfg.lambda);
  } catch (const Error& e) {
    fail(root + ".lambda", e.what());
  }

  if (doc.contains("alpha")) {
    cfg.alpha_override = parse_number(doc.at("alpha"), root + ".alpha");
    if (!(*cfg.alpha_override > 0.0)) fail(root + ".alpha", "step length must be positive");
  }
  if (doc.contains("stop_eps")) {
    cfg.stop_eps = parse_number(doc.at("stop_eps"), root + ".stop_eps");
    if (cfg.stop_eps < 0.0) fail(root + ".stop_eps", "must be nonnegative");
  }
  if (doc.contains("k_max")) {
    cfg.k_max = parse_integer(doc.at("k_max"), root + ".k_max");
    if (cfg.k_max < 0) fail(root + ".k_max", "must be nonnegative");
  }
  if (doc.contains("seed")) {
    const long s = parse_integer(doc.at("seed"), root + ".seed");
    if (s < 0) fail(root + ".seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (doc.contains("u0")) {
    cfg.u0 = parse_vector(doc.at("u0"), root + ".u0");
    if (cfg.u0.size() != n) fail(root + ".u0", "expected length " + std::to_string(n));
  }

  if (doc.contains("sweep")) {
    const json& js = doc.at("sweep");
    const std::string spath = root + ".sweep";
    expect_object(js, spath, {"parameter", "grid", "seeds"});
    SweepSpec sweep;
    sweep.parameter = require(js, spath, "parameter").get<std::string>();
    if (sweep.parameter != "model_blend" && sweep.parameter != "rad_d") {
      fail(spath + ".parameter", "expected 'model_blend' or 'rad_d'");
    }
    const Vector grid = parse_vector(require(js, spath, "grid"), spath + ".grid");
    if (grid.size() == 0) fail(spath + ".grid", "expected a non-empty grid");
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      if (sweep.parameter == "model_blend" && (grid[i] < 0.0 || grid[i] > 1.0)) {
        fail(spath + ".grid[" + std::to_string(i) + "]", "blend values must lie in [0, 1]");
      }
      if (sweep.parameter == "rad_d" && grid[i] < 0.0) {
        fail(spath + ".grid[" + std::to_string(i) + "]", "radius values must be nonnegative");
      }
      sweep.grid.push_back(grid[i]);
    }
    if (js.contains("seeds")) {
      const json& jseeds = js.at("seeds");
      if (!jseeds.is_array() || jseeds.empty()) {
        fail(spath + ".seeds", "expected a non-empty array");
      }
      for (size_t i = 0; i < jseeds.size(); ++i) {
        const long s =
            parse_integer(jseeds[i], spath + ".seeds[" + std::to_string(i) + "]");
        if (s < 0) fail(spath + ".seeds[" + std::to_string(i) + "]", "must be nonnegative");
        sweep.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    } else {
      sweep.seeds.push_back(cfg.seed);
    }
    if (sweep.parameter == "rad_d" && cfg.D.radius() <= 0.0) {
      fail(spath, "a rad_d sweep needs a base disturbance box of positive radius");
    }
    cfg.sweep = std::move(sweep);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("parse error in " + path + ": " + e.what());
  }
  return parse_config(doc);
}

}  // namespace obilc
