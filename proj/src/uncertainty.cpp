#include "obilc/uncertainty.hpp"

#include <cmath>
#include <sstream>

namespace obilc {

bool Polytope::is_empty() const {
  if (!empty_cache_) {
    empty_cache_ = !feasibility_check(halfspaces()).feasible;
  }
  return *empty_cache_;
}

UncertaintySet::UncertaintySet(std::vector<UncertaintyVertex> verts, Vector weights)
    : vertices(std::move(verts)), nominal_weights(std::move(weights)) {
  if (vertices.empty()) throw DimensionError("uncertainty set: needs at least one vertex");
  const Eigen::Index m = vertices.front().G.rows();
  const Eigen::Index n = vertices.front().G.cols();
  for (size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i].G.rows() != m || vertices[i].G.cols() != n) {
      throw DimensionError("uncertainty set: vertex " + std::to_string(i) + " is " +
                           std::to_string(vertices[i].G.rows()) + "x" +
                           std::to_string(vertices[i].G.cols()) + ", expected " +
                           std::to_string(m) + "x" + std::to_string(n));
    }
    if (vertices[i].w.size() != m) {
      throw DimensionError("uncertainty set: vertex " + std::to_string(i) +
                           " offset has length " + std::to_string(vertices[i].w.size()) +
                           ", expected " + std::to_string(m));
    }
  }
  if (nominal_weights.size() != num_vertices()) {
    throw DimensionError("uncertainty set: weight vector has length " +
                         std::to_string(nominal_weights.size()) + ", expected " +
                         std::to_string(num_vertices()));
  }
  blend_model(*this, nominal_weights);  // simplex validation
}

std::pair<Matrix, Vector> blend_model(const UncertaintySet& unc, const Vector& lambda) {
  if (lambda.size() != unc.num_vertices()) {
    throw DimensionError("blend model: weight vector has length " +
                         std::to_string(lambda.size()) + ", expected " +
                         std::to_string(unc.num_vertices()));
  }
  Vector lam = lambda;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] < -1e-12) {
      throw DimensionError("blend model: weight " + std::to_string(i) + " is negative (" +
                           std::to_string(lam[i]) + ")");
    }
    lam[i] = std::max(lam[i], 0.0);
  }
  if (std::abs(lam.sum() - 1.0) > 1e-12) {
    throw DimensionError("blend model: weights sum to " + std::to_string(lam.sum()) +
                         ", expected 1");
  }
  Matrix M = Matrix::Zero(unc.outputs(), unc.inputs());
  Vector w_M = Vector::Zero(unc.outputs());
  for (Eigen::Index i = 0; i < unc.num_vertices(); ++i) {
    M.noalias() += lam[i] * unc.vertices[static_cast<size_t>(i)].G;
    w_M.noalias() += lam[i] * unc.vertices[static_cast<size_t>(i)].w;
  }
  return {std::move(M), std::move(w_M)};
}

std::optional<Box> pontryagin_diff(const Box& Y, const Box& D) {
  if (Y.dim() != D.dim()) {
    throw DimensionError("pontryagin difference: dimensions differ (" + std::to_string(Y.dim()) +
                         " vs " + std::to_string(D.dim()) + ")");
  }
  if (!D.is_compact()) throw DimensionError("pontryagin difference: D must be compact");
  if (!D.contains_zero()) throw DimensionError("pontryagin difference: D must contain zero");
  Vector lo = Y.lower;
  Vector hi = Y.upper;
  for (Eigen::Index i = 0; i < Y.dim(); ++i) {
    if (std::isfinite(lo[i])) lo[i] -= D.lower[i];
    if (std::isfinite(hi[i])) hi[i] -= D.upper[i];
    if (std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] > hi[i]) return std::nullopt;
  }
  return Box(std::move(lo), std::move(hi));
}

std::optional<ConvexSet> pontryagin_diff(const ConvexSet& Y, const Box& D) {
  if (std::holds_alternative<Box>(Y)) {
    auto shrunk = pontryagin_diff(std::get<Box>(Y), D);
    if (!shrunk) return std::nullopt;
    return ConvexSet(std::move(*shrunk));
  }
  const auto& poly = std::get<Polytope>(Y);
  if (poly.dim() != D.dim()) {
    throw DimensionError("pontryagin difference: dimensions differ (" +
                         std::to_string(poly.dim()) + " vs " + std::to_string(D.dim()) + ")");
  }
  if (!D.is_compact()) throw DimensionError("pontryagin difference: D must be compact");
  if (!D.contains_zero()) throw DimensionError("pontryagin difference: D must contain zero");
  Vector b = poly.b;
  for (Eigen::Index i = 0; i < poly.A.rows(); ++i) {
    b[i] -= D.support(poly.A.row(i).transpose());
  }
  Polytope shrunk(poly.A, std::move(b));
  if (shrunk.is_empty()) return std::nullopt;
  return ConvexSet(std::move(shrunk));
}

namespace {

// Rows of (Y-D) pushed through v -> G_i v + w_i. Rows whose direction is wiped
// out by G_i (a'G_i = 0) are vacuous when satisfied at w_i and fatal otherwise.
HalfspaceSystem vertex_rows(const HalfspaceSystem& shrunk, const UncertaintyVertex& vertex,
                            size_t vertex_index) {
  const Matrix A_v = shrunk.A * vertex.G;
  const Vector b_v = shrunk.b - shrunk.A * vertex.w;
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<size_t>(A_v.rows()));
  for (Eigen::Index r = 0; r < A_v.rows(); ++r) {
    const double row_norm = A_v.row(r).lpNorm<Eigen::Infinity>();
    if (row_norm > 1e-13 * std::max(1.0, vertex.G.lpNorm<Eigen::Infinity>())) {
      keep.push_back(r);
    } else if (b_v[r] < -1e-8) {
      throw EmptyTightenedSetError(
          "tightened set is empty: vertex " + std::to_string(vertex_index) +
          " violates output row " + std::to_string(r) + " independently of the input (margin " +
          std::to_string(b_v[r]) + ")");
    }
  }
  Matrix A_kept(static_cast<Eigen::Index>(keep.size()), A_v.cols());
  Vector b_kept(static_cast<Eigen::Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) {
    A_kept.row(static_cast<Eigen::Index>(j)) = A_v.row(keep[j]);
    b_kept[static_cast<Eigen::Index>(j)] = b_v[keep[j]];
  }
  return HalfspaceSystem(std::move(A_kept), std::move(b_kept));
}

}  // namespace

TightenedSet::TightenedSet(ConvexSet input_set, ConvexSet output_set, Box disturbance_set,
                           const UncertaintySet& unc)
    : input_set_(std::move(input_set)),
      output_set_(std::move(output_set)),
      disturbance_set_(std::move(disturbance_set)),
      vertices_(unc.vertices) {
  const Eigen::Index n = unc.inputs();
  const Eigen::Index m = unc.outputs();
  if (obilc::dim(input_set_) != n) {
    throw DimensionError("tightened set: input set has dimension " +
                         std::to_string(obilc::dim(input_set_)) + ", expected " + std::to_string(n));
  }
  if (obilc::dim(output_set_) != m || disturbance_set_.dim() != m) {
    throw DimensionError("tightened set: output/disturbance sets must have dimension " +
                         std::to_string(m));
  }

  auto shrunk = pontryagin_diff(output_set_, disturbance_set_);
  if (!shrunk) {
    throw EmptyTightenedSetError("tightened set is empty: Y (-) D is empty");
  }
  shrunken_output_set_ = std::move(*shrunk);

  input_rows_ = obilc::halfspaces(input_set_);
  output_rows_ = obilc::halfspaces(output_set_);

  stacked_ = input_rows_.rows() > 0 ? input_rows_ : HalfspaceSystem::empty_system(n);
  const HalfspaceSystem shrunk_rows = obilc::halfspaces(shrunken_output_set_);
  for (size_t i = 0; i < vertices_.size(); ++i) {
    stacked_.append(vertex_rows(shrunk_rows, vertices_[i], i));
  }

  FeasibilityResult feas = feasibility_check(stacked_);
  if (!feas.feasible) {
    throw EmptyTightenedSetError("tightened set is empty (feasibility solve found a certificate)",
                                 feas.certificate);
  }
  feasible_point_ = feas.point;
}

bool TightenedSet::contains(const Vector& v, double tol) const {
  if (!obilc::contains(input_set_, v, tol)) return false;
  for (const auto& vertex : vertices_) {
    if (!obilc::contains(shrunken_output_set_, vertex.G * v + vertex.w, tol)) return false;
  }
  return true;
}

TightenedSet build_tightened_set(const ConvexSet& U, const ConvexSet& Y, const Box& D,
                                 const UncertaintySet& unc) {
  return TightenedSet(U, Y, D, unc);
}

std::string RobustCheck::describe() const {
  if (ok) return "ok";
  std::ostringstream os;
  if (violation == kInf) {
    os << "output set minus disturbance set is empty";
  } else if (vertex < 0) {
    os << "input-set row " << row << " violated by " << violation;
  } else {
    os << "vertex " << vertex << " output row " << row << " violated by " << violation;
  }
  return os.str();
}

RobustCheck robust_output_check(const UncertaintySet& unc, const ConvexSet& U,
                                const ConvexSet& Y, const Box& D, const Vector& u,
                                double tol) {
  if (u.size() != unc.inputs()) {
    throw DimensionError("robust check: input has length " + std::to_string(u.size()) +
                         ", expected " + std::to_string(unc.inputs()));
  }
  RobustCheck check;

  const HalfspaceSystem input_rows = halfspaces(U);
  if (input_rows.rows() > 0) {
    const Vector viol = input_rows.A * u - input_rows.b;
    Eigen::Index row;
    const double worst = viol.maxCoeff(&row);
    if (worst > tol) {
      check.ok = false;
      check.vertex = -1;
      check.row = row;
      check.violation = worst;
    }
  }

  auto shrunk = pontryagin_diff(Y, D);
  if (!shrunk) {
    check.ok = false;
    check.vertex = -1;
    check.row = -1;
    check.violation = kInf;
    return check;
  }
  const HalfspaceSystem shrunk_rows = halfspaces(*shrunk);
  for (Eigen::Index i = 0; i < unc.num_vertices(); ++i) {
    const auto& vertex = unc.vertices[static_cast<size_t>(i)];
    if (shrunk_rows.rows() == 0) continue;
    const Vector viol = shrunk_rows.A * (vertex.G * u + vertex.w) - shrunk_rows.b;
    Eigen::Index row;
    const double worst = viol.maxCoeff(&row);
    if (worst > tol && worst > check.violation) {
      check.ok = false;
      check.vertex = static_cast<int>(i);
      check.row = row;
      check.violation = worst;
    }
  }
  return check;
}

Vector weighted_projection(const Vector& x, const Matrix& W, const TightenedSet& set,
                           QpSettings settings) {
  return weighted_projection(x, W, set.halfspaces(), settings);
}

}  // namespace obilc
