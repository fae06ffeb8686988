#include "obilc/sets.hpp"

#include <cmath>

namespace obilc {

namespace {

void require_finite(const Vector& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw DimensionError(std::string(what) + " has a non-finite entry at index " +
                           std::to_string(i));
    }
  }
}

}  // namespace

HalfspaceSystem::HalfspaceSystem(Matrix A_in, Vector b_in)
    : A(std::move(A_in)), b(std::move(b_in)) {
  if (A.rows() != b.size()) {
    throw DimensionError("half-space system: A has " + std::to_string(A.rows()) +
                         " rows but b has length " + std::to_string(b.size()));
  }
}

double HalfspaceSystem::violation(const Vector& x) const {
  if (x.size() != dim()) {
    throw DimensionError("half-space system: point has length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(dim()));
  }
  if (rows() == 0) return -kInf;
  return (A * x - b).maxCoeff();
}

void HalfspaceSystem::append(const HalfspaceSystem& other) {
  if (rows() == 0) {
    *this = other;
    return;
  }
  if (other.rows() == 0) return;
  if (other.dim() != dim()) {
    throw DimensionError("half-space append: dimension mismatch (" + std::to_string(dim()) +
                         " vs " + std::to_string(other.dim()) + ")");
  }
  Matrix A_new(rows() + other.rows(), dim());
  Vector b_new(rows() + other.rows());
  A_new << A, other.A;
  b_new << b, other.b;
  A = std::move(A_new);
  b = std::move(b_new);
}

HalfspaceSystem HalfspaceSystem::empty_system(Eigen::Index dim) {
  HalfspaceSystem hs;
  hs.A = Matrix::Zero(0, dim);
  hs.b = Vector::Zero(0);
  return hs;
}

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw DimensionError("box: lower has length " + std::to_string(lower.size()) +
                         " but upper has length " + std::to_string(upper.size()));
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i])) {
      throw DimensionError("box: NaN bound at coordinate " + std::to_string(i));
    }
    if (std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] > upper[i]) {
      throw DimensionError("box: lower > upper at coordinate " + std::to_string(i));
    }
  }
}

bool Box::contains(const Vector& x, double tol) const {
  if (x.size() != dim()) {
    throw DimensionError("box: point has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(dim()));
  }
  for (Eigen::Index i = 0; i < dim(); ++i) {
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  }
  return true;
}

bool Box::is_compact() const {
  return lower.allFinite() && upper.allFinite();
}

bool Box::contains_zero() const {
  for (Eigen::Index i = 0; i < dim(); ++i) {
    if (lower[i] > 0.0 || upper[i] < 0.0) return false;
  }
  return true;
}

double Box::support(const Vector& a) const {
  if (a.size() != dim()) {
    throw DimensionError("box support: direction has length " + std::to_string(a.size()) +
                         ", expected " + std::to_string(dim()));
  }
  if (!is_compact()) throw Error("box support function requires a compact box");
  double h = 0.0;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    h += std::max(a[i] * upper[i], a[i] * lower[i]);
  }
  return h;
}

double Box::radius() const {
  if (!is_compact()) return kInf;
  double r = 0.0;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    r = std::max(r, std::max(std::abs(lower[i]), std::abs(upper[i])));
  }
  return r;
}

HalfspaceSystem Box::halfspaces() const {
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    if (std::isfinite(upper[i])) ++count;
    if (std::isfinite(lower[i])) ++count;
  }
  Matrix A = Matrix::Zero(count, dim());
  Vector b(count);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    if (std::isfinite(upper[i])) {
      A(row, i) = 1.0;
      b[row] = upper[i];
      ++row;
    }
    if (std::isfinite(lower[i])) {
      A(row, i) = -1.0;
      b[row] = -lower[i];
      ++row;
    }
  }
  return HalfspaceSystem(std::move(A), std::move(b));
}

Box Box::unbounded(Eigen::Index n) {
  return Box(Vector::Constant(n, -kInf), Vector::Constant(n, kInf));
}

Box Box::centered(double half_width, Eigen::Index n) {
  return Box(Vector::Constant(n, -half_width), Vector::Constant(n, half_width));
}

Box Box::zero(Eigen::Index n) {
  return Box(Vector::Zero(n), Vector::Zero(n));
}

Polytope::Polytope(Matrix A_in, Vector b_in) : A(std::move(A_in)), b(std::move(b_in)) {
  if (A.rows() != b.size()) {
    throw DimensionError("polytope: A has " + std::to_string(A.rows()) +
                         " rows but b has length " + std::to_string(b.size()));
  }
  require_finite(b, "polytope bound vector");
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if (A.row(i).lpNorm<Eigen::Infinity>() == 0.0) {
      throw DimensionError("polytope: zero row at index " + std::to_string(i));
    }
  }
}

bool Polytope::contains(const Vector& x, double tol) const {
  return halfspaces().contains(x, tol);
}

// Polytope::is_empty is defined in uncertainty.cpp (it needs the QP feasibility solver).

Eigen::Index dim(const ConvexSet& set) {
  return std::visit([](const auto& s) { return s.dim(); }, set);
}

bool contains(const ConvexSet& set, const Vector& x, double tol) {
  return std::visit([&](const auto& s) { return s.contains(x, tol); }, set);
}

HalfspaceSystem halfspaces(const ConvexSet& set) {
  return std::visit([](const auto& s) { return s.halfspaces(); }, set);
}

}  // namespace obilc
