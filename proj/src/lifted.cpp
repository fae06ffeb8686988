#include "obilc/lifted.hpp"

#include <algorithm>
#include <cmath>

namespace obilc {

LiftedSystem::LiftedSystem(Matrix G_in, Vector w_in) : G(std::move(G_in)), w(std::move(w_in)) {
  if (G.rows() < 1 || G.cols() < 1) {
    throw DimensionError("lifted system: G must have at least one row and one column");
  }
  if (w.size() != G.rows()) {
    throw DimensionError("lifted system: w has length " + std::to_string(w.size()) +
                         " but G has " + std::to_string(G.rows()) + " rows");
  }
  if (!G.allFinite() || !w.allFinite()) {
    throw DimensionError("lifted system: G or w contains a non-finite entry");
  }
}

void LtvRealization::validate() const {
  const auto T = horizon();
  if (T < 1) throw DimensionError("ltv realization: horizon must be at least 1");
  if (B.size() != static_cast<size_t>(T)) {
    throw DimensionError("ltv realization: expected " + std::to_string(T) +
                         " input matrices, got " + std::to_string(B.size()));
  }
  if (C.size() != static_cast<size_t>(T + 1) || c.size() != static_cast<size_t>(T + 1)) {
    throw DimensionError("ltv realization: expected " + std::to_string(T + 1) +
                         " output matrices and offsets");
  }
  const Eigen::Index s = state_dim();
  const Eigen::Index p = input_dim();
  const Eigen::Index q = output_dim();
  if (s < 1) throw DimensionError("ltv realization: empty state");
  if (p < 1) throw DimensionError("ltv realization: empty input");
  if (q < 1) throw DimensionError("ltv realization: empty output");
  for (Eigen::Index i = 0; i < T; ++i) {
    const auto& Ai = A[static_cast<size_t>(i)];
    const auto& Bi = B[static_cast<size_t>(i)];
    if (Ai.rows() != s || Ai.cols() != s) {
      throw DimensionError("ltv realization: A(" + std::to_string(i) + ") is " +
                           std::to_string(Ai.rows()) + "x" + std::to_string(Ai.cols()) +
                           ", expected " + std::to_string(s) + "x" + std::to_string(s));
    }
    if (Bi.rows() != s || Bi.cols() != p) {
      throw DimensionError("ltv realization: B(" + std::to_string(i) + ") is " +
                           std::to_string(Bi.rows()) + "x" + std::to_string(Bi.cols()) +
                           ", expected " + std::to_string(s) + "x" + std::to_string(p));
    }
  }
  for (Eigen::Index i = 0; i <= T; ++i) {
    const auto& Ci = C[static_cast<size_t>(i)];
    const auto& ci = c[static_cast<size_t>(i)];
    if (Ci.rows() != q || Ci.cols() != s) {
      throw DimensionError("ltv realization: C(" + std::to_string(i) + ") is " +
                           std::to_string(Ci.rows()) + "x" + std::to_string(Ci.cols()) +
                           ", expected " + std::to_string(q) + "x" + std::to_string(s));
    }
    if (ci.size() != q) {
      throw DimensionError("ltv realization: c(" + std::to_string(i) + ") has length " +
                           std::to_string(ci.size()) + ", expected " + std::to_string(q));
    }
  }
}

LiftedSystem build_lifted(const LtvRealization& ltv) {
  ltv.validate();
  const Eigen::Index T = ltv.horizon();
  const Eigen::Index s = ltv.state_dim();
  const Eigen::Index p = ltv.input_dim();
  const Eigen::Index q = ltv.output_dim();
  const Eigen::Index n = p * T;
  const Eigen::Index m = q * (T + 1);

  Matrix G = Matrix::Zero(m, n);
  Vector w(m);

  // phi = A(i-1)...A(0); impulse[j] = A(i-1)...A(j+1) B(j) for the current i.
  Matrix phi = Matrix::Identity(s, s);
  std::vector<Matrix> impulse(static_cast<size_t>(T), Matrix::Zero(s, p));

  for (Eigen::Index i = 0; i <= T; ++i) {
    const auto& Ci = ltv.C[static_cast<size_t>(i)];
    w.segment(i * q, q) = Ci * (phi * ltv.x0) + ltv.c[static_cast<size_t>(i)];
    for (Eigen::Index j = 0; j < i; ++j) {
      G.block(i * q, j * p, q, p) = Ci * impulse[static_cast<size_t>(j)];
    }
    if (i < T) {
      const auto& Ai = ltv.A[static_cast<size_t>(i)];
      for (Eigen::Index j = 0; j < i; ++j) {
        impulse[static_cast<size_t>(j)] = Ai * impulse[static_cast<size_t>(j)];
      }
      impulse[static_cast<size_t>(i)] = ltv.B[static_cast<size_t>(i)];
      phi = Ai * phi;
    }
  }
  return LiftedSystem(std::move(G), std::move(w));
}

Vector run_trial(const LiftedSystem& sys, const Vector& u, const Vector& d) {
  if (u.size() != sys.inputs()) {
    throw DimensionError("run trial: input has length " + std::to_string(u.size()) +
                         ", expected " + std::to_string(sys.inputs()));
  }
  if (d.size() != sys.outputs()) {
    throw DimensionError("run trial: disturbance has length " + std::to_string(d.size()) +
                         ", expected " + std::to_string(sys.outputs()));
  }
  return sys.G * u + sys.w + d;
}

namespace {

// splitmix64: decorrelates (seed, k) pairs into stream seeds.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// xorshift128+ keeps the sampler platform-independent; the uniform double is
// built from the high 53 bits, so samples are bit-reproducible everywhere.
struct SampleStream {
  std::uint64_t s0, s1;
  explicit SampleStream(std::uint64_t seed) {
    s0 = splitmix64(seed);
    s1 = splitmix64(s0 ^ 0x8000000000000000ULL);
  }
  std::uint64_t next() {
    std::uint64_t x = s0;
    const std::uint64_t y = s1;
    s0 = y;
    x ^= x << 23;
    s1 = x ^ y ^ (x >> 17) ^ (y >> 26);
    return s1 + y;
  }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

}  // namespace

DisturbanceModel::DisturbanceModel(Box support, std::uint64_t seed)
    : support_(std::move(support)), seed_(seed) {
  if (!support_.is_compact()) {
    throw DimensionError("disturbance model: the support box must be compact");
  }
  if (!support_.contains_zero()) {
    throw DimensionError("disturbance model: the support box must contain zero");
  }
}

DisturbanceModel::DisturbanceModel(Box support, std::vector<Vector> sequence)
    : support_(std::move(support)), sequence_(std::move(sequence)) {
  if (!support_.is_compact()) {
    throw DimensionError("disturbance model: the support box must be compact");
  }
  if (!support_.contains_zero()) {
    throw DimensionError("disturbance model: the support box must contain zero");
  }
  for (size_t k = 0; k < sequence_.size(); ++k) {
    if (sequence_[k].size() != support_.dim()) {
      throw DimensionError("disturbance model: sequence entry " + std::to_string(k) +
                           " has length " + std::to_string(sequence_[k].size()) +
                           ", expected " + std::to_string(support_.dim()));
    }
    if (!support_.contains(sequence_[k], 0.0)) {
      throw DimensionError("disturbance model: sequence entry " + std::to_string(k) +
                           " lies outside the support box");
    }
  }
}

Vector DisturbanceModel::sample(std::uint64_t k) const {
  if (!sequence_.empty()) {
    if (k >= sequence_.size()) {
      throw DimensionError("disturbance model: sequence index " + std::to_string(k) +
                           " out of range (length " + std::to_string(sequence_.size()) + ")");
    }
    return sequence_[k];
  }
  SampleStream stream(splitmix64(seed_) ^ splitmix64(k * 0x9e3779b97f4a7c15ULL + 1));
  Vector d(support_.dim());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double lo = support_.lower[i];
    const double hi = support_.upper[i];
    // Clamp so rounding in lo + (hi - lo)*u can never leave the closed box.
    d[i] = lo == hi ? lo : std::clamp(lo + (hi - lo) * stream.uniform01(), lo, hi);
  }
  return d;
}

DisturbanceModel DisturbanceModel::zero(Eigen::Index m) {
  return DisturbanceModel(Box::zero(m), std::uint64_t{0});
}

Vector sample_disturbance(const DisturbanceModel& model, std::uint64_t k) {
  return model.sample(k);
}

}  // namespace obilc
