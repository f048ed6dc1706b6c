#pragma once

// Exact (non-sampled) quantities of the heterogeneous key predistribution
// model intersected with a heterogeneous on/off channel model.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hetkey/error.hpp"

namespace hetkey {

/// Dense row-major r x r matrix of doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t r, double fill = 0.0) : r_(r), data_(r * r, fill) {}

  std::size_t size() const { return r_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * r_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * r_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * r_, r_}; }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t r_ = 0;
  std::vector<double> data_;
};

/// Class probabilities mu_1..mu_r.
class ClassDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  ClassDistribution() = default;
  explicit ClassDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InvalidParameter("class distribution must have at least one class");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      if (!(probs_[i] > 0.0) || !std::isfinite(probs_[i]))
        throw InvalidParameter("class probability mu_" + std::to_string(i + 1) + " must be > 0");
      sum += probs_[i];
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw InvalidParameter("class probabilities must sum to 1 (got " + std::to_string(sum) + ")");
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

  friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;

 private:
  std::vector<double> probs_;
};

/// Ring sizes K_1 <= ... <= K_r drawn from a pool of P keys.
class KeyProfile {
 public:
  KeyProfile() = default;

  /// Enforces the scaling condition 1 <= K_1 <= ... <= K_r <= P/2.
  KeyProfile(std::vector<std::uint32_t> ring_sizes, std::uint32_t pool_size)
      : KeyProfile(relaxed(std::move(ring_sizes), pool_size)) {
    if (2ULL * ring_sizes_.back() > pool_size_)
      throw InvalidParameter("largest ring size K_r=" + std::to_string(ring_sizes_.back()) +
                             " exceeds P/2 with P=" + std::to_string(pool_size_));
  }

  /// Only requires sorted sizes in [1, P]. Rings larger than P/2 are outside
  /// the model's scaling region but are useful for degenerate test setups.
  static KeyProfile relaxed(std::vector<std::uint32_t> ring_sizes, std::uint32_t pool_size) {
    if (pool_size == 0) throw InvalidParameter("key pool size P must be positive");
    if (ring_sizes.empty()) throw InvalidParameter("key profile must have at least one class");
    for (std::size_t i = 0; i < ring_sizes.size(); ++i) {
      if (ring_sizes[i] < 1 || ring_sizes[i] > pool_size)
        throw InvalidParameter("ring size K_" + std::to_string(i + 1) + "=" +
                               std::to_string(ring_sizes[i]) + " outside [1, P]");
      if (i > 0 && ring_sizes[i] < ring_sizes[i - 1])
        throw InvalidParameter("ring sizes must be non-decreasing (K_" + std::to_string(i + 1) +
                               " < K_" + std::to_string(i) + ")");
    }
    KeyProfile profile;
    profile.ring_sizes_ = std::move(ring_sizes);
    profile.pool_size_ = pool_size;
    return profile;
  }

  std::size_t size() const { return ring_sizes_.size(); }
  std::uint32_t ring_size(std::size_t cls) const { return ring_sizes_[cls]; }
  std::span<const std::uint32_t> ring_sizes() const { return ring_sizes_; }
  std::uint32_t pool_size() const { return pool_size_; }

  friend bool operator==(const KeyProfile&, const KeyProfile&) = default;

 private:
  std::vector<std::uint32_t> ring_sizes_;
  std::uint32_t pool_size_ = 0;
};

/// Symmetric channel-on probabilities alpha_ij in [0, 1].
class ChannelMatrix {
 public:
  ChannelMatrix() = default;
  explicit ChannelMatrix(SquareMatrix alpha) : alpha_(std::move(alpha)) {
    const std::size_t r = alpha_.size();
    if (r == 0) throw InvalidParameter("channel matrix must be at least 1x1");
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        const double a = alpha_(i, j);
        if (!(a >= 0.0 && a <= 1.0))
          throw InvalidParameter("alpha_" + std::to_string(i + 1) + std::to_string(j + 1) +
                                 " outside [0, 1]");
        if (a != alpha_(j, i))
          throw InvalidParameter("channel matrix not symmetric at (" + std::to_string(i + 1) +
                                 "," + std::to_string(j + 1) + ")");
      }
    }
  }

  /// Same value in every entry.
  static ChannelMatrix uniform(std::size_t r, double value) {
    return ChannelMatrix(SquareMatrix(r, value));
  }

  std::size_t size() const { return alpha_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return alpha_(i, j); }
  const SquareMatrix& matrix() const { return alpha_; }

  /// Copy with alpha_ij = alpha_ji = value.
  ChannelMatrix with_entry(std::size_t i, std::size_t j, double value) const {
    SquareMatrix next = alpha_;
    next(i, j) = value;
    next(j, i) = value;
    return ChannelMatrix(std::move(next));
  }

  /// Copy with every diagonal entry set to value.
  ChannelMatrix with_diagonal(double value) const {
    SquareMatrix next = alpha_;
    for (std::size_t i = 0; i < next.size(); ++i) next(i, i) = value;
    return ChannelMatrix(std::move(next));
  }

  friend bool operator==(const ChannelMatrix&, const ChannelMatrix&) = default;

 private:
  SquareMatrix alpha_;
};

/// Full configuration: node count plus (mu, K, P, alpha).
struct ModelParams {
  std::size_t n = 0;
  ClassDistribution dist;
  KeyProfile keys;
  ChannelMatrix channel;

  std::size_t classes() const { return dist.size(); }

  void validate() const {
    if (n < 2) throw InvalidParameter("node count n must be >= 2");
    const std::size_t r = dist.size();
    if (r == 0) throw InvalidParameter("class distribution is empty");
    if (keys.size() != r)
      throw InvalidParameter("key profile has " + std::to_string(keys.size()) +
                             " classes, distribution has " + std::to_string(r));
    if (channel.size() != r)
      throw InvalidParameter("channel matrix is " + std::to_string(channel.size()) + "x" +
                             std::to_string(channel.size()) + ", distribution has " +
                             std::to_string(r) + " classes");
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Exact edge probabilities and the indices that drive the isolation threshold.
/// Class indices are 0-based.
struct DerivedQuantities {
  SquareMatrix p;               // key-sharing probabilities p_ij
  std::vector<double> lambda;   // mean edge probability in the key graph
  std::vector<double> Lambda;   // mean edge probability in the intersection graph
  std::size_t m = 0;            // argmin_i Lambda_i
  std::size_t d = 0;            // argmax_j alpha_mj
  std::size_t s = 0;            // argmax_j alpha_mj p_mj
  double c_n = 0.0;             // n Lambda_m / log n

  double Lambda_m() const { return Lambda[m]; }
};

/// Probability that a ring of size ki and an independent ring of size kj,
/// both uniform without replacement from a pool of pool_size keys, share a key.
///
/// Evaluates 1 - C(P-Ki, Kj) / C(P, Kj) through the incremental product
/// q_l = prod_{t<l} (P-Ki-t)/(P-t), accumulating the complement as the
/// positive series sum_l q_l * Ki/(P-l). No cancellation occurs, so the
/// relative error stays at a few ulps even for p near zero.
inline double pairwise_key_prob(std::uint32_t ki, std::uint32_t kj, std::uint32_t pool_size) {
  if (ki == 0 || kj == 0) throw InvalidParameter("ring sizes must be positive");
  if (ki > pool_size || kj > pool_size)
    throw InvalidParameter("ring size exceeds key pool size");
  if (static_cast<std::uint64_t>(ki) + kj > pool_size) return 1.0;
  if (kj > ki) std::swap(ki, kj);  // symmetric to the last bit; loop over the smaller ring

  const double P = pool_size;
  const double Ki = ki;
  double miss = 1.0;  // probability that the first l draws all miss ring i
  double hit = 0.0;
  for (std::uint32_t l = 0; l < kj; ++l) {
    const double remaining = P - l;
    hit += miss * (Ki / remaining);
    miss *= (remaining - Ki) / remaining;
  }
  return std::min(hit, 1.0);
}

namespace detail {

// First index of the minimum / maximum (ties go to the smallest index).
template <class Range>
std::size_t argmin_first(const Range& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < std::size(values); ++i)
    if (values[i] < values[best]) best = i;
  return best;
}

template <class Range>
std::size_t argmax_first(const Range& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < std::size(values); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace detail

inline DerivedQuantities derive(const ModelParams& params) {
  params.validate();
  const std::size_t r = params.classes();
  const auto& keys = params.keys;

  DerivedQuantities out;
  out.p = SquareMatrix(r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j)
      out.p(i, j) = pairwise_key_prob(keys.ring_size(i), keys.ring_size(j), keys.pool_size());

  out.lambda.assign(r, 0.0);
  out.Lambda.assign(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      out.lambda[i] += params.dist[j] * out.p(i, j);
      out.Lambda[i] += params.dist[j] * params.channel(i, j) * out.p(i, j);
    }
  }

  out.m = detail::argmin_first(out.Lambda);
  std::vector<double> alpha_m(r), alpha_p_m(r);
  for (std::size_t j = 0; j < r; ++j) {
    alpha_m[j] = params.channel(out.m, j);
    alpha_p_m[j] = params.channel(out.m, j) * out.p(out.m, j);
  }
  out.d = detail::argmax_first(alpha_m);
  out.s = detail::argmax_first(alpha_p_m);

  const double n = static_cast<double>(params.n);
  out.c_n = n * out.Lambda_m() / std::log(n);
  return out;
}

/// Expected number of isolated nodes: n sum_i mu_i (1 - Lambda_i)^(n-1).
inline double expected_isolated(const ModelParams& params) {
  const DerivedQuantities dq = derive(params);
  const double exponent = static_cast<double>(params.n - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < params.classes(); ++i)
    sum += params.dist[i] * std::pow(1.0 - dq.Lambda[i], exponent);
  return static_cast<double>(params.n) * sum;
}

/// Expected number of isolated nodes of the minimizing class m.
inline double expected_class_m_isolated(const ModelParams& params) {
  const DerivedQuantities dq = derive(params);
  return static_cast<double>(params.n) * params.dist[dq.m] *
         std::pow(1.0 - dq.Lambda_m(), static_cast<double>(params.n - 1));
}

/// Profile rule K_i = K_1 + offsets[i] (offsets[0] == 0) on a fixed pool.
struct LinkedProfileRule {
  std::vector<std::uint32_t> offsets;
  std::uint32_t pool_size = 0;

  KeyProfile operator()(int k1) const {
    if (k1 < 1) throw InvalidParameter("K_1 must be >= 1 (got " + std::to_string(k1) + ")");
    std::vector<std::uint32_t> sizes;
    sizes.reserve(offsets.size());
    for (auto off : offsets) sizes.push_back(static_cast<std::uint32_t>(k1) + off);
    return KeyProfile(std::move(sizes), pool_size);
  }
};

/// True when the minimum mean edge probability exceeds log(n)/n.
inline bool exceeds_isolation_threshold(const DerivedQuantities& dq, std::size_t n) {
  const double nd = static_cast<double>(n);
  return dq.Lambda_m() > std::log(nd) / nd;
}

/// Smallest K_1 in [k1_lo, k1_hi] with Lambda_m(n) > log(n)/n, or nullopt.
template <class ProfileFamily>
  requires std::invocable<const ProfileFamily&, int> &&
           std::convertible_to<std::invoke_result_t<const ProfileFamily&, int>, KeyProfile>
std::optional<int> critical_threshold(std::size_t n, const ClassDistribution& dist,
                                      const ChannelMatrix& channel, std::uint32_t pool_size,
                                      const ProfileFamily& profile_family, int k1_lo, int k1_hi) {
  for (int k1 = k1_lo; k1 <= k1_hi; ++k1) {
    KeyProfile keys = profile_family(k1);
    if (keys.pool_size() != pool_size)
      throw InvalidParameter("profile for K_1=" + std::to_string(k1) + " uses pool size " +
                             std::to_string(keys.pool_size()) + ", expected " +
                             std::to_string(pool_size));
    const ModelParams params{n, dist, std::move(keys), channel};
    if (exceeds_isolation_threshold(derive(params), n)) return k1;
  }
  return std::nullopt;
}

enum class Law { ZeroLaw, OneLaw, Critical };

inline std::string_view to_string(Law law) {
  switch (law) {
    case Law::ZeroLaw: return "zero-law";
    case Law::OneLaw: return "one-law";
    case Law::Critical: return "critical";
  }
  return "?";
}

/// Limit of P[no isolated nodes] predicted from the limit c of c_n alone.
/// The side conditions on alpha_md log n and alpha_mm log n for the zero-law
/// are the caller's responsibility.
inline Law theorem_prediction(double c_limit) {
  constexpr double kCriticalTolerance = 1e-9;
  if (!(c_limit > 0.0) || !std::isfinite(c_limit))
    throw InvalidParameter("scaling constant c must be positive and finite");
  if (std::abs(c_limit - 1.0) <= kCriticalTolerance) return Law::Critical;
  return c_limit > 1.0 ? Law::OneLaw : Law::ZeroLaw;
}

}  // namespace hetkey
