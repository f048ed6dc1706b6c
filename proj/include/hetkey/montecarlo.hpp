#pragma once

// Repeated trials and parameter sweeps with deterministic parallelism.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "hetkey/analysis.hpp"
#include "hetkey/error.hpp"
#include "hetkey/graphgen.hpp"
#include "hetkey/model.hpp"
#include "hetkey/rng.hpp"

namespace hetkey {

inline constexpr std::size_t kDefaultTrials = 400;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for a binomial proportion, clamped to [0, 1].
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double confidence) {
  if (trials == 0) throw InvalidParameter("wilson_interval: trials must be >= 1");
  if (successes > trials) throw InvalidParameter("wilson_interval: successes exceed trials");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw InvalidParameter("wilson_interval: confidence must lie in (0, 1)");

  const double z =
      boost::math::quantile(boost::math::normal_distribution<double>{}, 0.5 + confidence / 2.0);
  const double t = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / t;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / t;
  const double center = (phat + z2 / (2.0 * t)) / denom;
  const double half = z / denom * std::sqrt(phat * (1.0 - phat) / t + z2 / (4.0 * t * t));

  Interval out{std::clamp(center - half, 0.0, 1.0), std::clamp(center + half, 0.0, 1.0)};
  if (successes == 0) out.low = 0.0;
  if (successes == trials) out.high = 1.0;
  return out;
}

/// Aggregated outcome of T independent trials at one parameter setting.
struct TrialStats {
  std::size_t trials = 0;
  std::size_t no_isolated_successes = 0;
  std::size_t connected_successes = 0;
  double mean_isolated = 0.0;
  double sd_isolated = 0.0;  // sample standard deviation
  double mean_class_m_isolated = 0.0;
  double sd_class_m_isolated = 0.0;
  double mean_edge_count = 0.0;
  std::size_t minimizing_class = 0;
  std::vector<std::size_t> intra_class_edges;  // summed over trials
  std::size_t max_intra_class_edges = 0;       // largest single-trial diagonal count

  double p_no_isolated() const { return static_cast<double>(no_isolated_successes) / trials; }
  double p_connected() const { return static_cast<double>(connected_successes) / trials; }
};

namespace detail {

inline double sample_sd(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

/// Runs trials k = 0..T-1, trial k drawing from RngStream(master_seed,
/// stream_offset + k). Workers pull trial indices from a shared counter and
/// write into per-trial slots; the reduction runs afterwards in index order,
/// so the result does not depend on the worker count.
inline TrialStats run_trials(const ModelParams& params, std::size_t trials,
                             std::uint64_t master_seed, std::size_t workers = 1,
                             std::uint64_t stream_offset = 0) {
  if (trials == 0) throw InvalidParameter("trial count must be >= 1");
  const DerivedQuantities dq = derive(params);

  std::vector<TrialOutcome> outcomes(trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      for (std::size_t k = next++; k < trials; k = next++) {
        RngStream rng(master_seed, stream_offset + k);
        outcomes[k] = analyze(generate(params, rng));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = trials;
    }
  };

  workers = std::clamp<std::size_t>(workers, 1, trials);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  TrialStats stats;
  stats.trials = trials;
  stats.minimizing_class = dq.m;
  stats.intra_class_edges.assign(params.classes(), 0);
  std::vector<double> isolated, class_m_isolated;
  isolated.reserve(trials);
  class_m_isolated.reserve(trials);
  double edge_sum = 0.0;
  for (const auto& o : outcomes) {
    if (o.isolated_count == 0) ++stats.no_isolated_successes;
    if (o.is_connected) ++stats.connected_successes;
    isolated.push_back(static_cast<double>(o.isolated_count));
    class_m_isolated.push_back(static_cast<double>(o.class_isolated_counts[dq.m]));
    edge_sum += static_cast<double>(o.edge_count);
    for (std::size_t i = 0; i < params.classes(); ++i) {
      stats.intra_class_edges[i] += o.intra_class_edge_counts[i];
      stats.max_intra_class_edges = std::max(stats.max_intra_class_edges, o.intra_class_edge_counts[i]);
    }
  }
  const double t = static_cast<double>(trials);
  double iso_sum = 0.0, m_sum = 0.0;
  for (std::size_t k = 0; k < trials; ++k) {
    iso_sum += isolated[k];
    m_sum += class_m_isolated[k];
  }
  stats.mean_isolated = iso_sum / t;
  stats.mean_class_m_isolated = m_sum / t;
  stats.sd_isolated = detail::sample_sd(isolated, stats.mean_isolated);
  stats.sd_class_m_isolated = detail::sample_sd(class_m_isolated, stats.mean_class_m_isolated);
  stats.mean_edge_count = edge_sum / t;
  return stats;
}

enum class SweepAxis {
  KeyRingK1,      // K_1 with K_i = K_1 + offset_i
  AlphaEntry,     // alpha_ij = alpha_ji
  AlphaDiagonal,  // every alpha_ii jointly
  Explicit,       // explicit list of full parameter sets; value = index
};

struct SweepAxisSpec {
  SweepAxis kind = SweepAxis::KeyRingK1;
  std::vector<std::uint32_t> k_offsets;  // KeyRingK1: offset per class, first is 0
  std::size_t row = 0;                   // AlphaEntry: 0-based (row, col)
  std::size_t col = 1;

  std::string name() const {
    switch (kind) {
      case SweepAxis::KeyRingK1: return "K1";
      case SweepAxis::AlphaEntry: return "alpha_" + std::to_string(row + 1) + std::to_string(col + 1);
      case SweepAxis::AlphaDiagonal: return "alpha_diag";
      case SweepAxis::Explicit: return "explicit";
    }
    return "?";
  }

  friend bool operator==(const SweepAxisSpec&, const SweepAxisSpec&) = default;
};

struct ExperimentSpec {
  ModelParams base_params;
  SweepAxisSpec axis;
  std::vector<double> values;
  std::vector<ModelParams> explicit_points;  // only for SweepAxis::Explicit
  std::size_t trials = kDefaultTrials;
  std::uint64_t master_seed = 0;

  /// Parameters for sweep position idx; errors name the offending value.
  ModelParams params_at(std::size_t idx) const {
    const double value = values.at(idx);
    try {
      ModelParams p = base_params;
      switch (axis.kind) {
        case SweepAxis::KeyRingK1: {
          if (value != std::floor(value) || value < 1.0)
            throw InvalidParameter("K1 must be a positive integer");
          if (axis.k_offsets.size() != p.classes())
            throw InvalidParameter("linked profile rule covers " +
                                   std::to_string(axis.k_offsets.size()) + " classes, model has " +
                                   std::to_string(p.classes()));
          p.keys = LinkedProfileRule{axis.k_offsets, p.keys.pool_size()}(static_cast<int>(value));
          break;
        }
        case SweepAxis::AlphaEntry:
          if (axis.row >= p.classes() || axis.col >= p.classes())
            throw InvalidParameter("alpha entry index out of range");
          p.channel = p.channel.with_entry(axis.row, axis.col, value);
          break;
        case SweepAxis::AlphaDiagonal:
          p.channel = p.channel.with_diagonal(value);
          break;
        case SweepAxis::Explicit:
          if (value != static_cast<double>(idx) || idx >= explicit_points.size())
            throw InvalidParameter("explicit sweep value must equal its point index");
          p = explicit_points[idx];
          break;
      }
      p.validate();
      return p;
    } catch (const InvalidParameter& e) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", value);
      throw InvalidParameter("sweep value #" + std::to_string(idx) + " (" + axis.name() + "=" +
                             buf + "): " + e.what());
    }
  }

  void validate() const {
    if (trials == 0) throw InvalidParameter("trials must be >= 1");
    if (values.empty()) throw InvalidParameter("sweep has no values");
    for (std::size_t i = 0; i < values.size(); ++i) (void)params_at(i);
  }
};

struct SweepRow {
  double value = 0.0;
  std::size_t n = 0;
  TrialStats stats;
  Interval ci_no_isolated;
  Interval ci_connected;
  double analytic_E_In = 0.0;
  double analytic_E_Yn = 0.0;
  double c_n = 0.0;
  std::size_t minimizing_class = 0;
  bool is_predicted_threshold = false;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepRow> rows;
  std::optional<double> predicted_threshold;
};

/// Swept value at which Lambda_m first exceeds log(n)/n. For the K_1 axis
/// this is critical_threshold over [min, max] of the swept values; for the
/// other axes the first value in sweep order that satisfies the condition.
inline std::optional<double> predicted_threshold(const ExperimentSpec& spec) {
  if (spec.axis.kind == SweepAxis::KeyRingK1) {
    const auto [lo, hi] = std::minmax_element(spec.values.begin(), spec.values.end());
    const ModelParams& base = spec.base_params;
    const LinkedProfileRule rule{spec.axis.k_offsets, base.keys.pool_size()};
    auto t = critical_threshold(base.n, base.dist, base.channel, base.keys.pool_size(), rule,
                                static_cast<int>(*lo), static_cast<int>(*hi));
    if (t) return static_cast<double>(*t);
    return std::nullopt;
  }
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const ModelParams p = spec.params_at(i);
    if (exceeds_isolation_threshold(derive(p), p.n)) return spec.values[i];
  }
  return std::nullopt;
}

/// Row i uses stream indices i*T .. i*T + T-1.
inline SweepResult run_sweep(const ExperimentSpec& spec, std::size_t workers = 1,
                             double confidence = 0.95) {
  spec.validate();
  SweepResult result;
  result.axis = spec.axis.name();
  result.predicted_threshold = predicted_threshold(spec);
  result.rows.reserve(spec.values.size());
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const ModelParams params = spec.params_at(i);
    const DerivedQuantities dq = derive(params);
    SweepRow row;
    row.value = spec.values[i];
    row.n = params.n;
    row.stats = run_trials(params, spec.trials, spec.master_seed, workers,
                           static_cast<std::uint64_t>(i) * spec.trials);
    row.ci_no_isolated = wilson_interval(row.stats.no_isolated_successes, spec.trials, confidence);
    row.ci_connected = wilson_interval(row.stats.connected_successes, spec.trials, confidence);
    row.analytic_E_In = expected_isolated(params);
    row.analytic_E_Yn = expected_class_m_isolated(params);
    row.c_n = dq.c_n;
    row.minimizing_class = dq.m;
    row.is_predicted_threshold =
        result.predicted_threshold.has_value() && *result.predicted_threshold == row.value;
    result.rows.push_back(std::move(row));
  }
  return result;
}

/// Swept values bracketing the rise of the empirical connectivity curve:
/// `high` is the first value with probability >= high_level, `low` the last
/// value before it with probability <= low_level.
inline std::optional<Interval> transition_interval(const SweepResult& sweep, double low_level = 0.10,
                                                   double high_level = 0.95) {
  const auto& rows = sweep.rows;
  std::size_t hi = 0;
  while (hi < rows.size() && rows[hi].stats.p_connected() < high_level) ++hi;
  if (hi == rows.size()) return std::nullopt;
  for (std::size_t lo = hi; lo-- > 0;)
    if (rows[lo].stats.p_connected() <= low_level) return Interval{rows[lo].value, rows[hi].value};
  return std::nullopt;
}

}  // namespace hetkey
