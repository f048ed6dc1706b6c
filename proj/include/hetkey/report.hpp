#pragma once

// CSV and text rendering of sweep results and derived quantities.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

#include "hetkey/model.hpp"
#include "hetkey/montecarlo.hpp"

namespace hetkey {

inline constexpr std::string_view kSweepCsvHeader =
    "sweep_axis,sweep_value,n,trials,no_isolated_successes,connected_successes,"
    "p_no_isolated,p_no_isolated_ci_low,p_no_isolated_ci_high,"
    "p_connected,p_connected_ci_low,p_connected_ci_high,"
    "mean_isolated,analytic_E_In,mean_class_m_isolated,analytic_E_Yn,c_n,is_predicted_threshold";

/// Reals are written with 12 significant digits.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline void write_sweep_csv_row(std::ostream& os, std::string_view axis, const SweepRow& row) {
  const auto& s = row.stats;
  os << axis << ',' << format_real(row.value) << ',' << row.n << ',' << s.trials << ','
     << s.no_isolated_successes << ',' << s.connected_successes << ','
     << format_real(s.p_no_isolated()) << ',' << format_real(row.ci_no_isolated.low) << ','
     << format_real(row.ci_no_isolated.high) << ',' << format_real(s.p_connected()) << ','
     << format_real(row.ci_connected.low) << ',' << format_real(row.ci_connected.high) << ','
     << format_real(s.mean_isolated) << ',' << format_real(row.analytic_E_In) << ','
     << format_real(s.mean_class_m_isolated) << ',' << format_real(row.analytic_E_Yn) << ','
     << format_real(row.c_n) << ',' << (row.is_predicted_threshold ? 1 : 0) << '\n';
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  os << kSweepCsvHeader << '\n';
  for (const auto& row : sweep.rows) write_sweep_csv_row(os, sweep.axis, row);
}

/// Zero-law side-condition diagnostics alpha_md log n and alpha_mm log n.
struct SideConditions {
  double alpha_md_log_n = 0.0;
  double alpha_mm_log_n = 0.0;
};

inline SideConditions side_conditions(const ModelParams& params, const DerivedQuantities& dq) {
  const double log_n = std::log(static_cast<double>(params.n));
  return {params.channel(dq.m, dq.d) * log_n, params.channel(dq.m, dq.m) * log_n};
}

/// Human-readable table of derived quantities; class indices printed 1-based.
inline void write_derived_table(std::ostream& os, const ModelParams& params,
                                const DerivedQuantities& dq) {
  const std::size_t r = params.classes();
  os << "n = " << params.n << ", r = " << r << ", P = " << params.keys.pool_size() << "\n\n";
  os << "class        mu          K     lambda_i          Lambda_i\n";
  for (std::size_t i = 0; i < r; ++i) {
    char line[160];
    std::snprintf(line, sizeof line, "%5zu  %10.6g  %8u  %16.10g  %16.10g\n", i + 1, params.dist[i],
                  params.keys.ring_size(i), dq.lambda[i], dq.Lambda[i]);
    os << line;
  }
  os << "\np_ij:\n";
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) os << "  " << format_real(dq.p(i, j));
    os << '\n';
  }
  const auto side = side_conditions(params, dq);
  const double log_n = std::log(static_cast<double>(params.n));
  os << "\nm = " << dq.m + 1 << ", d = " << dq.d + 1 << ", s = " << dq.s + 1 << '\n';
  os << "Lambda_m = " << format_real(dq.Lambda_m()) << ", log(n)/n = "
     << format_real(log_n / static_cast<double>(params.n)) << '\n';
  os << "c_n = " << format_real(dq.c_n) << '\n';
  os << "alpha_md*log(n) = " << format_real(side.alpha_md_log_n)
     << ", alpha_mm*log(n) = " << format_real(side.alpha_mm_log_n) << '\n';
  os << "E[isolated] = " << format_real(expected_isolated(params))
     << ", E[class-m isolated] = " << format_real(expected_class_m_isolated(params)) << '\n';
  os << "prediction (from c_n) = "
     << (dq.c_n > 0.0 ? to_string(theorem_prediction(dq.c_n)) : std::string_view("zero-law (c_n = 0)"))
     << '\n';
}

}  // namespace hetkey
