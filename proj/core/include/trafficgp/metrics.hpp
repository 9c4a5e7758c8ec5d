#pragma once

#include <cstddef>
#include <vector>

namespace trafficgp {

struct ErrorMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;  // mean |yhat-y|/y as a ratio, over pairs with y >= 1 mph
  std::size_t n = 0;
  std::size_t mape_included = 0;
};

// Throws ValidationError on empty or mismatched inputs, DataError when every
// pair is excluded from MAPE (true value below 1 mph).
ErrorMetrics compute_metrics(const std::vector<double>& y, const std::vector<double>& yhat);

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double p_value = 1.0;    // two-sided
  std::size_t n = 0;       // pairs remaining after zero differences drop
  bool exact = false;      // exact enumeration (n <= 25) vs normal approximation
};

// Paired signed-rank test on a - b. Zero differences are dropped; ties in
// |a - b| get average ranks. Exact two-sided p for n <= 25 (tail counting over
// all sign assignments), normal approximation with tie correction and
// continuity correction beyond. Throws ValidationError on mismatched lengths,
// DataError when fewer than 5 non-zero differences remain.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace trafficgp
