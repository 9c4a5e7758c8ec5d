#include "trafficgp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "trafficgp/common.hpp"

namespace trafficgp {

ErrorMetrics compute_metrics(const std::vector<double>& y, const std::vector<double>& yhat) {
  if (y.empty()) throw ValidationError("metric inputs are empty");
  if (y.size() != yhat.size()) throw ValidationError("metric input lengths differ");
  ErrorMetrics m;
  m.n = y.size();
  double sq = 0.0;
  double abs_sum = 0.0;
  double ratio_sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = yhat[i] - y[i];
    sq += e * e;
    abs_sum += std::abs(e);
    if (y[i] >= 1.0) {
      ratio_sum += std::abs(e) / y[i];
      ++m.mape_included;
    }
  }
  const double n = static_cast<double>(m.n);
  m.rmse = std::sqrt(sq / n);
  m.mae = abs_sum / n;
  if (m.mape_included == 0) {
    throw DataError("every pair excluded from MAPE (true speeds below 1 mph)");
  }
  m.mape = ratio_sum / static_cast<double>(m.mape_included);
  return m;
}

namespace {

// Lower-tail probability P(W+ <= w) over all 2^n equally likely sign
// assignments, computed by subset-sum counting over doubled ranks (average
// ranks are half-integers, so doubling keeps everything integral).
double exact_lower_tail(const std::vector<double>& ranks, double w) {
  long total = 0;
  std::vector<long> doubled(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    doubled[i] = static_cast<long>(std::llround(2.0 * ranks[i]));
    total += doubled[i];
  }
  const long limit = static_cast<long>(std::llround(2.0 * w));
  std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
  count[0] = 1.0;
  long reach = 0;
  for (const long r : doubled) {
    reach += r;
    for (long s = reach; s >= r; --s) {
      count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
    }
  }
  double tail = 0.0;
  for (long s = 0; s <= std::min(limit, total); ++s) tail += count[static_cast<std::size_t>(s)];
  return tail / std::ldexp(1.0, static_cast<int>(ranks.size()));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("paired samples differ in length");

  std::vector<double> diffs;
  diffs.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.size() < 5) {
    throw DataError("fewer than 5 non-zero differences for the signed-rank test");
  }

  const std::size_t n = diffs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(diffs[x]) < std::abs(diffs[y]);
  });

  std::vector<double> rank(n, 0.0);
  std::vector<std::size_t> tie_sizes;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = avg;
    tie_sizes.push_back(j - i);
    i = j;
  }

  double w_pos = 0.0;
  double w_neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0.0) {
      w_pos += rank[i];
    } else {
      w_neg += rank[i];
    }
  }

  WilcoxonResult r;
  r.n = n;
  r.statistic = std::min(w_pos, w_neg);
  if (n <= 25) {
    r.exact = true;
    r.p_value = std::min(1.0, 2.0 * exact_lower_tail(rank, r.statistic));
  } else {
    r.exact = false;
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_term = 0.0;
    for (const std::size_t t : tie_sizes) {
      const double td = static_cast<double>(t);
      tie_term += td * td * td - td;
    }
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (!(var > 0.0)) throw NumericalError("signed-rank variance vanished (all ties)");
    const double z = (r.statistic - mean + 0.5) / std::sqrt(var);
    r.p_value = std::min(1.0, 2.0 * normal_cdf(z));
  }
  return r;
}

}  // namespace trafficgp
