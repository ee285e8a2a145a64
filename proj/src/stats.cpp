#include "fsrl/stats.hpp"

#include <cmath>

namespace fsrl {

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double n = static_cast<double>(xs.size());
  out.std_error = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

double tail_mean(const std::vector<double>& xs, std::size_t window) {
  if (xs.empty()) return 0.0;
  const std::size_t k = window == 0 || window > xs.size() ? xs.size() : window;
  double sum = 0.0;
  for (std::size_t i = xs.size() - k; i < xs.size(); ++i) sum += xs[i];
  return sum / static_cast<double>(k);
}

}  // namespace fsrl
