#pragma once

#include <cstddef>
#include <vector>

namespace fsrl {

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(n); 0 when n < 2
  std::size_t n = 0;
};

MeanStderr mean_stderr(const std::vector<double>& xs);

// Mean of the last `window` entries (all of them when fewer).
double tail_mean(const std::vector<double>& xs, std::size_t window);

}  // namespace fsrl
