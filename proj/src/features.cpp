#include "fsrl/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "fsrl/acrobot.hpp"

namespace fsrl {

TileCoder::TileCoder(std::vector<std::pair<double, double>> ranges, std::size_t n_tilings,
                     std::size_t tiles)
    : ranges_(std::move(ranges)), n_tilings_(n_tilings), tiles_(tiles) {
  if (ranges_.empty() || n_tilings_ == 0 || tiles_ == 0) {
    throw std::invalid_argument("TileCoder: need ranges, tilings and tiles");
  }
  for (const auto& [lo, hi] : ranges_) {
    if (!(hi > lo)) throw std::invalid_argument("TileCoder: empty feature range");
  }
}

void TileCoder::active(const Observation& obs, std::vector<std::size_t>& out) const {
  if (static_cast<std::size_t>(obs.features.size()) != ranges_.size()) {
    throw std::invalid_argument("TileCoder: observation has the wrong length");
  }
  out.clear();
  const std::size_t per_feature = n_tilings_ * (tiles_ + 1);
  for (std::size_t f = 0; f < ranges_.size(); ++f) {
    const auto [lo, hi] = ranges_[f];
    const double x = std::clamp(obs.features(static_cast<Eigen::Index>(f)), lo, hi);
    const double scaled = (x - lo) / (hi - lo) * static_cast<double>(tiles_);
    for (std::size_t t = 0; t < n_tilings_; ++t) {
      const double offset = static_cast<double>(t) / static_cast<double>(n_tilings_);
      auto tile = static_cast<std::size_t>(std::floor(scaled + offset));
      tile = std::min(tile, tiles_);
      out.push_back(f * per_feature + t * (tiles_ + 1) + tile);
    }
  }
}

std::vector<std::pair<double, double>> TileCoder::acrobot_ranges() {
  return {{-1.0, 1.0},
          {-1.0, 1.0},
          {-1.0, 1.0},
          {-1.0, 1.0},
          {-Acrobot::kMaxVel1, Acrobot::kMaxVel1},
          {-Acrobot::kMaxVel2, Acrobot::kMaxVel2}};
}

OneHotFeatures::OneHotFeatures(std::size_t n_states) : class_of_(n_states), n_classes_(n_states) {
  for (std::size_t s = 0; s < n_states; ++s) class_of_[s] = s;
}

OneHotFeatures::OneHotFeatures(std::vector<std::size_t> class_of, std::size_t n_classes)
    : class_of_(std::move(class_of)), n_classes_(n_classes) {
  for (std::size_t c : class_of_) {
    if (c >= n_classes_) throw std::invalid_argument("OneHotFeatures: class out of range");
  }
}

void OneHotFeatures::active(const Observation& obs, std::vector<std::size_t>& out) const {
  if (obs.state >= class_of_.size()) {
    throw std::invalid_argument("OneHotFeatures: state out of range");
  }
  out.assign(1, class_of_[obs.state]);
}

}  // namespace fsrl
