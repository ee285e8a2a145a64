#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fsrl/environment.hpp"

namespace fsrl {

// Sparse binary features of an observation. Learners keep one weight block of
// size() per action.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;
  virtual std::size_t size() const = 0;
  // Number of indices active() always produces.
  virtual std::size_t n_active() const = 0;
  // Replaces `out` with the active indices, each in [0, size()).
  virtual void active(const Observation& obs, std::vector<std::size_t>& out) const = 0;
};

// Independent 1-D tilings of each observation feature. Each tiling has
// tiles + 1 tiles so that its offset (t / n_tilings of a tile width) still
// covers the whole range. Values outside a range are clamped.
class TileCoder : public FeatureMap {
 public:
  TileCoder(std::vector<std::pair<double, double>> ranges, std::size_t n_tilings = 8,
            std::size_t tiles = 8);

  std::size_t size() const override { return ranges_.size() * n_tilings_ * (tiles_ + 1); }
  std::size_t n_active() const override { return ranges_.size() * n_tilings_; }
  void active(const Observation& obs, std::vector<std::size_t>& out) const override;

  // Ranges for the Acrobot observation.
  static std::vector<std::pair<double, double>> acrobot_ranges();

 private:
  std::vector<std::pair<double, double>> ranges_;
  std::size_t n_tilings_;
  std::size_t tiles_;
};

// One indicator per state of a tabular observation, or per class when states
// are grouped so that a class shares its weights.
class OneHotFeatures : public FeatureMap {
 public:
  explicit OneHotFeatures(std::size_t n_states);
  OneHotFeatures(std::vector<std::size_t> class_of, std::size_t n_classes);

  std::size_t size() const override { return n_classes_; }
  std::size_t n_active() const override { return 1; }
  void active(const Observation& obs, std::vector<std::size_t>& out) const override;

 private:
  std::vector<std::size_t> class_of_;
  std::size_t n_classes_;
};

}  // namespace fsrl
