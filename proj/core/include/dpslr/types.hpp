#pragma once

#include <cstddef>
#include <vector>

#include "dpslr/errors.hpp"

namespace dpslr {

// min(1, max(0, v)); throws InvalidValue on NaN.
double clip_unit(double v);

struct DataPoint {
  double x = 0.0;  // explanatory, in [0,1]
  double y = 0.0;  // response, in [0,1]
};

enum class RangePolicy {
  Clip,    // clamp coordinates into the unit square (synthetic pipeline)
  Reject,  // refuse out-of-range values (strict CSV ingestion)
};

// Ordered sequence of points in the unit square, n >= 2. Immutable after
// construction; every estimator takes it by const reference.
class Dataset {
 public:
  explicit Dataset(std::vector<DataPoint> points,
                   RangePolicy policy = RangePolicy::Clip);

  std::size_t size() const { return points_.size(); }
  const std::vector<DataPoint>& points() const { return points_; }
  const DataPoint& operator[](std::size_t i) const { return points_[i]; }

  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

 private:
  std::vector<DataPoint> points_;
};

// The universal release type: predictions at x_new = 0.25 and 0.75.
struct PredictionPair {
  double p25 = 0.0;
  double p75 = 0.0;
};

}  // namespace dpslr
