#include "dpslr/types.hpp"

#include <cmath>
#include <string>

namespace dpslr {

double clip_unit(double v) {
  if (std::isnan(v)) throw InvalidValue("clip_unit: NaN input");
  return std::fmin(1.0, std::fmax(0.0, v));
}

Dataset::Dataset(std::vector<DataPoint> points, RangePolicy policy)
    : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw TooFewPoints("dataset needs at least 2 points, got " +
                       std::to_string(points_.size()));
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    auto& p = points_[i];
    if (policy == RangePolicy::Clip) {
      p.x = clip_unit(p.x);
      p.y = clip_unit(p.y);
    } else {
      if (std::isnan(p.x) || std::isnan(p.y) || p.x < 0 || p.x > 1 || p.y < 0 ||
          p.y > 1) {
        throw InvalidValue("point " + std::to_string(i) +
                           " outside the unit square");
      }
    }
  }
}

}  // namespace dpslr
