#include "ghostturb/grid.hpp"

#include <string>

namespace ghostturb {

Grid2D::Grid2D(int nx, int ny, double pitch, Vec2 center)
    : nx_(nx), ny_(ny), pitch_(pitch), center_(center) {
  if (nx < 1 || ny < 1) {
    throw ValidationError("grid: pixel counts must be >= 1, got " + std::to_string(nx) + "x" +
                          std::to_string(ny));
  }
  if (!(pitch > 0.0) || !std::isfinite(pitch)) {
    throw ValidationError("grid: pitch must be positive and finite, got " + std::to_string(pitch));
  }
  if (!std::isfinite(center.x) || !std::isfinite(center.y)) {
    throw ValidationError("grid: centre offset must be finite");
  }
}

bool Grid2D::contains(Vec2 p) const {
  const double slack = 1e-9 * pitch_;
  return p.x >= x_min() - slack && p.x <= x_max() + slack && p.y >= y_min() - slack &&
         p.y <= y_max() + slack;
}

RealMap::RealMap(const Grid2D& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) {
    throw ValidationError("grid: map has " + std::to_string(values.size()) + " values for a " +
                          std::to_string(grid.nx()) + "x" + std::to_string(grid.ny()) + " grid");
  }
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t frame, StreamPurpose purpose) {
  const auto p = static_cast<std::uint64_t>(purpose);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(frame >> 32),
                    static_cast<std::uint32_t>(p)};
  return std::mt19937_64(seq);
}

}  // namespace ghostturb
