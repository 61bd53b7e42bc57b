#include "ghostturb/source.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ghostturb {

SubsourceSet::SubsourceSet(std::vector<Vec2> positions, double mean_power)
    : positions_(std::move(positions)), mean_power_(mean_power), diameter_(0.0) {
  if (!(mean_power > 0.0) || !std::isfinite(mean_power)) {
    throw ValidationError("source: mean power must be positive");
  }
  for (std::size_t a = 0; a < positions_.size(); ++a) {
    for (std::size_t b = a + 1; b < positions_.size(); ++b) {
      diameter_ = std::max(diameter_, norm(positions_[a] - positions_[b]));
    }
  }
}

SubsourceSet make_source_grid(double diameter, double subsource_pitch, double mean_power) {
  if (!(diameter > 0.0)) throw ValidationError("source: diameter must be positive");
  if (!(subsource_pitch > 0.0) || subsource_pitch > diameter) {
    throw ValidationError("source: subsource pitch must satisfy 0 < pitch <= diameter");
  }
  const double radius = diameter / 2.0;
  const int reach = static_cast<int>(std::floor(radius / subsource_pitch)) + 1;
  // Relative slack so lattice points exactly on the rim are kept.
  const double limit = radius * radius * (1.0 + 1e-12);
  std::vector<Vec2> points;
  for (int j = -reach; j <= reach; ++j) {
    for (int i = -reach; i <= reach; ++i) {
      const Vec2 p{i * subsource_pitch, j * subsource_pitch};
      if (norm2(p) <= limit) points.push_back(p);
    }
  }
  if (points.size() < 2) {
    throw ConfigError("source: pitch " + std::to_string(subsource_pitch) + " m leaves " +
                      std::to_string(points.size()) + " subsource(s) in a " + std::to_string(diameter) +
                      " m disc; use a smaller pitch (at most " + std::to_string(radius) + " m)");
  }
  return SubsourceSet(std::move(points), mean_power);
}

void draw_amplitudes(std::mt19937_64& rng, double mean_power, std::size_t count, std::vector<Complex>& out) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(mean_power / 2.0));
  out.resize(count);
  for (auto& e : out) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    e = Complex(re, im);
  }
}

FrameSample sample_frame(const SubsourceSet& sources, std::uint64_t seed, std::uint64_t frame_index) {
  FrameSample frame;
  frame.seed = seed;
  frame.frame_index = frame_index;
  auto rng = make_stream(seed, frame_index, StreamPurpose::kSourceAmplitudes);
  draw_amplitudes(rng, sources.mean_power(), sources.size(), frame.amplitudes);
  return frame;
}

}  // namespace ghostturb
