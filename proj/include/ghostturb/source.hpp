// Pseudothermal source: statistically independent point subsources with
// circular complex Gaussian amplitudes drawn afresh every frame.
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "ghostturb/grid.hpp"

namespace ghostturb {

using Complex = std::complex<double>;

class SubsourceSet {
 public:
  /// diameter is recomputed as the largest pairwise distance.
  SubsourceSet(std::vector<Vec2> positions, double mean_power);

  const std::vector<Vec2>& positions() const { return positions_; }
  std::size_t size() const { return positions_.size(); }
  double mean_power() const { return mean_power_; }
  double diameter() const { return diameter_; }

 private:
  std::vector<Vec2> positions_;
  double mean_power_;
  double diameter_;
};

/// Square lattice of the given pitch clipped to a centred disc of diameter D.
SubsourceSet make_source_grid(double diameter, double subsource_pitch, double mean_power = 1.0);

struct FrameSample {
  std::vector<Complex> amplitudes;
  std::uint64_t frame_index = 0;
  std::uint64_t seed = 0;
};

/// Independent circular complex Gaussian amplitudes, <|E|^2> = mean power.
/// Deterministic in (seed, frame_index).
FrameSample sample_frame(const SubsourceSet& sources, std::uint64_t seed, std::uint64_t frame_index);

/// Fills `out` (resized to sources.size()) from an existing stream.
void draw_amplitudes(std::mt19937_64& rng, double mean_power, std::size_t count, std::vector<Complex>& out);

}  // namespace ghostturb
