// End-to-end Monte Carlo: per frame, draw subsource amplitudes and turbulence
// screens, detect the bucket and reference signals, accumulate covariance.
#pragma once

#include <cstdint>
#include <optional>

#include "ghostturb/correlator.hpp"
#include "ghostturb/optics.hpp"
#include "ghostturb/source.hpp"
#include "ghostturb/turbulence.hpp"

namespace ghostturb {

struct SimulationSetup {
  OpticalConfig optics;
  SubsourceSet sources;
  TurbulenceModel turbulence;
  ObjectMask mask;
  Grid2D reference_grid;
  std::size_t frames = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double screen_pitch = 0.0;  ///< 0 selects min(rho0 / 5, D / 8)
};

/// Frames are reduced in fixed blocks of this size, merged in block order,
/// which makes the result independent of the worker count.
inline constexpr std::size_t kFramesPerBlock = 64;

/// Plane sampled by both bucket and reference screens.
std::optional<Grid2D> screen_grid_for(const SimulationSetup& setup);

struct SimulationResult {
  GhostImageEstimate estimate;
  std::optional<Grid2D> screen_grid;
  double wall_seconds = 0.0;
};

SimulationResult run_simulation(const SimulationSetup& setup);

}  // namespace ghostturb
