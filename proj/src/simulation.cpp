#include "ghostturb/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace ghostturb {

namespace {

constexpr int kMaxIntermediateScreen = 128;

void extend(Footprint& box, const Footprint& other) {
  box.lower = {std::min(box.lower.x, other.lower.x), std::min(box.lower.y, other.lower.y)};
  box.upper = {std::max(box.upper.x, other.upper.x), std::max(box.upper.y, other.upper.y)};
}

std::vector<Vec2> corner_points(const Grid2D& g) {
  return {{g.x_min(), g.y_min()}, {g.x_max(), g.y_max()}};
}

// Everything one worker needs; owns scratch buffers so it is not shared.
struct FramePipeline {
  const SimulationSetup& setup;
  PathPropagator bucket;
  PathPropagator reference;
  std::vector<double> open_values;
  std::optional<PhaseScreenGenerator> screens;
  std::vector<double> bucket_intensity;
  std::vector<double> reference_intensity;

  FramePipeline(const SimulationSetup& s, const std::optional<Grid2D>& screen_grid)
      : setup(s),
        bucket(s.sources, Destination::at_points(s.mask.open_points()), s.optics, s.turbulence, screen_grid),
        reference(s.sources, Destination::on_grid(s.reference_grid), s.optics, s.turbulence, screen_grid),
        open_values(s.mask.open_values()) {
    if (screen_grid) screens.emplace(*screen_grid, s.turbulence.rho0, s.sources.diameter());
  }

  void run(std::size_t frame, GhostImageEstimate& estimate) {
    auto amp_rng = make_stream(setup.seed, frame, StreamPurpose::kSourceAmplitudes);
    std::vector<Complex> amplitudes;
    draw_amplitudes(amp_rng, setup.sources.mean_power(), setup.sources.size(), amplitudes);

    std::optional<std::pair<PhaseScreen, PhaseScreen>> pair;
    if (screens) {
      auto screen_rng = make_stream(setup.seed, frame, StreamPurpose::kPhaseScreens);
      pair.emplace(screens->generate_pair(screen_rng, setup.seed));
    }
    const PhaseScreen* bucket_screen = pair ? &pair->first : nullptr;
    const PhaseScreen* reference_screen =
        pair ? (setup.turbulence.paths_independent ? &pair->second : &pair->first) : nullptr;

    bucket.intensity(amplitudes, bucket_screen, bucket_intensity);
    double b = 0.0;
    for (std::size_t p = 0; p < bucket_intensity.size(); ++p) b += bucket_intensity[p] * open_values[p];
    b *= setup.mask.grid().pitch() * setup.mask.grid().pitch();

    reference.intensity(amplitudes, reference_screen, reference_intensity);
    estimate.add(b, reference_intensity);
  }
};

}  // namespace

std::optional<Grid2D> screen_grid_for(const SimulationSetup& setup) {
  const auto& model = setup.turbulence;
  if (model.vacuum()) return std::nullopt;
  const double f = model.screen_position_fraction;
  const auto& sources = setup.sources.positions();
  const auto object = setup.mask.open_points();
  const auto reference = corner_points(setup.reference_grid);

  Footprint box = beam_footprint(sources, object, f);
  extend(box, beam_footprint(sources, reference, f));
  const double extent = std::max(box.upper.x - box.lower.x, box.upper.y - box.lower.y);

  double pitch = setup.screen_pitch;
  if (pitch <= 0.0) {
    pitch = std::min(model.rho0 / 5.0, setup.sources.diameter() / 8.0);
    if (f > 0.0 && f < 1.0) pitch = std::max(pitch, extent / (kMaxIntermediateScreen - 3));
  }
  if (!(pitch < max_screen_pitch(model.rho0))) {
    throw ConfigError("simulation: screen pitch " + std::to_string(pitch) + " m does not resolve rho0 = " +
                      std::to_string(model.rho0) + " m; required pitch < " +
                      std::to_string(max_screen_pitch(model.rho0)) + " m");
  }
  const int n = static_cast<int>(std::ceil(extent / pitch)) + 3;
  if (f > 0.0 && f < 1.0 && n > kMaxIntermediateScreen) {
    throw ConfigError("simulation: intermediate screen needs " + std::to_string(n) + "^2 samples (limit " +
                      std::to_string(kMaxIntermediateScreen) + "^2); increase rho0 or reduce the footprint");
  }
  const Vec2 center = 0.5 * (box.lower + box.upper);
  return Grid2D(n, n, pitch, center);
}

SimulationResult run_simulation(const SimulationSetup& setup) {
  setup.turbulence.validate();
  if (setup.frames < 2) throw InsufficientDataError("simulation: imaging runs need at least 2 frames");
  if (setup.sources.size() < 2) throw ValidationError("simulation: imaging runs need at least 2 subsources");
  const auto start = std::chrono::steady_clock::now();
  const auto screen_grid = screen_grid_for(setup);

  const std::size_t blocks = (setup.frames + kFramesPerBlock - 1) / kFramesPerBlock;
  std::vector<std::optional<GhostImageEstimate>> partial(blocks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    try {
      FramePipeline pipeline(setup, screen_grid);
      for (std::size_t b = next++; b < blocks; b = next++) {
        GhostImageEstimate est(setup.reference_grid);
        const std::size_t end = std::min(setup.frames, (b + 1) * kFramesPerBlock);
        for (std::size_t frame = b * kFramesPerBlock; frame < end; ++frame) pipeline.run(frame, est);
        partial[b].emplace(std::move(est));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = blocks;
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(setup.workers, static_cast<unsigned>(blocks)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SimulationResult result{GhostImageEstimate(setup.reference_grid), screen_grid, 0.0};
  for (auto& p : partial) result.estimate.merge(*p);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace ghostturb
