// Source-plane turbulence coherence length from a C_n^2 profile, and
// phase-only screens with square-law structure function.
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ghostturb/grid.hpp"

namespace ghostturb {

/// Constant C_n^2 over [z_start, z_end) [m, m, m^(-2/3)].
struct ProfileSegment {
  double z_start = 0.0;
  double z_end = 0.0;
  double cn2 = 0.0;
};

/// Piecewise-constant turbulence strength along the source (z = 0) to
/// detector (z = L) path. Segments are contiguous and cover [0, L] exactly.
class CnSquaredProfile {
 public:
  explicit CnSquaredProfile(std::vector<ProfileSegment> segments);

  /// Worst case (minimum rho0) for a given peak strength.
  static CnSquaredProfile uniform(double path_length, double cn2);

  /// Text form: one "z_start z_end cn2" per line, '#' comments, or the
  /// single line "uniform L cn2".
  static CnSquaredProfile parse(std::istream& in, const std::string& source_name = "<stream>");
  static CnSquaredProfile load(const std::filesystem::path& path);

  const std::vector<ProfileSegment>& segments() const { return segments_; }
  double path_length() const { return segments_.back().z_end; }

 private:
  std::vector<ProfileSegment> segments_;
};

/// Integral of C_n^2(z) (1 - z/L)^{5/3} over [0, L], evaluated with the
/// closed-form antiderivative on each constant segment [m^(1/3)].
double weighted_path_integral(const CnSquaredProfile& profile);

double wave_number(double wavelength);

/// rho0 = (2.91 k^2 integral)^(-3/5). Returns kInfinity for a vacuum path.
double coherence_length(const CnSquaredProfile& profile, double wavelength);

struct TurbulenceModel {
  double rho0 = kInfinity;                ///< source-plane coherence length [m]
  double screen_position_fraction = 0.0;  ///< 0 = source plane, 1 = detector plane
  bool paths_independent = true;         ///< bucket and reference screens drawn independently

  bool vacuum() const { return std::isinf(rho0); }
  void validate() const;
};

/// Gaussian-covariance parameters C(r) = variance * exp(-r^2 / ell^2).
/// With variance / ell^2 = 1 / (2 rho0^2) the structure function
/// 2 variance (1 - exp(-r^2/ell^2)) follows r^2 / rho0^2 for r << ell, and
/// falls below it by at most 5.4% for r <= ell / 3.
struct ScreenStatistics {
  double ell = 0.0;       ///< covariance scale [m]
  double variance = 0.0;  ///< phase variance [rad^2]
};

ScreenStatistics screen_statistics(double rho0, double source_diameter, double pitch);

/// Square-law target D(r) = r^2 / rho0^2 for one propagation path.
double square_law_structure_function(double separation, double rho0);

/// Coarsest screen pitch accepted for a given rho0 (strictly below rho0 / 4).
double max_screen_pitch(double rho0);

class PhaseScreen {
 public:
  PhaseScreen(const Grid2D& grid, std::vector<double> phase, double rho0_target,
              ScreenStatistics statistics, std::uint64_t seed);

  const Grid2D& grid() const { return grid_; }
  const std::vector<double>& phase() const { return phase_; }
  double rho0_target() const { return rho0_target_; }
  const ScreenStatistics& statistics() const { return statistics_; }
  std::uint64_t seed() const { return seed_; }

  double at(int i, int j) const { return phase_[grid_.index(i, j)]; }

  /// Bilinear interpolation; throws ConfigError outside the sampled area.
  double sample(Vec2 point) const;

 private:
  Grid2D grid_;
  std::vector<double> phase_;
  double rho0_target_;
  ScreenStatistics statistics_;
  std::uint64_t seed_;
};

/// Spectral screen synthesis by circulant embedding: the Gaussian covariance
/// is periodised on an FFT grid of extent >= screen extent + 3 ell, its
/// eigenvalues are obtained with one forward transform, and each draw costs
/// one transform yielding two independent screens (real and imaginary part).
///
/// Not thread-safe; give each worker its own generator.
class PhaseScreenGenerator {
 public:
  PhaseScreenGenerator(const Grid2D& grid, double rho0, double source_diameter);
  ~PhaseScreenGenerator();
  PhaseScreenGenerator(PhaseScreenGenerator&&) noexcept;
  PhaseScreenGenerator& operator=(PhaseScreenGenerator&&) noexcept;
  PhaseScreenGenerator(const PhaseScreenGenerator&) = delete;
  PhaseScreenGenerator& operator=(const PhaseScreenGenerator&) = delete;

  const Grid2D& grid() const;
  const ScreenStatistics& statistics() const;
  int embedding_nx() const;
  int embedding_ny() const;

  /// Two independent screens from one seed; bit-identical for equal seeds.
  std::pair<PhaseScreen, PhaseScreen> generate_pair(std::uint64_t seed);

  /// Same as generate_pair but drawing from an already-seeded stream.
  std::pair<PhaseScreen, PhaseScreen> generate_pair(std::mt19937_64& rng, std::uint64_t seed_label);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One screen for the given model. A vacuum model yields an all-zero screen.
PhaseScreen generate_phase_screen(const Grid2D& grid, const TurbulenceModel& model,
                                  double source_diameter, std::uint64_t seed);

struct StructureFunctionEstimate {
  double value = 0.0;           ///< mean of [phi(p + r) - phi(p)]^2 [rad^2]
  double standard_error = 0.0;  ///< from the spread of per-screen means
  std::size_t pairs = 0;
};

/// Ensemble structure function at a grid-representable offset.
StructureFunctionEstimate structure_function_estimate(const std::vector<PhaseScreen>& screens,
                                                      Vec2 separation);

}  // namespace ghostturb
