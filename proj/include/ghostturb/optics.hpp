// Extended Huygens-Fresnel propagation from pseudothermal subsources to a
// detector plane, with a phase-only turbulence screen at a chosen plane.
#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "ghostturb/grid.hpp"
#include "ghostturb/source.hpp"
#include "ghostturb/turbulence.hpp"

namespace ghostturb {

class OpticalConfig {
 public:
  OpticalConfig(double wavelength, double path_length);

  double wavelength() const { return wavelength_; }
  double path_length() const { return path_length_; }
  double wave_number() const { return wave_number_; }

 private:
  double wavelength_;
  double path_length_;
  double wave_number_;
};

class ComplexField {
 public:
  ComplexField(const Grid2D& grid, std::vector<Complex> amplitudes);

  const Grid2D& grid() const { return grid_; }
  const std::vector<Complex>& amplitudes() const { return amplitudes_; }
  Complex at(int i, int j) const { return amplitudes_[grid_.index(i, j)]; }

  RealMap intensity() const;

 private:
  Grid2D grid_;
  std::vector<Complex> amplitudes_;
};

/// exp(ikL + ik|dst - src|^2 / 2L) / (i lambda L) * exp(psi).
Complex greens_function(Vec2 dst, Vec2 src, const OpticalConfig& cfg, Complex psi = {});

/// Fresnel sum u(p) = sum_m w_m h(p, src_m) over one free-space leg, with
/// every source-dependent factor precomputed. Grid destinations use the
/// separable form of the quadratic phase; point-list destinations store the
/// kernel explicitly.
class FresnelPropagator {
 public:
  FresnelPropagator(std::vector<Vec2> sources, const Grid2D& destination, double wavelength, double distance);
  FresnelPropagator(std::vector<Vec2> sources, std::vector<Vec2> destination, double wavelength, double distance);

  std::size_t source_count() const { return source_count_; }
  std::size_t destination_count() const { return destination_count_; }

  void field(std::span<const Complex> weights, std::vector<Complex>& out) const;
  void intensity(std::span<const Complex> weights, std::vector<double>& out) const;

 private:
  void sum(std::span<const Complex> weights, std::vector<Complex>& out) const;

  std::size_t source_count_ = 0;
  std::size_t destination_count_ = 0;
  double inverse_lambda_z_sq_ = 0.0;
  bool separable_ = false;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<Complex> source_factor_;  // exp(ik|src|^2 / 2z)
  std::vector<Complex> pixel_factor_;   // exp(ikz + ik|dst|^2 / 2z) / (i lambda z)
  // separable: exp(-ik x_i x_m / z) and exp(-ik y_j y_m / z), row per pixel index
  std::vector<double> xre_, xim_, yre_, yim_;
  // dense: kernel without source/pixel factors, row per destination
  std::vector<double> kre_, kim_;
};

/// Where the propagated field is evaluated.
struct Destination {
  std::optional<Grid2D> grid;
  std::vector<Vec2> points;  ///< used when grid is empty

  static Destination on_grid(const Grid2D& g) { return {g, {}}; }
  static Destination at_points(std::vector<Vec2> p) { return {std::nullopt, std::move(p)}; }
  std::size_t size() const { return grid ? grid->size() : points.size(); }
};

/// One source-to-detector path with a turbulence screen at
/// model.screen_position_fraction:
///   0     -> phase sampled at each subsource position,
///   1     -> phase sampled at each detector point,
///   (0,1) -> source -> screen grid (distance fL) -> detector (distance (1-f)L).
/// The intermediate case needs `screen_grid`, which must cover the beam
/// footprint; the screen passed to field() must live on that grid.
class PathPropagator {
 public:
  PathPropagator(const SubsourceSet& sources, Destination destination, const OpticalConfig& cfg,
                 const TurbulenceModel& model, std::optional<Grid2D> screen_grid = std::nullopt);

  /// Field including the screen.
  void field(std::span<const Complex> amplitudes, const PhaseScreen* screen, std::vector<Complex>& out) const;

  /// Detected intensity |u|^2. A detector-plane phase-only screen is a
  /// per-point unit-modulus factor and is discarded by square-law detection.
  void intensity(std::span<const Complex> amplitudes, const PhaseScreen* screen, std::vector<double>& out) const;

  const std::vector<Vec2>& destination_points() const { return destination_points_; }

 private:
  void screened_weights(std::span<const Complex> amplitudes, const PhaseScreen* screen) const;
  void two_leg(std::span<const Complex> amplitudes, const PhaseScreen& screen, std::vector<Complex>& out) const;
  bool screen_active(const PhaseScreen* screen) const;

  std::vector<Vec2> source_positions_;
  std::vector<Vec2> destination_points_;
  TurbulenceModel model_;
  std::optional<Grid2D> screen_grid_;
  std::optional<FresnelPropagator> direct_;
  std::optional<FresnelPropagator> to_screen_;
  std::optional<FresnelPropagator> from_screen_;
  mutable std::vector<Complex> weights_;
  mutable std::vector<Complex> screen_field_;
};

/// sum_m E_m h(p, rho_m) on `dst`, screen placed per `model`.
ComplexField propagate_subsources(std::span<const Complex> amplitudes, const SubsourceSet& sources,
                                  const PhaseScreen* screen, const TurbulenceModel& model, const Grid2D& dst,
                                  const OpticalConfig& cfg);

/// Axis-aligned region of the screen plane crossed by straight lines from
/// any subsource to any destination point.
struct Footprint {
  Vec2 lower;
  Vec2 upper;
};
Footprint beam_footprint(const std::vector<Vec2>& sources, const std::vector<Vec2>& destination, double fraction);

}  // namespace ghostturb
