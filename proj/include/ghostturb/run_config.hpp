// Experiment configuration: flat "key = value" text with '#' comments and an
// optional [profile] section holding C_n^2 segments.
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "ghostturb/correlator.hpp"
#include "ghostturb/optics.hpp"
#include "ghostturb/source.hpp"
#include "ghostturb/turbulence.hpp"

namespace ghostturb {

struct RunConfig {
  // Defaults reproduce the laboratory geometry under discussion; the
  // wavelength is an assumption because the experiment does not report it.
  double wavelength = 780e-9;
  double path_length = 1.4;
  double source_diameter = 0.011;
  double source_pitch = 0.0;  ///< 0 -> source_diameter / 16
  double mean_power = 1.0;

  std::vector<ProfileSegment> profile;  ///< empty -> uniform cn2 over path_length
  double cn2 = 1.5e-12;
  std::optional<double> rho0_override;  ///< bypasses the profile [m]; may be kInfinity

  double screen_fraction = 0.0;
  bool paths_independent = true;
  double screen_pitch = 0.0;

  std::string mask = "point";  ///< point | double_slit | three_bar | pgm:<file>
  double mask_x = 0.0;
  double mask_y = 0.0;
  double slit_width = 100e-6;
  double slit_separation = 300e-6;
  double slit_height = 600e-6;
  double bar_width = 100e-6;

  int object_n = 64;
  double object_pitch = 0.0;  ///< 0 -> reference pitch
  int reference_n = 64;
  double reference_pitch = 0.0;  ///< 0 -> lambda L / (5 D)

  std::size_t frames = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 0;  ///< 0 -> hardware concurrency
  std::string output = "out";

  std::vector<double> compare_rho0_mm = {kInfinity, 50.0, 10.0, 5.0, 2.0};
  double compare_tolerance = 0.10;
  double compare_vacuum_tolerance = 0.05;

  std::filesystem::path base_directory = ".";  ///< relative file references resolve here

  static RunConfig parse(std::istream& in, const std::string& source_name = "<config>");
  static RunConfig load(const std::filesystem::path& path);

  /// Canonical text form; parse(serialize()) reproduces every field.
  std::string serialize() const;

  void validate() const;

  // Derived quantities.
  CnSquaredProfile turbulence_profile() const;
  double rho0() const;
  double resolved_source_pitch() const;
  double resolved_reference_pitch() const;
  double resolved_object_pitch() const;
  unsigned resolved_workers() const;
  OpticalConfig optics() const;
  SubsourceSet sources() const;
  TurbulenceModel turbulence() const;
  Grid2D object_grid() const;
  Grid2D reference_grid() const;
  ObjectMask object_mask() const;
  std::filesystem::path resolve(const std::string& file) const;
};

}  // namespace ghostturb
