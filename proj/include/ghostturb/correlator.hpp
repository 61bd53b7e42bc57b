// Ghost image formation: bucket detection behind a transmissive object,
// bucket/reference covariance accumulation, and PSF width metrics.
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghostturb/grid.hpp"
#include "ghostturb/optics.hpp"

namespace ghostturb {

class ObjectMask {
 public:
  ObjectMask(const Grid2D& grid, std::vector<double> transmissivity, std::string descriptor);

  /// Single transmitting pixel nearest to `at`.
  static ObjectMask point(const Grid2D& grid, Vec2 at = {});
  /// Two vertical slits centred on the grid centre.
  static ObjectMask double_slit(const Grid2D& grid, double slit_width, double slit_separation, double slit_height);
  /// Three vertical bars of width w separated by gaps of w, height 5w.
  static ObjectMask three_bar(const Grid2D& grid, double bar_width);
  /// 8-bit binary PGM (P5); transmissivity = value / 255. Grid takes the
  /// image size with the given pitch, row 0 of the file at the top (max y).
  static ObjectMask from_pgm(const std::filesystem::path& path, double pitch, Vec2 center = {});

  const Grid2D& grid() const { return grid_; }
  const std::vector<double>& transmissivity() const { return transmissivity_; }
  const std::string& descriptor() const { return descriptor_; }

  /// Pixel centres with nonzero transmissivity and their values.
  std::vector<Vec2> open_points() const;
  std::vector<double> open_values() const;

 private:
  Grid2D grid_;
  std::vector<double> transmissivity_;
  std::string descriptor_;
};

/// sum |u|^2 T pitch^2 over the object plane.
double bucket_signal(const ComplexField& object_field, const ObjectMask& mask);

struct GhostImage {
  RealMap ghost;       ///< <B I> - <B><I>
  RealMap background;  ///< <B><I>
  RealMap stderr_map;  ///< standard error of the ghost estimate
  std::size_t frames = 0;
};

/// Running raw-moment sums of bucket B and reference intensity I(p). Sums
/// are order-independent, so partial estimates over disjoint frame sets
/// merge into the single-pass result.
class GhostImageEstimate {
 public:
  explicit GhostImageEstimate(const Grid2D& grid);

  void add(double bucket, std::span<const double> reference);
  void merge(const GhostImageEstimate& other);

  const Grid2D& grid() const { return grid_; }
  std::size_t frames() const { return frames_; }
  double sum_bucket() const { return sum_b_; }
  double sum_bucket_sq() const { return sum_b2_; }
  const std::vector<double>& sum_reference() const { return sum_i_; }
  const std::vector<double>& sum_product() const { return sum_bi_; }

  /// Biased (1/N) covariance estimate. Throws InsufficientDataError for N < 2.
  GhostImage finalize() const;

 private:
  Grid2D grid_;
  std::size_t frames_ = 0;
  double sum_b_ = 0.0;
  double sum_b2_ = 0.0;
  std::vector<double> sum_i_, sum_i2_, sum_bi_, sum_b2i_, sum_bi2_, sum_b2i2_;
};

GhostImageEstimate accumulate(GhostImageEstimate estimate, double bucket, const RealMap& reference);
GhostImage finalize(const GhostImageEstimate& estimate);

struct PsfMetrics {
  Vec2 peak;                   ///< location of the profile cuts [m]
  double peak_value = 0.0;
  double fwhm_x = 0.0;         ///< [m]
  double fwhm_y = 0.0;         ///< [m]
  double fwhm_x_error = 0.0;   ///< propagated from the stderr map, 0 without one
  double fwhm_y_error = 0.0;
  double second_moment_width = 0.0;  ///< [m]

  double fwhm() const { return 0.5 * (fwhm_x + fwhm_y); }
  double fwhm_error() const;
};

/// FWHM by linear interpolation of the half-maximum crossings on the row and
/// column through the peak (the global maximum unless `peak` is given).
/// Throws NoDetectionError when the maximum is not unique or does not exceed
/// 5x its standard error.
PsfMetrics psf_metrics(const RealMap& image, const RealMap* stderr_map = nullptr,
                       std::optional<Vec2> peak = std::nullopt);

}  // namespace ghostturb
