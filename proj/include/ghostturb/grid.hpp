// Transverse-plane geometry shared by every module: 2-D coordinates,
// sampling grids and real-valued maps defined on them.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ghostturb {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Base of every error raised by the library. Messages are prefixed with the
/// module that raised them ("turbulence: ...").
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input value or inconsistent arguments.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A physically valid but unusable configuration (sampling too coarse,
/// extent too small, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Too few samples to form an estimate.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// No significant peak in an image.
class NoDetectionError : public Error {
 public:
  using Error::Error;
};

/// Point or displacement in a transverse plane [m].
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Uniformly pitched nx-by-ny sampling grid. Pixel i sits at
/// center.x + (i - nx/2) * pitch (integer division), so even-sized grids
/// contain the centre point itself.
class Grid2D {
 public:
  Grid2D(int nx, int ny, double pitch, Vec2 center = {});

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double pitch() const { return pitch_; }
  Vec2 center() const { return center_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

  double x(int i) const { return center_.x + static_cast<double>(i - nx_ / 2) * pitch_; }
  double y(int j) const { return center_.y + static_cast<double>(j - ny_ / 2) * pitch_; }
  Vec2 point(int i, int j) const { return {x(i), y(j)}; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }

  // Inverse of the coordinate map (fractional pixel indices).
  double column_of(double xv) const { return (xv - center_.x) / pitch_ + static_cast<double>(nx_ / 2); }
  double row_of(double yv) const { return (yv - center_.y) / pitch_ + static_cast<double>(ny_ / 2); }

  double x_min() const { return x(0); }
  double x_max() const { return x(nx_ - 1); }
  double y_min() const { return y(0); }
  double y_max() const { return y(ny_ - 1); }

  /// True if p lies within the sampled rectangle (pixel centres), with a
  /// relative slack of 1e-9 pitch.
  bool contains(Vec2 p) const;

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  int nx_;
  int ny_;
  double pitch_;
  Vec2 center_;
};

/// Real values sampled on a grid, row-major (index = j * nx + i).
struct RealMap {
  Grid2D grid;
  std::vector<double> values;

  explicit RealMap(const Grid2D& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  RealMap(const Grid2D& g, std::vector<double> v);

  double& at(int i, int j) { return values[grid.index(i, j)]; }
  double at(int i, int j) const { return values[grid.index(i, j)]; }
};

/// Independent, reproducible random stream addressed by (seed, frame, purpose).
/// Frames can be generated in any order or in parallel with identical results.
enum class StreamPurpose : std::uint64_t {
  kSourceAmplitudes = 1,
  kPhaseScreens = 2,
  kTest = 3,
};

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t frame, StreamPurpose purpose);

}  // namespace ghostturb
