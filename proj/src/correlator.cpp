#include "ghostturb/correlator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ghostturb {

namespace {

void require_same_grid(const Grid2D& a, const Grid2D& b, const char* what) {
  if (!(a == b)) throw ValidationError(std::string("correlator: ") + what + " grids differ");
}

}  // namespace

// ---------------------------------------------------------------------------
// Masks

ObjectMask::ObjectMask(const Grid2D& grid, std::vector<double> transmissivity, std::string descriptor)
    : grid_(grid), transmissivity_(std::move(transmissivity)), descriptor_(std::move(descriptor)) {
  if (transmissivity_.size() != grid_.size()) throw ValidationError("correlator: mask size does not match its grid");
  for (double t : transmissivity_) {
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("correlator: transmissivity outside [0, 1]");
  }
}

ObjectMask ObjectMask::point(const Grid2D& grid, Vec2 at) {
  const int i = static_cast<int>(std::lround(grid.column_of(at.x)));
  const int j = static_cast<int>(std::lround(grid.row_of(at.y)));
  if (i < 0 || j < 0 || i >= grid.nx() || j >= grid.ny()) throw ValidationError("correlator: point object outside the grid");
  std::vector<double> t(grid.size(), 0.0);
  t[grid.index(i, j)] = 1.0;
  return ObjectMask(grid, std::move(t), "point");
}

ObjectMask ObjectMask::double_slit(const Grid2D& grid, double slit_width, double slit_separation, double slit_height) {
  if (!(slit_width > 0.0) || !(slit_separation > slit_width) || !(slit_height > 0.0)) {
    throw ValidationError("correlator: double slit needs width > 0, separation > width, height > 0");
  }
  std::vector<double> t(grid.size(), 0.0);
  const Vec2 c = grid.center();
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const Vec2 p = grid.point(i, j) - c;
      const double dx = std::abs(std::abs(p.x) - slit_separation / 2.0);
      if (dx <= slit_width / 2.0 && std::abs(p.y) <= slit_height / 2.0) t[grid.index(i, j)] = 1.0;
    }
  }
  return ObjectMask(grid, std::move(t), "double_slit");
}

ObjectMask ObjectMask::three_bar(const Grid2D& grid, double bar_width) {
  if (!(bar_width > 0.0)) throw ValidationError("correlator: bar width must be positive");
  std::vector<double> t(grid.size(), 0.0);
  const Vec2 c = grid.center();
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i) {
      const Vec2 p = grid.point(i, j) - c;
      if (std::abs(p.y) > 2.5 * bar_width) continue;
      for (int bar = -1; bar <= 1; ++bar) {
        if (std::abs(p.x - 2.0 * bar * bar_width) <= bar_width / 2.0) t[grid.index(i, j)] = 1.0;
      }
    }
  }
  return ObjectMask(grid, std::move(t), "three_bar");
}

ObjectMask ObjectMask::from_pgm(const std::filesystem::path& path, double pitch, Vec2 center) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("correlator: cannot open mask " + path.string());
  auto next_token = [&in]() {
    std::string tok;
    char ch = 0;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(ch);
    }
    return tok;
  };
  if (next_token() != "P5") throw ValidationError("correlator: " + path.string() + " is not a binary PGM (P5)");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw ValidationError("correlator: malformed PGM header in " + path.string());
  }
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255) {
    throw ValidationError("correlator: " + path.string() + " must be an 8-bit PGM");
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw ValidationError("correlator: truncated PGM payload in " + path.string());
  }
  Grid2D grid(width, height, pitch, center);
  std::vector<double> t(grid.size());
  for (int row = 0; row < height; ++row) {
    const int j = height - 1 - row;
    for (int i = 0; i < width; ++i) {
      t[grid.index(i, j)] = std::min(1.0, raw[static_cast<std::size_t>(row) * width + i] / 255.0);
    }
  }
  return ObjectMask(grid, std::move(t), "pgm:" + path.string());
}

std::vector<Vec2> ObjectMask::open_points() const {
  std::vector<Vec2> pts;
  for (int j = 0; j < grid_.ny(); ++j) {
    for (int i = 0; i < grid_.nx(); ++i) {
      if (transmissivity_[grid_.index(i, j)] > 0.0) pts.push_back(grid_.point(i, j));
    }
  }
  return pts;
}

std::vector<double> ObjectMask::open_values() const {
  std::vector<double> v;
  for (int j = 0; j < grid_.ny(); ++j) {
    for (int i = 0; i < grid_.nx(); ++i) {
      const double t = transmissivity_[grid_.index(i, j)];
      if (t > 0.0) v.push_back(t);
    }
  }
  return v;
}

double bucket_signal(const ComplexField& object_field, const ObjectMask& mask) {
  require_same_grid(object_field.grid(), mask.grid(), "field and mask");
  double total = 0.0;
  const auto& u = object_field.amplitudes();
  const auto& t = mask.transmissivity();
  for (std::size_t n = 0; n < u.size(); ++n) {
    if (t[n] != 0.0) total += std::norm(u[n]) * t[n];
  }
  return total * mask.grid().pitch() * mask.grid().pitch();
}

// ---------------------------------------------------------------------------
// Estimator

GhostImageEstimate::GhostImageEstimate(const Grid2D& grid)
    : grid_(grid),
      sum_i_(grid.size(), 0.0),
      sum_i2_(grid.size(), 0.0),
      sum_bi_(grid.size(), 0.0),
      sum_b2i_(grid.size(), 0.0),
      sum_bi2_(grid.size(), 0.0),
      sum_b2i2_(grid.size(), 0.0) {}

void GhostImageEstimate::add(double bucket, std::span<const double> reference) {
  if (reference.size() != grid_.size()) throw ValidationError("correlator: reference map does not match the estimate grid");
  const double b = bucket;
  const double b2 = b * b;
  ++frames_;
  sum_b_ += b;
  sum_b2_ += b2;
  for (std::size_t n = 0; n < reference.size(); ++n) {
    const double i = reference[n];
    const double i2 = i * i;
    sum_i_[n] += i;
    sum_i2_[n] += i2;
    sum_bi_[n] += b * i;
    sum_b2i_[n] += b2 * i;
    sum_bi2_[n] += b * i2;
    sum_b2i2_[n] += b2 * i2;
  }
}

void GhostImageEstimate::merge(const GhostImageEstimate& other) {
  require_same_grid(grid_, other.grid_, "estimate");
  frames_ += other.frames_;
  sum_b_ += other.sum_b_;
  sum_b2_ += other.sum_b2_;
  for (std::size_t n = 0; n < sum_i_.size(); ++n) {
    sum_i_[n] += other.sum_i_[n];
    sum_i2_[n] += other.sum_i2_[n];
    sum_bi_[n] += other.sum_bi_[n];
    sum_b2i_[n] += other.sum_b2i_[n];
    sum_bi2_[n] += other.sum_bi2_[n];
    sum_b2i2_[n] += other.sum_b2i2_[n];
  }
}

GhostImage GhostImageEstimate::finalize() const {
  if (frames_ < 2) {
    throw InsufficientDataError("correlator: ghost image needs at least 2 frames, have " + std::to_string(frames_));
  }
  const double n = static_cast<double>(frames_);
  GhostImage out{RealMap(grid_), RealMap(grid_), RealMap(grid_), frames_};
  const double a = sum_b_ / n;
  const double eb2 = sum_b2_ / n;
  for (std::size_t p = 0; p < sum_i_.size(); ++p) {
    const double b = sum_i_[p] / n;
    const double ebi = sum_bi_[p] / n;
    const double cov = ebi - a * b;
    // E[(B - a)^2 (I - b)^2] from raw moments.
    const double m4 = sum_b2i2_[p] / n - 2.0 * b * sum_b2i_[p] / n + b * b * eb2 - 2.0 * a * sum_bi2_[p] / n +
                      4.0 * a * b * ebi - 2.0 * a * b * b * a + a * a * sum_i2_[p] / n - 2.0 * a * a * b * b +
                      a * a * b * b;
    out.ghost.values[p] = cov;
    out.background.values[p] = a * b;
    out.stderr_map.values[p] = std::sqrt(std::max(0.0, m4 - cov * cov) / n);
  }
  return out;
}

GhostImageEstimate accumulate(GhostImageEstimate estimate, double bucket, const RealMap& reference) {
  require_same_grid(estimate.grid(), reference.grid, "estimate and reference");
  estimate.add(bucket, reference.values);
  return estimate;
}

GhostImage finalize(const GhostImageEstimate& estimate) { return estimate.finalize(); }

// ---------------------------------------------------------------------------
// PSF metrics

double PsfMetrics::fwhm_error() const { return 0.5 * std::hypot(fwhm_x_error, fwhm_y_error); }

namespace {

struct Crossing {
  double position = 0.0;  // in pixels from the peak
  double error = 0.0;     // in pixels
};

// Walk outward from the peak along one axis until the profile drops below
// `half`; interpolate linearly between the last two samples.
Crossing find_crossing(const std::vector<double>& profile, const std::vector<double>& errors, int peak, int step,
                       double half, double half_error) {
  int prev = peak;
  for (int n = peak + step; n >= 0 && n < static_cast<int>(profile.size()); n += step) {
    if (profile[n] <= half) {
      const double v0 = profile[prev];
      const double v1 = profile[n];
      const double t = (v0 - half) / (v0 - v1);
      Crossing c;
      c.position = std::abs(prev - peak) + t;
      const double slope = v0 - v1;  // per pixel
      const double sv = errors.empty() ? 0.0 : (1.0 - t) * errors[prev] + t * errors[n];
      c.error = errors.empty() ? 0.0 : std::sqrt(sv * sv + half_error * half_error) / slope;
      return c;
    }
    prev = n;
  }
  throw NoDetectionError("correlator: profile never drops to half maximum inside the image");
}

}  // namespace

PsfMetrics psf_metrics(const RealMap& image, const RealMap* stderr_map, std::optional<Vec2> peak) {
  const Grid2D& g = image.grid;
  if (stderr_map != nullptr) require_same_grid(g, stderr_map->grid, "image and stderr");

  int pi = 0, pj = 0;
  if (peak) {
    pi = static_cast<int>(std::lround(g.column_of(peak->x)));
    pj = static_cast<int>(std::lround(g.row_of(peak->y)));
    if (pi < 0 || pj < 0 || pi >= g.nx() || pj >= g.ny()) throw ValidationError("correlator: peak outside the image");
  } else {
    const auto it = std::max_element(image.values.begin(), image.values.end());
    const auto idx = static_cast<std::size_t>(it - image.values.begin());
    pi = static_cast<int>(idx % g.nx());
    pj = static_cast<int>(idx / g.nx());
  }
  const double top = image.at(pi, pj);
  const auto ties = std::count(image.values.begin(), image.values.end(), top);
  if (ties > 1 || !(top > 0.0)) throw NoDetectionError("correlator: no unique positive maximum (washed-out image)");
  if (stderr_map != nullptr) {
    const double se = stderr_map->at(pi, pj);
    if (!(top > 5.0 * se)) {
      throw NoDetectionError("correlator: peak " + std::to_string(top) + " is not above 5x its standard error " +
                             std::to_string(se));
    }
  }

  std::vector<double> row(g.nx()), row_err, col(g.ny()), col_err;
  for (int i = 0; i < g.nx(); ++i) row[i] = image.at(i, pj);
  for (int j = 0; j < g.ny(); ++j) col[j] = image.at(pi, j);
  if (stderr_map != nullptr) {
    row_err.resize(g.nx());
    col_err.resize(g.ny());
    for (int i = 0; i < g.nx(); ++i) row_err[i] = stderr_map->at(i, pj);
    for (int j = 0; j < g.ny(); ++j) col_err[j] = stderr_map->at(pi, j);
  }
  const double half = 0.5 * top;
  const double half_error = stderr_map != nullptr ? 0.5 * stderr_map->at(pi, pj) : 0.0;

  PsfMetrics m;
  m.peak = g.point(pi, pj);
  m.peak_value = top;
  const Crossing left = find_crossing(row, row_err, pi, -1, half, half_error);
  const Crossing right = find_crossing(row, row_err, pi, +1, half, half_error);
  const Crossing down = find_crossing(col, col_err, pj, -1, half, half_error);
  const Crossing up = find_crossing(col, col_err, pj, +1, half, half_error);
  m.fwhm_x = (left.position + right.position) * g.pitch();
  m.fwhm_y = (down.position + up.position) * g.pitch();
  m.fwhm_x_error = std::hypot(left.error, right.error) * g.pitch();
  m.fwhm_y_error = std::hypot(down.error, up.error) * g.pitch();

  // Second-moment width about the peak, border median as background.
  std::vector<double> border;
  for (int i = 0; i < g.nx(); ++i) {
    border.push_back(image.at(i, 0));
    border.push_back(image.at(i, g.ny() - 1));
  }
  for (int j = 1; j + 1 < g.ny(); ++j) {
    border.push_back(image.at(0, j));
    border.push_back(image.at(g.nx() - 1, j));
  }
  std::nth_element(border.begin(), border.begin() + border.size() / 2, border.end());
  const double background = border[border.size() / 2];
  double w_sum = 0.0, r2_sum = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double w = std::max(0.0, image.at(i, j) - background);
      w_sum += w;
      r2_sum += w * norm2(g.point(i, j) - m.peak);
    }
  }
  m.second_moment_width = w_sum > 0.0 ? std::sqrt(r2_sum / w_sum) : 0.0;
  return m;
}

}  // namespace ghostturb
