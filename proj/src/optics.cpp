#include "ghostturb/optics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ghostturb {

namespace {

Complex unit_phasor(double phase) { return {std::cos(phase), std::sin(phase)}; }

std::vector<Vec2> grid_points(const Grid2D& g) {
  std::vector<Vec2> pts;
  pts.reserve(g.size());
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) pts.push_back(g.point(i, j));
  }
  return pts;
}

void require_coverage(const Grid2D& screen, const std::vector<Vec2>& pts, const char* plane) {
  const Footprint fp = beam_footprint(pts, pts, 0.0);
  if (!screen.contains(fp.lower) || !screen.contains(fp.upper)) {
    throw ConfigError(std::string("optics: phase screen [") + std::to_string(screen.x_min()) + ", " +
                      std::to_string(screen.x_max()) + "] x [" + std::to_string(screen.y_min()) + ", " +
                      std::to_string(screen.y_max()) + "] m does not cover the " + plane + " footprint; required [" +
                      std::to_string(fp.lower.x) + ", " + std::to_string(fp.upper.x) + "] x [" +
                      std::to_string(fp.lower.y) + ", " + std::to_string(fp.upper.y) + "] m");
  }
}

void check_leg(double wavelength, double distance) {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) throw ValidationError("optics: wavelength must be positive");
  if (!(distance > 0.0) || !std::isfinite(distance)) throw ValidationError("optics: propagation distance must be positive");
}

}  // namespace

OpticalConfig::OpticalConfig(double wavelength, double path_length)
    : wavelength_(wavelength), path_length_(path_length), wave_number_(0.0) {
  check_leg(wavelength, path_length);
  wave_number_ = 2.0 * kPi / wavelength;
}

ComplexField::ComplexField(const Grid2D& grid, std::vector<Complex> amplitudes)
    : grid_(grid), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != grid_.size()) throw ValidationError("optics: field size does not match its grid");
  for (const auto& a : amplitudes_) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw ValidationError("optics: non-finite field value");
  }
}

RealMap ComplexField::intensity() const {
  RealMap out(grid_);
  for (std::size_t n = 0; n < amplitudes_.size(); ++n) out.values[n] = std::norm(amplitudes_[n]);
  return out;
}

Complex greens_function(Vec2 dst, Vec2 src, const OpticalConfig& cfg, Complex psi) {
  const double k = cfg.wave_number();
  const double length = cfg.path_length();
  const double phase = k * length + k * norm2(dst - src) / (2.0 * length);
  const Complex denom(0.0, cfg.wavelength() * length);
  return unit_phasor(phase) / denom * std::exp(psi);
}

// ---------------------------------------------------------------------------

FresnelPropagator::FresnelPropagator(std::vector<Vec2> sources, const Grid2D& destination, double wavelength,
                                     double distance)
    : source_count_(sources.size()), destination_count_(destination.size()), separable_(true),
      nx_(destination.nx()), ny_(destination.ny()) {
  check_leg(wavelength, distance);
  const double k = 2.0 * kPi / wavelength;
  const double a = k / (2.0 * distance);
  inverse_lambda_z_sq_ = 1.0 / (wavelength * distance * wavelength * distance);
  const Complex denom(0.0, wavelength * distance);
  const Complex axial = unit_phasor(k * distance) / denom;

  const std::size_t m_count = sources.size();
  source_factor_.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) source_factor_[m] = unit_phasor(a * norm2(sources[m]));

  pixel_factor_.resize(destination.size());
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      pixel_factor_[destination.index(i, j)] = axial * unit_phasor(a * norm2(destination.point(i, j)));
    }
  }

  const double b = k / distance;
  xre_.resize(static_cast<std::size_t>(nx_) * m_count);
  xim_.resize(xre_.size());
  for (int i = 0; i < nx_; ++i) {
    const double xi = destination.x(i);
    for (std::size_t m = 0; m < m_count; ++m) {
      const double ph = -b * xi * sources[m].x;
      xre_[i * m_count + m] = std::cos(ph);
      xim_[i * m_count + m] = std::sin(ph);
    }
  }
  yre_.resize(static_cast<std::size_t>(ny_) * m_count);
  yim_.resize(yre_.size());
  for (int j = 0; j < ny_; ++j) {
    const double yj = destination.y(j);
    for (std::size_t m = 0; m < m_count; ++m) {
      const double ph = -b * yj * sources[m].y;
      yre_[j * m_count + m] = std::cos(ph);
      yim_[j * m_count + m] = std::sin(ph);
    }
  }
}

FresnelPropagator::FresnelPropagator(std::vector<Vec2> sources, std::vector<Vec2> destination, double wavelength,
                                     double distance)
    : source_count_(sources.size()), destination_count_(destination.size()), separable_(false) {
  check_leg(wavelength, distance);
  const double k = 2.0 * kPi / wavelength;
  const double a = k / (2.0 * distance);
  inverse_lambda_z_sq_ = 1.0 / (wavelength * distance * wavelength * distance);
  const Complex denom(0.0, wavelength * distance);
  const Complex axial = unit_phasor(k * distance) / denom;
  source_factor_.assign(sources.size(), Complex(1.0, 0.0));
  pixel_factor_.assign(destination.size(), axial);
  kre_.resize(destination.size() * sources.size());
  kim_.resize(kre_.size());
  for (std::size_t p = 0; p < destination.size(); ++p) {
    for (std::size_t m = 0; m < sources.size(); ++m) {
      const double ph = a * norm2(destination[p] - sources[m]);
      kre_[p * sources.size() + m] = std::cos(ph);
      kim_[p * sources.size() + m] = std::sin(ph);
    }
  }
}

void FresnelPropagator::sum(std::span<const Complex> weights, std::vector<Complex>& out) const {
  if (weights.size() != source_count_) {
    throw ValidationError("optics: " + std::to_string(weights.size()) + " amplitudes for " +
                          std::to_string(source_count_) + " subsources");
  }
  const std::size_t m_count = source_count_;
  out.resize(destination_count_);
  std::vector<double> wre(m_count), wim(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const Complex w = weights[m] * source_factor_[m];
    wre[m] = w.real();
    wim[m] = w.imag();
  }

  if (!separable_) {
    for (std::size_t p = 0; p < destination_count_; ++p) {
      const double* kr = &kre_[p * m_count];
      const double* ki = &kim_[p * m_count];
      double sr = 0.0, si = 0.0;
      for (std::size_t m = 0; m < m_count; ++m) {
        sr += wre[m] * kr[m] - wim[m] * ki[m];
        si += wre[m] * ki[m] + wim[m] * kr[m];
      }
      out[p] = Complex(sr, si);
    }
    return;
  }

  std::vector<double> bre(m_count), bim(m_count);
  for (int i = 0; i < nx_; ++i) {
    const double* xr = &xre_[i * m_count];
    const double* xi = &xim_[i * m_count];
    for (std::size_t m = 0; m < m_count; ++m) {
      bre[m] = wre[m] * xr[m] - wim[m] * xi[m];
      bim[m] = wre[m] * xi[m] + wim[m] * xr[m];
    }
    for (int j = 0; j < ny_; ++j) {
      const double* yr = &yre_[j * m_count];
      const double* yi = &yim_[j * m_count];
      double sr = 0.0, si = 0.0;
      for (std::size_t m = 0; m < m_count; ++m) {
        sr += bre[m] * yr[m] - bim[m] * yi[m];
        si += bre[m] * yi[m] + bim[m] * yr[m];
      }
      out[static_cast<std::size_t>(j) * nx_ + i] = Complex(sr, si);
    }
  }
}

void FresnelPropagator::field(std::span<const Complex> weights, std::vector<Complex>& out) const {
  sum(weights, out);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] *= pixel_factor_[p];
}

void FresnelPropagator::intensity(std::span<const Complex> weights, std::vector<double>& out) const {
  std::vector<Complex> partial;
  sum(weights, partial);
  out.resize(partial.size());
  for (std::size_t p = 0; p < partial.size(); ++p) out[p] = std::norm(partial[p]) * inverse_lambda_z_sq_;
}

// ---------------------------------------------------------------------------

Footprint beam_footprint(const std::vector<Vec2>& sources, const std::vector<Vec2>& destination, double fraction) {
  auto bounds = [](const std::vector<Vec2>& pts) {
    Footprint b{{kInfinity, kInfinity}, {-kInfinity, -kInfinity}};
    for (const auto& p : pts) {
      b.lower = {std::min(b.lower.x, p.x), std::min(b.lower.y, p.y)};
      b.upper = {std::max(b.upper.x, p.x), std::max(b.upper.y, p.y)};
    }
    return b;
  };
  const Footprint s = bounds(sources);
  const Footprint d = bounds(destination);
  const double f = fraction;
  return {(1.0 - f) * s.lower + f * d.lower, (1.0 - f) * s.upper + f * d.upper};
}

PathPropagator::PathPropagator(const SubsourceSet& sources, Destination destination, const OpticalConfig& cfg,
                               const TurbulenceModel& model, std::optional<Grid2D> screen_grid)
    : source_positions_(sources.positions()), model_(model), screen_grid_(std::move(screen_grid)) {
  model_.validate();
  destination_points_ = destination.grid ? grid_points(*destination.grid) : destination.points;
  if (destination_points_.empty()) throw ValidationError("optics: empty destination");

  const double f = model_.screen_position_fraction;
  const bool intermediate = !model_.vacuum() && f > 0.0 && f < 1.0;
  if (!intermediate) {
    if (destination.grid) {
      direct_.emplace(source_positions_, *destination.grid, cfg.wavelength(), cfg.path_length());
    } else {
      direct_.emplace(source_positions_, destination_points_, cfg.wavelength(), cfg.path_length());
    }
  } else {
    if (!screen_grid_) throw ConfigError("optics: an intermediate-plane screen needs a screen-plane grid");
    const Footprint fp = beam_footprint(source_positions_, destination_points_, f);
    if (!screen_grid_->contains(fp.lower) || !screen_grid_->contains(fp.upper)) {
      throw ConfigError("optics: screen-plane grid [" + std::to_string(screen_grid_->x_min()) + ", " +
                        std::to_string(screen_grid_->x_max()) + "] x [" + std::to_string(screen_grid_->y_min()) +
                        ", " + std::to_string(screen_grid_->y_max()) + "] m is smaller than the beam footprint [" +
                        std::to_string(fp.lower.x) + ", " + std::to_string(fp.upper.x) + "] x [" +
                        std::to_string(fp.lower.y) + ", " + std::to_string(fp.upper.y) + "] m");
    }
    const double length = cfg.path_length();
    to_screen_.emplace(source_positions_, *screen_grid_, cfg.wavelength(), f * length);
    if (destination.grid) {
      from_screen_.emplace(grid_points(*screen_grid_), *destination.grid, cfg.wavelength(), (1.0 - f) * length);
    } else {
      from_screen_.emplace(grid_points(*screen_grid_), destination_points_, cfg.wavelength(), (1.0 - f) * length);
    }
  }
}

bool PathPropagator::screen_active(const PhaseScreen* screen) const {
  return screen != nullptr && !model_.vacuum();
}

void PathPropagator::screened_weights(std::span<const Complex> amplitudes, const PhaseScreen* screen) const {
  weights_.assign(amplitudes.begin(), amplitudes.end());
  if (screen_active(screen) && model_.screen_position_fraction == 0.0) {
    require_coverage(screen->grid(), source_positions_, "source-plane");
    if (weights_.size() != source_positions_.size()) {
      throw ValidationError("optics: " + std::to_string(weights_.size()) + " amplitudes for " +
                            std::to_string(source_positions_.size()) + " subsources");
    }
    for (std::size_t m = 0; m < weights_.size(); ++m) {
      weights_[m] *= unit_phasor(screen->sample(source_positions_[m]));
    }
  }
}

void PathPropagator::two_leg(std::span<const Complex> amplitudes, const PhaseScreen& screen,
                             std::vector<Complex>& out) const {
  if (!(screen.grid() == *screen_grid_)) throw ValidationError("optics: screen does not live on the screen-plane grid");
  to_screen_->field(amplitudes, screen_field_);
  const double area = screen_grid_->pitch() * screen_grid_->pitch();
  for (std::size_t s = 0; s < screen_field_.size(); ++s) {
    screen_field_[s] *= unit_phasor(screen.phase()[s]) * area;
  }
  from_screen_->field(screen_field_, out);
}

void PathPropagator::field(std::span<const Complex> amplitudes, const PhaseScreen* screen,
                           std::vector<Complex>& out) const {
  const double f = model_.screen_position_fraction;
  if (screen_active(screen) && f > 0.0 && f < 1.0) {
    two_leg(amplitudes, *screen, out);
    return;
  }
  if (!direct_) throw ConfigError("optics: intermediate-plane path requires a phase screen");
  screened_weights(amplitudes, screen);
  direct_->field(weights_, out);
  if (screen_active(screen) && f == 1.0) {
    require_coverage(screen->grid(), destination_points_, "detector-plane");
    for (std::size_t p = 0; p < out.size(); ++p) out[p] *= unit_phasor(screen->sample(destination_points_[p]));
  }
}

void PathPropagator::intensity(std::span<const Complex> amplitudes, const PhaseScreen* screen,
                               std::vector<double>& out) const {
  const double f = model_.screen_position_fraction;
  if (screen_active(screen) && f > 0.0 && f < 1.0) {
    std::vector<Complex> u;
    two_leg(amplitudes, *screen, u);
    out.resize(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) out[p] = std::norm(u[p]);
    return;
  }
  if (!direct_) throw ConfigError("optics: intermediate-plane path requires a phase screen");
  if (screen_active(screen) && f == 1.0) {
    // Coverage is still a precondition even though the factor drops out.
    require_coverage(screen->grid(), destination_points_, "detector-plane");
  }
  screened_weights(amplitudes, screen);
  direct_->intensity(weights_, out);
}

ComplexField propagate_subsources(std::span<const Complex> amplitudes, const SubsourceSet& sources,
                                  const PhaseScreen* screen, const TurbulenceModel& model, const Grid2D& dst,
                                  const OpticalConfig& cfg) {
  if (amplitudes.size() != sources.size()) {
    throw ValidationError("optics: " + std::to_string(amplitudes.size()) + " amplitudes for " +
                          std::to_string(sources.size()) + " subsources");
  }
  std::optional<Grid2D> screen_grid;
  if (screen != nullptr) screen_grid = screen->grid();
  PathPropagator path(sources, Destination::on_grid(dst), cfg, model, screen_grid);
  std::vector<Complex> out;
  path.field(amplitudes, screen, out);
  return ComplexField(dst, std::move(out));
}

}  // namespace ghostturb
