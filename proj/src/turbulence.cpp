#include "ghostturb/turbulence.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <mutex>
#include <sstream>

namespace ghostturb {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string describe(std::size_t index, const ProfileSegment& s) {
  return "segment " + std::to_string(index) + " [" + fmt_double(s.z_start) + ", " +
         fmt_double(s.z_end) + "] cn2=" + fmt_double(s.cn2);
}

// The FFTW planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

int fft_friendly_size(int minimum) {
  for (int n = std::max(minimum, 1);; ++n) {
    int r = n;
    for (int f : {2, 3, 5}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return n;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Profile

CnSquaredProfile::CnSquaredProfile(std::vector<ProfileSegment> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) throw ValidationError("turbulence: profile has no segments");
  constexpr double kJoinTolerance = 1e-12;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!std::isfinite(s.z_start) || !std::isfinite(s.z_end) || !std::isfinite(s.cn2)) {
      throw ValidationError("turbulence: non-finite value in " + describe(i, s));
    }
    if (s.cn2 < 0.0) throw ValidationError("turbulence: negative cn2 in " + describe(i, s));
    if (!(s.z_end > s.z_start)) throw ValidationError("turbulence: empty or reversed " + describe(i, s));
    if (i == 0) {
      if (std::abs(s.z_start) > kJoinTolerance) {
        throw ValidationError("turbulence: profile must start at z = 0, " + describe(i, s));
      }
    } else {
      const double prev_end = segments_[i - 1].z_end;
      const double scale = std::max(1.0, std::abs(prev_end));
      if (s.z_start < prev_end - kJoinTolerance * scale) {
        throw ValidationError("turbulence: overlap at " + describe(i, s));
      }
      if (s.z_start > prev_end + kJoinTolerance * scale) {
        throw ValidationError("turbulence: gap before " + describe(i, s));
      }
    }
  }
}

CnSquaredProfile CnSquaredProfile::uniform(double path_length, double cn2) {
  if (!(path_length > 0.0)) {
    throw ValidationError("turbulence: path length must be positive, got " + fmt_double(path_length));
  }
  return CnSquaredProfile({{0.0, path_length, cn2}});
}

CnSquaredProfile CnSquaredProfile::parse(std::istream& in, const std::string& source_name) {
  std::vector<ProfileSegment> segments;
  std::string line;
  int line_no = 0;
  bool saw_uniform = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    auto where = [&] { return source_name + ":" + std::to_string(line_no); };
    if (saw_uniform) throw ValidationError("turbulence: " + where() + ": 'uniform' must be the only line");
    if (first == "uniform") {
      if (!segments.empty()) throw ValidationError("turbulence: " + where() + ": 'uniform' must be the only line");
      double length = 0.0, cn2 = 0.0;
      std::string extra;
      if (!(ls >> length >> cn2) || (ls >> extra)) {
        throw ValidationError("turbulence: " + where() + ": expected 'uniform L cn2'");
      }
      segments.push_back({0.0, length, cn2});
      saw_uniform = true;
      continue;
    }
    ProfileSegment s;
    std::string extra;
    std::istringstream full(line);
    if (!(full >> s.z_start >> s.z_end >> s.cn2) || (full >> extra)) {
      throw ValidationError("turbulence: " + where() + ": expected 'z_start z_end cn2'");
    }
    segments.push_back(s);
  }
  if (segments.empty()) throw ValidationError("turbulence: " + source_name + ": no profile segments");
  return CnSquaredProfile(std::move(segments));
}

CnSquaredProfile CnSquaredProfile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("turbulence: cannot open profile file " + path.string());
  return parse(in, path.string());
}

double weighted_path_integral(const CnSquaredProfile& profile) {
  const double length = profile.path_length();
  // Antiderivative of (1 - z/L)^{5/3} is -(3L/8)(1 - z/L)^{8/3}.
  auto tail = [length](double z) { return std::pow(std::max(0.0, 1.0 - z / length), 8.0 / 3.0); };
  double total = 0.0;
  for (const auto& s : profile.segments()) {
    if (s.cn2 == 0.0) continue;
    total += s.cn2 * (3.0 * length / 8.0) * (tail(s.z_start) - tail(s.z_end));
  }
  return total;
}

double wave_number(double wavelength) {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
    throw ValidationError("turbulence: wavelength must be positive, got " + fmt_double(wavelength));
  }
  return 2.0 * kPi / wavelength;
}

double coherence_length(const CnSquaredProfile& profile, double wavelength) {
  const double k = wave_number(wavelength);
  const double integral = weighted_path_integral(profile);
  if (integral == 0.0) return kInfinity;
  return std::pow(2.91 * k * k * integral, -3.0 / 5.0);
}

void TurbulenceModel::validate() const {
  if (!(rho0 > 0.0)) throw ValidationError("turbulence: rho0 must be positive or infinite, got " + fmt_double(rho0));
  if (!(screen_position_fraction >= 0.0 && screen_position_fraction <= 1.0)) {
    throw ValidationError("turbulence: screen position fraction must lie in [0, 1], got " +
                          fmt_double(screen_position_fraction));
  }
}

// ---------------------------------------------------------------------------
// Screens

double max_screen_pitch(double rho0) { return rho0 / 4.0; }

double square_law_structure_function(double separation, double rho0) {
  if (std::isinf(rho0)) return 0.0;
  return separation * separation / (rho0 * rho0);
}

ScreenStatistics screen_statistics(double rho0, double source_diameter, double pitch) {
  ScreenStatistics stats;
  stats.ell = std::max(4.0 * source_diameter, 8.0 * pitch);
  stats.variance = stats.ell * stats.ell / (2.0 * rho0 * rho0);
  return stats;
}

PhaseScreen::PhaseScreen(const Grid2D& grid, std::vector<double> phase, double rho0_target,
                         ScreenStatistics statistics, std::uint64_t seed)
    : grid_(grid), phase_(std::move(phase)), rho0_target_(rho0_target), statistics_(statistics), seed_(seed) {
  if (phase_.size() != grid_.size()) throw ValidationError("turbulence: screen size does not match its grid");
}

double PhaseScreen::sample(Vec2 point) const {
  const double fx = grid_.column_of(point.x);
  const double fy = grid_.row_of(point.y);
  const double slack = 1e-9;
  if (fx < -slack || fy < -slack || fx > grid_.nx() - 1 + slack || fy > grid_.ny() - 1 + slack) {
    throw ConfigError("turbulence: point (" + fmt_double(point.x) + ", " + fmt_double(point.y) +
                      ") m lies outside the phase screen");
  }
  const int i0 = std::clamp(static_cast<int>(std::floor(fx)), 0, std::max(0, grid_.nx() - 2));
  const int j0 = std::clamp(static_cast<int>(std::floor(fy)), 0, std::max(0, grid_.ny() - 2));
  const int i1 = std::min(i0 + 1, grid_.nx() - 1);
  const int j1 = std::min(j0 + 1, grid_.ny() - 1);
  const double tx = std::clamp(fx - i0, 0.0, 1.0);
  const double ty = std::clamp(fy - j0, 0.0, 1.0);
  const double a = at(i0, j0) * (1.0 - tx) + at(i1, j0) * tx;
  const double b = at(i0, j1) * (1.0 - tx) + at(i1, j1) * tx;
  return a * (1.0 - ty) + b * ty;
}

struct PhaseScreenGenerator::Impl {
  Grid2D grid;
  double rho0;
  ScreenStatistics stats;
  int mx = 0;
  int my = 0;
  std::vector<double> amplitude;  // sqrt(eigenvalue / (mx my))
  fftw_complex* buffer = nullptr;
  fftw_plan plan = nullptr;

  Impl(const Grid2D& g, double r0, double source_diameter) : grid(g), rho0(r0) {
    if (!(rho0 > 0.0) || std::isinf(rho0)) {
      throw ValidationError("turbulence: screen synthesis needs a finite positive rho0");
    }
    if (!(grid.pitch() < max_screen_pitch(rho0))) {
      throw ConfigError("turbulence: screen pitch " + fmt_double(grid.pitch()) +
                        " m does not resolve rho0 = " + fmt_double(rho0) + " m; required pitch < " +
                        fmt_double(max_screen_pitch(rho0)) + " m");
    }
    stats = screen_statistics(rho0, source_diameter, grid.pitch());
    const int margin = static_cast<int>(std::ceil(3.0 * stats.ell / grid.pitch()));
    mx = fft_friendly_size(grid.nx() + margin);
    my = fft_friendly_size(grid.ny() + margin);
    const std::size_t total = static_cast<std::size_t>(mx) * static_cast<std::size_t>(my);

    buffer = fftw_alloc_complex(total);
    {
      std::lock_guard lock(fftw_planner_mutex());
      plan = fftw_plan_dft_2d(my, mx, buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
    }

    // Periodised covariance on the embedding torus. Summing the wrapped images
    // (rather than taking the nearest image) keeps the periodic covariance
    // smooth, so its spectrum is the aliased Gaussian spectrum and stays
    // non-negative up to roundoff.
    const double p = grid.pitch();
    auto wrapped = [&](int m) {
      std::vector<double> g(static_cast<std::size_t>(m), 0.0);
      const double period = m * p;
      const int images = static_cast<int>(std::ceil(8.0 * stats.ell / period)) + 1;
      for (int i = 0; i < m; ++i) {
        for (int a = -images; a <= images; ++a) {
          const double d = i * p + a * period;
          g[static_cast<std::size_t>(i)] += std::exp(-(d * d) / (stats.ell * stats.ell));
        }
      }
      return g;
    };
    const auto gx = wrapped(mx);
    const auto gy = wrapped(my);
    for (int j = 0; j < my; ++j) {
      for (int i = 0; i < mx; ++i) {
        buffer[static_cast<std::size_t>(j) * mx + i][0] = stats.variance * gx[i] * gy[j];
        buffer[static_cast<std::size_t>(j) * mx + i][1] = 0.0;
      }
    }
    fftw_execute(plan);
    amplitude.resize(total);
    for (std::size_t n = 0; n < total; ++n) {
      amplitude[n] = std::sqrt(std::max(0.0, buffer[n][0]) / static_cast<double>(total));
    }
  }

  ~Impl() {
    std::lock_guard lock(fftw_planner_mutex());
    if (plan) fftw_destroy_plan(plan);
    if (buffer) fftw_free(buffer);
  }

  std::pair<PhaseScreen, PhaseScreen> draw(std::mt19937_64& rng, std::uint64_t seed_label) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t total = static_cast<std::size_t>(mx) * static_cast<std::size_t>(my);
    for (std::size_t n = 0; n < total; ++n) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      buffer[n][0] = amplitude[n] * re;
      buffer[n][1] = amplitude[n] * im;
    }
    fftw_execute(plan);
    std::vector<double> first(grid.size());
    std::vector<double> second(grid.size());
    for (int j = 0; j < grid.ny(); ++j) {
      for (int i = 0; i < grid.nx(); ++i) {
        const auto& v = buffer[static_cast<std::size_t>(j) * mx + i];
        first[grid.index(i, j)] = v[0];
        second[grid.index(i, j)] = v[1];
      }
    }
    return {PhaseScreen(grid, std::move(first), rho0, stats, seed_label),
            PhaseScreen(grid, std::move(second), rho0, stats, seed_label)};
  }
};

PhaseScreenGenerator::PhaseScreenGenerator(const Grid2D& grid, double rho0, double source_diameter)
    : impl_(std::make_unique<Impl>(grid, rho0, source_diameter)) {}
PhaseScreenGenerator::~PhaseScreenGenerator() = default;
PhaseScreenGenerator::PhaseScreenGenerator(PhaseScreenGenerator&&) noexcept = default;
PhaseScreenGenerator& PhaseScreenGenerator::operator=(PhaseScreenGenerator&&) noexcept = default;

const Grid2D& PhaseScreenGenerator::grid() const { return impl_->grid; }
const ScreenStatistics& PhaseScreenGenerator::statistics() const { return impl_->stats; }
int PhaseScreenGenerator::embedding_nx() const { return impl_->mx; }
int PhaseScreenGenerator::embedding_ny() const { return impl_->my; }

std::pair<PhaseScreen, PhaseScreen> PhaseScreenGenerator::generate_pair(std::uint64_t seed) {
  auto rng = make_stream(seed, 0, StreamPurpose::kPhaseScreens);
  return impl_->draw(rng, seed);
}

std::pair<PhaseScreen, PhaseScreen> PhaseScreenGenerator::generate_pair(std::mt19937_64& rng,
                                                                        std::uint64_t seed_label) {
  return impl_->draw(rng, seed_label);
}

PhaseScreen generate_phase_screen(const Grid2D& grid, const TurbulenceModel& model,
                                  double source_diameter, std::uint64_t seed) {
  model.validate();
  if (model.vacuum()) {
    return PhaseScreen(grid, std::vector<double>(grid.size(), 0.0), kInfinity, {}, seed);
  }
  PhaseScreenGenerator generator(grid, model.rho0, source_diameter);
  return generator.generate_pair(seed).first;
}

StructureFunctionEstimate structure_function_estimate(const std::vector<PhaseScreen>& screens,
                                                      Vec2 separation) {
  if (screens.size() < 2) throw InsufficientDataError("turbulence: structure function needs >= 2 screens");
  const Grid2D& grid = screens.front().grid();
  for (const auto& s : screens) {
    if (!(s.grid() == grid)) throw ValidationError("turbulence: screens must share one grid");
  }
  const double sx = separation.x / grid.pitch();
  const double sy = separation.y / grid.pitch();
  const double rx = std::round(sx);
  const double ry = std::round(sy);
  if (std::abs(sx - rx) > 1e-6 || std::abs(sy - ry) > 1e-6) {
    const double fx = std::floor(sx), fy = std::floor(sy);
    throw ValidationError("turbulence: separation (" + fmt_double(separation.x) + ", " +
                          fmt_double(separation.y) + ") m is off-grid; nearest representable offsets are (" +
                          fmt_double(fx * grid.pitch()) + " or " + fmt_double((fx + 1) * grid.pitch()) + ", " +
                          fmt_double(fy * grid.pitch()) + " or " + fmt_double((fy + 1) * grid.pitch()) + ") m");
  }
  const int dx = static_cast<int>(rx);
  const int dy = static_cast<int>(ry);
  if (std::abs(dx) >= grid.nx() || std::abs(dy) >= grid.ny()) {
    throw ValidationError("turbulence: separation exceeds the screen extent");
  }

  StructureFunctionEstimate out;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& s : screens) {
    double acc = 0.0;
    std::size_t count = 0;
    for (int j = std::max(0, -dy); j < grid.ny() - std::max(0, dy); ++j) {
      for (int i = std::max(0, -dx); i < grid.nx() - std::max(0, dx); ++i) {
        const double d = s.at(i + dx, j + dy) - s.at(i, j);
        acc += d * d;
        ++count;
      }
    }
    const double mean = acc / static_cast<double>(count);
    sum += mean;
    sum_sq += mean * mean;
    out.pairs += count;
  }
  const double n = static_cast<double>(screens.size());
  out.value = sum / n;
  const double var = std::max(0.0, (sum_sq - n * out.value * out.value) / (n - 1.0));
  out.standard_error = std::sqrt(var / n);
  return out;
}

}  // namespace ghostturb
