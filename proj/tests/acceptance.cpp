// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ghostturb/analytic.hpp"
#include "ghostturb/correlator.hpp"
#include "ghostturb/simulation.hpp"
#include "ghostturb/source.hpp"
#include "ghostturb/turbulence.hpp"

using namespace ghostturb;

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kLambda = 780e-9;
constexpr double kPath = 1.4;
constexpr double kDiameter = 0.011;
constexpr double kCn2 = 1.5e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

double lab_rho0() { return coherence_length(CnSquaredProfile::uniform(kPath, kCn2), kLambda); }

// ---------------------------------------------------------------------------

Outcome coherence_length_reproduction() {
  const auto profile = CnSquaredProfile::uniform(kPath, kCn2);
  // best of several single calls, to keep scheduler noise out of the timing
  double best = 1e9, rho0 = 0.0;
  for (int n = 0; n < 50; ++n) {
    const auto t0 = Clock::now();
    rho0 = coherence_length(profile, kLambda);
    best = std::min(best, seconds_since(t0));
  }
  const bool ok = rho0 >= 0.0494 && rho0 <= 0.0500 && best < 1e-3;
  return {ok, fmt("rho0 = %.6f m, call time %.2e s", rho0, best)};
}

Outcome regime_verdict() {
  const auto v = immunity_criterion(kDiameter, lab_rho0());
  return {v.immune, std::string("immune = ") + (v.immune ? "true" : "false") + fmt(", margin rho0/D = %.3f", v.margin)};
}

// Brute-force two-photon amplitude average. Each path gets its own square-law
// screen, sampled at the two subsources as a jointly Gaussian pair whose
// difference has variance |dr|^2 / rho0^2 (per-path square law).
Outcome closed_form_vs_brute_force() {
  const auto t0 = Clock::now();
  const OpticalConfig optics(kLambda, kPath);
  std::mt19937_64 rng(make_stream(2718, 0, StreamPurpose::kTest));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  const std::size_t draws = 100000;
  const double rs = 3.4e-4;
  int failures = 0;
  double worst = 0.0;

  auto disc_point = [&](double radius) {
    const double r = radius * std::sqrt(u(rng)), t = 2.0 * kPi * u(rng);
    return Vec2{r * std::cos(t), r * std::sin(t)};
  };

  for (int geometry = 0; geometry < 20; ++geometry) {
    const Vec2 rm = disc_point(kDiameter / 2.0), rmp = disc_point(kDiameter / 2.0);
    const Vec2 rb = disc_point(1.5e-4), rp = disc_point(1.5e-4);
    CoherenceParams params{optics};
    params.rho0 = geometry == 0 ? kInfinity : 1e-3 * std::exp(std::log(2.0) + u(rng) * std::log(40.0));
    params.subsource_radius = rs;
    params.power_m = 0.5 + u(rng);
    params.power_m_prime = 0.5 + u(rng);
    const double predicted = glauber_pair_term(rb, rp, rm, rmp, params);

    const double sigma = std::isinf(params.rho0) ? 0.0 : norm(rm - rmp) / params.rho0;
    const double scale = std::pow(kPi * rs * rs, 4);
    double sum = 0.0, sum_sq = 0.0;
    std::vector<Complex> e;
    for (std::size_t n = 0; n < draws; ++n) {
      draw_amplitudes(rng, params.power_m, 1, e);
      const Complex em = e[0];
      draw_amplitudes(rng, params.power_m_prime, 1, e);
      const Complex emp = e[0];
      // screen values at rho_m' are referenced to rho_m, which only drops a
      // common (piston) phase per path
      const double phib_m = 0.0, phib_mp = sigma * n01(rng);
      const double phip_m = 0.0, phip_mp = sigma * n01(rng);
      const Complex hb_m = greens_function(rb, rm, optics, Complex(0.0, phib_m));
      const Complex hb_mp = greens_function(rb, rmp, optics, Complex(0.0, phib_mp));
      const Complex hp_m = greens_function(rp, rm, optics, Complex(0.0, phip_m));
      const Complex hp_mp = greens_function(rp, rmp, optics, Complex(0.0, phip_mp));
      const double v = scale * std::norm(em * hb_m * emp * hp_mp + emp * hb_mp * em * hp_m);
      sum += v;
      sum_sq += v * v;
    }
    const double N = static_cast<double>(draws);
    const double mean = sum / N;
    const double stderr_mean = std::sqrt(std::max(0.0, sum_sq / N - mean * mean) / N);
    const double z = std::abs(mean - predicted) / stderr_mean;
    worst = std::max(worst, z);
    if (!(z <= 3.0)) ++failures;
  }
  const double elapsed = seconds_since(t0);
  const bool ok = failures == 0 && elapsed < 120.0;
  return {ok, fmt("20 geometries x 1e5 draws, worst |dev| = %.2f stderr, %.0f outside 3 stderr, %.1f s", worst,
                  failures, elapsed)};
}

// Simulation runs share the laboratory geometry and are cached by rho0.
struct LabRun {
  PsfMetrics psf;
  GhostImage image;
  double seconds = 0.0;
};

SimulationSetup lab_setup(double rho0, double fraction) {
  const auto sources = make_source_grid(kDiameter, kDiameter / 16.0);
  const double ref_pitch = kLambda * kPath / (5.0 * kDiameter);
  SimulationSetup s{OpticalConfig(kLambda, kPath), sources, TurbulenceModel{rho0, fraction, true},
                    ObjectMask::point(Grid2D(64, 64, ref_pitch)), Grid2D(64, 64, ref_pitch)};
  s.frames = 10000;
  s.seed = 1;
  s.workers = 1;
  return s;
}

std::map<std::pair<double, double>, LabRun>& run_cache() {
  static std::map<std::pair<double, double>, LabRun> cache;
  return cache;
}

const LabRun& lab_run(double rho0, double fraction = 0.0) {
  auto& cache = run_cache();
  const auto key = std::make_pair(rho0, fraction);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const auto t0 = Clock::now();
  const auto result = run_simulation(lab_setup(rho0, fraction));
  auto image = result.estimate.finalize();
  const auto psf = psf_metrics(image.ghost, &image.stderr_map, Vec2{0.0, 0.0});
  return cache.emplace(key, LabRun{psf, std::move(image), seconds_since(t0)}).first->second;
}

Outcome simulated_immunity() {
  const auto& vac = lab_run(kInfinity);
  const auto& lab = lab_run(lab_rho0());
  const double rel = std::abs(lab.psf.fwhm() - vac.psf.fwhm()) / vac.psf.fwhm();
  const double elapsed = vac.seconds + lab.seconds;
  return {rel < 0.05 && elapsed < 600.0,
          fmt("fwhm vacuum %.4e m, rho0 = 49.7 mm %.4e m, difference %.2f%%, %.0f s", vac.psf.fwhm(), lab.psf.fwhm(),
              100.0 * rel, elapsed)};
}

Outcome simulated_resolution_loss() {
  const auto& vac = lab_run(kInfinity);
  double elapsed = 0.0;
  std::vector<std::pair<double, const LabRun*>> sweep;
  for (double mm : {2.0, 5.0, 10.0, 50.0}) {
    const auto& r = lab_run(mm * 1e-3);
    elapsed += r.seconds;
    sweep.emplace_back(mm, &r);
  }
  const double ratio = sweep.front().second->psf.fwhm() / vac.psf.fwhm();
  bool monotone = true;
  std::string widths;
  for (std::size_t n = 0; n < sweep.size(); ++n) {
    widths += fmt("%.0f mm: %.3e; ", sweep[n].first, sweep[n].second->psf.fwhm());
    if (n == 0) continue;
    const auto& narrow = sweep[n - 1].second->psf;  // smaller rho0
    const auto& wide = sweep[n].second->psf;
    const double tol = 3.0 * std::hypot(narrow.fwhm_error(), wide.fwhm_error());
    if (wide.fwhm() > narrow.fwhm() + tol) monotone = false;
  }
  return {ratio > 2.0 && monotone && elapsed < 2400.0,
          "ratio(2 mm / vacuum) = " + fmt("%.2f", ratio) + ", monotone = " + (monotone ? "yes" : "no") + "; " +
              widths + fmt("%.0f s", elapsed)};
}

Outcome mds_cancellation() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(make_stream(31, 0, StreamPurpose::kTest));
  std::uniform_real_distribution<double> ph(-kPi, kPi), mag(0.1, 2.0);
  double worst = 0.0;
  for (int n = 0; n < 10000; ++n) {
    TwoPhotonPhases p{{mag(rng), ph(rng)}, {mag(rng), ph(rng)}, {mag(rng), ph(rng)}, {mag(rng), ph(rng)}};
    p.dphi1_kappa = p.dphi1_kappa_prime = ph(rng);
    p.dphi2_kappa = p.dphi2_kappa_prime = ph(rng);
    const double free = turbulence_free_lhs(p);
    worst = std::max(worst, std::abs(corrected_mds_lhs(p) - free) / free);
  }
  double dependent = 0.0, independent = 0.0;
  const int draws = 1000000;
  for (int n = 0; n < draws; ++n) {
    TwoPhotonPhases p;
    p.dphi1_kappa = ph(rng);
    p.dphi2_kappa = ph(rng);
    p.dphi1_kappa_prime = ph(rng);
    p.dphi2_kappa_prime = ph(rng);
    dependent += corrected_mds_lhs(p);
    p.dphi1_kappa_prime = p.dphi1_kappa;
    p.dphi2_kappa_prime = p.dphi2_kappa;
    independent += corrected_mds_lhs(p);
  }
  dependent /= draws;
  independent /= draws;
  const double elapsed = seconds_since(t0);
  const bool ok = worst <= 1e-12 && std::abs(dependent - 2.0) <= 0.01 && std::abs(independent - 4.0) <= 1e-9 &&
                  elapsed < 60.0;
  return {ok, fmt("max relative deviation %.1e; mean kappa-dependent %.4f, kappa-independent %.4f; %.1f s", worst,
                  dependent, independent, elapsed)};
}

Outcome detector_plane_null() {
  const auto& vac = lab_run(kInfinity);
  const auto& det = lab_run(lab_rho0(), 1.0);
  const bool same = vac.image.ghost.values == det.image.ghost.values &&
                    vac.image.background.values == det.image.background.values &&
                    vac.image.stderr_map.values == det.image.stderr_map.values;
  return {same && det.seconds < 600.0,
          std::string(same ? "bitwise identical" : "images differ") + fmt(" to the vacuum run, %.0f s", det.seconds)};
}

Outcome property_suites() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(make_stream(5, 0, StreamPurpose::kTest));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::string> broken;

  // turbulence: quadrature agreement, lambda^(6/5), monotonicity
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 8;
    const double L = 0.2 + 3.0 * u(rng);
    std::vector<double> cuts{0.0, L};
    for (int i = 1; i < n; ++i) cuts.push_back(u(rng) * L);
    std::sort(cuts.begin(), cuts.end());
    std::vector<ProfileSegment> segs;
    for (int i = 0; i < n; ++i) segs.push_back({cuts[i], cuts[i + 1], 1e-12 * u(rng) + 1e-15});
    const CnSquaredProfile p(segs);
    double quad = 0.0;
    for (const auto& s : segs) {
      auto f = [&](double z) { return s.cn2 * std::pow(1.0 - z / L, 5.0 / 3.0); };
      quad += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, s.z_start, s.z_end, 15, 1e-14);
    }
    if (std::abs(weighted_path_integral(p) - quad) > 1e-9 * quad) broken.push_back("quadrature");
    const double scale = 0.25 + 3.0 * u(rng);
    const double r1 = coherence_length(p, kLambda), r2 = coherence_length(p, scale * kLambda);
    if (std::abs(r2 / r1 - std::pow(scale, 1.2)) > 1e-12 * std::pow(scale, 1.2)) broken.push_back("scaling");
    auto stronger = segs;
    stronger[trial % n].cn2 *= 1.0 + u(rng);
    if (!(coherence_length(CnSquaredProfile(stronger), kLambda) < r1)) broken.push_back("monotonicity");
  }

  // source: circular Gaussian moments
  {
    const double P = 2.0;
    const SubsourceSet s({{0.0, 0.0}, {1e-3, 0.0}}, P);
    const int N = 100000;
    double p0 = 0.0, cross_re = 0.0, cross_im = 0.0, mean_re = 0.0;
    for (int f = 0; f < N; ++f) {
      const auto e = sample_frame(s, 99, static_cast<std::uint64_t>(f)).amplitudes;
      p0 += std::norm(e[0]);
      const Complex c = e[0] * std::conj(e[1]);
      cross_re += c.real();
      cross_im += c.imag();
      mean_re += e[0].real();
    }
    if (std::abs(p0 / N - P) > 0.02 * P) broken.push_back("source power");
    if (std::abs(Complex(cross_re, cross_im) / double(N)) > 4.0 * std::sqrt(P * P / N)) broken.push_back("source cross");
    if (std::abs(mean_re / N) > 4.0 * std::sqrt(P / N)) broken.push_back("source mean");
  }

  // correlator: merge associativity
  {
    const Grid2D g(16, 16, 1e-5);
    std::exponential_distribution<double> ex(1.0);
    auto block = [&](int frames) {
      GhostImageEstimate est(g);
      std::vector<double> ref(g.size());
      for (int f = 0; f < frames; ++f) {
        const double b = 1e4 * ex(rng);
        for (auto& v : ref) v = 1e-3 * ex(rng) + 1e-7 * b;
        est.add(b, ref);
      }
      return est;
    };
    const auto a = block(64), b = block(64), c = block(17);
    auto ab_c = a;
    ab_c.merge(b);
    ab_c.merge(c);
    auto bc = b;
    bc.merge(c);
    auto a_bc = a;
    a_bc.merge(bc);
    auto close = [](const std::vector<double>& x, const std::vector<double>& y) {
      for (std::size_t n = 0; n < x.size(); ++n) {
        if (std::abs(x[n] - y[n]) > 1e-10 * std::max(std::abs(x[n]), std::abs(y[n]))) return false;
      }
      return true;
    };
    const auto x = ab_c.finalize(), y = a_bc.finalize();
    double peak = 0.0;
    for (double v : x.ghost.values) peak = std::max(peak, std::abs(v));
    bool ghost_close = true;
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (std::abs(x.ghost.values[n] - y.ghost.values[n]) > 1e-10 * peak) ghost_close = false;
    }
    if (!close(ab_c.sum_product(), a_bc.sum_product()) || !close(ab_c.sum_reference(), a_bc.sum_reference()) ||
        !ghost_close) {
      broken.push_back("merge associativity");
    }
  }

  // analytic: bracket bounds
  {
    const OpticalConfig optics(kLambda, kPath);
    for (int n = 0; n < 100000; ++n) {
      const Vec2 rb{2e-4 * (u(rng) - 0.5), 2e-4 * (u(rng) - 0.5)}, rp{2e-4 * (u(rng) - 0.5), 2e-4 * (u(rng) - 0.5)};
      const Vec2 rm{0.011 * (u(rng) - 0.5), 0.011 * (u(rng) - 0.5)}, rmp{0.011 * (u(rng) - 0.5), 0.011 * (u(rng) - 0.5)};
      const double b = bracket_factor(rb, rp, rm, rmp, optics, n % 7 == 0 ? kInfinity : 1e-4 + 0.1 * u(rng));
      if (!(b >= 0.0 && b <= 2.0)) {
        broken.push_back("bracket bounds");
        break;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  std::string detail = broken.empty() ? "all properties hold" : "broken: " + broken.front();
  return {broken.empty() && elapsed < 300.0, detail + fmt(", %.1f s", elapsed)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"coherence length reproduction", coherence_length_reproduction},
      {"regime verdict", regime_verdict},
      {"closed form vs brute force", closed_form_vs_brute_force},
      {"simulated immunity", simulated_immunity},
      {"simulated resolution loss", simulated_resolution_loss},
      {"two-photon cancellation identity", mds_cancellation},
      {"detector-plane screen null", detector_plane_null},
      {"property suites", property_suites},
  };
  int failed = 0;
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    Outcome out;
    try {
      out = criteria[n].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failed;
    std::printf("%s criterion %zu (%s): %s\n", out.pass ? "PASS" : "FAIL", n + 1, criteria[n].first,
                out.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
