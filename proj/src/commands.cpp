#include "ghostturb/commands.hpp"

#include <fftw3.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "ghostturb/analytic.hpp"
#include "ghostturb/image_io.hpp"
#include "ghostturb/simulation.hpp"

namespace ghostturb {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Below this many frames the moment-based standard error is not trusted.
constexpr std::size_t kMinimumFramesForComparison = 100;

template <typename... Args>
std::string printf_string(const char* format, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

std::string approx_length(double meters) {
  if (meters >= 0.01) return printf_string("%.0f cm", meters * 100.0);
  return printf_string("%.0f mm", meters * 1000.0);
}

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

fs::path prepare_output(const RunConfig& cfg) {
  fs::path dir(cfg.output);
  fs::create_directories(dir);
  return dir;
}

SimulationSetup make_setup(const RunConfig& cfg) {
  return SimulationSetup{cfg.optics(),          cfg.sources(), cfg.turbulence(), cfg.object_mask(),
                         cfg.reference_grid(), cfg.frames,    cfg.seed,         cfg.resolved_workers(),
                         cfg.screen_pitch};
}

CoherenceParams coherence_params(const RunConfig& cfg, double rho0) {
  CoherenceParams p{cfg.optics()};
  p.rho0 = rho0;
  p.subsource_radius = cfg.resolved_source_pitch() / 2.0;
  p.power_m = cfg.mean_power;
  p.power_m_prime = cfg.mean_power;
  return p;
}

json base_record(const char* command, const RunConfig& cfg) {
  json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["fftw_version"] = std::string(fftw_version);
  j["seed"] = cfg.seed;
  j["frames"] = cfg.frames;
  j["workers"] = cfg.resolved_workers();
  j["config"] = cfg.serialize();
  j["derived"] = {{"rho0_m", number_or_string(cfg.rho0())},
                  {"wave_number_rad_per_m", cfg.optics().wave_number()},
                  {"subsource_pitch_m", cfg.resolved_source_pitch()},
                  {"reference_pitch_m", cfg.resolved_reference_pitch()},
                  {"object_pitch_m", cfg.resolved_object_pitch()}};
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw ValidationError("io: failed writing " + path.string());
}

std::vector<std::string> psf_header() {
  return {"image", "detected", "peak_x_m", "peak_y_m", "peak_value", "fwhm_x_m", "fwhm_y_m", "fwhm_m",
          "fwhm_x_error_m", "fwhm_y_error_m", "second_moment_width_m"};
}

std::vector<std::string> psf_row(const std::string& name, const std::optional<PsfMetrics>& m) {
  if (!m) return {name, "false", "", "", "", "", "", "", "", "", ""};
  return {name,
          "true",
          format_number(m->peak.x),
          format_number(m->peak.y),
          format_number(m->peak_value),
          format_number(m->fwhm_x),
          format_number(m->fwhm_y),
          format_number(m->fwhm()),
          format_number(m->fwhm_x_error),
          format_number(m->fwhm_y_error),
          format_number(m->second_moment_width)};
}

void export_map(const RealMap& map, const fs::path& dir, const std::string& stem) {
  write_pgm16(map, dir / (stem + ".pgm"));
  write_map_csv(map, dir / (stem + ".csv"));
}

std::optional<PsfMetrics> try_psf(const RealMap& image, const RealMap* stderr_map, std::optional<Vec2> peak) {
  try {
    return psf_metrics(image, stderr_map, peak);
  } catch (const NoDetectionError&) {
    return std::nullopt;
  }
}

struct CancellationRow {
  std::string name;
  std::size_t draws = 0;
  double corrected = 0.0;
  double turbulence_free = 0.0;
  double relative_difference = 0.0;
};

std::vector<CancellationRow> cancellation_demo(std::uint64_t seed) {
  std::vector<CancellationRow> rows;
  auto rng = make_stream(seed, 0, StreamPurpose::kTest);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  std::uniform_real_distribution<double> magnitude(0.1, 2.0);

  {
    CancellationRow r{"kappa_independent_random", 10000};
    double worst = 0.0;
    for (std::size_t n = 0; n < r.draws; ++n) {
      TwoPhotonPhases p{{magnitude(rng), phase(rng)}, {magnitude(rng), phase(rng)},
                        {magnitude(rng), phase(rng)}, {magnitude(rng), phase(rng)}};
      p.dphi1_kappa = p.dphi1_kappa_prime = phase(rng);
      p.dphi2_kappa = p.dphi2_kappa_prime = phase(rng);
      const double lhs = corrected_mds_lhs(p);
      const double free = turbulence_free_lhs(p);
      const double rel = std::abs(lhs - free) / std::max(free, 1e-300);
      if (rel >= worst) {
        worst = rel;
        r.corrected = lhs;
        r.turbulence_free = free;
      }
    }
    r.relative_difference = worst;
    rows.push_back(r);
  }
  for (bool dependent : {false, true}) {
    CancellationRow r{dependent ? "kappa_dependent_mean" : "kappa_independent_mean", 1000000};
    double sum = 0.0;
    for (std::size_t n = 0; n < r.draws; ++n) {
      TwoPhotonPhases p;
      p.dphi1_kappa = phase(rng);
      p.dphi2_kappa = phase(rng);
      p.dphi1_kappa_prime = dependent ? phase(rng) : p.dphi1_kappa;
      p.dphi2_kappa_prime = dependent ? phase(rng) : p.dphi2_kappa;
      sum += corrected_mds_lhs(p);
    }
    r.corrected = sum / static_cast<double>(r.draws);
    r.turbulence_free = 4.0;
    r.relative_difference = std::abs(r.corrected - 4.0) / 4.0;
    rows.push_back(r);
  }
  {
    TwoPhotonPhases p;
    p.dphi1_kappa_prime = kPi;
    CancellationRow r{"opposite_phase_single_draw", 1, corrected_mds_lhs(p), turbulence_free_lhs(p), 0.0};
    r.relative_difference = std::abs(r.corrected - r.turbulence_free) / r.turbulence_free;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_rho0(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto profile = cfg.turbulence_profile();
  const double k = wave_number(cfg.wavelength);
  const double integral = weighted_path_integral(profile);
  const double rho0 = cfg.rho0();
  const auto verdict = immunity_criterion(cfg.source_diameter, rho0);

  out << "wavelength = " << format_number(cfg.wavelength) << " m\n";
  out << "path length = " << format_number(profile.path_length()) << " m (" << profile.segments().size()
      << " segment(s))\n";
  out << "k = " << printf_string("%.6e", k) << " rad/m\n";
  out << "weighted integral = " << printf_string("%.6e", integral) << " m^(1/3)\n";
  if (cfg.rho0_override) out << "rho0 taken from override\n";
  out << "source diameter = " << format_number(cfg.source_diameter) << " m\n";
  if (std::isinf(rho0)) {
    out << "rho0 = inf; immune: " << (verdict.immune ? "true" : "false") << "\n";
  } else {
    out << "rho0 = " << printf_string("%.4f", rho0) << " m (≈ " << approx_length(rho0)
        << "); immune: " << (verdict.immune ? "true" : "false") << " (margin " << printf_string("%.2f", verdict.margin)
        << ")\n";
  }
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto setup = make_setup(cfg);
  const auto result = run_simulation(setup);
  const auto image = result.estimate.finalize();
  const auto dir = prepare_output(cfg);

  export_map(image.ghost, dir, "ghost");
  export_map(image.background, dir, "background");
  export_map(image.stderr_map, dir, "stderr");
  const auto metrics = try_psf(image.ghost, &image.stderr_map, std::nullopt);
  write_csv(dir / "psf_metrics.csv", psf_header(), {psf_row("ghost", metrics)});

  auto record = base_record("simulate", cfg);
  record["derived"]["subsources"] = setup.sources.size();
  record["derived"]["source_extent_m"] = setup.sources.diameter();
  if (result.screen_grid) {
    record["derived"]["screen_grid"] = {{"n", result.screen_grid->nx()}, {"pitch_m", result.screen_grid->pitch()}};
  }
  record["wall_seconds"] = result.wall_seconds;
  record["outputs"] = {"ghost.pgm", "background.pgm", "stderr.pgm", "ghost.csv", "background.csv", "stderr.csv",
                       "psf_metrics.csv"};
  write_json(dir / "run.json", record);

  out << "frames = " << image.frames << ", subsources = " << setup.sources.size()
      << ", rho0 = " << format_number(setup.turbulence.rho0) << " m, wall time = "
      << printf_string("%.1f", result.wall_seconds) << " s\n";
  if (metrics) {
    out << "ghost PSF fwhm = " << printf_string("%.4e", metrics->fwhm()) << " m (+/- "
        << printf_string("%.1e", metrics->fwhm_error()) << ")\n";
  } else {
    out << "ghost PSF: no significant peak\n";
  }
  out << "outputs written to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_analytic(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const double rho0 = cfg.rho0();
  const auto sources = cfg.sources();
  const auto params = coherence_params(cfg, rho0);
  const Vec2 object_point{cfg.mask_x, cfg.mask_y};
  const auto dir = prepare_output(cfg);

  const auto predicted = predicted_ghost_image(object_point, sources, cfg.reference_grid(), params);
  export_map(predicted, dir, "predicted_ghost");
  const auto metrics = try_psf(predicted, nullptr, std::nullopt);
  write_csv(dir / "psf_metrics.csv", psf_header(), {psf_row("predicted_ghost", metrics)});

  // Bracket factor for rho_b = rho_p versus subsource separation.
  const double span = std::isinf(rho0) ? cfg.source_diameter : 3.0 * rho0;
  const double unit = std::isinf(rho0) ? cfg.source_diameter : rho0;
  std::vector<std::vector<std::string>> curve;
  const int steps = 60;
  for (int n = 0; n <= steps; ++n) {
    const double s = std::isinf(rho0) ? span * n / steps : rho0 * (n / 20.0);
    const double b = bracket_factor(object_point, object_point, {s, 0.0}, {0.0, 0.0}, params.optics, rho0);
    curve.push_back({format_number(s), format_number(s / unit), format_number(b)});
  }
  write_csv(dir / "bracket_curve.csv", {"separation_m", "separation_over_rho0", "bracket"}, curve);

  std::vector<std::vector<std::string>> table;
  for (const auto& r : cancellation_demo(cfg.seed)) {
    table.push_back({r.name, std::to_string(r.draws), format_number(r.corrected), format_number(r.turbulence_free),
                     format_number(r.relative_difference)});
  }
  write_csv(dir / "mds_cancellation.csv", {"case", "draws", "corrected_lhs", "turbulence_free", "relative_difference"},
            table);

  auto record = base_record("analytic", cfg);
  record["derived"]["subsources"] = sources.size();
  record["outputs"] = {"predicted_ghost.pgm", "predicted_ghost.csv", "psf_metrics.csv", "bracket_curve.csv",
                       "mds_cancellation.csv"};
  write_json(dir / "run.json", record);

  out << "rho0 = " << format_number(rho0) << " m, subsources = " << sources.size() << "\n";
  if (metrics) {
    out << "predicted PSF fwhm = " << printf_string("%.4e", metrics->fwhm()) << " m\n";
  } else {
    out << "predicted PSF: washed out (no unique peak)\n";
  }
  for (const auto& row : table) out << row[0] << ": corrected = " << row[2] << ", turbulence-free = " << row[3] << "\n";
  out << "outputs written to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto dir = prepare_output(cfg);
  std::vector<std::vector<std::string>> rows;
  bool insufficient = cfg.frames < kMinimumFramesForComparison;
  bool failed = false;
  std::vector<std::pair<double, PsfMetrics>> sweep;

  if (insufficient) {
    out << "statistical insufficiency: " << cfg.frames << " frames (need >= " << kMinimumFramesForComparison
        << "); rerun with more frames\n";
    return kExitInsufficient;
  }

  for (double rho0_mm : cfg.compare_rho0_mm) {
    RunConfig run = cfg;
    run.rho0_override = std::isinf(rho0_mm) ? kInfinity : rho0_mm * 1e-3;
    run.mask = "point";
    const double rho0 = *run.rho0_override;
    const auto setup = make_setup(run);
    const auto result = run_simulation(setup);
    const auto image = result.estimate.finalize();
    const Vec2 object_point{run.mask_x, run.mask_y};
    const auto predicted =
        predicted_ghost_image(object_point, setup.sources, setup.reference_grid, coherence_params(run, rho0));

    const auto analytic_psf = try_psf(predicted, nullptr, object_point);
    const auto mc_psf = try_psf(image.ghost, &image.stderr_map, object_point);
    const bool vacuum = std::isinf(rho0);
    const double tolerance = vacuum ? cfg.compare_vacuum_tolerance : cfg.compare_tolerance;

    std::string status;
    double rel = kInfinity;
    if (!mc_psf || !analytic_psf) {
      status = mc_psf ? "analytic_washed_out" : "insufficient";
      if (!mc_psf) insufficient = true;
      if (mc_psf && !analytic_psf) failed = true;
    } else {
      rel = std::abs(mc_psf->fwhm() - analytic_psf->fwhm()) / analytic_psf->fwhm();
      if (mc_psf->fwhm_error() / mc_psf->fwhm() > tolerance) {
        status = "insufficient";
        insufficient = true;
      } else if (rel > tolerance) {
        status = "fail";
        failed = true;
      } else {
        status = "pass";
      }
      sweep.emplace_back(rho0, *mc_psf);
    }
    rows.push_back({format_number(rho0_mm), mc_psf ? format_number(mc_psf->fwhm()) : "",
                    mc_psf ? format_number(mc_psf->fwhm_error()) : "",
                    analytic_psf ? format_number(analytic_psf->fwhm()) : "", format_number(rel),
                    format_number(tolerance), status});
    out << printf_string("rho0 = %6s mm  fwhm_mc = %10.4e m  fwhm_analytic = %10.4e m  rel = %7.4f  tol = %.2f  %s\n",
                         format_number(rho0_mm).c_str(), mc_psf ? mc_psf->fwhm() : 0.0,
                         analytic_psf ? analytic_psf->fwhm() : 0.0, rel, tolerance, status.c_str());
  }
  write_csv(dir / "compare.csv",
            {"rho0_mm", "fwhm_mc_m", "fwhm_mc_error_m", "fwhm_analytic_m", "relative_error", "tolerance", "status"},
            rows);

  // FWHM must not decrease as rho0 shrinks, up to 3 combined standard errors.
  std::sort(sweep.begin(), sweep.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  bool monotone = true;
  for (std::size_t n = 1; n < sweep.size(); ++n) {
    const auto& wide = sweep[n].second;
    const auto& narrow = sweep[n - 1].second;
    if (wide.fwhm() < narrow.fwhm() - 3.0 * std::hypot(wide.fwhm_error(), narrow.fwhm_error())) monotone = false;
  }
  out << "fwhm monotone in rho0: " << (monotone ? "yes" : "no") << "\n";

  auto record = base_record("compare", cfg);
  record["monotone"] = monotone;
  record["outputs"] = {"compare.csv"};
  write_json(dir / "run.json", record);

  if (insufficient) {
    out << "statistical insufficiency: standard errors too large to decide; rerun with more frames\n";
    return kExitInsufficient;
  }
  return failed ? kExitToleranceFailure : kExitOk;
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lensless pseudothermal ghost imaging through turbulence", "ghost-turb"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<std::size_t> frames;
  std::optional<std::string> rho0_mm;
  std::optional<unsigned> workers;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file (key = value)");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", output, "output directory");
    sub->add_option("--frames", frames, "Monte Carlo frame count");
    sub->add_option("--rho0-mm", rho0_mm, "override rho0 in millimetres ('inf' for vacuum)");
    sub->add_option("--workers", workers, "worker threads (results do not depend on it)");
  };
  auto* rho0 = app.add_subcommand("rho0", "source-plane coherence length and regime verdict");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo ghost imaging run");
  auto* analytic = app.add_subcommand("analytic", "closed-form predictions and cancellation demo");
  auto* compare = app.add_subcommand("compare", "Monte Carlo vs closed-form PSF width sweep");
  for (auto* sub : {rho0, simulate, analytic, compare}) add_common(sub);

  std::vector<std::string> argv_storage = args;
  argv_storage.insert(argv_storage.begin(), "ghost-turb");
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    if (output) cfg.output = *output;
    if (frames) cfg.frames = *frames;
    if (workers) cfg.workers = *workers;
    if (rho0_mm) {
      try {
        cfg.rho0_override = std::stod(*rho0_mm) * 1e-3;
      } catch (const std::exception&) {
        throw ConfigError("config: --rho0-mm expects a number or 'inf', got '" + *rho0_mm + "'");
      }
    }
    if (rho0->parsed()) return cmd_rho0(cfg, out);
    if (simulate->parsed()) return cmd_simulate(cfg, out);
    if (analytic->parsed()) return cmd_analytic(cfg, out);
    return cmd_compare(cfg, out);
  } catch (const InsufficientDataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInsufficient;
  } catch (const NoDetectionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInsufficient;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: io: " << e.what() << "\n";
    return kExitConfigError;
  }
}

}  // namespace ghostturb
