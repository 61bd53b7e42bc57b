#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "ghostturb/turbulence.hpp"

using namespace ghostturb;

namespace {

constexpr double kLambda = 780e-9;
constexpr double kPath = 1.4;
constexpr double kCn2 = 1.5e-12;

// Frozen from tests/oracles/reference_values.py (mpmath, 40 digits).
constexpr double kUniformIntegral = 7.875e-13;
constexpr double kRho0 = 0.049729208884815229453;
constexpr double kRampIntegral = 2.1477272727272727273e-13;
constexpr double kRampStepIntegral = 2.1477290227279591527e-13;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double quadrature_integral(const CnSquaredProfile& p) {
  const double L = p.path_length();
  double total = 0.0;
  for (const auto& s : p.segments()) {
    auto f = [&](double z) { return s.cn2 * std::pow(1.0 - z / L, 5.0 / 3.0); };
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, s.z_start, s.z_end, 15, 1e-14);
  }
  return total;
}

CnSquaredProfile ramp_profile(int n) {
  std::vector<ProfileSegment> segs;
  for (int i = 0; i < n; ++i) {
    segs.push_back({kPath * i / n, i + 1 == n ? kPath : kPath * (i + 1) / n, kCn2 * (i + 0.5) / n});
  }
  return CnSquaredProfile(segs);
}

CnSquaredProfile random_profile(std::mt19937_64& rng, int n, double L) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> cuts{0.0};
  for (int i = 1; i < n; ++i) cuts.push_back(u(rng) * L);
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(L);
  std::vector<ProfileSegment> segs;
  for (int i = 0; i < n; ++i) segs.push_back({cuts[i], cuts[i + 1], 1e-13 * (1.0 + 30.0 * u(rng))});
  return CnSquaredProfile(segs);
}

}  // namespace

TEST_CASE("uniform profile integral and coherence length") {
  const auto p = CnSquaredProfile::uniform(kPath, kCn2);
  CHECK(rel(weighted_path_integral(p), kUniformIntegral) < 1e-13);
  CHECK(rel(coherence_length(p, kLambda), kRho0) < 1e-12);
  CHECK(coherence_length(p, kLambda) > 0.0494);
  CHECK(coherence_length(p, kLambda) < 0.0500);
}

TEST_CASE("zero turbulence gives zero integral and infinite rho0") {
  const auto p = CnSquaredProfile::uniform(kPath, 0.0);
  CHECK(weighted_path_integral(p) == 0.0);
  CHECK(std::isinf(coherence_length(p, kLambda)));
}

TEST_CASE("ramp profile from 1000 steps") {
  const auto p = ramp_profile(1000);
  CHECK(rel(weighted_path_integral(p), kRampStepIntegral) < 1e-10);
  CHECK(rel(weighted_path_integral(p), kRampIntegral) < 1e-6);
}

TEST_CASE("closed form agrees with adaptive quadrature") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const auto p = random_profile(rng, 1 + trial % 9, 0.5 + trial * 0.2);
    CHECK(rel(weighted_path_integral(p), quadrature_integral(p)) < 1e-9);
  }
}

TEST_CASE("rho0 scaling laws") {
  const auto p = CnSquaredProfile::uniform(kPath, kCn2);
  const auto doubled = CnSquaredProfile::uniform(kPath, 2.0 * kCn2);
  CHECK(rel(coherence_length(p, 2.0 * kLambda) / coherence_length(p, kLambda), 2.2973967099940700136) < 1e-12);
  CHECK(rel(coherence_length(doubled, kLambda) / coherence_length(p, kLambda), 0.65975395538644712969) < 1e-12);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto q = random_profile(rng, 5, 2.0);
    const double s = 0.3 + trial * 0.4;
    CHECK(rel(coherence_length(q, s * kLambda) / coherence_length(q, kLambda), std::pow(s, 1.2)) < 1e-12);
  }
}

TEST_CASE("strengthening any segment lowers rho0") {
  std::mt19937_64 rng(3);
  const auto base = random_profile(rng, 6, 1.4);
  const double r0 = coherence_length(base, kLambda);
  for (std::size_t i = 0; i < base.segments().size(); ++i) {
    auto segs = base.segments();
    segs[i].cn2 *= 1.5;
    CHECK(coherence_length(CnSquaredProfile(segs), kLambda) < r0);
  }
}

TEST_CASE("turbulence near the source is the worst case") {
  // equal integrated strength in the first and last tenth of the path
  const std::vector<ProfileSegment> near{{0.0, 0.14, 1e-11}, {0.14, kPath, 0.0}};
  const std::vector<ProfileSegment> far{{0.0, 1.26, 0.0}, {1.26, kPath, 1e-11}};
  CHECK(coherence_length(CnSquaredProfile(near), kLambda) < coherence_length(CnSquaredProfile(far), kLambda));
}

TEST_CASE("profile validation names the offending segment") {
  auto message = [](std::vector<ProfileSegment> s) {
    try {
      CnSquaredProfile p(std::move(s));
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message({{0.0, 0.5, 1e-13}, {0.6, 1.0, 1e-13}}).find("gap") != std::string::npos);
  CHECK(message({{0.0, 0.5, 1e-13}, {0.4, 1.0, 1e-13}}).find("overlap") != std::string::npos);
  CHECK(message({{0.0, 0.5, 1e-13}, {0.5, 1.0, -1e-13}}).find("segment 1") != std::string::npos);
  CHECK(message({{0.1, 1.0, 1e-13}}).find("z = 0") != std::string::npos);
  CHECK_THROWS_AS(coherence_length(CnSquaredProfile::uniform(1.0, 1e-13), 0.0), ValidationError);
}

TEST_CASE("profile text parsing") {
  std::istringstream uniform("# lab path\nuniform 1.4 1.5e-12\n");
  CHECK(rel(weighted_path_integral(CnSquaredProfile::parse(uniform)), kUniformIntegral) < 1e-13);

  std::istringstream steps("0 0.7 2e-12  # near half\n0.7 1.4 1e-12\n");
  const auto p = CnSquaredProfile::parse(steps);
  REQUIRE(p.segments().size() == 2);
  CHECK(p.path_length() == doctest::Approx(1.4));

  std::istringstream bad("0 0.7\n");
  CHECK_THROWS_AS(CnSquaredProfile::parse(bad), ValidationError);
}

TEST_CASE("turbulence model invariants") {
  CHECK(TurbulenceModel{}.vacuum());
  CHECK_THROWS_AS((TurbulenceModel{-1.0, 0.0, true}.validate()), ValidationError);
  CHECK_THROWS_AS((TurbulenceModel{0.01, 1.5, true}.validate()), ValidationError);
  CHECK_NOTHROW((TurbulenceModel{0.01, 1.0, true}.validate()));
}

TEST_CASE("vacuum screen is identically zero") {
  const Grid2D g(16, 16, 1e-3);
  const auto s = generate_phase_screen(g, TurbulenceModel{}, 0.011, 5);
  for (double v : s.phase()) CHECK(v == 0.0);
  const auto est = structure_function_estimate({s, s}, {2e-3, 0.0});
  CHECK(est.value == 0.0);
  CHECK(est.standard_error == 0.0);
}

TEST_CASE("screens are reproducible from their seed") {
  const Grid2D g(24, 24, 2e-3);
  const TurbulenceModel m{0.02, 0.0, true};
  const auto a = generate_phase_screen(g, m, 0.011, 42);
  const auto b = generate_phase_screen(g, m, 0.011, 42);
  const auto c = generate_phase_screen(g, m, 0.011, 43);
  CHECK(a.phase() == b.phase());
  CHECK(a.phase() != c.phase());
}

TEST_CASE("coarse screen pitch is a configuration error") {
  const Grid2D g(16, 16, 5e-3);
  try {
    generate_phase_screen(g, TurbulenceModel{0.02, 0.0, true}, 0.011, 1);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("required pitch") != std::string::npos);
  }
}

TEST_CASE("screen structure function follows the square law") {
  // Per-path target D(r) = r^2 / rho0^2 (see README: two independent
  // paths combine to exp(-|dr|^2 / rho0^2)).
  const double rho0 = 0.02;
  const Grid2D g(32, 32, rho0 / 8.0);
  PhaseScreenGenerator gen(g, rho0, 0.011);
  std::vector<PhaseScreen> screens;
  for (std::uint64_t n = 0; n < 1000; ++n) {
    auto [a, b] = gen.generate_pair(n);
    screens.push_back(std::move(a));
    screens.push_back(std::move(b));
  }
  const double stat = 0.05, model = 0.03;

  const auto quarter = structure_function_estimate(screens, {rho0 / 4.0, 0.0});
  CHECK(quarter.value == doctest::Approx(0.0625).epsilon(stat + model));
  const auto half = structure_function_estimate(screens, {0.0, rho0 / 2.0});
  CHECK(half.value == doctest::Approx(0.25).epsilon(stat + model));
  // against the saturating Gaussian-covariance form itself
  const auto& st = gen.statistics();
  const double r = rho0 / 2.0;
  const double exact = 2.0 * st.variance * (1.0 - std::exp(-r * r / (st.ell * st.ell)));
  CHECK(std::abs(half.value - exact) < 3.0 * half.standard_error);

  const auto zero = structure_function_estimate(screens, {0.0, 0.0});
  CHECK(zero.value == 0.0);

  double mean = 0.0;
  for (const auto& s : screens) mean += s.at(16, 16);
  mean /= static_cast<double>(screens.size());
  const double sigma = std::sqrt(gen.statistics().variance);
  CHECK(std::abs(mean) < 4.0 * sigma / std::sqrt(static_cast<double>(screens.size())));
}

TEST_CASE("structure function estimator preconditions") {
  const Grid2D g(8, 8, 1e-3);
  const auto s = generate_phase_screen(g, TurbulenceModel{0.02, 0.0, true}, 0.011, 1);
  CHECK_THROWS_AS(structure_function_estimate({s}, {1e-3, 0.0}), InsufficientDataError);
  try {
    structure_function_estimate({s, s}, {1.5e-3, 0.0});
    FAIL("expected off-grid error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("nearest representable") != std::string::npos);
  }
}
