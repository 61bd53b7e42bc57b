#include "ghostturb/analytic.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ghostturb {

namespace {

double turbulence_factor(double separation_sq, double rho0) {
  if (std::isinf(rho0)) return 1.0;
  return std::exp(-separation_sq / (rho0 * rho0));
}

}  // namespace

void CoherenceParams::validate() const {
  if (!(rho0 > 0.0)) throw ValidationError("analytic: rho0 must be positive or infinite");
  if (!(subsource_radius > 0.0) || !std::isfinite(subsource_radius)) {
    throw ValidationError("analytic: subsource radius must be positive");
  }
  if (!(power_m > 0.0) || !(power_m_prime > 0.0)) throw ValidationError("analytic: subsource powers must be positive");
}

double bracket_factor(Vec2 rho_b, Vec2 rho_p, Vec2 rho_m, Vec2 rho_m_prime, const OpticalConfig& optics, double rho0) {
  const Vec2 d = rho_m - rho_m_prime;
  const double phase = optics.wave_number() * dot(rho_b - rho_p, d) / optics.path_length();
  return 1.0 + std::cos(phase) * turbulence_factor(norm2(d), rho0);
}

double glauber_pair_term(Vec2 rho_b, Vec2 rho_p, Vec2 rho_m, Vec2 rho_m_prime, const CoherenceParams& params) {
  params.validate();
  const double lambda_l = params.optics.wavelength() * params.optics.path_length();
  const double ratio = kPi * params.subsource_radius * params.subsource_radius / lambda_l;
  const double prefactor = 2.0 * std::pow(ratio, 4) * params.power_m * params.power_m_prime;
  return prefactor * bracket_factor(rho_b, rho_p, rho_m, rho_m_prime, params.optics, params.rho0);
}

RealMap predicted_ghost_image(Vec2 object_point, const SubsourceSet& sources, const Grid2D& dst,
                              const CoherenceParams& params) {
  if (sources.size() < 2) throw ValidationError("analytic: predicted image needs >= 2 subsources");
  if (!(params.rho0 > 0.0)) throw ValidationError("analytic: rho0 must be positive or infinite");
  const auto& pos = sources.positions();
  const std::size_t m_count = pos.size();
  const bool vacuum = std::isinf(params.rho0);

  std::vector<double> weight;
  if (!vacuum) {
    weight.resize(m_count * m_count);
    for (std::size_t a = 0; a < m_count; ++a) {
      for (std::size_t b = 0; b < m_count; ++b) {
        weight[a * m_count + b] = turbulence_factor(norm2(pos[a] - pos[b]), params.rho0);
      }
    }
  }

  const double scale = params.optics.wave_number() / params.optics.path_length();
  RealMap image(dst);
  std::vector<double> cr(m_count), ci(m_count), tmp_r(m_count), tmp_i(m_count);
  for (int j = 0; j < dst.ny(); ++j) {
    for (int i = 0; i < dst.nx(); ++i) {
      const Vec2 q = scale * (object_point - dst.point(i, j));
      for (std::size_t m = 0; m < m_count; ++m) {
        const double ph = dot(q, pos[m]);
        cr[m] = std::cos(ph);
        ci[m] = std::sin(ph);
      }
      // sum_{m,m'} Re(c_m conj(c_m')) W_{mm'} = cr.W.cr + ci.W.ci
      double total = 0.0;
      if (vacuum) {
        double sr = 0.0, si = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
          sr += cr[m];
          si += ci[m];
        }
        total = sr * sr + si * si;
      } else {
        for (std::size_t a = 0; a < m_count; ++a) {
          const double* w = &weight[a * m_count];
          double wr = 0.0, wi = 0.0;
          for (std::size_t b = 0; b < m_count; ++b) {
            wr += w[b] * cr[b];
            wi += w[b] * ci[b];
          }
          total += cr[a] * wr + ci[a] * wi;
        }
      }
      image.at(i, j) = total;
    }
  }
  return image;
}

double corrected_mds_lhs(const TwoPhotonPhases& p) {
  auto with = [](const PathAmplitude& g, double dphi) { return g.value() * std::polar(1.0, dphi); };
  const Complex first = with(p.g2_kappa, p.dphi2_kappa) * with(p.g1_kappa_prime, p.dphi1_kappa_prime);
  const Complex second = with(p.g2_kappa_prime, p.dphi2_kappa_prime) * with(p.g1_kappa, p.dphi1_kappa);
  return std::norm(first + second);
}

double turbulence_free_lhs(const TwoPhotonPhases& p) {
  const Complex first = p.g2_kappa.value() * p.g1_kappa_prime.value();
  const Complex second = p.g2_kappa_prime.value() * p.g1_kappa.value();
  return std::norm(first + second);
}

ImmunityVerdict immunity_criterion(double source_diameter, double rho0) {
  if (!(source_diameter > 0.0)) throw ValidationError("analytic: source diameter must be positive");
  if (!(rho0 > 0.0)) throw ValidationError("analytic: rho0 must be positive or infinite");
  return {source_diameter < rho0, rho0 / source_diameter};
}

ImmunityVerdict immunity_criterion(const SubsourceSet& sources, double rho0) {
  return immunity_criterion(sources.diameter(), rho0);
}

}  // namespace ghostturb
