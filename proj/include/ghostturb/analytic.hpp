// Closed-form second-order coherence of lensless pseudothermal ghost imaging
// through square-law turbulence, the two-photon amplitude with
// source-coordinate-dependent turbulence phases, and the regime test
// comparing source diameter with rho0.
#pragma once

#include "ghostturb/grid.hpp"
#include "ghostturb/optics.hpp"
#include "ghostturb/source.hpp"

namespace ghostturb {

struct CoherenceParams {
  OpticalConfig optics;
  double rho0 = kInfinity;               ///< turbulence coherence length, kInfinity for vacuum
  double subsource_radius = 0.0;         ///< radius in the (pi r^2)^4 prefactor, amplitude only
  double power_m = 1.0;                  ///< <|E_m|^2>
  double power_m_prime = 1.0;            ///< <|E_m'|^2>

  void validate() const;
};

/// 1 + Re(exp(ik (rho_b - rho_p).(rho_m - rho_m') / L) exp(-|rho_m - rho_m'|^2 / rho0^2)).
/// Lies in [0, 2].
double bracket_factor(Vec2 rho_b, Vec2 rho_p, Vec2 rho_m, Vec2 rho_m_prime, const OpticalConfig& optics, double rho0);

/// Turbulence-averaged two-photon term for one subsource pair:
/// 2 (pi r_s^2 / lambda L)^4 <|E_m|^2><|E_m'|^2> * bracket.
double glauber_pair_term(Vec2 rho_b, Vec2 rho_p, Vec2 rho_m, Vec2 rho_m_prime, const CoherenceParams& params);

/// Spatially varying part summed over all ordered subsource pairs,
/// sum_{m,m'} Re(exp(ik (rho_b - rho_p).(rho_m - rho_m')/L) exp(-|rho_m - rho_m'|^2/rho0^2)),
/// evaluated on `dst`. The constant background is not included.
RealMap predicted_ghost_image(Vec2 object_point, const SubsourceSet& sources, const Grid2D& dst,
                              const CoherenceParams& params);

/// Complex path amplitude g = magnitude * exp(i phase).
struct PathAmplitude {
  double magnitude = 1.0;
  double phase = 0.0;

  Complex value() const { return std::polar(magnitude, phase); }
};

/// Inputs of the two-photon amplitude for reference point rho_2 and bucket
/// point rho_1, each reached from source points kappa and kappa'.
struct TwoPhotonPhases {
  PathAmplitude g1_kappa;        ///< g_1(rho_1, z_1, kappa)
  PathAmplitude g1_kappa_prime;  ///< g_1(rho_1, z_1, kappa')
  PathAmplitude g2_kappa;        ///< g_2(rho_2, z_2, kappa)
  PathAmplitude g2_kappa_prime;  ///< g_2(rho_2, z_2, kappa')
  double dphi1_kappa = 0.0;       ///< turbulence phase on path 1 from kappa
  double dphi1_kappa_prime = 0.0;
  double dphi2_kappa = 0.0;
  double dphi2_kappa_prime = 0.0;
};

/// |g2(k) e^{i dphi2(k)} g1(k') e^{i dphi1(k')} + g2(k') e^{i dphi2(k')} g1(k) e^{i dphi1(k)}|^2
double corrected_mds_lhs(const TwoPhotonPhases& p);

/// The same expression with every turbulence phase set to zero.
double turbulence_free_lhs(const TwoPhotonPhases& p);

struct ImmunityVerdict {
  bool immune = false;  ///< source diameter strictly below rho0
  double margin = 0.0;  ///< rho0 / diameter
};

ImmunityVerdict immunity_criterion(double source_diameter, double rho0);
ImmunityVerdict immunity_criterion(const SubsourceSet& sources, double rho0);

}  // namespace ghostturb
