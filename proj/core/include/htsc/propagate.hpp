#pragma once

#include "htsc/quantize.hpp"

namespace htsc {

/** Smooth compactly supported time window (1+cos(pi t/T))^2 / (3T). */
struct ThetaWindow {
  double T = 1.0;

  double eval(double t) const;
  static ThetaWindow bump(double T);
};

/**
 * Time scaling of the evolution: i eps^tau d_t psi = -(eps^2/2) Delta_G psi,
 * solved spectrally; band (lambda, n) carries the phase
 * exp(-i eps^(2-tau) t |lambda|(2n+d)/2).
 */
struct EvolutionSpec {
  double eps = 0.1;
  double tau = 2.0;
  ThetaWindow theta;
  int samples_per_cycle = 20;
  std::size_t min_time_samples = 1024;
  std::size_t max_time_samples = 400000;

  void validate() const;
  double phase_rate(double lambda_norm, int band, int d) const;
};

FiberField evolve(const FiberField& F0, double t, const EvolutionSpec& spec);

// Free Euclidean propagator on the first stratum: v-Fourier modes xi pick up
// exp(-i eps^(2-kappa) t |xi|^2 / 2); central variables are untouched.
PhysicalState euclidean_evolve(const PhysicalState& phi0, double t, double eps,
                               double kappa);

/**
 * Independent route for the same dynamics (d = 1): Strang splitting of
 * e^{i beta t Delta_G} in the mixed (v, central-frequency) representation.
 * Per frequency the generator splits into Delta_v (v-spectral), a rigid
 * rotation (three FFT shears) and a quadratic potential phase; the two
 * non-Laplacian parts commute. Used as an oracle for evolve() and to evolve
 * data outside the Hermite span (Euclidean-regime packets).
 */
PhysicalState sublaplacian_evolve_strang(const GroupStructure& g,
                                         const PhysicalState& psi0, double t,
                                         double eps, double tau, int steps);

struct TimeAverage {
  cd value = 0.0;
  cd value_refined = 0.0;  // half step quadrature
  double doubling_rel = 0.0;
  std::size_t samples = 0;
  double dt = 0.0;
};

/**
 * l_eps(theta(.+shift), sigma) = integral theta(t+shift) (Op_eps(sigma)
 * psi(t), psi(t)) dt by trapezoid quadrature, with the step chosen from the
 * realized phase-difference rates (expectations are blind to the absolute
 * phase). The integrand is evaluated through its tone decomposition, which
 * is exactly the same trapezoid sum reorganized; this requires separable
 * terms (constant or central-Gaussian profiles) and band-limited data.
 */
TimeAverage time_averaged_expectation(const BoundSymbol& op,
                                      const EvolutionSpec& spec,
                                      const FiberField& F0, double theta_shift = 0.0);

// Direct route (evolve + apply per sample) for cross-checks on small cases.
TimeAverage time_averaged_expectation_direct(const BoundSymbol& op,
                                             const EvolutionSpec& spec,
                                             const FiberField& F0,
                                             double theta_shift = 0.0,
                                             std::size_t samples = 257);

struct EnergyDerivativeCheck {
  cd lhs = 0.0;  // i eps^tau d/dt (Op psi, psi) by centred differences
  cd rhs = 0.0;  // ([Op, -(eps^2/2) Delta_G] psi, psi)
  double relative_residual = 0.0;
};

EnergyDerivativeCheck energy_derivative_check(const BoundSymbol& op,
                                              const EvolutionSpec& spec,
                                              const FiberField& F0, double t,
                                              double dt);

}  // namespace htsc
