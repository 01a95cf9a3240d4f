#pragma once

#include "htsc/propagate.hpp"

namespace htsc {

/**
 * Wave packet concentrating (after eps^2 rescaling) at central frequency
 * lambda0, band n, and position x0, with a central envelope of width
 * z_width. Band purity requires a vanishing first-stratum part of x0.
 */
struct WavePacketSpec {
  GroupPoint x0;
  VectorXd lambda0;
  int band = 0;
  double z_width = 0.8;
  double eps = 0.1;
};

/**
 * Grid/context for a packet: a frequency window centred at lambda0/eps^2
 * (snapped to the grid lattice; eps adjusted by at most 1%) with the
 * first-stratum box scaled to the fiber length scale 1/sqrt(lambda_c).
 */
struct PacketSetup {
  ContextPtr ctx;
  double eps = 0.0;       // snapped value
  VectorXi k_center;
};

PacketSetup make_packet_setup(const GroupStructure& g, const VectorXd& lambda0,
                              double eps, double Lz = 8.0, int nv = 64, int nz = 64,
                              int A = 16, double Lv_scale = 10.0);

struct Packet {
  PhysicalState state;
  FiberField field;
};

Packet synthesize_packet(const TransformContext& ctx, const WavePacketSpec& spec);

// eta(x) e^{i omega0 . v / eps} with Gaussian envelopes and a small central
// carrier (carrier_bin) keeping the frequency support off lambda = 0.
PhysicalState synthesize_euclidean_packet(const TransformContext& ctx,
                                          const GroupPoint& x0,
                                          const VectorXd& omega0, double v_width,
                                          double z_width, double eps,
                                          int carrier_bin);

struct EgorovResult {
  cd lhs = 0.0;
  cd rhs = 0.0;
  double residual = 0.0;
  double doubling_rel = 0.0;
};

// | l(theta, sigma_d) - l(theta(.+s), Op(Phi^s sigma_d)) | for tau = 2
// (transport) and the unshifted comparison for tau > 2 (invariance).
EgorovResult egorov_residual(const ContextPtr& ctx, const Symbol& sigma_d,
                             const EvolutionSpec& spec, const FiberField& F0,
                             double s);

struct Trajectory {
  std::vector<double> times;
  std::vector<PhysicalState> states;
};

Trajectory evolve_trajectory(const ContextPtr& ctx, const FiberField& F0,
                             const EvolutionSpec& spec,
                             const std::vector<double>& times);

VectorXd centroid_z(const PhysicalState& f);
VectorXd centroid_v(const PhysicalState& f);

struct CentroidTrack {
  std::vector<double> times;
  std::vector<VectorXd> z;
  std::vector<VectorXd> v;
  double max_tail = 0.0;  // largest half-box exterior mass seen
  bool wrapped = false;
};

// Centroids along a trajectory with a wrap-around monitor: mass outside the
// central half of the box beyond `tail_threshold` flags the track.
CentroidTrack centroid_track(const Trajectory& traj, double tail_threshold = 1e-3);

struct OscillationProfile {
  std::vector<double> R;
  std::vector<double> high_tail;
  std::vector<double> delta;
  std::vector<double> low_tail;
  bool monotone = true;
};

OscillationProfile oscillation_profile(const FiberField& F, double eps,
                                       const std::vector<double>& R_list,
                                       const std::vector<double>& delta_list);

struct MarginalSplit {
  double z_share = 0.0;  // central-frequency probes
  double v_share = 0.0;  // Euclidean first-stratum probes
  double total = 0.0;
};

// z*-side: band projectors 0..band_max with the cutoff g; v*-side: the
// Fourier multiplier c(eps D_v) supported on eps|xi| in [c_lo, c_hi].
MarginalSplit marginal_split(const ContextPtr& ctx, const PhysicalState& psi,
                             const FiberField& F, double eps, int band_max,
                             const ScalarCutoff& g, double c_lo, double c_hi);

// Expectation of the Euclidean observable c(eps D_v) (a == 1).
double euclidean_tail_expectation(const PhysicalState& psi, double eps,
                                  double c_lo, double c_hi);

// Mass of |psi|^2 inside the quasi-norm ball of radius r around x0.
double ball_mass(const PhysicalState& f, const GroupStructure& g,
                 const GroupPoint& x0, double r);

std::vector<std::pair<double, double>> dispersion_mass(const Trajectory& traj,
                                                       const GroupStructure& g,
                                                       const GroupPoint& x0,
                                                       double r);

struct JepsResult {
  cd lhs = 0.0;   // 2 l(theta, V.pi(V) sigma_1) + 1/2 l(theta, Delta_G sigma)
  cd rhs = 0.0;   // i sum_n (2n+d)/(2|l|) l(theta, Z^(l) Pi_n sigma Pi_n)
  double residual = 0.0;
};

JepsResult j_eps_diagnostic(const ContextPtr& ctx, const Symbol& sigma,
                            const EvolutionSpec& spec, const FiberField& F0);

}  // namespace htsc
