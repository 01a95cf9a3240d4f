#include "htsc/measure.hpp"

#include <cmath>

#include "htsc/fft.hpp"

namespace htsc {

namespace {
const cd kI(0.0, 1.0);
}

PacketSetup make_packet_setup(const GroupStructure& g, const VectorXd& lambda0,
                              double eps, double Lz, int nv, int nz, int A,
                              double Lv_scale) {
  if (lambda0.size() != g.p || lambda0.norm() == 0.0)
    throw DomainError("make_packet_setup: lambda0 must be a nonzero p-vector");
  if (!(eps > 0.0) || eps > 1.0) throw DomainError("make_packet_setup: eps in (0,1]");
  const double dl = kPi / Lz;
  VectorXi kc(g.p);
  for (int a = 0; a < g.p; ++a)
    kc[a] = static_cast<int>(std::llround(lambda0[a] / (eps * eps * dl)));
  const double target = lambda0.norm();
  const double have = kc.cast<double>().norm() * dl;
  if (have <= 0.0)
    throw DomainError("make_packet_setup: lambda0/eps^2 rounds to zero");
  const double eps_snapped = std::sqrt(target / have);
  if (std::abs(eps_snapped - eps) > 0.01 * eps)
    throw DomainError("make_packet_setup: snapping would move eps by > 1%");
  // The window must stay clear of lambda = 0 or the carrier does not fit
  // this grid; report the largest admissible eps.
  const double min_abs = kc.cast<double>().cwiseAbs().minCoeff();
  if (g.p == 1 && min_abs <= nz / 2) {
    const double eps_max = std::sqrt(lambda0.norm() / ((nz / 2 + 1) * dl));
    throw DomainError(
        "make_packet_setup: grid cannot hold lambda0/eps^2; largest "
        "admissible eps ~= " +
        std::to_string(eps_max));
  }
  GridSpec grid;
  grid.d = g.d;
  grid.p = g.p;
  grid.Lz = Lz;
  grid.nv = nv;
  grid.nz = nz;
  grid.k_center = kc;
  const double lam_c = kc.cast<double>().norm() * dl;
  grid.Lv = Lv_scale / std::sqrt(lam_c);

  PacketSetup out;
  out.ctx = std::make_shared<TransformContext>(g, grid, make_frame(g.d, A));
  out.eps = eps_snapped;
  out.k_center = kc;
  return out;
}

Packet synthesize_packet(const TransformContext& ctx, const WavePacketSpec& spec) {
  const GridSpec& grid = ctx.grid();
  const LambdaGrid& lg = ctx.lambda_grid();
  const FramePtr& frame = ctx.frame();
  const int N = frame->size();
  if (spec.band > frame->cutoff())
    throw DomainError("synthesize_packet: band beyond the frame cutoff");
  const VectorXd lam_c = grid.lambda_center();
  const VectorXd lam_phys = spec.lambda0 / (spec.eps * spec.eps);
  if ((lam_phys - lam_c).norm() > 0.51 * grid.dlambda() * std::sqrt(double(grid.p)))
    throw DomainError(
        "synthesize_packet: lambda0/eps^2 is not this window's centre");

  const bool pure_central = spec.x0.v.norm() == 0.0;
  const int band_first = frame->band_range(spec.band).first;

  FiberField F = FiberField::zero(grid, frame);
  parallel_for(
      lg.size(),
      [&](std::size_t li) {
        const VectorXd mu = lg[li].lambda - lam_phys;
        const double env =
            std::exp(-0.25 * mu.squaredNorm() * spec.z_width * spec.z_width);
        if (env < 1e-16) return;
        MatrixXcd M = MatrixXcd::Zero(N, N);
        M(band_first, 0) = env;
        if (pure_central) {
          M *= std::exp(-kI * lg[li].lambda.dot(spec.x0.z));
        } else {
          const MatrixXcd rep = matrix_coefficient(
              ctx.group(), lg[li].lambda, frame, spec.x0, ctx.quadrature());
          M = rep.adjoint() * M;
        }
        F.ops[li] = M;
      },
      ctx.threads());

  PhysicalState psi = inverse_gft(ctx, F);
  const double n = l2_norm(psi);
  if (!(n > 0)) throw NumericsError("synthesize_packet: empty synthesis");
  psi.values /= n;
  for (auto& m : F.ops) m /= n;
  return {std::move(psi), std::move(F)};
}

PhysicalState synthesize_euclidean_packet(const TransformContext& ctx,
                                          const GroupPoint& x0,
                                          const VectorXd& omega0, double v_width,
                                          double z_width, double eps,
                                          int carrier_bin) {
  const GridSpec& g = ctx.grid();
  if (omega0.size() != g.vdim())
    throw DimensionError("synthesize_euclidean_packet: omega0 size");
  const double nyquist = kPi * (g.nv / 2 - 1) / g.Lv;
  if (omega0.norm() / eps > 0.8 * nyquist)
    throw DomainError("synthesize_euclidean_packet: omega0/eps beyond Nyquist");
  PhysicalState f = PhysicalState::zero(g);
  const std::size_t zc = g.z_count();
  const double mu = carrier_bin * g.dlambda();
  std::vector<int> vidx(g.vdim(), 0);
  for (std::size_t vflat = 0; vflat < g.v_count(); ++vflat) {
    std::size_t rem = vflat;
    double vq = 0.0;
    double phase = 0.0;
    for (int a = g.vdim() - 1; a >= 0; --a) {
      vidx[a] = static_cast<int>(rem % g.nv);
      rem /= g.nv;
      const double dv = g.v_value(vidx[a]) - x0.v[a];
      vq += dv * dv;
      phase += omega0[a] * g.v_value(vidx[a]);
    }
    const cd vfac =
        std::exp(-0.5 * vq / (v_width * v_width)) * std::exp(kI * phase / eps);
    if (std::abs(vfac) < 1e-16) continue;
    for (std::size_t zi = 0; zi < zc; ++zi) {
      const double z = g.z_value(static_cast<int>(zi));
      const double dz = z - x0.z[0];
      f.values[vflat * zc + zi] = vfac *
                                  std::exp(-0.5 * dz * dz / (z_width * z_width)) *
                                  std::exp(kI * mu * z);
    }
  }
  f.values /= l2_norm(f);
  return f;
}

EgorovResult egorov_residual(const ContextPtr& ctx, const Symbol& sigma_d,
                             const EvolutionSpec& spec, const FiberField& F0,
                             double s) {
  EgorovResult out;
  BoundSymbol lhs_op(ctx, sigma_d, spec.eps);
  const TimeAverage lhs = time_averaged_expectation(lhs_op, spec, F0, 0.0);
  out.lhs = lhs.value;

  const Symbol moved = flow_phi(sigma_d, s, ctx->frame()->d());
  BoundSymbol rhs_op(ctx, moved, spec.eps);
  const double shift = spec.tau > 2.0 ? 0.0 : s;
  const TimeAverage rhs = time_averaged_expectation(rhs_op, spec, F0, shift);
  out.rhs = rhs.value;
  out.residual = std::abs(out.lhs - out.rhs);
  out.doubling_rel = std::max(lhs.doubling_rel, rhs.doubling_rel);
  return out;
}

Trajectory evolve_trajectory(const ContextPtr& ctx, const FiberField& F0,
                             const EvolutionSpec& spec,
                             const std::vector<double>& times) {
  Trajectory out;
  out.times = times;
  out.states.reserve(times.size());
  for (double t : times)
    out.states.push_back(inverse_gft(*ctx, evolve(F0, t, spec)));
  return out;
}

namespace {
VectorXd weighted_coordinate(const PhysicalState& f, bool central) {
  const GridSpec& g = f.grid;
  const std::size_t zc = g.z_count();
  const int dim = central ? g.p : g.vdim();
  VectorXd num = VectorXd::Zero(dim);
  double den = 0.0;
  std::vector<int> vidx(g.vdim(), 0);
  for (std::size_t vflat = 0; vflat < g.v_count(); ++vflat) {
    std::size_t rem = vflat;
    for (int a = g.vdim() - 1; a >= 0; --a) {
      vidx[a] = static_cast<int>(rem % g.nv);
      rem /= g.nv;
    }
    for (std::size_t zi = 0; zi < zc; ++zi) {
      const double w = std::norm(f.values[vflat * zc + zi]);
      if (w == 0.0) continue;
      den += w;
      if (central) {
        std::size_t zrem = zi;
        for (int a = g.p - 1; a >= 0; --a) {
          num[a] += w * g.z_value(static_cast<int>(zrem % g.nz));
          zrem /= g.nz;
        }
      } else {
        for (int a = 0; a < g.vdim(); ++a) num[a] += w * g.v_value(vidx[a]);
      }
    }
  }
  return num / den;
}

double half_box_tail(const PhysicalState& f) {
  const GridSpec& g = f.grid;
  const std::size_t zc = g.z_count();
  double tail = 0.0, total = 0.0;
  for (std::size_t vflat = 0; vflat < g.v_count(); ++vflat)
    for (std::size_t zi = 0; zi < zc; ++zi) {
      const double w = std::norm(f.values[vflat * zc + zi]);
      total += w;
      std::size_t zrem = zi;
      bool outside = false;
      for (int a = g.p - 1; a >= 0; --a) {
        const double z = g.z_value(static_cast<int>(zrem % g.nz));
        zrem /= g.nz;
        if (std::abs(z) > 0.5 * g.Lz) outside = true;
      }
      if (outside) tail += w;
    }
  return total > 0 ? tail / total : 0.0;
}
}  // namespace

VectorXd centroid_z(const PhysicalState& f) { return weighted_coordinate(f, true); }
VectorXd centroid_v(const PhysicalState& f) { return weighted_coordinate(f, false); }

CentroidTrack centroid_track(const Trajectory& traj, double tail_threshold) {
  CentroidTrack out;
  out.times = traj.times;
  for (const auto& s : traj.states) {
    out.z.push_back(centroid_z(s));
    out.v.push_back(centroid_v(s));
    out.max_tail = std::max(out.max_tail, half_box_tail(s));
  }
  out.wrapped = out.max_tail > tail_threshold;
  return out;
}

OscillationProfile oscillation_profile(const FiberField& F, double eps,
                                       const std::vector<double>& R_list,
                                       const std::vector<double>& delta_list) {
  for (const auto* lst : {&R_list, &delta_list})
    for (std::size_t i = 1; i < lst->size(); ++i)
      if ((*lst)[i] <= (*lst)[i - 1])
        throw DomainError("oscillation_profile: lists must be sorted increasing");
  OscillationProfile out;
  const double total = hs_norm(F);
  const double t2 = total * total;
  for (double R : R_list) {
    const auto cut = spectral_cutoff(F, CutoffKind::High, R, eps);
    const double h = hs_norm(cut);
    out.R.push_back(R);
    out.high_tail.push_back(h * h / t2);
  }
  for (double dlt : delta_list) {
    const auto cut = spectral_cutoff(F, CutoffKind::Low, dlt, eps);
    const double l = hs_norm(cut);
    out.delta.push_back(dlt);
    out.low_tail.push_back(l * l / t2);
  }
  for (std::size_t i = 1; i < out.high_tail.size(); ++i)
    if (out.high_tail[i] > out.high_tail[i - 1] + 1e-12) out.monotone = false;
  for (std::size_t i = 1; i < out.low_tail.size(); ++i)
    if (out.low_tail[i] < out.low_tail[i - 1] - 1e-12) out.monotone = false;
  return out;
}

double euclidean_tail_expectation(const PhysicalState& psi, double eps,
                                  double c_lo, double c_hi) {
  const GridSpec& g = psi.grid;
  std::vector<int> dims;
  for (int i = 0; i < g.vdim(); ++i) dims.push_back(g.nv);
  for (int i = 0; i < g.p; ++i) dims.push_back(g.nz);
  VectorXcd hat = psi.values;
  for (int a = 0; a < g.vdim(); ++a) Fft::axis(hat.data(), dims, a, -1);
  const double base = kPi / g.Lv;
  const std::size_t zc = g.z_count();
  double num = 0.0, den = 0.0;
  std::vector<int> vidx(g.vdim(), 0);
  const double w_edge = 0.15 * (c_hi - c_lo);
  for (std::size_t vflat = 0; vflat < g.v_count(); ++vflat) {
    std::size_t rem = vflat;
    double xi2 = 0.0;
    for (int a = g.vdim() - 1; a >= 0; --a) {
      vidx[a] = static_cast<int>(rem % g.nv);
      rem /= g.nv;
      const int sj = vidx[a] < g.nv / 2 ? vidx[a] : vidx[a] - g.nv;
      xi2 += base * base * double(sj) * double(sj);
    }
    const double exi = eps * std::sqrt(xi2);
    double c = 0.0;
    if (exi > c_lo && exi < c_hi)
      c = smooth_step(0.5 + 0.5 * (exi - c_lo) / w_edge) *
          smooth_step(0.5 + 0.5 * (c_hi - exi) / w_edge);
    for (std::size_t zi = 0; zi < zc; ++zi) {
      const double w = std::norm(hat[vflat * zc + zi]);
      num += c * w;
      den += w;
    }
  }
  return den > 0 ? num / den : 0.0;
}

MarginalSplit marginal_split(const ContextPtr& ctx, const PhysicalState& psi,
                             const FiberField& F, double eps, int band_max,
                             const ScalarCutoff& g, double c_lo, double c_hi) {
  MarginalSplit out;
  out.total = l2_norm(psi) * l2_norm(psi);
  for (int n = 0; n <= band_max; ++n) {
    Symbol probe = Symbol::separable(XProfile::one(), FiberExpr::projector(n), g, n);
    BoundSymbol op(ctx, probe, eps);
    out.z_share += expectation(op, F, psi).real();
  }
  out.v_share = euclidean_tail_expectation(psi, eps, c_lo, c_hi) * out.total;
  return out;
}

double ball_mass(const PhysicalState& f, const GroupStructure& grp,
                 const GroupPoint& x0, double r) {
  const GridSpec& g = f.grid;
  const std::size_t zc = g.z_count();
  double acc = 0.0;
  const double vol = g.cell_volume();
  std::vector<int> vidx(g.vdim(), 0);
  GroupPoint x{VectorXd(g.vdim()), VectorXd(g.p)};
  for (std::size_t vflat = 0; vflat < g.v_count(); ++vflat) {
    std::size_t rem = vflat;
    for (int a = g.vdim() - 1; a >= 0; --a) {
      vidx[a] = static_cast<int>(rem % g.nv);
      rem /= g.nv;
    }
    for (int a = 0; a < g.vdim(); ++a) x.v[a] = g.v_value(vidx[a]);
    for (std::size_t zi = 0; zi < zc; ++zi) {
      std::size_t zrem = zi;
      for (int a = g.p - 1; a >= 0; --a) {
        x.z[a] = g.z_value(static_cast<int>(zrem % g.nz));
        zrem /= g.nz;
      }
      const GroupPoint rel = multiply(grp, inverse(x0), x);
      if (quasi_norm(rel) <= r) acc += std::norm(f.values[vflat * zc + zi]) * vol;
    }
  }
  return acc;
}

std::vector<std::pair<double, double>> dispersion_mass(const Trajectory& traj,
                                                       const GroupStructure& g,
                                                       const GroupPoint& x0,
                                                       double r) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < traj.states.size(); ++i)
    out.emplace_back(traj.times[i], ball_mass(traj.states[i], g, x0, r));
  return out;
}

JepsResult j_eps_diagnostic(const ContextPtr& ctx, const Symbol& sigma,
                            const EvolutionSpec& spec, const FiberField& F0) {
  if (!(sigma.lambda_min() > 0.0) || sigma.band_bound < 0)
    throw DomainError("j_eps_diagnostic: symbol must be in the A_H fragment");
  const Symbol s1 = sigma1_construct(*ctx, sigma);
  const Symbol vps1 = derivative_symbol(*ctx, s1);
  const Symbol lap = sublaplacian_symbol(*ctx, sigma);

  BoundSymbol op_vps1(ctx, vps1, spec.eps);
  BoundSymbol op_lap(ctx, lap, spec.eps);
  JepsResult out;
  out.lhs = 2.0 * time_averaged_expectation(op_vps1, spec, F0).value +
            0.5 * time_averaged_expectation(op_lap, spec, F0).value;

  // i sum_n (2n+d)/(2|l|) Z^(l) Pi_n sigma Pi_n, with Z^(l) acting on the
  // profile and the lambda weights folded into the cutoff.
  Symbol rhs_sym;
  rhs_sym.band_bound = sigma.band_bound;
  const int d = ctx->frame()->d();
  for (const auto& t : sigma.terms) {
    for (int n = 0; n <= sigma.band_bound; ++n) {
      for (int k = 0; k < ctx->grid().p; ++k) {
        SymbolTerm nt = t;
        nt.coeff = t.coeff * kI * (2.0 * n + d) / 2.0;
        nt.a = central_derivative(ctx->grid(), t.a, k);
        nt.fiber = FiberExpr::product(
            {FiberExpr::projector(n), t.fiber, FiberExpr::projector(n)});
        nt.g = t.g;
        nt.g.component = k;
        nt.g.inv_norm_power += 1;
        nt.band_row = nt.band_col = n;
        rhs_sym.terms.push_back(std::move(nt));
      }
    }
  }
  BoundSymbol op_rhs(ctx, rhs_sym, spec.eps);
  out.rhs = time_averaged_expectation(op_rhs, spec, F0).value;
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace htsc
