#include "htsc/propagate.hpp"

#include <cmath>
#include <map>

#include "htsc/fft.hpp"

namespace htsc {

namespace {
const cd kI(0.0, 1.0);
}

double ThetaWindow::eval(double t) const {
  if (std::abs(t) >= T) return 0.0;
  const double c = 1.0 + std::cos(kPi * t / T);
  return c * c / (3.0 * T);
}

ThetaWindow ThetaWindow::bump(double T) {
  if (!(T > 0)) throw DomainError("ThetaWindow: T must be positive");
  ThetaWindow w;
  w.T = T;
  return w;
}

void EvolutionSpec::validate() const {
  if (!(eps > 0.0) || eps > 1.0) throw DomainError("EvolutionSpec: eps in (0,1]");
  if (!(tau > 0.0)) throw DomainError("EvolutionSpec: tau must be positive");
  if (!(theta.T > 0.0)) throw DomainError("EvolutionSpec: empty time window");
}

double EvolutionSpec::phase_rate(double lambda_norm, int band, int d) const {
  return std::pow(eps, 2.0 - tau) * lambda_norm * (2.0 * band + d) / 2.0;
}

FiberField evolve(const FiberField& F0, double t, const EvolutionSpec& spec) {
  spec.validate();
  FiberField out = F0;
  const LambdaGrid lg(F0.grid);
  const HermiteFrame& fr = *F0.frame;
  const double scale = std::pow(spec.eps, 2.0 - spec.tau) * t / 2.0;
  for (std::size_t li = 0; li < lg.size(); ++li) {
    const double nl = lg[li].lambda.norm();
    for (int r = 0; r < fr.size(); ++r) {
      const double energy = nl * (2.0 * fr.degree(r) + fr.d());
      out.ops[li].row(r) *= std::exp(-kI * scale * energy);
    }
  }
  return out;
}

PhysicalState euclidean_evolve(const PhysicalState& phi0, double t, double eps,
                               double kappa) {
  const GridSpec& g = phi0.grid;
  PhysicalState out = phi0;
  std::vector<int> dims;
  for (int i = 0; i < g.vdim(); ++i) dims.push_back(g.nv);
  for (int i = 0; i < g.p; ++i) dims.push_back(g.nz);
  for (int a = 0; a < g.vdim(); ++a) Fft::axis(out.values.data(), dims, a, -1);

  const double coef = std::pow(eps, 2.0 - kappa) * t / 2.0;
  const double base = kPi / g.Lv;
  const std::size_t zc = g.z_count();
  std::vector<int> vidx(g.vdim(), 0);
  const double norm = 1.0 / std::pow(double(g.nv), g.vdim());
  for (std::size_t vflat = 0; vflat < g.v_count(); ++vflat) {
    std::size_t rem = vflat;
    double xi2 = 0.0;
    for (int a = g.vdim() - 1; a >= 0; --a) {
      vidx[a] = static_cast<int>(rem % g.nv);
      rem /= g.nv;
      const int sj = vidx[a] < g.nv / 2 ? vidx[a] : vidx[a] - g.nv;
      const double xi = base * sj;
      xi2 += xi * xi;
    }
    const cd mult = std::exp(-kI * coef * xi2) * norm;
    for (std::size_t zi = 0; zi < zc; ++zi) out.values[vflat * zc + zi] *= mult;
  }
  for (int a = 0; a < g.vdim(); ++a) Fft::axis(out.values.data(), dims, a, +1);
  return out;
}

namespace {
// Shear pullback f(v) -> f(..., v_recv + alpha v_other, ...) on an
// (nv x nv) slice, by an exact FFT phase along the receiving axis.
void shear_slice(const GridSpec& g, VectorXcd& slice, int recv_axis, double alpha) {
  if (alpha == 0.0) return;
  std::vector<int> dims{g.nv, g.nv};
  Fft::axis(slice.data(), dims, recv_axis, -1);
  const double base = kPi / g.Lv;
  for (int i0 = 0; i0 < g.nv; ++i0)
    for (int i1 = 0; i1 < g.nv; ++i1) {
      const int bin = recv_axis == 0 ? i0 : i1;
      const int other_idx = recv_axis == 0 ? i1 : i0;
      const int sj = bin < g.nv / 2 ? bin : bin - g.nv;
      const cd mult =
          std::exp(kI * (base * sj) * alpha * g.v_value(other_idx)) /
          double(g.nv);
      slice[static_cast<std::size_t>(i0) * g.nv + i1] *= mult;
    }
  Fft::axis(slice.data(), dims, recv_axis, +1);
}

// Pullback by the standard rotation [[cos a, -sin a], [sin a, cos a]].
void rotate_slice(const GridSpec& g, VectorXcd& slice, double a) {
  if (a == 0.0) return;
  const double tx = -std::tan(a / 2.0);
  const double sy = std::sin(a);
  shear_slice(g, slice, 0, tx);
  shear_slice(g, slice, 1, sy);
  shear_slice(g, slice, 0, tx);
}
}  // namespace

PhysicalState sublaplacian_evolve_strang(const GroupStructure& g,
                                         const PhysicalState& psi0, double t,
                                         double eps, double tau, int steps) {
  if (g.d != 1 || g.p != 1)
    throw DomainError("sublaplacian_evolve_strang: implemented for d = p = 1");
  if (steps < 1) throw DomainError("sublaplacian_evolve_strang: steps >= 1");
  const GridSpec& grid = psi0.grid;
  const double beta = std::pow(eps, 2.0 - tau) / 2.0;
  const double dt = t / steps;
  const std::size_t zc = grid.z_count();
  const double b_scale = g.B[0](0, 1);  // the Heisenberg J normalization

  std::vector<int> dims{grid.nv, grid.nv, static_cast<int>(zc)};
  VectorXcd work = psi0.values;
  Fft::axis(work.data(), dims, 2, -1);

  const double lam_c = grid.lambda_center().size() ? grid.lambda_center()[0] : 0.0;
  VectorXcd slice(static_cast<std::size_t>(grid.nv) * grid.nv);
  for (int bin = 0; bin < grid.nz; ++bin) {
    const int sj = bin < grid.nz / 2 ? bin : bin - grid.nz;
    const double lam = lam_c + kPi / grid.Lz * sj;
    for (int i0 = 0; i0 < grid.nv; ++i0)
      for (int i1 = 0; i1 < grid.nv; ++i1)
        slice[static_cast<std::size_t>(i0) * grid.nv + i1] =
            work[(static_cast<std::size_t>(i0) * grid.nv + i1) * zc + bin];

    // On the e^{i lam z} fiber: Delta_G = Delta_v - i(B(lam)v).grad
    // - |lam|^2 |v|^2 / 4; the rotation and the potential commute.
    auto half_B = [&](double hdt) {
      for (int i0 = 0; i0 < grid.nv; ++i0)
        for (int i1 = 0; i1 < grid.nv; ++i1) {
          const double v2 = grid.v_value(i0) * grid.v_value(i0) +
                            grid.v_value(i1) * grid.v_value(i1);
          slice[static_cast<std::size_t>(i0) * grid.nv + i1] *=
              std::exp(-kI * (beta * hdt * 0.25 * lam * lam * v2));
        }
      // e^{i beta hdt (-i (Bv).grad)} pulls back by e^{beta hdt B(lam)}
      // = e^{theta J} = standard rotation by -theta.
      rotate_slice(grid, slice, -beta * hdt * lam * b_scale);
    };
    auto full_A = [&] {
      std::vector<int> d2{grid.nv, grid.nv};
      Fft::axis(slice.data(), d2, 0, -1);
      Fft::axis(slice.data(), d2, 1, -1);
      const double base = kPi / grid.Lv;
      const double norm = 1.0 / (double(grid.nv) * grid.nv);
      for (int i0 = 0; i0 < grid.nv; ++i0)
        for (int i1 = 0; i1 < grid.nv; ++i1) {
          const int s0 = i0 < grid.nv / 2 ? i0 : i0 - grid.nv;
          const int s1 = i1 < grid.nv / 2 ? i1 : i1 - grid.nv;
          const double xi2 = base * base * (double(s0) * s0 + double(s1) * s1);
          slice[static_cast<std::size_t>(i0) * grid.nv + i1] *=
              std::exp(-kI * (beta * dt * xi2)) * norm;
        }
      Fft::axis(slice.data(), d2, 0, +1);
      Fft::axis(slice.data(), d2, 1, +1);
    };
    for (int step = 0; step < steps; ++step) {
      half_B(0.5 * dt);
      full_A();
      half_B(0.5 * dt);
    }

    for (int i0 = 0; i0 < grid.nv; ++i0)
      for (int i1 = 0; i1 < grid.nv; ++i1)
        work[(static_cast<std::size_t>(i0) * grid.nv + i1) * zc + bin] =
            slice[static_cast<std::size_t>(i0) * grid.nv + i1];
  }

  Fft::axis(work.data(), dims, 2, +1);
  PhysicalState out = psi0;
  out.values = work / double(grid.nz);
  return out;
}

namespace {
struct ToneTable {
  std::map<long long, cd> coeffs;  // integer phase key -> summed coefficient
  double omega_unit = 0.0;         // Omega = omega_unit * key
};

// A profile decomposed for the tone expansion: v-monomial times a central
// slice. Constant and central-Gaussian profiles give one piece; PolyGrid
// profiles qualify when their bases do not depend on v.
struct TonePiece {
  VectorXi vpow;
  VectorXcd zvals;  // samples on the z axis (nz entries)
};

std::vector<TonePiece> tone_pieces(const GridSpec& grid, const XProfile& a) {
  std::vector<TonePiece> out;
  if (grid.p != 1)
    throw NumericsError("time_averaged_expectation: tone path needs p = 1");
  const int nz = grid.nz;
  if (a.kind == XProfile::Kind::One) {
    TonePiece p;
    p.vpow = VectorXi::Zero(grid.vdim());
    p.zvals = VectorXcd::Constant(nz, a.amplitude);
    out.push_back(std::move(p));
    return out;
  }
  if (a.kind == XProfile::Kind::Gaussian && a.v_width <= 0.0) {
    TonePiece p;
    p.vpow = VectorXi::Zero(grid.vdim());
    p.zvals.resize(nz);
    const double zc = a.z_center.size() ? a.z_center[0] : 0.0;
    for (int j = 0; j < nz; ++j) {
      const double d = grid.z_value(j) - zc;
      p.zvals[j] = a.z_width > 0
                       ? a.amplitude * std::exp(-0.5 * d * d / (a.z_width * a.z_width))
                       : a.amplitude;
    }
    out.push_back(std::move(p));
    return out;
  }
  if (a.kind == XProfile::Kind::PolyGrid) {
    const std::size_t zc = grid.z_count();
    for (const auto& pt : a.poly) {
      // the base must be independent of v
      const VectorXcd& base = *pt.base;
      double dev = 0.0, scale = 0.0;
      for (std::size_t vflat = 0; vflat < grid.v_count(); ++vflat)
        for (std::size_t zi = 0; zi < zc; ++zi) {
          dev = std::max(dev, std::abs(base[vflat * zc + zi] - base[zi]));
          scale = std::max(scale, std::abs(base[zi]));
        }
      if (dev > 1e-12 * std::max(scale, 1e-30))
        throw NumericsError(
            "time_averaged_expectation: profile base depends on v; use the "
            "direct route");
      TonePiece p;
      p.vpow = pt.vpow;
      p.zvals = a.amplitude * base.head(zc);
      out.push_back(std::move(p));
    }
    return out;
  }
  throw NumericsError(
      "time_averaged_expectation: profile not tone-compatible; use the direct "
      "route");
}

// Central shift of a z-slice by an exact FFT phase.
VectorXcd shift_slice(const GridSpec& grid, const VectorXcd& zvals, double shift) {
  if (shift == 0.0) return zvals;
  VectorXcd out = zvals;
  std::vector<int> dims{grid.nz};
  Fft::axis(out.data(), dims, 0, -1);
  for (int j = 0; j < grid.nz; ++j) {
    const int sj = j < grid.nz / 2 ? j : j - grid.nz;
    out[j] *= std::exp(-kI * (kPi / grid.Lz * sj) * shift) / double(grid.nz);
  }
  Fft::axis(out.data(), dims, 0, +1);
  return out;
}

// Occupied bands of the data (row-band mass above a relative floor).
std::vector<int> occupied_bands(const FiberField& F) {
  const HermiteFrame& fr = *F.frame;
  std::vector<double> mass(fr.cutoff() + 1, 0.0);
  double total = 0.0;
  for (const auto& m : F.ops) {
    for (int n = 0; n <= fr.cutoff(); ++n) {
      const auto [a, b] = fr.band_range(n);
      const double w = m.middleRows(a, b - a).squaredNorm();
      mass[n] += w;
      total += w;
    }
  }
  std::vector<int> out;
  for (int n = 0; n <= fr.cutoff(); ++n)
    if (mass[n] > 1e-24 * total) out.push_back(n);
  return out;
}

ToneTable build_tones(const BoundSymbol& op, const EvolutionSpec& spec,
                      const FiberField& F0) {
  const TransformContext& ctx = *op.context();
  const LambdaGrid& lg = ctx.lambda_grid();
  const GridSpec& grid = ctx.grid();
  const HermiteFrame& fr = *ctx.frame();
  const std::size_t nl = lg.size();
  const int d = fr.d();
  const double c0 = ctx.c0();

  const std::vector<int> bands = occupied_bands(F0);
  const std::size_t nb = bands.size();
  const std::size_t nv_tot = grid.v_count();
  const std::size_t nkb = nl * nb;

  // psi-side traces, stacked as rows of S.
  MatrixXcd S = MatrixXcd::Zero(nkb, nv_tot);
  std::vector<char> psi_live(nkb, 0);
  parallel_for(
      nl,
      [&](std::size_t k) {
        for (std::size_t bi = 0; bi < nb; ++bi) {
          const auto [r0, r1] = fr.band_range(bands[bi]);
          MatrixXcd piece = MatrixXcd::Zero(fr.size(), fr.size());
          piece.middleRows(r0, r1 - r0) = F0.ops[k].middleRows(r0, r1 - r0);
          if (piece.cwiseAbs().maxCoeff() == 0.0) continue;
          S.row(k * nb + bi) = trace_field(ctx, k, piece).transpose();
          psi_live[k * nb + bi] = 1;
        }
      },
      ctx.threads());

  ToneTable table;
  table.omega_unit = std::pow(spec.eps, 2.0 - spec.tau) * grid.dlambda() / 2.0;
  const double dv2 = std::pow(grid.dv(), grid.vdim());
  const double dz = grid.dz();

  // Cache of v-monomial weights.
  std::map<std::vector<int>, VectorXcd> mono_cache;
  auto mono_of = [&](const VectorXi& vpow) -> const VectorXcd& {
    std::vector<int> key(vpow.data(), vpow.data() + vpow.size());
    auto it = mono_cache.find(key);
    if (it != mono_cache.end()) return it->second;
    VectorXcd w(nv_tot);
    std::vector<int> vidx(grid.vdim(), 0);
    for (std::size_t vflat = 0; vflat < nv_tot; ++vflat) {
      std::size_t rem = vflat;
      for (int a = grid.vdim() - 1; a >= 0; --a) {
        vidx[a] = static_cast<int>(rem % grid.nv);
        rem /= grid.nv;
      }
      double m = 1.0;
      for (int a = 0; a < grid.vdim(); ++a)
        for (int e = 0; e < vpow[a]; ++e) m *= grid.v_value(vidx[a]);
      w[vflat] = m;
    }
    return mono_cache.emplace(std::move(key), std::move(w)).first->second;
  };

  for (std::size_t ti = 0; ti < op.symbol().terms.size(); ++ti) {
    const auto& term = op.symbol().terms[ti];
    const auto pieces = tone_pieces(grid, term.a);

    // u-side traces for this term, stacked as rows of U.
    MatrixXcd U = MatrixXcd::Zero(nkb, nv_tot);
    std::vector<char> u_live(nkb, 0);
    parallel_for(
        nl,
        [&](std::size_t k) {
          if (!op.slice_active(ti, k)) return;
          for (std::size_t bi = 0; bi < nb; ++bi) {
            if (!psi_live[k * nb + bi]) continue;
            const auto [r0, r1] = fr.band_range(bands[bi]);
            MatrixXcd piece = MatrixXcd::Zero(fr.size(), fr.size());
            piece.middleRows(r0, r1 - r0) = F0.ops[k].middleRows(r0, r1 - r0);
            U.row(k * nb + bi) =
                trace_field(ctx, k, op.multiplier(ti, k) * piece).transpose();
            u_live[k * nb + bi] = 1;
          }
        },
        ctx.threads());

    for (const auto& piece : pieces) {
      // Vint(kb, k'b') = dv^2 sum_v mono(v) u(v) conj(psi(v))
      const VectorXcd& mono = mono_of(piece.vpow);
      const MatrixXcd Um = U * mono.asDiagonal();
      const MatrixXcd V = dv2 * (Um * S.adjoint());

      // Az tables per shift class (p = 1: sign of lambda).
      std::map<long long, std::vector<cd>> az;  // shiftkey -> m-table
      auto az_of = [&](long long shiftkey, double shift, long long m) -> cd {
        auto it = az.find(shiftkey);
        if (it == az.end()) {
          const VectorXcd zv = shift_slice(grid, piece.zvals, shift);
          std::vector<cd> row(2 * grid.nz + 1, cd(0, 0));
          for (int mm = -grid.nz; mm <= grid.nz; ++mm) {
            cd acc = 0.0;
            for (int j = 0; j < grid.nz; ++j)
              acc += zv[j] *
                     std::exp(kI * (kPi * double(mm) / grid.Lz) * grid.z_value(j)) *
                     dz;
            row[mm + grid.nz] = acc;
          }
          it = az.emplace(shiftkey, std::move(row)).first;
        }
        return it->second[m + grid.nz];
      };

      for (std::size_t k = 0; k < nl; ++k) {
        if (!op.slice_active(ti, k)) continue;
        const long long kk = lg[k].k[0];
        double shift = 0.0;
        long long shiftkey = 0;
        if (term.a.central_shift != 0.0) {
          shift = term.a.central_shift * (kk > 0 ? 1.0 : -1.0);
          shiftkey = kk > 0 ? 1 : -1;
        }
        for (std::size_t kp = 0; kp < nl; ++kp) {
          const long long m = kk - lg[kp].k[0];
          const cd azv = az_of(shiftkey, shift, m);
          if (azv == cd(0.0, 0.0)) continue;
          for (std::size_t bi = 0; bi < nb; ++bi) {
            if (!u_live[k * nb + bi]) continue;
            for (std::size_t bj = 0; bj < nb; ++bj) {
              if (!psi_live[kp * nb + bj]) continue;
              const cd vint = V(k * nb + bi, kp * nb + bj);
              if (vint == cd(0.0, 0.0)) continue;
              const cd coeff = c0 * c0 * lg[k].weight * lg[kp].weight * vint * azv;
              const long long key =
                  std::llabs(lg[kp].k[0]) * (2ll * bands[bj] + d) -
                  std::llabs(kk) * (2ll * bands[bi] + d);
              table.coeffs[key] += coeff;
            }
          }
        }
      }
    }
  }
  return table;
}

cd quadrature_sum(const ToneTable& table, const EvolutionSpec& spec,
                  double theta_shift, double dt, std::size_t& samples_out) {
  const double lo = -spec.theta.T - theta_shift;
  const double hi = spec.theta.T - theta_shift;
  const std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / dt)) + 1;
  samples_out = n;
  const double step = (hi - lo) / double(n - 1);
  cd total = 0.0;
  for (const auto& [key, coeff] : table.coeffs) {
    const double omega = table.omega_unit * double(key);
    cd acc = 0.0;
    // theta vanishes with two derivatives at the support edges, so the
    // plain Riemann sum is the trapezoid rule.
    const cd rot = std::exp(kI * omega * step);
    cd phase = std::exp(kI * omega * lo);
    for (std::size_t j = 0; j < n; ++j) {
      const double t = lo + step * double(j);
      acc += spec.theta.eval(t + theta_shift) * phase;
      phase *= rot;
    }
    total += coeff * acc * step;
  }
  return total;
}
}  // namespace

TimeAverage time_averaged_expectation(const BoundSymbol& op,
                                      const EvolutionSpec& spec,
                                      const FiberField& F0, double theta_shift) {
  spec.validate();
  const ToneTable table = build_tones(op, spec, F0);
  double omega_max = 0.0;
  for (const auto& [key, c] : table.coeffs)
    omega_max = std::max(omega_max, std::abs(table.omega_unit * double(key)));
  const double theta_rate = kPi / spec.theta.T;
  const double rate = std::max(omega_max, theta_rate);
  double dt = 2.0 * kPi / (spec.samples_per_cycle * rate);
  const double range = 2.0 * spec.theta.T;
  if (range / dt + 1 < double(spec.min_time_samples))
    dt = range / double(spec.min_time_samples - 1);
  if (range / dt + 1 > double(spec.max_time_samples))
    dt = range / double(spec.max_time_samples - 1);

  TimeAverage out;
  out.dt = dt;
  out.value = quadrature_sum(table, spec, theta_shift, dt, out.samples);
  std::size_t dummy = 0;
  out.value_refined = quadrature_sum(table, spec, theta_shift, dt / 2.0, dummy);
  out.doubling_rel = std::abs(out.value - out.value_refined) /
                     std::max(std::abs(out.value_refined), 1e-30);
  return out;
}

TimeAverage time_averaged_expectation_direct(const BoundSymbol& op,
                                             const EvolutionSpec& spec,
                                             const FiberField& F0,
                                             double theta_shift,
                                             std::size_t samples) {
  spec.validate();
  const double lo = -spec.theta.T - theta_shift;
  const double hi = spec.theta.T - theta_shift;
  const double step = (hi - lo) / double(samples - 1);
  TimeAverage out;
  out.samples = samples;
  out.dt = step;
  cd acc = 0.0;
  for (std::size_t j = 0; j < samples; ++j) {
    const double t = lo + step * double(j);
    const double w = spec.theta.eval(t + theta_shift);
    if (w == 0.0) continue;
    const FiberField Ft = evolve(F0, t, spec);
    const PhysicalState psi_t = inverse_gft(*op.context(), Ft);
    acc += w * inner(op_eps_apply(op, Ft), psi_t) * step;
  }
  out.value = acc;
  out.value_refined = acc;
  return out;
}

EnergyDerivativeCheck energy_derivative_check(const BoundSymbol& op,
                                              const EvolutionSpec& spec,
                                              const FiberField& F0, double t,
                                              double dt) {
  const TransformContext& ctx = *op.context();
  auto E = [&](double tt) {
    const FiberField Ft = evolve(F0, tt, spec);
    return inner(op_eps_apply(op, Ft), inverse_gft(ctx, Ft));
  };
  EnergyDerivativeCheck out;
  out.lhs = kI * std::pow(spec.eps, spec.tau) * (E(t + dt) - E(t - dt)) /
            (2.0 * dt);

  const FiberField Ft = evolve(F0, t, spec);
  const PhysicalState psi = inverse_gft(ctx, Ft);
  const double e2 = spec.eps * spec.eps;
  // [Op, -(eps^2/2) Delta_G] psi = Op(-e2/2 dG psi) - (-e2/2) dG (Op psi)
  FiberField dG = apply_sublaplacian_fiber(Ft);
  PhysicalState dpsi = inverse_gft(ctx, dG);
  dpsi.values *= -0.5 * e2;
  PhysicalState term1 = op_eps_apply(op, forward_gft(ctx, dpsi));
  PhysicalState opd = op_eps_apply(op, Ft);
  PhysicalState term2 =
      inverse_gft(ctx, apply_sublaplacian_fiber(forward_gft(ctx, opd)));
  term2.values *= -0.5 * e2;
  PhysicalState comm = term1;
  comm.values -= term2.values;
  out.rhs = inner(comm, psi);
  const double scale =
      std::max({std::abs(out.lhs), std::abs(out.rhs), 1e-30});
  out.relative_residual = std::abs(out.lhs - out.rhs) / scale;
  return out;
}

}  // namespace htsc
