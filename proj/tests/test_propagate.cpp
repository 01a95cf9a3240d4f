#include <doctest.h>

#include <cmath>

#include "htsc/propagate.hpp"
#include "test_helpers.hpp"

using namespace htsc;
using htsc::testing::quant_ctx;
using htsc::testing::random_bandlimited;

namespace {
const cd kI(0.0, 1.0);

EvolutionSpec spec_of(double eps, double tau, double T = 1.0) {
  EvolutionSpec s;
  s.eps = eps;
  s.tau = tau;
  s.theta = ThetaWindow::bump(T);
  return s;
}
}  // namespace

TEST_CASE("theta window has unit mass") {
  const ThetaWindow th = ThetaWindow::bump(1.7);
  double acc = 0.0;
  const int n = 20001;
  for (int i = 0; i < n; ++i) {
    const double t = -1.7 + 3.4 * i / (n - 1);
    acc += th.eval(t) * 3.4 / (n - 1);
  }
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("spectral propagator: phases, unitarity, group law") {
  auto ctx = quant_ctx();
  const auto f = random_bandlimited(*ctx, 2, 11, 1.0, -1, 12);
  const auto F0 = forward_gft(*ctx, f);
  const auto spec = spec_of(0.25, 2.0);

  // t = 0 is the identity.
  const auto Fz = evolve(F0, 0.0, spec);
  double w = 0.0;
  for (std::size_t i = 0; i < F0.ops.size(); ++i)
    w = std::max(w, (Fz.ops[i] - F0.ops[i]).cwiseAbs().maxCoeff());
  CHECK(w == 0.0);

  // Single band (n, lambda): a pure phase.
  FiberField single = FiberField::zero(ctx->grid(), ctx->frame());
  const std::size_t li = 20;
  single.ops[li](1, 3) = 1.0;  // row band 1
  const double t = 0.37;
  const auto ev = evolve(single, t, spec);
  const double lam = ctx->lambda_grid()[li].lambda.norm();
  const cd want = std::exp(-kI * std::pow(0.25, 0.0) * t * lam * 3.0 / 2.0);
  CHECK(std::abs(ev.ops[li](1, 3) - want) <= 1e-14);

  // Unitarity drift over 100 random steps.
  FiberField cur = F0;
  const double n0 = hs_norm(cur);
  for (int i = 0; i < 100; ++i) cur = evolve(cur, 0.01 + 1e-4 * i, spec);
  CHECK(std::abs(hs_norm(cur) - n0) <= 1e-12 * n0);

  // Group property: phases add.
  const auto two = evolve(evolve(F0, 0.21, spec), 0.34, spec);
  const auto one = evolve(F0, 0.55, spec);
  double drift = 0.0;
  for (std::size_t i = 0; i < F0.ops.size(); ++i)
    drift = std::max(drift, (two.ops[i] - one.ops[i]).cwiseAbs().maxCoeff());
  CHECK(drift <= 1e-12);
}

TEST_CASE("propagator commutes with spectral cutoffs") {
  auto ctx = quant_ctx();
  const auto f = random_bandlimited(*ctx, 3, 12, 1.0, -1, 12);
  const auto F0 = forward_gft(*ctx, f);
  const auto spec = spec_of(0.2, 2.0);
  const auto a = spectral_cutoff(evolve(F0, 0.4, spec), CutoffKind::High, 0.3, 0.2);
  const auto b = evolve(spectral_cutoff(F0, CutoffKind::High, 0.3, 0.2), 0.4, spec);
  double w = 0.0;
  for (std::size_t i = 0; i < a.ops.size(); ++i)
    w = std::max(w, (a.ops[i] - b.ops[i]).cwiseAbs().maxCoeff());
  CHECK(w == 0.0);
}

TEST_CASE("split-step oracle matches the spectral propagator") {
  auto ctx = quant_ctx();
  const auto grp = GroupStructure::heisenberg(1);
  const auto f = random_bandlimited(*ctx, 2, 13, 1.0, -1, 12);
  const auto spec = spec_of(0.3, 2.0);
  const double t = 0.25;
  const auto exact = inverse_gft(*ctx, evolve(forward_gft(*ctx, f), t, spec));
  const auto strang = sublaplacian_evolve_strang(grp, f, t, 0.3, 2.0, 384);
  CHECK((exact.values - strang.values).norm() / exact.values.norm() <= 1e-5);

  // Second-order convergence, measured where the splitting error still
  // dominates the two routes' common discretization floor.
  const auto coarse = sublaplacian_evolve_strang(grp, f, t, 0.3, 2.0, 12);
  const auto fine = sublaplacian_evolve_strang(grp, f, t, 0.3, 2.0, 48);
  const double e1 = (coarse.values - exact.values).norm();
  const double e2 = (fine.values - exact.values).norm();
  CHECK(e1 / e2 >= 8.0);
}

TEST_CASE("euclidean propagator") {
  GridSpec g;
  g.d = 1;
  g.p = 1;
  g.Lv = 4.0;
  g.Lz = 8.0;
  g.nv = 64;
  g.nz = 8;
  PhysicalState phi = PhysicalState::zero(g);
  // Plane-wave packet: gaussian envelope at frequency omega0/eps.
  const double eps = 0.1, omega0 = 1.0;
  const std::size_t zc = g.z_count();
  for (int i0 = 0; i0 < g.nv; ++i0)
    for (int i1 = 0; i1 < g.nv; ++i1) {
      const double v0 = g.v_value(i0), v1 = g.v_value(i1);
      const cd val = std::exp(-0.5 * (v0 * v0 + v1 * v1) / (0.6 * 0.6)) *
                     std::exp(kI * omega0 * v0 / eps);
      for (std::size_t zi = 0; zi < zc; ++zi)
        phi.values[(static_cast<std::size_t>(i0) * g.nv + i1) * zc + zi] = val;
    }
  phi.values /= l2_norm(phi);

  const auto same = euclidean_evolve(phi, 0.0, eps, 1.0);
  CHECK((same.values - phi.values).norm() <= 1e-12);

  const double t = 0.8;
  const auto moved = euclidean_evolve(phi, t, eps, 1.0);
  CHECK(std::abs(l2_norm(moved) - 1.0) <= 1e-12);

  // Group-velocity drift: centroid moves by |omega0| t along v0.
  auto centroid0 = [&](const PhysicalState& s) {
    double num = 0.0, den = 0.0;
    for (int i0 = 0; i0 < g.nv; ++i0)
      for (int i1 = 0; i1 < g.nv; ++i1)
        for (std::size_t zi = 0; zi < zc; ++zi) {
          const double w =
              std::norm(s.values[(static_cast<std::size_t>(i0) * g.nv + i1) * zc + zi]);
          num += g.v_value(i0) * w;
          den += w;
        }
    return num / den;
  };
  CHECK(centroid0(moved) - centroid0(phi) == doctest::Approx(omega0 * t).epsilon(0.02));
}

TEST_CASE("time averages: tone route equals the direct route") {
  auto ctx = quant_ctx(32, 16, 8);
  // Two-band data so cross tones exist.
  const auto f = random_bandlimited(*ctx, 1, 14, 0.8, -1, 6);
  const auto F0 = forward_gft(*ctx, f);
  auto spec = spec_of(0.3, 1.0, 0.8);

  VectorXd zc1(1);
  zc1 << 0.5;
  Symbol sym = Symbol::separable(XProfile::gaussian_z(1.0, zc1, 1.5),
                                 FiberExpr::projector(0),
                                 ScalarCutoff::bump(0.01, 0.9, 0.004), 0);
  BoundSymbol op(ctx, sym, spec.eps);

  const auto tone = time_averaged_expectation(op, spec, F0);
  const auto direct = time_averaged_expectation_direct(op, spec, F0, 0.0, 801);
  CHECK(std::abs(tone.value - direct.value) /
            std::max(std::abs(direct.value), 1e-12) <=
        1e-4);
  CHECK(tone.doubling_rel <= 1e-4);

  // With a theta shift as well.
  const auto tone_s = time_averaged_expectation(op, spec, F0, 0.3);
  const auto direct_s = time_averaged_expectation_direct(op, spec, F0, 0.3, 801);
  CHECK(std::abs(tone_s.value - direct_s.value) /
            std::max(std::abs(direct_s.value), 1e-12) <=
        1e-4);
}

TEST_CASE("time averages: unitarity and stationary diagonals") {
  auto ctx = quant_ctx();
  const auto f = random_bandlimited(*ctx, 2, 15, 1.0, -1, 12);
  const auto F0 = forward_gft(*ctx, f);
  auto spec = spec_of(0.2, 2.0, 1.2);

  // Identity symbol: the average is the (unit) norm, for any trajectory.
  BoundSymbol ident(ctx,
                    Symbol::separable(XProfile::one(), FiberExpr::identity(),
                                      ScalarCutoff::one(), 2),
                    spec.eps);
  const auto avg = time_averaged_expectation(ident, spec, F0);
  CHECK(std::abs(avg.value - 1.0) <= 1e-5);

  // Single-band data, x-independent diagonal symbol: the expectation is
  // time-independent (exact phase cancellation), so the average equals the
  // instantaneous value.
  const auto f1 = random_bandlimited(*ctx, 1, 19, 1.0, /*row_band_only=*/1, 12);
  const auto F1 = forward_gft(*ctx, f1);
  BoundSymbol diag(ctx,
                   Symbol::separable(XProfile::one(), FiberExpr::projector(1),
                                     ScalarCutoff::bump(0.015, 0.7, 0.006), 1),
                   spec.eps);
  const auto avgd = time_averaged_expectation(diag, spec, F1);
  // the average integrates the trajectory psi(t) = inverse(evolve(F1, t))
  const cd inst = inner(op_eps_apply(diag, F1), inverse_gft(*ctx, F1));
  CHECK(std::abs(avgd.value - inst) <= 1e-8);
}

TEST_CASE("energy derivative identity at sampled times") {
  auto ctx = quant_ctx();
  const auto f = random_bandlimited(*ctx, 2, 16, 1.0, -1, 12);
  const auto F0 = forward_gft(*ctx, f);
  auto spec = spec_of(0.2, 2.0);
  VectorXd zc1(1);
  zc1 << -0.3;
  Symbol sym = Symbol::separable(XProfile::gaussian_z(1.0, zc1, 1.3),
                                 FiberExpr::projector(0),
                                 ScalarCutoff::bump(0.015, 0.7, 0.006), 0);
  BoundSymbol op(ctx, sym, spec.eps);
  const auto chk = energy_derivative_check(op, spec, F0, 0.15, 1e-3);
  CHECK(chk.relative_residual <= 1e-4);
}
