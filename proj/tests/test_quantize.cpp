#include <doctest.h>

#include <cmath>

#include "htsc/quantize.hpp"
#include "test_helpers.hpp"

using namespace htsc;
using htsc::testing::quant_ctx;
using htsc::testing::random_bandlimited;

namespace {
// Cutoff with plateau covering eps^2-scaled frequencies of the standard
// test data (carrier around bin nz/4) for eps in [0.1, 0.25].
ScalarCutoff wide_g() { return ScalarCutoff::bump(0.015, 0.7, 0.006); }

VectorXd zvec(double v) {
  VectorXd z(1);
  z << v;
  return z;
}
}  // namespace

TEST_CASE("op: identity symbol acts as identity") {
  auto ctx = quant_ctx();
  const auto f = random_bandlimited(*ctx, 3, 1, 1.0, -1, 12);
  BoundSymbol op(ctx, Symbol::separable(XProfile::one(), FiberExpr::identity(),
                                        ScalarCutoff::one(), 3),
                 0.2);
  const auto g = op_eps_apply(op, f);
  // transform-accuracy bound at this reduced grid; the acceptance suite
  // pins 1e-6 at the full desk configuration
  CHECK((g.values - f.values).norm() / f.values.norm() <= 1e-5);
}

TEST_CASE("op: multiplication symbols multiply") {
  auto ctx = quant_ctx();
  const auto f = random_bandlimited(*ctx, 3, 2, 1.0, -1, 12);
  const XProfile a = XProfile::gaussian_z(0.8, zvec(1.1), 2.0);
  BoundSymbol op(ctx,
                 Symbol::separable(a, FiberExpr::identity(), ScalarCutoff::one(), 3),
                 0.15);
  const auto g = op_eps_apply(op, f);
  const VectorXcd want = a.sample(ctx->grid(), VectorXd()).cwiseProduct(f.values);
  CHECK((g.values - want).norm() / want.norm() <= 1e-5);
}

TEST_CASE("op: band projectors are band selective") {
  auto ctx = quant_ctx();
  // Data living in band 2 rows only.
  const auto f2 = random_bandlimited(*ctx, 2, 3, 1.0, /*row_band_only=*/2, 12);
  BoundSymbol p0(ctx, Symbol::separable(XProfile::one(), FiberExpr::projector(0),
                                        wide_g(), 0),
                 0.2);
  BoundSymbol p2(ctx, Symbol::separable(XProfile::one(), FiberExpr::projector(2),
                                        wide_g(), 2),
                 0.2);
  const auto kill = op_eps_apply(p0, f2);
  const auto keep = op_eps_apply(p2, f2);
  CHECK(l2_norm(kill) <= 1e-5 * l2_norm(f2));
  CHECK(l2_norm(keep) >= 0.5 * l2_norm(f2));
}

TEST_CASE("expectation: normalization, reality, anti-diagonal orthogonality") {
  auto ctx = quant_ctx();
  const auto f = random_bandlimited(*ctx, 2, 4, 1.0, -1, 12);
  BoundSymbol ident(ctx, Symbol::separable(XProfile::one(), FiberExpr::identity(),
                                           ScalarCutoff::one(), 2),
                    0.2);
  const cd e1 = expectation(ident, f);
  CHECK(std::abs(e1 - 1.0) <= 1e-6);

  // x-independent Hermitian symbol: real expectation. (With an x-profile
  // the ordering of multiplier and multiplication contributes a genuine
  // O(eps) imaginary part, so reality is only exact in the x-independent
  // case.)
  BoundSymbol herm(ctx,
                   Symbol::separable(XProfile::one(), FiberExpr::projector(1),
                                     wide_g(), 1),
                   0.2);
  const cd e2 = expectation(herm, f);
  CHECK(std::abs(e2.imag()) <= 1e-8);

  const XProfile az = XProfile::gaussian_z(1.3, zvec(-0.4), 1.5);
  BoundSymbol herm_x(ctx, Symbol::separable(az, FiberExpr::projector(1), wide_g(), 1),
                     0.2);
  const cd e3 = expectation(herm_x, f);
  CHECK(std::abs(e3.imag()) <= 0.05 * std::abs(e3));

  // Anti-diagonal symbol against single-band data vanishes.
  const auto f0 = random_bandlimited(*ctx, 0, 5, 1.0, /*row_band_only=*/0, 12);
  Symbol anti = Symbol::separable(
      XProfile::one(),
      FiberExpr::product({FiberExpr::projector(1),
                          FiberExpr::field_rep(FieldSelector::P, 0),
                          FiberExpr::projector(0)}),
      wide_g(), 1);
  anti.terms[0].band_row = 1;
  anti.terms[0].band_col = 0;
  BoundSymbol opa(ctx, anti, 0.2);
  CHECK(std::abs(expectation(opa, f0)) <= 1e-6);
}

TEST_CASE("op adjoint and coarse norm bound") {
  auto ctx = quant_ctx();
  const auto f = random_bandlimited(*ctx, 2, 6, 1.0, -1, 12);
  const auto h = random_bandlimited(*ctx, 2, 7, 1.0, -1, 12);
  const XProfile a = XProfile::gaussian_z(0.9, zvec(0.7), 1.8);  // real profile
  Symbol sym = Symbol::separable(a, FiberExpr::projector(1), wide_g(), 1);
  BoundSymbol op(ctx, sym, 0.18);
  // The exact adjoint reverses the operator order: multiplier-then-multiply
  // against multiply-then-multiplier. <Op(a x M) f, h> = <f, M-apply(a h)>.
  Symbol msym = Symbol::separable(XProfile::one(), FiberExpr::projector(1),
                                  wide_g(), 1);
  BoundSymbol mop(ctx, msym, 0.18);
  const VectorXcd aval = a.sample(ctx->grid(), VectorXd());
  PhysicalState ah = h;
  ah.values = aval.conjugate().cwiseProduct(h.values);
  const cd lhs = inner(op_eps_apply(op, f), h);
  const cd rhs = inner(f, op_eps_apply(mop, ah));
  CHECK(std::abs(lhs - rhs) / std::abs(lhs) <= 1e-7);

  // Self-adjointness in the same-order sense holds exactly only for
  // x-independent symbols.
  const cd sl = inner(op_eps_apply(mop, f), h);
  const cd sr = inner(f, op_eps_apply(mop, h));
  CHECK(std::abs(sl - sr) / std::abs(sl) <= 1e-7);

  // ||Op(a (x) M) f|| <= sup|a| sup||M|| ||f|| + tolerance.
  CHECK(l2_norm(op_eps_apply(op, f)) <= 0.9 * 1.0 * l2_norm(f) + 1e-8);
}

TEST_CASE("split into diagonal and anti-diagonal parts") {
  auto ctx = quant_ctx();
  // Already diagonal: split returns (sigma, 0).
  Symbol diag = Symbol::separable(XProfile::one(), FiberExpr::projector(1),
                                  wide_g(), 1);
  auto [d1, a1] = split_diag(diag);
  CHECK(d1.terms.size() == 1);
  CHECK(a1.terms.empty());

  // A ladder symbol is purely anti-diagonal: the diagonal mask evaluates
  // to zero at every frequency.
  Symbol lad = Symbol::separable(XProfile::one(),
                                 FiberExpr::field_rep(FieldSelector::P, 0),
                                 wide_g(), 3);
  auto [d2, a2] = split_diag(lad);
  VectorXd lam = zvec(0.3);
  const MatrixXcd d2m =
      eval_fiber(*d2.terms[0].fiber, ctx->group(), lam, ctx->frame());
  CHECK(d2m.cwiseAbs().maxCoeff() == 0.0);

  // Random two-band symbol: the two parts reassemble exactly.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss;
  const int N = ctx->frame()->size();
  MatrixXcd R = MatrixXcd::Zero(N, N);
  const auto [b0, b1] = ctx->frame()->band_range(1);
  for (int r = 0; r < b1; ++r)
    for (int c = 0; c < b1; ++c) R(r, c) = cd(gauss(rng), gauss(rng));
  (void)b0;
  // wrap the raw matrix as a spectral-free expression via sum of scaled
  // projector sandwiches; easier: build from products with the matrix
  // injected through a SpectralFn is not possible, so use mask nodes on a
  // composite: P*P products reproduce arbitrary two-band couplings poorly,
  // hence evaluate masks directly on a ladder-mix expression instead.
  auto mix = FiberExpr::sum(
      {FiberExpr::field_rep(FieldSelector::P, 0),
       FiberExpr::product({FiberExpr::field_rep(FieldSelector::P, 0),
                           FiberExpr::field_rep(FieldSelector::Q, 0)}),
       FiberExpr::projector(1)});
  Symbol two = Symbol::separable(XProfile::one(), mix, wide_g(), 2);
  auto [dd, aa] = split_diag(two);
  const MatrixXcd full = eval_fiber(*two.terms[0].fiber, ctx->group(), lam,
                                    ctx->frame());
  const MatrixXcd dm = eval_fiber(*dd.terms[0].fiber, ctx->group(), lam,
                                  ctx->frame());
  const MatrixXcd am = eval_fiber(*aa.terms[0].fiber, ctx->group(), lam,
                                  ctx->frame());
  CHECK((dm + am - full).cwiseAbs().maxCoeff() <= 1e-12);
  // The diagonal part commutes with H entrywise.
  const MatrixXcd H = hamiltonian(lam, ctx->frame()).mat;
  CHECK((dm * H - H * dm).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("band cutoff symbol") {
  auto ctx = quant_ctx();
  Symbol sigma = Symbol::separable(XProfile::gaussian_z(1.0, zvec(0.0), 2.0),
                                   FiberExpr::identity(),
                                   ScalarCutoff::bump(0.2, 0.8), 4);
  const VectorXd lam = zvec(0.45);  // inside the plateau

  // Small u: identical to the plain compression Pi_1 sigma Pi_1.
  const Symbol cut_small = band_cutoff_symbol(sigma, 1, 1, 0.05);
  const MatrixXcd m_small = eval_fiber(*cut_small.terms[0].fiber, ctx->group(),
                                       lam, ctx->frame());
  const MatrixXcd plain =
      eval_fiber(*FiberExpr::product({FiberExpr::projector(1), sigma.terms[0].fiber,
                                      FiberExpr::projector(1)}),
                 ctx->group(), lam, ctx->frame());
  CHECK((m_small - plain).cwiseAbs().maxCoeff() <= 1e-14);

  // Large u: the step kills the band entirely. (u capped at 1, so compare
  // with the energy scale: u = 1 > 2 * |l|(2n+d) = 2*0.45*3 needs u/2 > e;
  // with e = 1.35 pick a smaller lambda instead.)
  const VectorXd lam_small = zvec(0.21);
  const Symbol cut_big = band_cutoff_symbol(sigma, 1, 1, 1.0);
  // e = 0.21*3 = 0.63 > u/2 = 0.5 -> partially passed; use band 0: e = 0.21.
  const Symbol cut_b0 = band_cutoff_symbol(sigma, 0, 0, 1.0);
  const MatrixXcd m_b0 = eval_fiber(*cut_b0.terms[0].fiber, ctx->group(),
                                    lam_small, ctx->frame());
  CHECK(m_b0.cwiseAbs().maxCoeff() <= 1e-14);  // 0.21 < u/2

  // u-halving sequence applied to fixed vectors is Cauchy.
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  const int N = ctx->frame()->size();
  std::vector<VectorXcd> vecs;
  for (int i = 0; i < 10; ++i) {
    VectorXcd v(N);
    for (int k = 0; k < N; ++k) v[k] = cd(gauss(rng), gauss(rng));
    vecs.push_back(v.normalized());
  }
  double prev_delta = -1.0;
  MatrixXcd last = eval_fiber(*band_cutoff_symbol(sigma, 1, 1, 0.4).terms[0].fiber,
                              ctx->group(), lam, ctx->frame());
  for (double u = 0.2; u >= 0.02; u *= 0.5) {
    const MatrixXcd cur = eval_fiber(*band_cutoff_symbol(sigma, 1, 1, u).terms[0].fiber,
                                     ctx->group(), lam, ctx->frame());
    double delta = 0.0;
    for (const auto& v : vecs) delta = std::max(delta, ((cur - last) * v).norm());
    if (prev_delta >= 0) CHECK(delta <= prev_delta + 1e-8);
    prev_delta = delta;
    last = cur;
  }
  CHECK(prev_delta <= 1e-8);
  CHECK_THROWS_AS(band_cutoff_symbol(sigma, 1, 1, 1.5), DomainError);
}

TEST_CASE("band flow: group law and shift arithmetic") {
  Symbol sigma = Symbol::separable(XProfile::gaussian_z(1.0, zvec(0.3), 0.8),
                                   FiberExpr::projector(2),
                                   ScalarCutoff::bump(0.2, 0.8), 2);
  const int d = 1;
  const Symbol moved = flow_phi(sigma, 0.4, d);
  // Band 2, d = 1: the profile translates by 0.4 * (2*2+1)/2 = 1.0 along
  // +lambda-hat, i.e. the sampler's shift coefficient is -1.
  CHECK(moved.terms[0].a.central_shift == doctest::Approx(-1.0));

  const Symbol zero = flow_phi(sigma, 0.0, d);
  CHECK(zero.terms[0].a.central_shift == doctest::Approx(0.0));

  // Composition law: flows add exactly.
  const Symbol ab = flow_phi(flow_phi(sigma, 0.275, d), -0.4, d);
  const Symbol once = flow_phi(sigma, -0.125, d);
  CHECK(std::abs(ab.terms[0].a.central_shift - once.terms[0].a.central_shift) <=
        1e-12);

  // Multi-band diagonal symbols expand into per-band compressions.
  Symbol multi = Symbol::separable(XProfile::one(),
                                   FiberExpr::spectral([](double e) { return 1.0 / e; },
                                                       "1/H"),
                                   ScalarCutoff::bump(0.2, 0.8), 3);
  const Symbol moved2 = flow_phi(multi, 1.0, d);
  CHECK(moved2.terms.size() == 4);
  for (int n = 0; n <= 3; ++n)
    CHECK(moved2.terms[n].a.central_shift ==
          doctest::Approx(-(2.0 * n + 1) / 2.0));
}

TEST_CASE("commutator expansion" * doctest::timeout(600)) {
  auto ctx = quant_ctx();
  const auto f = random_bandlimited(*ctx, 2, 31, 1.0, -1, 12);
  const auto h = random_bandlimited(*ctx, 2, 32, 1.0, -1, 12);

  // x-independent symbol: the epsilon terms vanish identically.
  Symbol s0 = Symbol::separable(XProfile::one(), FiberExpr::projector(1), wide_g(), 1);
  const auto c0 = commutator_expansion_check(ctx, s0, 0.2, f, h);
  CHECK(c0.relative_residual <= 1e-8);

  // Diagonal symbol with a central profile.
  Symbol s1 = Symbol::separable(XProfile::gaussian_z(1.0, zvec(0.5), 1.4),
                                FiberExpr::projector(0), wide_g(), 0);
  for (double eps : {0.2, 0.1}) {
    const auto c = commutator_expansion_check(ctx, s1, eps, f, h);
    CHECK(c.relative_residual <= 1e-5);
  }

  // Generic two-band symbol.
  auto mix = FiberExpr::sum(
      {FiberExpr::projector(0),
       FiberExpr::scaled(cd(0.0, 0.7),
                         FiberExpr::product({FiberExpr::projector(1),
                                             FiberExpr::field_rep(FieldSelector::Q, 0),
                                             FiberExpr::projector(0)}))});
  Symbol s2 = Symbol::separable(XProfile::gaussian_z(1.0, zvec(-0.8), 1.1), mix,
                                wide_g(), 1);
  for (double eps : {0.2, 0.1}) {
    const auto c = commutator_expansion_check(ctx, s2, eps, f, h);
    CHECK(c.relative_residual <= 1e-5);
  }
}

TEST_CASE("sigma1 identities" * doctest::timeout(600)) {
  auto ctx = quant_ctx();

  // x-independent diagonal symbol: V.pi(V) sigma = 0 and [sigma_1, H] = 0.
  Symbol s0 = Symbol::separable(XProfile::one(), FiberExpr::projector(1),
                                ScalarCutoff::bump(0.1, 0.6), 1);
  const auto r0 = sigma1_identity_check(ctx, s0, 2);
  CHECK(r0.part2 <= 1e-8);
  CHECK(r0.part3 <= 1e-8);

  // Central profile, band 0: identities hold with grid derivatives. The
  // sign convention is pinned by the check itself: [sigma_1, H] equals
  // minus V.pi(V) sigma (non-vacuously: the derivative symbol is O(1)).
  Symbol s1 = Symbol::separable(XProfile::gaussian_z(1.0, zvec(0.4), 1.2),
                                FiberExpr::projector(0),
                                ScalarCutoff::bump(0.1, 0.6), 0);
  const auto r1 = sigma1_identity_check(ctx, s1, 2);
  CHECK(r1.part2 <= 1e-6);
  CHECK(r1.part3 <= 1e-5);

  // Non-vacuity: the derivative symbol itself is far from zero.
  const Symbol vps = derivative_symbol(*ctx, s1);
  VectorXd lam = zvec(0.3);
  double sup = 0.0;
  for (const auto& t : vps.terms) {
    const VectorXcd prof = t.a.sample(ctx->grid(), VectorXd());
    sup = std::max(sup, prof.cwiseAbs().maxCoeff() * std::abs(t.g.eval(lam)));
  }
  CHECK(sup >= 0.05);

  // Multi-band H-commuting symbol (checks the band sum in part 3).
  Symbol s2 = Symbol::separable(XProfile::gaussian_z(0.7, zvec(-0.6), 0.9),
                                FiberExpr::spectral(
                                    [](double e) { return std::exp(-0.5 * e); },
                                    "exp(-e/2)"),
                                ScalarCutoff::bump(0.1, 0.6), -1);
  const auto r2 = sigma1_identity_check(ctx, s2, 2);
  CHECK(r2.part2 <= 1e-6);
  CHECK(r2.part3 <= 1e-5);

  CHECK_THROWS_AS(
      sigma1_construct(*ctx, Symbol::separable(XProfile::one(),
                                               FiberExpr::projector(0),
                                               ScalarCutoff::one(), 0)),
      DomainError);
}

TEST_CASE("symbol DSL parsing") {
  auto ctx = quant_ctx();
  const std::string text = R"({
    "a": {"type": "gaussian", "z_center": [0.5], "z_width": 1.5},
    "fiber": {"type": "band_projector", "n": 2},
    "g": {"support": [0.5, 2.0]}
  })";
  const Symbol s = parse_symbol(text, ctx->grid());
  CHECK(s.terms.size() == 1);
  CHECK(s.band_bound == 2);
  CHECK(s.terms[0].g.lo == doctest::Approx(0.5));
  CHECK(s.in_AH_fragment());

  const Symbol anti = parse_symbol(R"({
    "fiber": {"type": "compression", "n": 0, "np": 1},
    "g": {"support": [0.3, 1.0]}
  })",
                                   ctx->grid());
  VectorXd lam = zvec(0.6);
  const MatrixXcd m = eval_fiber(*anti.terms[0].fiber, ctx->group(), lam,
                                 ctx->frame());
  CHECK(m.cwiseAbs().maxCoeff() > 0.0);
  // band (0,1) block only
  CHECK(std::abs(m(0, 0)) == 0.0);
  CHECK(std::abs(m(0, 1)) > 0.0);
}
