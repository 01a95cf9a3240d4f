#include "htsc/quantize.hpp"

#include <cmath>
#include <map>

namespace htsc {

namespace {
const cd kI(0.0, 1.0);
constexpr double kActiveTol = 1e-300;

PhysicalState dG_fiber(const TransformContext& ctx, const PhysicalState& f) {
  return inverse_gft(ctx, apply_sublaplacian_fiber(forward_gft(ctx, f)));
}
}  // namespace

BoundSymbol::BoundSymbol(ContextPtr ctx, Symbol symbol, double eps)
    : ctx_(std::move(ctx)), symbol_(std::move(symbol)), eps_(eps) {
  if (!(eps > 0)) throw DomainError("BoundSymbol: eps must be positive");
  const LambdaGrid& lg = ctx_->lambda_grid();
  const std::size_t nl = lg.size();
  mult_.resize(symbol_.terms.size());
  active_.resize(symbol_.terms.size());
  for (std::size_t t = 0; t < symbol_.terms.size(); ++t) {
    mult_[t].resize(nl);
    active_[t].assign(nl, 0);
  }
  parallel_for(
      nl,
      [&](std::size_t k) {
        const VectorXd lam_scaled = eps_ * eps_ * lg[k].lambda;
        for (std::size_t t = 0; t < symbol_.terms.size(); ++t) {
          const auto& term = symbol_.terms[t];
          const double gval = term.g.eval(lam_scaled);
          if (std::abs(gval) < kActiveTol) continue;
          mult_[t][k] = (term.coeff * gval) *
                        eval_fiber(*term.fiber, ctx_->group(), lam_scaled,
                                   ctx_->frame());
          active_[t][k] = 1;
        }
      },
      ctx_->threads());
}

const MatrixXcd& BoundSymbol::multiplier(std::size_t term, std::size_t k) const {
  return mult_[term][k];
}

bool BoundSymbol::slice_active(std::size_t term, std::size_t k) const {
  return active_[term][k] != 0;
}

VectorXd BoundSymbol::term_shift(std::size_t term, std::size_t k) const {
  const auto& a = symbol_.terms[term].a;
  if (a.central_shift == 0.0) return VectorXd();
  const VectorXd& lam = ctx_->lambda_grid()[k].lambda;
  return (a.central_shift / lam.norm()) * lam;
}

bool BoundSymbol::empty_support() const {
  for (const auto& row : active_)
    for (char c : row)
      if (c) return false;
  return true;
}

PhysicalState op_eps_apply(const BoundSymbol& op, const PhysicalState& f) {
  return op_eps_apply(op, forward_gft(*op.context(), f));
}

PhysicalState op_eps_apply(const BoundSymbol& op, const FiberField& F) {
  const TransformContext& ctx = *op.context();
  const LambdaGrid& lg = ctx.lambda_grid();
  const std::size_t nl = lg.size();
  PhysicalState out = PhysicalState::zero(ctx.grid());

  for (std::size_t t = 0; t < op.symbol().terms.size(); ++t) {
    const auto& term = op.symbol().terms[t];

    std::vector<VectorXcd> traces(nl);
    parallel_for(
        nl,
        [&](std::size_t k) {
          if (!op.slice_active(t, k)) return;
          const MatrixXcd G = op.multiplier(t, k) * F.ops[k];
          traces[k] = trace_field(ctx, k, G);
        },
        ctx.threads());

    if (!term.a.shifted()) {
      PhysicalState part = assemble_from_traces(ctx, traces);
      if (term.a.trivial() && term.a.amplitude == 1.0) {
        out.values += part.values;
      } else {
        const VectorXcd aval = term.a.sample(ctx.grid(), VectorXd());
        out.values += aval.cwiseProduct(part.values);
      }
    } else {
      // Shift depends on lambda only through its direction; group the
      // slices by shift vector, assemble each group, multiply by the
      // shifted profile.
      std::map<std::vector<double>, std::vector<std::size_t>> groups;
      for (std::size_t k = 0; k < nl; ++k) {
        if (!op.slice_active(t, k) || traces[k].size() == 0) continue;
        const VectorXd s = op.term_shift(t, k);
        std::vector<double> key(s.data(), s.data() + s.size());
        groups[key].push_back(k);
      }
      for (const auto& [key, members] : groups) {
        std::vector<VectorXcd> sub(nl);
        for (std::size_t k : members) sub[k] = traces[k];
        PhysicalState part = assemble_from_traces(ctx, sub);
        const VectorXd shift =
            Eigen::Map<const VectorXd>(key.data(), key.size());
        const VectorXcd aval = term.a.sample(ctx.grid(), shift);
        out.values += aval.cwiseProduct(part.values);
      }
    }
  }
  return out;
}

cd expectation(const BoundSymbol& op, const PhysicalState& f) {
  return inner(op_eps_apply(op, f), f);
}

cd expectation(const BoundSymbol& op, const FiberField& F, const PhysicalState& f) {
  return inner(op_eps_apply(op, F), f);
}

std::pair<Symbol, Symbol> split_diag(const Symbol& sigma) {
  if (!sigma.in_AH_fragment())
    throw DomainError("split_diag: symbol is outside the A_H fragment");
  Symbol diag, anti;
  diag.band_bound = anti.band_bound = sigma.band_bound;
  for (const auto& t : sigma.terms) {
    if (t.band_row >= 0 && t.band_row == t.band_col) {
      diag.terms.push_back(t);
      continue;
    }
    if (t.band_row >= 0 && t.band_col >= 0 && t.band_row != t.band_col) {
      anti.terms.push_back(t);
      continue;
    }
    if (fiber_is_diagonal(*t.fiber)) {
      diag.terms.push_back(t);
      continue;
    }
    SymbolTerm td = t;
    td.fiber = FiberExpr::mask_diagonal(t.fiber);
    diag.terms.push_back(std::move(td));
    SymbolTerm ta = t;
    ta.fiber = FiberExpr::mask_anti(t.fiber);
    anti.terms.push_back(std::move(ta));
  }
  return {std::move(diag), std::move(anti)};
}

Symbol band_cutoff_symbol(const Symbol& sigma, int n, int np, double u) {
  if (!(u > 0.0) || u > 1.0)
    throw DomainError("band_cutoff_symbol: u must lie in (0, 1]");
  // psi(H/u) with psi the smooth 0->1 step: identical to the plain band
  // compression once every energy on the frequency support exceeds u, zero
  // once u/2 exceeds them all.
  auto cut = FiberExpr::spectral(
      [u](double e) { return smooth_step(e / u); }, "step(H/u)");
  Symbol out;
  out.band_bound = std::max(n, np);
  for (const auto& t : sigma.terms) {
    SymbolTerm s = t;
    s.fiber = FiberExpr::product(
        {cut, FiberExpr::projector(n), t.fiber, FiberExpr::projector(np), cut});
    s.band_row = n;
    s.band_col = np;
    out.terms.push_back(std::move(s));
  }
  return out;
}

Symbol flow_phi(const Symbol& sigma_d, double s, int d) {
  Symbol out;
  out.band_bound = sigma_d.band_bound;
  for (const auto& t : sigma_d.terms) {
    if (t.band_row >= 0 && t.band_row == t.band_col) {
      SymbolTerm moved = t;
      // (sigma o Psi^r)(x) = sigma(Exp(r Z^(l)) x): profile a(z + r lambda),
      // r = s(2n+d)/(2|l|); the sampler subtracts its shift coefficient.
      moved.a.central_shift -= s * (2.0 * t.band_row + d) / 2.0;
      out.terms.push_back(std::move(moved));
      continue;
    }
    if (!fiber_is_diagonal(*t.fiber) || sigma_d.band_bound < 0)
      throw DomainError("flow_phi: symbol must be H-diagonal with finite bands");
    for (int n = 0; n <= sigma_d.band_bound; ++n) {
      SymbolTerm comp = t;
      comp.fiber = FiberExpr::product(
          {FiberExpr::projector(n), t.fiber, FiberExpr::projector(n)});
      comp.band_row = comp.band_col = n;
      comp.a.central_shift -= s * (2.0 * n + d) / 2.0;
      out.terms.push_back(std::move(comp));
    }
  }
  return out;
}

Symbol derivative_symbol(const TransformContext& ctx, const Symbol& sigma) {
  Symbol out;
  out.band_bound = sigma.band_bound >= 0 ? sigma.band_bound + 1 : -1;
  for (const auto& t : sigma.terms) {
    for (int r = 0; r < ctx.grid().vdim(); ++r) {
      SymbolTerm nt = t;
      nt.a = left_field_derivative(ctx.group(), ctx.grid(), t.a, r);
      nt.fiber = FiberExpr::product({FiberExpr::fixed_field(r), t.fiber});
      nt.band_row = nt.band_col = -1;
      out.terms.push_back(std::move(nt));
    }
  }
  return out;
}

Symbol sublaplacian_symbol(const TransformContext& ctx, const Symbol& sigma) {
  Symbol out;
  out.band_bound = sigma.band_bound;
  for (const auto& t : sigma.terms) {
    for (int r = 0; r < ctx.grid().vdim(); ++r) {
      const XProfile d1 = left_field_derivative(ctx.group(), ctx.grid(), t.a, r);
      SymbolTerm nt = t;
      nt.a = left_field_derivative(ctx.group(), ctx.grid(), d1, r);
      out.terms.push_back(std::move(nt));
    }
  }
  return out;
}

Symbol h_commutator_symbol(const Symbol& sigma) {
  auto H = FiberExpr::spectral([](double e) { return e; }, "H");
  Symbol out;
  out.band_bound = sigma.band_bound;
  for (const auto& t : sigma.terms) {
    SymbolTerm nt = t;
    nt.fiber = FiberExpr::sum(
        {FiberExpr::product({H, t.fiber}),
         FiberExpr::scaled(-1.0, FiberExpr::product({t.fiber, H}))});
    nt.band_row = nt.band_col = -1;
    out.terms.push_back(std::move(nt));
  }
  return out;
}

Symbol sigma1_construct(const TransformContext& ctx, const Symbol& sigma) {
  if (!(sigma.lambda_min() > 0.0))
    throw DomainError("sigma1_construct: cutoff must vanish near lambda = 0");
  const GroupStructure& grp = ctx.group();
  Symbol out;
  out.band_bound = sigma.band_bound >= 0 ? sigma.band_bound + 1 : -1;
  for (const auto& t : sigma.terms) {
    std::vector<XProfile> da;
    for (int r = 0; r < ctx.grid().vdim(); ++r)
      da.push_back(left_field_derivative(grp, ctx.grid(), t.a, r));
    for (int m = 0; m < grp.p; ++m) {
      for (int r = 0; r < 2 * grp.d; ++r) {
        for (int k = 0; k < 2 * grp.d; ++k) {
          const double b = grp.B[m](r, k);
          if (b == 0.0) continue;
          SymbolTerm nt = t;
          nt.coeff = t.coeff * b * (-1.0 / (2.0 * kI));
          nt.a = da[r];
          nt.fiber = FiberExpr::product({FiberExpr::fixed_field(k), t.fiber});
          nt.g = t.g;
          nt.g.component = m;
          nt.g.inv_norm_power += 2;
          nt.band_row = nt.band_col = -1;
          out.terms.push_back(std::move(nt));
        }
      }
    }
  }
  return out;
}

CommutatorCheck commutator_expansion_check(const ContextPtr& ctx, const Symbol& sigma,
                                           double eps, const PhysicalState& f,
                                           const PhysicalState& g) {
  const double e2 = eps * eps;
  BoundSymbol op(ctx, sigma, eps);
  BoundSymbol op_comm(ctx, h_commutator_symbol(sigma), eps);
  BoundSymbol op_deriv(ctx, derivative_symbol(*ctx, sigma), eps);
  BoundSymbol op_lap(ctx, sublaplacian_symbol(*ctx, sigma), eps);

  const PhysicalState of = op_eps_apply(op, f);
  PhysicalState lhs = dG_fiber(*ctx, of);
  lhs.values *= -e2;
  const PhysicalState df = [&] {
    PhysicalState d = dG_fiber(*ctx, f);
    d.values *= -e2;
    return d;
  }();
  lhs.values -= op_eps_apply(op, df).values;

  PhysicalState rhs = op_eps_apply(op_comm, f);
  rhs.values -= 2.0 * eps * op_eps_apply(op_deriv, f).values;
  rhs.values -= e2 * op_eps_apply(op_lap, f).values;

  CommutatorCheck out;
  out.lhs = inner(lhs, g);
  out.rhs = inner(rhs, g);
  // Normalize by the size of the constituent bilinear forms, not the
  // commutator itself (which may vanish identically).
  const double scale =
      std::max({std::abs(inner(dG_fiber(*ctx, of), g)) * e2,
                std::abs(inner(op_eps_apply(op, df), g)), std::abs(out.lhs),
                std::abs(out.rhs), 1e-30});
  out.relative_residual = std::abs(out.lhs - out.rhs) / scale;
  return out;
}

namespace {
// Evaluate a symbol's full matrix at a sampled grid point x and frequency.
MatrixXcd eval_symbol_at(const TransformContext& ctx, const Symbol& sigma,
                         std::size_t x_flat, const VectorXd& lambda,
                         std::map<const SymbolTerm*, VectorXcd>& profile_cache) {
  const int N = ctx.frame()->size();
  MatrixXcd out = MatrixXcd::Zero(N, N);
  for (const auto& t : sigma.terms) {
    const double gval = t.g.eval(lambda);
    if (gval == 0.0) continue;
    auto it = profile_cache.find(&t);
    if (it == profile_cache.end()) {
      VectorXd shift;
      if (t.a.central_shift != 0.0)
        shift = (t.a.central_shift / lambda.norm()) * lambda;
      it = profile_cache.emplace(&t, t.a.sample(ctx.grid(), shift)).first;
    }
    out += t.coeff * gval * it->second[x_flat] *
           eval_fiber(*t.fiber, ctx.group(), lambda, ctx.frame());
  }
  return out;
}
}  // namespace

Sigma1Check sigma1_identity_check(const ContextPtr& ctx, const Symbol& sigma,
                                  int n_max) {
  const Symbol s1 = sigma1_construct(*ctx, sigma);
  const Symbol vps = derivative_symbol(*ctx, sigma);
  const Symbol vps1 = derivative_symbol(*ctx, s1);
  const Symbol lap = sublaplacian_symbol(*ctx, sigma);

  const GridSpec& grid = ctx->grid();
  const FramePtr& frame = ctx->frame();
  const int N = frame->size();
  const VectorXd mask = frame->interior_mask(2);

  // Sampled x-points: a coarse deterministic sweep of the grid.
  std::vector<std::size_t> xs;
  const std::size_t stride =
      std::max<std::size_t>(1, grid.total() / 24 + 1);
  for (std::size_t i = 0; i < grid.total(); i += stride) xs.push_back(i);

  // Frequencies on the symbol's support, both directions for p = 1.
  std::vector<VectorXd> lams;
  const double lo = sigma.terms[0].g.lo, hi = sigma.terms[0].g.hi;
  for (double r : {lo + 0.35 * (hi - lo), lo + 0.6 * (hi - lo)}) {
    VectorXd l = VectorXd::Zero(grid.p);
    l[0] = r;
    lams.push_back(l);
    if (grid.p == 1) lams.push_back(-l);
  }

  Sigma1Check out;
  for (const auto& lam : lams) {
    const MatrixXcd H = hamiltonian(lam, frame).mat;
    std::map<const SymbolTerm*, VectorXcd> c1, c2, c3, c4;
    for (std::size_t x : xs) {
      const MatrixXcd S1 = eval_symbol_at(*ctx, s1, x, lam, c1);
      const MatrixXcd VS = eval_symbol_at(*ctx, vps, x, lam, c2);
      // Part 2: [sigma_1, H] = -V.pi(V) sigma (fiberwise).
      const MatrixXcd r2 = (S1 * H - H * S1) + VS;
      out.part2 = std::max(out.part2,
                           (mask.asDiagonal() * r2 * mask.asDiagonal())
                               .cwiseAbs()
                               .maxCoeff());

      // Part 3: Pi_n (V.pi(V) sigma_1) Pi_n
      //         = 1/4 ((2n+d) i |l|^-1 Z^(l) - Delta_G) Pi_n sigma Pi_n.
      const MatrixXcd VS1 = eval_symbol_at(*ctx, vps1, x, lam, c3);
      const MatrixXcd LAP = eval_symbol_at(*ctx, lap, x, lam, c4);
      // Z^(l) sigma: central derivative of the profile, lambda-weighted.
      MatrixXcd ZS = MatrixXcd::Zero(N, N);
      for (const auto& t : sigma.terms) {
        const double gval = t.g.eval(lam);
        if (gval == 0.0) continue;
        for (int k = 0; k < grid.p; ++k) {
          const XProfile dz = central_derivative(grid, t.a, k);
          ZS += t.coeff * gval * lam[k] * dz.sample(grid, VectorXd())[x] *
                eval_fiber(*t.fiber, ctx->group(), lam, frame);
        }
      }
      for (int n = 0; n <= n_max; ++n) {
        const MatrixXcd Pi = projector(n, lam, frame).mat;
        const MatrixXcd lhs3 = Pi * VS1 * Pi;
        const double coef = 2.0 * n + frame->d();
        const MatrixXcd rhs3 =
            0.25 * (coef * kI / lam.norm() * (Pi * ZS * Pi) - Pi * LAP * Pi);
        const MatrixXcd r3 = mask.asDiagonal() * (lhs3 - rhs3) * mask.asDiagonal();
        out.part3 = std::max(out.part3, r3.cwiseAbs().maxCoeff());
      }
    }
  }
  return out;
}

}  // namespace htsc
