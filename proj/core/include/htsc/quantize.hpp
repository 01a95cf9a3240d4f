#pragma once

#include "htsc/symbol.hpp"

namespace htsc {

/**
 * A symbol bound to a quantization scale and a transform context: fiber
 * multipliers M(eps^2 lambda) and scalar cutoffs are evaluated once per
 * lambda-grid point and reused across applications. Immutable after
 * construction; safe for concurrent use.
 */
class BoundSymbol {
 public:
  BoundSymbol(ContextPtr ctx, Symbol symbol, double eps);

  const Symbol& symbol() const { return symbol_; }
  double eps() const { return eps_; }
  const ContextPtr& context() const { return ctx_; }

  // Fiber multiplier of term t at lambda-grid point k, cutoff included
  // (zero matrix when the cutoff kills the slice).
  const MatrixXcd& multiplier(std::size_t term, std::size_t k) const;
  bool slice_active(std::size_t term, std::size_t k) const;

  // Central shift vector of term t at the scaled frequency, for profiles
  // carrying a flow shift; empty when unshifted.
  VectorXd term_shift(std::size_t term, std::size_t k) const;

  bool empty_support() const;  // no lambda slice survives any cutoff

 private:
  ContextPtr ctx_;
  Symbol symbol_;
  double eps_;
  std::vector<std::vector<MatrixXcd>> mult_;   // [term][lambda]
  std::vector<std::vector<char>> active_;
};

// Op_eps(sigma) f, through the fiber field of f (computed internally).
PhysicalState op_eps_apply(const BoundSymbol& op, const PhysicalState& f);
PhysicalState op_eps_apply(const BoundSymbol& op, const FiberField& F);

// (Op_eps(sigma) f, f); uses a precomputed transform when given.
cd expectation(const BoundSymbol& op, const PhysicalState& f);
cd expectation(const BoundSymbol& op, const FiberField& F, const PhysicalState& f);

// H-diagonal / anti-H-diagonal split (Lemma-level masking); requires the
// A_H fragment (finite band bound, cutoff away from zero).
std::pair<Symbol, Symbol> split_diag(const Symbol& sigma);

// psi(H(lambda)/u) Pi_n sigma Pi_np psi(H(lambda)/u): identical to the plain
// band compression once u is small enough that the smooth step sits at 1 on
// the symbol's frequency support, and zero once u is large enough that the
// step vanishes there.
Symbol band_cutoff_symbol(const Symbol& sigma, int n, int np, double u);

// Band flow on H-diagonal symbols: each band-n component's profile is
// translated centrally by s (2n+d)/(2|l|) lambda. Exact composition law.
Symbol flow_phi(const Symbol& sigma_d, double s, int d);

// V . pi(V) sigma  =  sum_r pi(V_r) (V_r sigma): left-invariant derivatives
// of the profile paired with fixed-basis field representations.
Symbol derivative_symbol(const TransformContext& ctx, const Symbol& sigma);

// Delta_G sigma: left-invariant Laplacian on the x-profile.
Symbol sublaplacian_symbol(const TransformContext& ctx, const Symbol& sigma);

// [H(lambda), sigma] as a symbol.
Symbol h_commutator_symbol(const Symbol& sigma);

/**
 * sigma_1 = -1/(2i|l|) sum_j (P_j pi(Q_j) - Q_j pi(P_j)) sigma
 *         = -1/(2i|l|^2) sum_{m,r,k} lambda_m (B_m)_{rk} (V_r sigma) pi(V_k),
 * for sigma = g(lambda) sigma_0 with sigma_0 commuting with H and g
 * supported away from zero.
 */
Symbol sigma1_construct(const TransformContext& ctx, const Symbol& sigma);

struct CommutatorCheck {
  double relative_residual = 0.0;
  cd lhs = 0.0;
  cd rhs = 0.0;
};

// Bilinear-form residual of
// [-eps^2 Delta_G, Op_eps(sigma)] = Op([H,sigma]) - 2 eps Op(V.pi(V) sigma)
//                                   - eps^2 Op(Delta_G sigma)
// between band-limited states f and g.
CommutatorCheck commutator_expansion_check(const ContextPtr& ctx, const Symbol& sigma,
                                           double eps, const PhysicalState& f,
                                           const PhysicalState& g);

struct Sigma1Check {
  double part2 = 0.0;  // fiberwise commutator identity
  double part3 = 0.0;  // band compression identity (grid derivatives)
};

// Residuals of the two computable identities satisfied by sigma_1, checked
// on bands 0..n_max of the interior block.
Sigma1Check sigma1_identity_check(const ContextPtr& ctx, const Symbol& sigma,
                                  int n_max);

}  // namespace htsc
