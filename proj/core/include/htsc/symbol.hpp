#pragma once

#include <functional>
#include <limits>
#include <memory>

#include "htsc/gft.hpp"

namespace htsc {

/**
 * Fiber part of a symbol term: a lambda-family of operators described
 * structurally, so evaluation at any frequency is reproducible and the
 * band structure (diagonal / anti-diagonal, band bounds) is inspectable.
 */
struct FiberExpr;
using FiberExprPtr = std::shared_ptr<const FiberExpr>;

struct FiberExpr {
  enum class Kind {
    Identity,
    BandProjector,   // Pi_n
    SpectralFn,      // f(|l|(2|a|+d)) diagonal
    FieldRep,        // pi(P_j), pi(Q_j), pi(Z_k) in the adapted frame
    FixedFieldRep,   // pi(V_r) for the fixed first-stratum basis
    Product,         // children composed left to right
    Sum,
    Scaled,
    MaskDiagonal,    // sum_n Pi_n child Pi_n
    MaskAnti         // child minus its diagonal mask
  };

  Kind kind = Kind::Identity;
  int band = -1;                                   // BandProjector
  std::function<double(double)> fn;                // SpectralFn
  std::string fn_tag;                              // for reproducibility notes
  FieldSelector field_sel = FieldSelector::P;      // FieldRep
  int field_index = 0;                             // FieldRep / FixedFieldRep
  cd scale = 1.0;                                  // Scaled
  std::vector<FiberExprPtr> children;

  static FiberExprPtr identity();
  static FiberExprPtr projector(int n);
  static FiberExprPtr spectral(std::function<double(double)> f, std::string tag);
  static FiberExprPtr field_rep(FieldSelector which, int index);
  static FiberExprPtr fixed_field(int index);
  static FiberExprPtr product(std::vector<FiberExprPtr> factors);
  static FiberExprPtr sum(std::vector<FiberExprPtr> addends);
  static FiberExprPtr scaled(cd c, FiberExprPtr inner);
  static FiberExprPtr mask_diagonal(FiberExprPtr inner);
  static FiberExprPtr mask_anti(FiberExprPtr inner);
};

// Evaluate at a central frequency; needs the group for adapted frames of
// FieldRep/FixedFieldRep nodes.
MatrixXcd eval_fiber(const FiberExpr& e, const GroupStructure& g,
                     const VectorXd& lambda, const FramePtr& frame);

/**
 * Scalar frequency factor of a term: a smooth compactly supported cutoff
 * g(|lambda|) on [lo, hi], optionally times lambda_m |lambda|^{-k}.
 * Symbols in the computable A_H fragment have lo > 0.
 */
struct ScalarCutoff {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double rise = 0.0;            // 0: sharp plateau edges replaced by C-inf ramps
  int component = -1;           // multiply by lambda_m when >= 0
  int inv_norm_power = 0;       // multiply by |lambda|^{-k}

  bool trivial() const;
  double eval(const VectorXd& lambda) const;
  static ScalarCutoff one();
  static ScalarCutoff bump(double lo, double hi, double rise = -1.0);
};

/** x-profile of a term; evaluation may carry a lambda-dependent central shift
 * accumulated from the band flows (shift vector = coeff * lambda/|lambda|). */
struct XProfile {
  enum class Kind { One, Gaussian, Grid, PolyGrid };
  Kind kind = Kind::One;

  // Gaussian: amp * exp(-|v-vc|^2/(2 wv^2)) * exp(-|z-zc|^2/(2 wz^2));
  // non-positive widths mean "constant in that variable".
  double amplitude = 1.0;
  VectorXd v_center, z_center;
  double v_width = -1.0, z_width = -1.0;

  std::shared_ptr<const VectorXcd> grid_values;  // Kind::Grid, flat (v, z)

  // PolyGrid: sum of v-monomials times decaying grid bases. Left-invariant
  // fields produce polynomial first-stratum factors (the bracket
  // coefficients are linear in v); keeping them analytic keeps spectral
  // differentiation of the bases legitimate.
  struct PolyTerm {
    VectorXi vpow;
    std::shared_ptr<const VectorXcd> base;
  };
  std::vector<PolyTerm> poly;

  double central_shift = 0.0;  // z -> z - shift * lambda/|lambda|

  bool trivial() const { return kind == Kind::One && central_shift == 0.0; }
  bool shifted() const { return central_shift != 0.0; }

  // Samples on the grid with the central argument shifted by `shift_vec`
  // (grid profiles are shifted by an exact FFT phase).
  VectorXcd sample(const GridSpec& grid, const VectorXd& shift_vec) const;

  static XProfile one();
  static XProfile gaussian_z(double amp, const VectorXd& z_center, double z_width);
  static XProfile from_grid(const GridSpec& grid, VectorXcd values);
};

// V_r applied to a profile: d_{v_r} + sum_k c_k(v) d_{z_k} with the
// polynomial factors handled exactly. Returns a PolyGrid profile.
XProfile left_field_derivative(const GroupStructure& g, const GridSpec& grid,
                               const XProfile& a, int r);

// Central derivative d_{z_k} of a profile (spectral on the bases).
XProfile central_derivative(const GridSpec& grid, const XProfile& a, int k);

struct SymbolTerm {
  cd coeff = 1.0;
  XProfile a;
  FiberExprPtr fiber;
  ScalarCutoff g;
  // Band support of the fiber part when known: [n, np] compressions carry
  // (n, np); -1 means unknown/unbounded.
  int band_row = -1;
  int band_col = -1;
};

struct Symbol {
  std::vector<SymbolTerm> terms;
  int band_bound = -1;  // largest band the symbol touches; -1 = unbounded

  bool in_AH_fragment() const;
  double lambda_min() const;
  static Symbol separable(XProfile a, FiberExprPtr fiber, ScalarCutoff g,
                          int band_bound = -1);
};

// Band structure of a fiber expression on a frame: returns true when the
// expression maps band b into band b + shift only, for all b (e.g. ladders).
bool fiber_is_diagonal(const FiberExpr& e);

// Parse the experiment DSL: {"a": {...}, "fiber": {...}, "g": {...}}.
Symbol parse_symbol(const std::string& json_text, const GridSpec& grid);

}  // namespace htsc
