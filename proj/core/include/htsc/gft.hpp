#pragma once

#include <memory>

#include "htsc/grid.hpp"

namespace htsc {

/**
 * Shared machinery for transforms between grid states and fiber fields:
 * the lambda grid, per-lambda adapted frames, the Hermite quadrature, and
 * the calibrated Plancherel constant. Construction is cheap; the first
 * call that needs c0 triggers calibration (cached per context).
 *
 * Per-lambda work is independent and runs as a deterministic parallel map;
 * results are identical for any thread count.
 */
class TransformContext {
 public:
  TransformContext(GroupStructure group, GridSpec grid, FramePtr frame,
                   int quad_nodes = 0);

  const GroupStructure& group() const { return group_; }
  const GridSpec& grid() const { return grid_; }
  const FramePtr& frame() const { return frame_; }
  const LambdaGrid& lambda_grid() const { return lgrid_; }
  const HermiteQuadrature& quadrature() const { return quad_; }
  const AdaptedFrame& frame_at(std::size_t lambda_index) const;

  int threads() const { return threads_; }
  void set_threads(int t) { threads_ = t; }

  double c0() const;            // calibrates on first use
  void set_c0(double c0) const; // override (used by tests)

  bool separable() const { return separable_ && !force_generic_; }
  void set_force_generic(bool b) { force_generic_ = b; }  // testing knob

 private:
  GroupStructure group_;
  GridSpec grid_;
  FramePtr frame_;
  LambdaGrid lgrid_;
  HermiteQuadrature quad_;
  std::vector<AdaptedFrame> frames_;
  bool separable_ = false;
  bool force_generic_ = false;
  int threads_ = 0;
  mutable double c0_ = -1.0;
};

using ContextPtr = std::shared_ptr<TransformContext>;

// Central-variable DFT of the envelope: out(v, bin) = sum_z f(v,z)
// e^{-i mu_bin z} dz^p, the relative-frequency transform.
VectorXcd central_fft(const GridSpec& grid, const VectorXcd& values);

// F f(lambda) = sum_x f(x) (pi^lambda_x)^* dx on every lambda-grid point.
FiberField forward_gft(const TransformContext& ctx, const PhysicalState& f);

// f(x) = c0 sum_lambda Tr(pi^lambda_x F(lambda)) |lambda|^d dlambda.
PhysicalState inverse_gft(const TransformContext& ctx, const FiberField& F);

// t(v) = Tr(pi^lambda_{(v,0)} M), the v-profile of one lambda slice.
VectorXcd trace_field(const TransformContext& ctx, std::size_t lambda_index,
                      const MatrixXcd& M);

// Assemble c0 sum_k w_k t_k(v) e^{i mu_k z} from per-lambda trace fields;
// entries of `scale` multiply the Plancherel weights (pass all-ones for the
// plain inversion).
PhysicalState assemble_from_traces(const TransformContext& ctx,
                                   const std::vector<VectorXcd>& traces);

// Plancherel constant making ||f||^2 = c0 ||forward f||_HS^2 exact for a
// grid-matched reference Gaussian.
double calibrate_c0(const TransformContext& ctx);

// Reference Gaussian used by the calibration: band-limited, supported away
// from lambda = 0, v-profile matched to the window's centre frequency.
PhysicalState reference_gaussian(const TransformContext& ctx);

// d/d(axis) by spectral differentiation; axis < 2d selects a first-stratum
// axis, axis >= 2d a central one. For central axes the derivative includes
// the carrier term i lambda_c f implied by the envelope convention.
PhysicalState spectral_derivative(const PhysicalState& f, int axis,
                                  bool include_carrier = true);

// Left-invariant field V_j applied on the grid:
// V_j f = d_{v_j} f + sum_k c_k(v) d_{z_k} f with c_k = -1/2 (B_k v)_j.
PhysicalState apply_left_field(const GroupStructure& g, const PhysicalState& f,
                               int j, bool include_carrier = true);

// Sub-Laplacian sum_j V_j^2 on the grid (spectral derivatives).
PhysicalState apply_sublaplacian_grid(const GroupStructure& g,
                                      const PhysicalState& f);

// -H(lambda) acting on the Fourier side: rows scaled by -|l|(2|alpha|+d).
FiberField apply_sublaplacian_fiber(const FiberField& F);

enum class CutoffKind { High, Low };

// Spectral projector of -eps^2 Delta_G on the Fourier side: keeps rows with
// eps^2 |lambda| (2|alpha|+d) > threshold (High) or < threshold (Low).
FiberField spectral_cutoff(const FiberField& F, CutoffKind kind, double threshold,
                           double eps);

}  // namespace htsc
