#pragma once

#include <string>

#include "htsc/fiber.hpp"
#include "htsc/frame.hpp"
#include "htsc/group.hpp"

namespace htsc {

/**
 * Tensor grid on G = R^{2d} x R^p: each first-stratum axis carries nv points
 * on [-Lv, Lv), each central axis nz points on [-Lz, Lz). Functions are
 * treated as periodic on the box.
 *
 * The central frequency lattice is pi k / Lz. A grid may be given a window
 * offset k_center: stored arrays then hold the envelope against the carrier
 * exp(i lambda_c . z) with lambda_c = pi k_center / Lz, which keeps states
 * with large central frequencies representable on a coarse z-grid. The
 * lambda grid is the set lambda_c + pi k / Lz with |k_i| < nz/2, minus the
 * zero frequency.
 */
struct GridSpec {
  int d = 1;
  int p = 1;
  double Lv = 4.0;
  double Lz = 8.0;
  int nv = 64;
  int nz = 64;
  VectorXi k_center;  // empty means zero offset

  void validate() const;

  int vdim() const { return 2 * d; }
  std::size_t v_count() const;
  std::size_t z_count() const;
  std::size_t total() const { return v_count() * z_count(); }

  double dv() const { return 2.0 * Lv / nv; }
  double dz() const { return 2.0 * Lz / nz; }
  double dlambda() const { return kPi / Lz; }
  double cell_volume() const;

  double v_value(int i) const { return -Lv + i * dv(); }
  double z_value(int i) const { return -Lz + i * dz(); }

  VectorXi center() const;
  VectorXd lambda_center() const;

  bool operator==(const GridSpec& o) const;
  std::string to_json() const;
  static GridSpec from_json(const std::string& text);
};

/**
 * One point of the central frequency grid: full integer index k (offset
 * included), the frequency vector, the z-FFT bin it lives in, and the
 * Plancherel weight |lambda|^d dlambda^p.
 */
struct LambdaPoint {
  VectorXi k;
  VectorXd lambda;
  std::size_t bin;  // flat index into the z-FFT cube
  double weight;
};

class LambdaGrid {
 public:
  explicit LambdaGrid(const GridSpec& grid);

  std::size_t size() const { return points_.size(); }
  const LambdaPoint& operator[](std::size_t i) const { return points_[i]; }
  const GridSpec& grid() const { return grid_; }

  // Index of the point with the given full k, or -1.
  long find(const VectorXi& k) const;

 private:
  GridSpec grid_;
  std::vector<LambdaPoint> points_;
};

/** Complex samples over the grid; values are the envelope (see GridSpec). */
struct PhysicalState {
  GridSpec grid;
  VectorXcd values;

  static PhysicalState zero(const GridSpec& grid);
};

double l2_norm(const PhysicalState& f);
cd inner(const PhysicalState& f, const PhysicalState& g);

// NPY v1 payload with a JSON sidecar describing the grid.
void save_state(const PhysicalState& f, const std::string& path_base);
PhysicalState load_state(const std::string& path_base);

/** The group Fourier transform sampled on the lambda grid. */
struct FiberField {
  GridSpec grid;
  FramePtr frame;
  std::vector<MatrixXcd> ops;  // one per LambdaGrid point

  static FiberField zero(const GridSpec& grid, const FramePtr& frame);
};

double hs_norm(const FiberField& F);
cd hs_inner(const FiberField& F, const FiberField& G);

// JSON header plus base64 row-major complex payload.
std::string dump_fiber_operator(const FiberOperator& op);
FiberOperator load_fiber_operator(const std::string& text);

}  // namespace htsc
