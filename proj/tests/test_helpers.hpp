#pragma once

#include <random>

#include "htsc/gft.hpp"

namespace htsc::testing {

// Random band-limited state: smooth frequency envelope around the window
// centre (or a mid-grid carrier on plain grids) times random matrices
// supported on rows/columns up to max_band, synthesized by inversion.
inline PhysicalState random_bandlimited(const TransformContext& ctx, int max_band,
                                        std::uint64_t seed,
                                        double width_bins = 2.0,
                                        int row_band_only = -1,
                                        int carrier_bin = 0) {
  const GridSpec& g = ctx.grid();
  const LambdaGrid& lg = ctx.lambda_grid();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  VectorXi kc = g.center();
  if (kc.isZero()) {
    kc = VectorXi::Zero(g.p);
    kc[0] = carrier_bin > 0 ? carrier_bin : g.nz / 4;
  }
  FiberField F = FiberField::zero(g, ctx.frame());
  for (std::size_t li = 0; li < lg.size(); ++li) {
    const double dist = (lg[li].k - kc).cast<double>().norm();
    const double env = std::exp(-0.5 * dist * dist / (width_bins * width_bins));
    if (env < 1e-14) continue;
    auto& M = F.ops[li];
    const auto [c0, c1] = ctx.frame()->band_range(max_band);
    (void)c0;
    if (row_band_only >= 0) {
      const auto [r0, r1] = ctx.frame()->band_range(row_band_only);
      for (int r = r0; r < r1; ++r)
        for (int c = 0; c < c1; ++c) M(r, c) = env * cd(gauss(rng), gauss(rng));
    } else {
      for (int r = 0; r < c1; ++r)
        for (int c = 0; c < c1; ++c) M(r, c) = env * cd(gauss(rng), gauss(rng));
    }
  }
  PhysicalState f = inverse_gft(ctx, F);
  f.values /= l2_norm(f);
  return f;
}

// Quantize-scale test context: carrier sits near bin nz/4, frame modest.
inline ContextPtr quant_ctx(int nv = 64, int nz = 32, int A = 12) {
  GridSpec g;
  g.d = 1;
  g.p = 1;
  g.Lv = 4.0;
  g.Lz = 8.0;
  g.nv = nv;
  g.nz = nz;
  return std::make_shared<TransformContext>(GroupStructure::heisenberg(1), g,
                                            make_frame(1, A));
}

}  // namespace htsc::testing
