#include "htsc/gft.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "htsc/fft.hpp"

namespace htsc {

namespace {
const cd kI(0.0, 1.0);

// Signed-permutation data of the adapted frame, for the separable path.
struct AxisMap {
  int p_axis;
  int q_axis;
  double p_sign;
  double q_sign;
};

AxisMap axis_map(const AdaptedFrame& af) {
  AxisMap m{-1, -1, 0.0, 0.0};
  for (int r = 0; r < 2; ++r) {
    if (std::abs(af.R(r, 0)) > 0.5) {
      m.p_axis = r;
      m.p_sign = af.R(r, 0) > 0 ? 1.0 : -1.0;
    }
    if (std::abs(af.R(r, 1)) > 0.5) {
      m.q_axis = r;
      m.q_sign = af.R(r, 1) > 0 ? 1.0 : -1.0;
    }
  }
  if (m.p_axis < 0 || m.q_axis < 0 || m.p_axis == m.q_axis)
    throw NumericsError("gft: adapted frame is not a signed permutation");
  return m;
}

int parity(const VectorXi& k) {
  long s = 0;
  for (int i = 0; i < k.size(); ++i) s += k[i];
  return (s % 2 + 2) % 2;
}

std::mutex c0_mutex;
std::map<std::string, double> c0_cache;
}  // namespace

namespace {
// Gauss-Hermite size adequate for the oscillatory factors e^{i b eta} the
// transforms integrate: the rule needs roughly b^2/2 nodes before its error
// starts decaying, plus room for the polynomial degrees.
int default_quad_nodes(const GridSpec& grid, int cutoff) {
  const double lam_max =
      (grid.center().cast<double>().norm() + grid.nz / 2.0) * grid.dlambda();
  const double b_max = std::sqrt(lam_max) * grid.Lv;
  const int need = static_cast<int>(0.55 * b_max * b_max) + 2 * cutoff + 32;
  const int k = std::max({4 * cutoff, 48, need});
  return (k + 15) / 16 * 16;
}
}  // namespace

TransformContext::TransformContext(GroupStructure group, GridSpec grid,
                                   FramePtr frame, int quad_nodes)
    : group_(std::move(group)),
      grid_(std::move(grid)),
      frame_(std::move(frame)),
      lgrid_(grid_),
      quad_(HermiteQuadrature::make(
          quad_nodes > 0 ? quad_nodes
                         : default_quad_nodes(grid_, frame_->cutoff()))) {
  grid_.validate();
  group_.validate();
  if (grid_.d != group_.d || grid_.p != group_.p)
    throw DimensionError("TransformContext: grid does not match the group");
  if (frame_->d() != group_.d)
    throw DimensionError("TransformContext: frame does not match the group");
  frames_.reserve(lgrid_.size());
  bool sep = (group_.d == 1);
  for (std::size_t i = 0; i < lgrid_.size(); ++i) {
    frames_.push_back(adapted_frame(group_, lgrid_[i].lambda));
    sep = sep && frames_.back().is_signed_permutation();
  }
  separable_ = sep;
}

const AdaptedFrame& TransformContext::frame_at(std::size_t i) const {
  return frames_[i];
}

double TransformContext::c0() const {
  if (c0_ < 0) {
    const std::string key = grid_.to_json() + "|A=" + std::to_string(frame_->cutoff());
    {
      std::lock_guard<std::mutex> lock(c0_mutex);
      auto it = c0_cache.find(key);
      if (it != c0_cache.end()) {
        c0_ = it->second;
        return c0_;
      }
    }
    const double value = calibrate_c0(*this);
    std::lock_guard<std::mutex> lock(c0_mutex);
    c0_cache[key] = value;
    c0_ = value;
  }
  return c0_;
}

void TransformContext::set_c0(double c0) const { c0_ = c0; }

VectorXcd central_fft(const GridSpec& grid, const VectorXcd& values) {
  VectorXcd out = values;
  std::vector<int> dims;
  for (int i = 0; i < grid.vdim(); ++i) dims.push_back(grid.nv);
  for (int i = 0; i < grid.p; ++i) dims.push_back(grid.nz);
  for (int a = 0; a < grid.p; ++a)
    Fft::axis(out.data(), dims, grid.vdim() + a, -1);
  out *= std::pow(grid.dz(), grid.p);
  return out;
}

namespace {

// --- separable d=1 kernels ---------------------------------------------

// Forward accumulation of one lambda slice.
MatrixXcd forward_slice_separable(const TransformContext& ctx,
                                  std::size_t li, const VectorXcd& fhat) {
  const GridSpec& g = ctx.grid();
  const LambdaPoint& pt = ctx.lambda_grid()[li];
  const AxisMap ax = axis_map(ctx.frame_at(li));
  const HermiteQuadrature& quad = ctx.quadrature();
  const int nv = g.nv;
  const int N = ctx.frame()->size();
  const int A = ctx.frame()->cutoff();
  const int K = static_cast<int>(quad.nodes.size());
  const double root = std::sqrt(pt.lambda.norm());
  const std::size_t zc = g.z_count();

  // Strides of the two v axes in the flat (v0, v1, z) layout.
  const std::size_t stride0 = static_cast<std::size_t>(nv) * zc;
  const std::size_t stride1 = zc;
  const std::size_t sp = ax.p_axis == 0 ? stride0 : stride1;
  const std::size_t sq = ax.q_axis == 0 ? stride0 : stride1;

  const double w_cell = g.dv() * g.dv();
  // E(i, jq) = exp(-i b_q eta_i), shared across the p-loop.
  MatrixXcd E(K, nv);
  for (int jq = 0; jq < nv; ++jq) {
    const double b = root * ax.q_sign * g.v_value(jq);
    for (int i = 0; i < K; ++i) E(i, jq) = std::exp(-kI * b * quad.nodes[i]);
  }
  MatrixXcd out = MatrixXcd::Zero(N, N);
  VectorXcd cvec(nv), phi(K);
  for (int jp = 0; jp < nv; ++jp) {
    for (int jq = 0; jq < nv; ++jq)
      cvec[jq] = w_cell * fhat[sp * jp + sq * jq + pt.bin];
    if (cvec.isZero(0.0)) continue;
    phi.noalias() = E * cvec;
    phi.array() *= quad.weights.array();
    const double a = root * ax.p_sign * g.v_value(jp);
    const MatrixXd HL = hermite_table(A, quad.nodes.array() - 0.5 * a);
    const MatrixXd HR = hermite_table(A, quad.nodes.array() + 0.5 * a);
    out.noalias() +=
        HR.transpose().cast<cd>() * phi.asDiagonal() * HL.cast<cd>();
  }
  return out;
}

VectorXcd trace_slice_separable(const TransformContext& ctx, std::size_t li,
                                const MatrixXcd& M) {
  const GridSpec& g = ctx.grid();
  const LambdaPoint& pt = ctx.lambda_grid()[li];
  const AxisMap ax = axis_map(ctx.frame_at(li));
  const HermiteQuadrature& quad = ctx.quadrature();
  const int nv = g.nv;
  const int A = ctx.frame()->cutoff();
  const int K = static_cast<int>(quad.nodes.size());
  const double root = std::sqrt(pt.lambda.norm());

  VectorXcd t(static_cast<std::size_t>(nv) * nv);
  const std::size_t op = ax.p_axis == 0 ? static_cast<std::size_t>(nv) : 1;
  const std::size_t oq = ax.q_axis == 0 ? static_cast<std::size_t>(nv) : 1;
  // E(jq, i) = exp(+i b_q eta_i), shared across the p-loop.
  MatrixXcd E(nv, K);
  for (int jq = 0; jq < nv; ++jq) {
    const double b = root * ax.q_sign * g.v_value(jq);
    for (int i = 0; i < K; ++i) E(jq, i) = std::exp(kI * b * quad.nodes[i]);
  }
  VectorXcd G(K), row(nv);
  for (int jp = 0; jp < nv; ++jp) {
    const double a = root * ax.p_sign * g.v_value(jp);
    const MatrixXd HL = hermite_table(A, quad.nodes.array() - 0.5 * a);
    const MatrixXd HR = hermite_table(A, quad.nodes.array() + 0.5 * a);
    // G_i = w_i HR_i^T M HL_i
    const MatrixXcd V = M * HL.transpose().cast<cd>();  // N x K
    for (int i = 0; i < K; ++i)
      G[i] = quad.weights[i] * (HR.row(i).cast<cd>() * V.col(i)).value();
    row.noalias() = E * G;
    for (int jq = 0; jq < nv; ++jq) t[op * jp + oq * jq] = row[jq];
  }
  return t;
}

// --- generic kernels -----------------------------------------------------

void adapted_coords(const TransformContext& ctx, std::size_t li,
                    const std::vector<int>& vidx, VectorXd& pq) {
  const GridSpec& g = ctx.grid();
  VectorXd v(g.vdim());
  for (int a = 0; a < g.vdim(); ++a) v[a] = g.v_value(vidx[a]);
  pq = ctx.frame_at(li).R.transpose() * v;
}

MatrixXcd rep_matrix_at(const TransformContext& ctx, std::size_t li,
                        const std::vector<int>& vidx) {
  const GridSpec& g = ctx.grid();
  const LambdaPoint& pt = ctx.lambda_grid()[li];
  VectorXd pq;
  adapted_coords(ctx, li, vidx, pq);
  return matrix_coefficient(pt.lambda, ctx.frame(), pq.head(g.d), pq.tail(g.d),
                            VectorXd::Zero(g.p), ctx.quadrature());
}

void for_each_vpoint(const GridSpec& g,
                     const std::function<void(const std::vector<int>&, std::size_t)>& fn) {
  std::vector<int> idx(g.vdim(), 0);
  const std::size_t count = g.v_count();
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rem = flat;
    for (int a = g.vdim() - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % g.nv);
      rem /= g.nv;
    }
    fn(idx, flat);
  }
}

MatrixXcd forward_slice_generic(const TransformContext& ctx, std::size_t li,
                                const VectorXcd& fhat) {
  const GridSpec& g = ctx.grid();
  const LambdaPoint& pt = ctx.lambda_grid()[li];
  const int N = ctx.frame()->size();
  const std::size_t zc = g.z_count();
  const double w_cell = std::pow(g.dv(), g.vdim());
  MatrixXcd out = MatrixXcd::Zero(N, N);
  for_each_vpoint(g, [&](const std::vector<int>& vidx, std::size_t flat) {
    const cd c = w_cell * fhat[flat * zc + pt.bin];
    if (c == cd(0.0, 0.0)) return;
    out.noalias() += c * rep_matrix_at(ctx, li, vidx).adjoint();
  });
  return out;
}

VectorXcd trace_slice_generic(const TransformContext& ctx, std::size_t li,
                              const MatrixXcd& M) {
  const GridSpec& g = ctx.grid();
  VectorXcd t(g.v_count());
  for_each_vpoint(g, [&](const std::vector<int>& vidx, std::size_t flat) {
    t[flat] = (rep_matrix_at(ctx, li, vidx) * M).trace();
  });
  return t;
}

}  // namespace

FiberField forward_gft(const TransformContext& ctx, const PhysicalState& f) {
  if (!(f.grid == ctx.grid())) throw DimensionError("forward_gft: grid mismatch");
  const VectorXcd fhat = central_fft(ctx.grid(), f.values);
  FiberField F{ctx.grid(), ctx.frame(), {}};
  F.ops.resize(ctx.lambda_grid().size());
  const VectorXi c = ctx.grid().center();
  parallel_for(
      ctx.lambda_grid().size(),
      [&](std::size_t li) {
        MatrixXcd slice = ctx.separable()
                              ? forward_slice_separable(ctx, li, fhat)
                              : forward_slice_generic(ctx, li, fhat);
        // sign from e^{-i mu z} carrying the box offset
        const VectorXi rel = ctx.lambda_grid()[li].k - c;
        if (parity(rel)) slice = -slice;
        F.ops[li] = std::move(slice);
      },
      ctx.threads());
  return F;
}

VectorXcd trace_field(const TransformContext& ctx, std::size_t lambda_index,
                      const MatrixXcd& M) {
  return ctx.separable() ? trace_slice_separable(ctx, lambda_index, M)
                         : trace_slice_generic(ctx, lambda_index, M);
}

PhysicalState assemble_from_traces(const TransformContext& ctx,
                                   const std::vector<VectorXcd>& traces) {
  const GridSpec& g = ctx.grid();
  const LambdaGrid& lg = ctx.lambda_grid();
  if (traces.size() != lg.size())
    throw DimensionError("assemble_from_traces: slice count mismatch");
  PhysicalState out = PhysicalState::zero(g);
  const double c0 = ctx.c0();
  const VectorXi c = g.center();
  const std::size_t zc = g.z_count();
  for (std::size_t li = 0; li < lg.size(); ++li) {
    if (traces[li].size() == 0) continue;
    const double s = parity(lg[li].k - c) ? -1.0 : 1.0;
    const cd w = c0 * lg[li].weight * s;
    for (std::size_t vi = 0; vi < g.v_count(); ++vi)
      out.values[vi * zc + lg[li].bin] += w * traces[li][vi];
  }
  std::vector<int> dims;
  for (int i = 0; i < g.vdim(); ++i) dims.push_back(g.nv);
  for (int i = 0; i < g.p; ++i) dims.push_back(g.nz);
  for (int a = 0; a < g.p; ++a) Fft::axis(out.values.data(), dims, g.vdim() + a, +1);
  return out;
}

PhysicalState inverse_gft(const TransformContext& ctx, const FiberField& F) {
  if (!(F.grid == ctx.grid())) throw DimensionError("inverse_gft: grid mismatch");
  std::vector<VectorXcd> traces(ctx.lambda_grid().size());
  parallel_for(
      traces.size(),
      [&](std::size_t li) { traces[li] = trace_field(ctx, li, F.ops[li]); },
      ctx.threads());
  return assemble_from_traces(ctx, traces);
}

PhysicalState reference_gaussian(const TransformContext& ctx) {
  const GridSpec& g = ctx.grid();
  // Centre frequency: the window centre, or a mid-grid positive bin.
  VectorXi kc = g.center();
  if (kc.isZero()) {
    kc = VectorXi::Zero(g.p);
    kc[0] = g.nz / 4;
  }
  const VectorXd mu = kc.cast<double>() * g.dlambda();
  const double scale = std::sqrt(mu.norm());
  PhysicalState f = PhysicalState::zero(g);
  const std::size_t zc = g.z_count();
  const double zwidth = 0.15 * g.Lz;
  const VectorXi c = g.center();
  for_each_vpoint(g, [&](const std::vector<int>& vidx, std::size_t flat) {
    double v2 = 0.0;
    for (int a = 0; a < g.vdim(); ++a) {
      const double v = g.v_value(vidx[a]);
      v2 += v * v;
    }
    const double vprof = std::exp(-0.5 * mu.norm() * v2) *
                         std::pow(scale, 0.5 * g.vdim());
    if (vprof == 0.0) return;
    for (std::size_t zi = 0; zi < zc; ++zi) {
      std::size_t rem = zi;
      double z2 = 0.0;
      VectorXd zv(g.p);
      for (int a = g.p - 1; a >= 0; --a) {
        zv[a] = g.z_value(static_cast<int>(rem % g.nz));
        rem /= g.nz;
      }
      z2 = zv.squaredNorm();
      // Envelope convention: carried frequency is the window centre; for a
      // plain grid the carrier must appear explicitly.
      cd osc(1.0, 0.0);
      if (c.isZero()) osc = std::exp(kI * mu.dot(zv));
      f.values[flat * zc + zi] +=
          vprof * std::exp(-0.5 * z2 / (zwidth * zwidth)) * osc;
    }
  });
  const double n = l2_norm(f);
  f.values /= n;
  return f;
}

double calibrate_c0(const TransformContext& ctx) {
  const PhysicalState f = reference_gaussian(ctx);
  const FiberField F = forward_gft(ctx, f);
  const double l2 = l2_norm(f);
  const double hs = hs_norm(F);
  if (hs == 0.0) throw NumericsError("calibrate_c0: degenerate reference");
  return (l2 * l2) / (hs * hs);
}

PhysicalState spectral_derivative(const PhysicalState& f, int axis,
                                  bool include_carrier) {
  const GridSpec& g = f.grid;
  const int total_axes = g.vdim() + g.p;
  if (axis < 0 || axis >= total_axes)
    throw DomainError("spectral_derivative: axis out of range");
  std::vector<int> dims;
  for (int i = 0; i < g.vdim(); ++i) dims.push_back(g.nv);
  for (int i = 0; i < g.p; ++i) dims.push_back(g.nz);

  PhysicalState out = f;
  Fft::axis(out.values.data(), dims, axis, -1);

  const bool central = axis >= g.vdim();
  const int n = dims[axis];
  const double base = central ? kPi / g.Lz : kPi / g.Lv;
  const double carrier = (central && include_carrier)
                             ? g.lambda_center()[axis - g.vdim()]
                             : 0.0;

  // Multiply bin j by i kappa_j; the Nyquist bin is annihilated.
  std::vector<cd> mult(n);
  for (int j = 0; j < n; ++j) {
    const int sj = j < n / 2 ? j : j - n;
    mult[j] = (j == n / 2) ? cd(0, 0) : cd(0, base * sj + carrier) / double(n);
  }
  int before = 1, after = 1;
  for (int i = 0; i < axis; ++i) before *= dims[i];
  for (int i = axis + 1; i < total_axes; ++i) after *= dims[i];
  cd* data = out.values.data();
  for (int b = 0; b < before; ++b)
    for (int j = 0; j < n; ++j) {
      cd* row = data + (static_cast<std::size_t>(b) * n + j) * after;
      for (int a = 0; a < after; ++a) row[a] *= mult[j];
    }
  Fft::axis(out.values.data(), dims, axis, +1);
  return out;
}

PhysicalState apply_left_field(const GroupStructure& g, const PhysicalState& f,
                               int j, bool include_carrier) {
  const GridSpec& grid = f.grid;
  if (grid.d != g.d || grid.p != g.p)
    throw DimensionError("apply_left_field: grid does not match group");
  PhysicalState out = spectral_derivative(f, j);  // v-axis: no carrier
  const std::size_t zc = grid.z_count();
  for (int k = 0; k < g.p; ++k) {
    const PhysicalState dz = spectral_derivative(f, grid.vdim() + k, include_carrier);
    // c_k(v) = -1/2 (B_k v)_j, multiplied pointwise.
    std::vector<int> vidx(grid.vdim(), 0);
    for (std::size_t flat = 0; flat < grid.v_count(); ++flat) {
      std::size_t rem = flat;
      for (int a = grid.vdim() - 1; a >= 0; --a) {
        vidx[a] = static_cast<int>(rem % grid.nv);
        rem /= grid.nv;
      }
      double bv = 0.0;
      for (int a = 0; a < grid.vdim(); ++a)
        bv += g.B[k](j, a) * grid.v_value(vidx[a]);
      const double c = -0.5 * bv;
      if (c == 0.0) continue;
      for (std::size_t zi = 0; zi < zc; ++zi)
        out.values[flat * zc + zi] += c * dz.values[flat * zc + zi];
    }
  }
  return out;
}

PhysicalState apply_sublaplacian_grid(const GroupStructure& g,
                                      const PhysicalState& f) {
  PhysicalState out = PhysicalState::zero(f.grid);
  for (int j = 0; j < f.grid.vdim(); ++j) {
    const PhysicalState vj = apply_left_field(g, f, j);
    const PhysicalState vjj = apply_left_field(g, vj, j);
    out.values += vjj.values;
  }
  return out;
}

FiberField apply_sublaplacian_fiber(const FiberField& F) {
  FiberField out = F;
  const LambdaGrid lg(F.grid);
  const HermiteFrame& fr = *F.frame;
  for (std::size_t li = 0; li < lg.size(); ++li) {
    const double nl = lg[li].lambda.norm();
    for (int r = 0; r < fr.size(); ++r)
      out.ops[li].row(r) *= -nl * (2.0 * fr.degree(r) + fr.d());
  }
  return out;
}

FiberField spectral_cutoff(const FiberField& F, CutoffKind kind, double threshold,
                           double eps) {
  if (threshold <= 0) throw DomainError("spectral_cutoff: threshold must be > 0");
  FiberField out = F;
  const LambdaGrid lg(F.grid);
  const HermiteFrame& fr = *F.frame;
  for (std::size_t li = 0; li < lg.size(); ++li) {
    const double nl = lg[li].lambda.norm();
    for (int r = 0; r < fr.size(); ++r) {
      const double e = eps * eps * nl * (2.0 * fr.degree(r) + fr.d());
      const bool keep = (kind == CutoffKind::High) ? (e > threshold) : (e < threshold);
      if (!keep) out.ops[li].row(r).setZero();
    }
  }
  return out;
}

}  // namespace htsc
