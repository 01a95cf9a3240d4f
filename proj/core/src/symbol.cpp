#include "htsc/symbol.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "htsc/fft.hpp"

namespace htsc {

namespace {
const cd kI(0.0, 1.0);
}

FiberExprPtr FiberExpr::identity() {
  auto e = std::make_shared<FiberExpr>();
  e->kind = Kind::Identity;
  return e;
}

FiberExprPtr FiberExpr::projector(int n) {
  auto e = std::make_shared<FiberExpr>();
  e->kind = Kind::BandProjector;
  e->band = n;
  return e;
}

FiberExprPtr FiberExpr::spectral(std::function<double(double)> f, std::string tag) {
  auto e = std::make_shared<FiberExpr>();
  e->kind = Kind::SpectralFn;
  e->fn = std::move(f);
  e->fn_tag = std::move(tag);
  return e;
}

FiberExprPtr FiberExpr::field_rep(FieldSelector which, int index) {
  auto e = std::make_shared<FiberExpr>();
  e->kind = Kind::FieldRep;
  e->field_sel = which;
  e->field_index = index;
  return e;
}

FiberExprPtr FiberExpr::fixed_field(int index) {
  auto e = std::make_shared<FiberExpr>();
  e->kind = Kind::FixedFieldRep;
  e->field_index = index;
  return e;
}

FiberExprPtr FiberExpr::product(std::vector<FiberExprPtr> factors) {
  auto e = std::make_shared<FiberExpr>();
  e->kind = Kind::Product;
  e->children = std::move(factors);
  return e;
}

FiberExprPtr FiberExpr::sum(std::vector<FiberExprPtr> addends) {
  auto e = std::make_shared<FiberExpr>();
  e->kind = Kind::Sum;
  e->children = std::move(addends);
  return e;
}

FiberExprPtr FiberExpr::scaled(cd c, FiberExprPtr inner) {
  auto e = std::make_shared<FiberExpr>();
  e->kind = Kind::Scaled;
  e->scale = c;
  e->children = {std::move(inner)};
  return e;
}

FiberExprPtr FiberExpr::mask_diagonal(FiberExprPtr inner) {
  auto e = std::make_shared<FiberExpr>();
  e->kind = Kind::MaskDiagonal;
  e->children = {std::move(inner)};
  return e;
}

FiberExprPtr FiberExpr::mask_anti(FiberExprPtr inner) {
  auto e = std::make_shared<FiberExpr>();
  e->kind = Kind::MaskAnti;
  e->children = {std::move(inner)};
  return e;
}

namespace {
MatrixXcd mask_diag_matrix(const MatrixXcd& m, const HermiteFrame& frame) {
  MatrixXcd out = MatrixXcd::Zero(m.rows(), m.cols());
  for (int n = 0; n <= frame.cutoff(); ++n) {
    const auto [a, b] = frame.band_range(n);
    out.block(a, a, b - a, b - a) = m.block(a, a, b - a, b - a);
  }
  return out;
}
}  // namespace

MatrixXcd eval_fiber(const FiberExpr& e, const GroupStructure& g,
                     const VectorXd& lambda, const FramePtr& frame) {
  const int N = frame->size();
  switch (e.kind) {
    case FiberExpr::Kind::Identity:
      return MatrixXcd::Identity(N, N);
    case FiberExpr::Kind::BandProjector:
      return projector(e.band, lambda, frame).mat;
    case FiberExpr::Kind::SpectralFn:
      return spectral_function(e.fn, lambda, frame).mat;
    case FiberExpr::Kind::FieldRep:
      return vector_field_rep(lambda, frame, e.field_sel, e.field_index).mat;
    case FiberExpr::Kind::FixedFieldRep: {
      // pi(V_r) = sum_col R(r, col) pi(adapted field col)
      const AdaptedFrame af = adapted_frame(g, lambda);
      MatrixXcd out = MatrixXcd::Zero(N, N);
      for (int col = 0; col < 2 * g.d; ++col) {
        const double w = af.R(e.field_index, col);
        if (std::abs(w) < 1e-15) continue;
        const bool is_p = col < g.d;
        out += w * vector_field_rep(lambda, frame,
                                    is_p ? FieldSelector::P : FieldSelector::Q,
                                    is_p ? col : col - g.d)
                       .mat;
      }
      return out;
    }
    case FiberExpr::Kind::Product: {
      MatrixXcd out = MatrixXcd::Identity(N, N);
      for (const auto& c : e.children) out = out * eval_fiber(*c, g, lambda, frame);
      return out;
    }
    case FiberExpr::Kind::Sum: {
      MatrixXcd out = MatrixXcd::Zero(N, N);
      for (const auto& c : e.children) out += eval_fiber(*c, g, lambda, frame);
      return out;
    }
    case FiberExpr::Kind::Scaled:
      return e.scale * eval_fiber(*e.children[0], g, lambda, frame);
    case FiberExpr::Kind::MaskDiagonal:
      return mask_diag_matrix(eval_fiber(*e.children[0], g, lambda, frame), *frame);
    case FiberExpr::Kind::MaskAnti: {
      const MatrixXcd m = eval_fiber(*e.children[0], g, lambda, frame);
      return m - mask_diag_matrix(m, *frame);
    }
  }
  throw NumericsError("eval_fiber: unknown node");
}

bool fiber_is_diagonal(const FiberExpr& e) {
  switch (e.kind) {
    case FiberExpr::Kind::Identity:
    case FiberExpr::Kind::BandProjector:
    case FiberExpr::Kind::SpectralFn:
    case FiberExpr::Kind::MaskDiagonal:
      return true;
    case FiberExpr::Kind::FieldRep:
      return e.field_sel == FieldSelector::Z;
    case FiberExpr::Kind::FixedFieldRep:
      return false;
    case FiberExpr::Kind::Scaled:
      return fiber_is_diagonal(*e.children[0]);
    case FiberExpr::Kind::Product:
    case FiberExpr::Kind::Sum: {
      for (const auto& c : e.children)
        if (!fiber_is_diagonal(*c)) return false;
      return true;
    }
    case FiberExpr::Kind::MaskAnti:
      return false;
  }
  return false;
}

bool ScalarCutoff::trivial() const {
  return lo == 0.0 && std::isinf(hi) && component < 0 && inv_norm_power == 0;
}

ScalarCutoff ScalarCutoff::one() { return ScalarCutoff{}; }

ScalarCutoff ScalarCutoff::bump(double lo, double hi, double rise) {
  ScalarCutoff g;
  g.lo = lo;
  g.hi = hi;
  g.rise = rise > 0 ? rise : 0.2 * (hi - lo);
  return g;
}

double ScalarCutoff::eval(const VectorXd& lambda) const {
  const double r = lambda.norm();
  double val = 1.0;
  if (lo > 0.0 || !std::isinf(hi)) {
    const double w = rise > 0 ? rise : 0.2 * (hi - lo);
    if (r <= lo || r >= hi) return 0.0;
    // C-inf ramps at both plateau edges
    val *= smooth_step(0.5 + 0.5 * (r - lo) / w);
    val *= smooth_step(0.5 + 0.5 * (hi - r) / w);
  }
  if (component >= 0) val *= lambda[component];
  for (int k = 0; k < inv_norm_power; ++k) val /= r;
  return val;
}

namespace {
// Central shift of a flat grid array by an exact FFT phase.
VectorXcd shift_base(const GridSpec& grid, const VectorXcd& base,
                     const VectorXd& shift_vec) {
  VectorXcd out = base;
  if (shift_vec.size() == 0 || shift_vec.norm() == 0.0) return out;
  std::vector<int> dims;
  for (int i = 0; i < grid.vdim(); ++i) dims.push_back(grid.nv);
  for (int i = 0; i < grid.p; ++i) dims.push_back(grid.nz);
  for (int a = 0; a < grid.p; ++a) {
    const int axis = grid.vdim() + a;
    Fft::axis(out.data(), dims, axis, -1);
    int before = 1, after = 1;
    for (int i = 0; i < axis; ++i) before *= dims[i];
    for (std::size_t i = axis + 1; i < dims.size(); ++i) after *= dims[i];
    std::vector<cd> mult(grid.nz);
    for (int j = 0; j < grid.nz; ++j) {
      const int sj = j < grid.nz / 2 ? j : j - grid.nz;
      const double mu = kPi / grid.Lz * sj;
      mult[j] = std::exp(-kI * mu * shift_vec[a]) / double(grid.nz);
    }
    for (int b = 0; b < before; ++b)
      for (int j = 0; j < grid.nz; ++j) {
        cd* row = out.data() + (static_cast<std::size_t>(b) * grid.nz + j) * after;
        for (int t = 0; t < after; ++t) row[t] *= mult[j];
      }
    Fft::axis(out.data(), dims, axis, +1);
  }
  return out;
}
}  // namespace

XProfile XProfile::one() { return XProfile{}; }

XProfile XProfile::gaussian_z(double amp, const VectorXd& z_center, double z_width) {
  XProfile a;
  a.kind = Kind::Gaussian;
  a.amplitude = amp;
  a.z_center = z_center;
  a.z_width = z_width;
  return a;
}

XProfile XProfile::from_grid(const GridSpec& grid, VectorXcd values) {
  if (static_cast<std::size_t>(values.size()) != grid.total())
    throw DimensionError("XProfile::from_grid: wrong array size");
  XProfile a;
  a.kind = Kind::Grid;
  a.grid_values = std::make_shared<const VectorXcd>(std::move(values));
  return a;
}

VectorXcd XProfile::sample(const GridSpec& grid, const VectorXd& shift_vec) const {
  const std::size_t total = grid.total();
  const std::size_t zc = grid.z_count();
  if (kind == Kind::One) {
    return VectorXcd::Constant(total, amplitude);
  }
  if (kind == Kind::Gaussian) {
    VectorXcd out(total);
    std::vector<int> vidx(grid.vdim(), 0);
    for (std::size_t vflat = 0; vflat < grid.v_count(); ++vflat) {
      std::size_t rem = vflat;
      for (int a = grid.vdim() - 1; a >= 0; --a) {
        vidx[a] = static_cast<int>(rem % grid.nv);
        rem /= grid.nv;
      }
      double vq = 0.0;
      if (v_width > 0) {
        for (int a = 0; a < grid.vdim(); ++a) {
          const double dv =
              grid.v_value(vidx[a]) - (v_center.size() ? v_center[a] : 0.0);
          vq += dv * dv;
        }
      }
      const double vfac =
          v_width > 0 ? std::exp(-0.5 * vq / (v_width * v_width)) : 1.0;
      for (std::size_t zi = 0; zi < zc; ++zi) {
        double zfac = 1.0;
        if (z_width > 0) {
          double zq = 0.0;
          std::size_t zrem = zi;
          for (int a = grid.p - 1; a >= 0; --a) {
            const double zval = grid.z_value(static_cast<int>(zrem % grid.nz)) -
                                (z_center.size() ? z_center[a] : 0.0) -
                                (shift_vec.size() ? shift_vec[a] : 0.0);
            zq += zval * zval;
            zrem /= grid.nz;
          }
          zfac = std::exp(-0.5 * zq / (z_width * z_width));
        }
        out[vflat * zc + zi] = amplitude * vfac * zfac;
      }
    }
    return out;
  }
  if (kind == Kind::PolyGrid) {
    VectorXcd out = VectorXcd::Zero(total);
    std::vector<int> vidx(grid.vdim(), 0);
    for (const auto& term : poly) {
      VectorXcd shifted = shift_base(grid, *term.base, shift_vec);
      for (std::size_t vflat = 0; vflat < grid.v_count(); ++vflat) {
        std::size_t rem = vflat;
        for (int a = grid.vdim() - 1; a >= 0; --a) {
          vidx[a] = static_cast<int>(rem % grid.nv);
          rem /= grid.nv;
        }
        double mono = 1.0;
        for (int a = 0; a < grid.vdim(); ++a)
          for (int e = 0; e < term.vpow[a]; ++e) mono *= grid.v_value(vidx[a]);
        if (mono == 0.0) continue;
        for (std::size_t zi = 0; zi < zc; ++zi)
          out[vflat * zc + zi] += mono * shifted[vflat * zc + zi];
      }
    }
    return amplitude * out;
  }
  // Grid profile; central shift applied as an exact FFT phase.
  return shift_base(grid, *grid_values, shift_vec);
}

bool Symbol::in_AH_fragment() const {
  if (band_bound < 0) return false;
  for (const auto& t : terms)
    if (!(t.g.lo > 0.0)) return false;
  return true;
}

double Symbol::lambda_min() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& t : terms) m = std::min(m, t.g.lo);
  return m;
}

Symbol Symbol::separable(XProfile a, FiberExprPtr fiber, ScalarCutoff g,
                         int band_bound) {
  Symbol s;
  SymbolTerm t;
  t.a = std::move(a);
  t.fiber = std::move(fiber);
  t.g = std::move(g);
  if (t.fiber->kind == FiberExpr::Kind::BandProjector)
    t.band_row = t.band_col = t.fiber->band;
  s.terms.push_back(std::move(t));
  s.band_bound = band_bound;
  return s;
}

Symbol parse_symbol(const std::string& json_text, const GridSpec& grid) {
  (void)grid;
  const auto j = nlohmann::json::parse(json_text);
  XProfile a = XProfile::one();
  if (j.contains("a")) {
    const auto& ja = j["a"];
    const std::string type = ja.value("type", "one");
    if (type == "gaussian") {
      XProfile p;
      p.kind = XProfile::Kind::Gaussian;
      p.amplitude = ja.value("amplitude", 1.0);
      if (ja.contains("z_center")) {
        const auto c = ja["z_center"].get<std::vector<double>>();
        p.z_center = Eigen::Map<const VectorXd>(c.data(), c.size());
      }
      p.z_width = ja.value("z_width", -1.0);
      if (ja.contains("v_center")) {
        const auto c = ja["v_center"].get<std::vector<double>>();
        p.v_center = Eigen::Map<const VectorXd>(c.data(), c.size());
      }
      p.v_width = ja.value("v_width", -1.0);
      a = p;
    } else if (type != "one") {
      throw DomainError("parse_symbol: unknown profile type " + type);
    }
  }
  FiberExprPtr fiber = FiberExpr::identity();
  int bound = -1;
  if (j.contains("fiber")) {
    const auto& jf = j["fiber"];
    const std::string type = jf.value("type", "identity");
    if (type == "band_projector") {
      const int n = jf.at("n").get<int>();
      fiber = FiberExpr::projector(n);
      bound = n;
    } else if (type == "compression") {
      // Pi_n T Pi_np with T a ladder power bridging the bands (plain
      // projector sandwiches of the identity vanish for n != np).
      const int n = jf.at("n").get<int>();
      const int np = jf.at("np").get<int>();
      std::vector<FiberExprPtr> factors;
      factors.push_back(FiberExpr::projector(n));
      for (int k = 0; k < std::abs(n - np); ++k)
        factors.push_back(FiberExpr::field_rep(FieldSelector::P, 0));
      factors.push_back(FiberExpr::projector(np));
      fiber = FiberExpr::product(std::move(factors));
      bound = std::max(n, np);
    } else if (type == "ladder") {
      const std::string which = jf.value("which", "P");
      fiber = FiberExpr::field_rep(which == "Q" ? FieldSelector::Q : FieldSelector::P,
                               jf.value("j", 0));
    } else if (type != "identity") {
      throw DomainError("parse_symbol: unknown fiber type " + type);
    }
  }
  ScalarCutoff g = ScalarCutoff::one();
  if (j.contains("g") && j["g"].contains("support")) {
    const auto s = j["g"]["support"].get<std::vector<double>>();
    if (s.size() != 2) throw DomainError("parse_symbol: g.support needs 2 entries");
    g = ScalarCutoff::bump(s[0], s[1], j["g"].value("rise", -1.0));
  }
  return Symbol::separable(a, fiber, g, bound);
}


namespace {
std::vector<XProfile::PolyTerm> to_poly_terms(const GridSpec& grid,
                                              const XProfile& a) {
  std::vector<XProfile::PolyTerm> out;
  XProfile::PolyTerm t;
  t.vpow = VectorXi::Zero(grid.vdim());
  if (a.kind == XProfile::Kind::PolyGrid) {
    out = a.poly;
    if (a.amplitude != 1.0) {
      for (auto& pt : out)
        pt.base = std::make_shared<const VectorXcd>(a.amplitude * *pt.base);
    }
    return out;
  }
  // One, Gaussian and Grid profiles become a single base (shift excluded;
  // it is carried on the profile and commutes with differentiation).
  XProfile unshifted = a;
  unshifted.central_shift = 0.0;
  t.base = std::make_shared<const VectorXcd>(unshifted.sample(grid, VectorXd()));
  out.push_back(std::move(t));
  return out;
}

VectorXcd spectral_axis_derivative(const GridSpec& grid, const VectorXcd& base,
                                   int axis) {
  std::vector<int> dims;
  for (int i = 0; i < grid.vdim(); ++i) dims.push_back(grid.nv);
  for (int i = 0; i < grid.p; ++i) dims.push_back(grid.nz);
  VectorXcd out = base;
  Fft::axis(out.data(), dims, axis, -1);
  const bool central = axis >= grid.vdim();
  const int n = dims[axis];
  const double freq = central ? kPi / grid.Lz : kPi / grid.Lv;
  int before = 1, after = 1;
  for (int i = 0; i < axis; ++i) before *= dims[i];
  for (std::size_t i = axis + 1; i < dims.size(); ++i) after *= dims[i];
  std::vector<cd> mult(n);
  for (int j = 0; j < n; ++j) {
    const int sj = j < n / 2 ? j : j - n;
    mult[j] = (j == n / 2) ? cd(0, 0) : kI * freq * double(sj) / double(n);
  }
  for (int b = 0; b < before; ++b)
    for (int j = 0; j < n; ++j) {
      cd* row = out.data() + (static_cast<std::size_t>(b) * n + j) * after;
      for (int t = 0; t < after; ++t) row[t] *= mult[j];
    }
  Fft::axis(out.data(), dims, axis, +1);
  return out;
}

void merge_poly_term(std::vector<XProfile::PolyTerm>& terms,
                     const VectorXi& vpow, VectorXcd base) {
  for (auto& t : terms) {
    if (t.vpow == vpow) {
      t.base = std::make_shared<const VectorXcd>(*t.base + base);
      return;
    }
  }
  XProfile::PolyTerm t;
  t.vpow = vpow;
  t.base = std::make_shared<const VectorXcd>(std::move(base));
  terms.push_back(std::move(t));
}
}  // namespace

XProfile central_derivative(const GridSpec& grid, const XProfile& a, int k) {
  const auto in = to_poly_terms(grid, a);
  std::vector<XProfile::PolyTerm> out;
  for (const auto& t : in)
    merge_poly_term(out, t.vpow,
                    spectral_axis_derivative(grid, *t.base, grid.vdim() + k));
  XProfile r;
  r.kind = XProfile::Kind::PolyGrid;
  r.poly = std::move(out);
  r.central_shift = a.central_shift;
  return r;
}

XProfile left_field_derivative(const GroupStructure& g, const GridSpec& grid,
                               const XProfile& a, int r) {
  if (r < 0 || r >= grid.vdim())
    throw DomainError("left_field_derivative: index out of range");
  const auto in = to_poly_terms(grid, a);
  std::vector<XProfile::PolyTerm> out;
  for (const auto& t : in) {
    // analytic derivative of the v-monomial
    if (t.vpow[r] > 0) {
      VectorXi p = t.vpow;
      p[r] -= 1;
      merge_poly_term(out, p, double(t.vpow[r]) * *t.base);
    }
    // spectral derivative of the (decaying) base
    merge_poly_term(out, t.vpow, spectral_axis_derivative(grid, *t.base, r));
    // central correction: c_k(v) = -1/2 (B_k v)_r = sum_s -1/2 B_k(r,s) v_s
    for (int k = 0; k < g.p; ++k) {
      const VectorXcd dz =
          spectral_axis_derivative(grid, *t.base, grid.vdim() + k);
      for (int sax = 0; sax < grid.vdim(); ++sax) {
        const double coef = -0.5 * g.B[k](r, sax);
        if (coef == 0.0) continue;
        VectorXi p = t.vpow;
        p[sax] += 1;
        merge_poly_term(out, p, coef * dz);
      }
    }
  }
  XProfile res;
  res.kind = XProfile::Kind::PolyGrid;
  res.poly = std::move(out);
  res.central_shift = a.central_shift;
  return res;
}

}  // namespace htsc
