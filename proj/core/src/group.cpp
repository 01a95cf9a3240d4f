#include "htsc/group.hpp"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

namespace htsc {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int num_threads) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t workers = num_threads > 0 ? static_cast<std::size_t>(num_threads)
                                        : (hw ? hw : 1);
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::uint64_t job_seed(std::uint64_t base_seed, const std::string& job_id) {
  // FNV-1a over the job id, mixed with the base seed.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : job_id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h ^ (base_seed + 0x9e3779b97f4a7c15ull);
}

FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DimensionError("linear_fit: need at least two matching samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  FitResult f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += r * r;
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

FitResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0)
      throw DomainError("loglog_fit: samples must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return linear_fit(lx, ly);
}

MatrixXd GroupStructure::b_of(const VectorXd& mu) const {
  if (mu.size() != p) throw DimensionError("b_of: central vector has wrong size");
  MatrixXd M = MatrixXd::Zero(2 * d, 2 * d);
  for (int k = 0; k < p; ++k) M += mu[k] * B[k];
  return M;
}

double GroupStructure::htype_residual(int samples, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < p; ++k) {
    worst = std::max(worst, (B[k] + B[k].transpose()).norm());
  }
  const MatrixXd id = MatrixXd::Identity(2 * d, 2 * d);
  for (int s = 0; s < samples; ++s) {
    VectorXd mu(p);
    for (int k = 0; k < p; ++k) mu[k] = gauss(rng);
    if (mu.norm() < 1e-8) continue;
    const MatrixXd M = b_of(mu);
    worst = std::max(worst, (M * M + mu.squaredNorm() * id).norm());
  }
  return worst;
}

void GroupStructure::validate() const {
  if (d < 1 || p < 1) throw DomainError("group: d and p must be positive");
  if (static_cast<int>(B.size()) != p)
    throw DimensionError("group: expected p structure matrices");
  for (const auto& m : B) {
    if (m.rows() != 2 * d || m.cols() != 2 * d)
      throw DimensionError("group: structure matrix has wrong shape");
  }
  if (htype_residual() > 1e-12)
    throw DomainError("group: H-type condition violated");
}

GroupStructure GroupStructure::heisenberg(int d) {
  GroupStructure g;
  g.d = d;
  g.p = 1;
  MatrixXd J = MatrixXd::Zero(2 * d, 2 * d);
  J.topRightCorner(d, d) = MatrixXd::Identity(d, d);
  J.bottomLeftCorner(d, d) = -MatrixXd::Identity(d, d);
  g.B = {J};
  return g;
}

GroupStructure GroupStructure::quaternionic() {
  GroupStructure g;
  g.d = 2;
  g.p = 3;
  MatrixXd Bi(4, 4), Bj(4, 4), Bk(4, 4);
  // Left multiplication by i, j, k on the quaternions in basis (1, i, j, k).
  Bi << 0, -1, 0, 0,
        1,  0, 0, 0,
        0,  0, 0, -1,
        0,  0, 1, 0;
  Bj << 0, 0, -1, 0,
        0, 0, 0, 1,
        1, 0, 0, 0,
        0, -1, 0, 0;
  Bk << 0, 0, 0, -1,
        0, 0, -1, 0,
        0, 1, 0, 0,
        1, 0, 0, 0;
  g.B = {Bi, Bj, Bk};
  return g;
}

std::string GroupStructure::to_json() const {
  nlohmann::json j;
  j["d"] = d;
  j["p"] = p;
  auto& arr = j["B"] = nlohmann::json::array();
  for (const auto& m : B) {
    std::vector<double> flat(m.size());
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) flat[r * m.cols() + c] = m(r, c);
    arr.push_back(flat);
  }
  return j.dump();
}

GroupStructure GroupStructure::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  GroupStructure g;
  g.d = j.at("d").get<int>();
  g.p = j.at("p").get<int>();
  for (const auto& flat : j.at("B")) {
    const int n = 2 * g.d;
    if (static_cast<int>(flat.size()) != n * n)
      throw DimensionError("group json: B entry has wrong length");
    MatrixXd m(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) m(r, c) = flat[r * n + c].get<double>();
    g.B.push_back(m);
  }
  g.validate();
  return g;
}

GroupPoint GroupPoint::identity(const GroupStructure& g) {
  return {VectorXd::Zero(g.dim_v()), VectorXd::Zero(g.dim_z())};
}

VectorXd bracket(const GroupStructure& g, const VectorXd& v1, const VectorXd& v2) {
  if (v1.size() != g.dim_v() || v2.size() != g.dim_v())
    throw DimensionError("bracket: first-stratum vectors have wrong size");
  VectorXd out(g.p);
  for (int k = 0; k < g.p; ++k) out[k] = v1.dot(g.B[k] * v2);
  return out;
}

GroupPoint multiply(const GroupStructure& g, const GroupPoint& x, const GroupPoint& y) {
  if (x.v.size() != g.dim_v() || y.v.size() != g.dim_v() ||
      x.z.size() != g.dim_z() || y.z.size() != g.dim_z())
    throw DimensionError("multiply: point dimensions do not match the group");
  GroupPoint out;
  out.v = x.v + y.v;
  out.z = x.z + y.z + 0.5 * bracket(g, x.v, y.v);
  return out;
}

GroupPoint inverse(const GroupPoint& x) { return {-x.v, -x.z}; }

GroupPoint dilate(double t, const GroupPoint& x) {
  if (t <= 0) throw DomainError("dilate: scale must be positive");
  return {t * x.v, t * t * x.z};
}

double quasi_norm(const GroupPoint& x) {
  const double v2 = x.v.squaredNorm();
  return std::pow(v2 * v2 + x.z.squaredNorm(), 0.25);
}

VectorXd left_field_coeffs(const GroupStructure& g, int j, const VectorXd& v) {
  if (j < 0 || j >= g.dim_v()) throw DomainError("left_field_coeffs: index out of range");
  if (v.size() != g.dim_v()) throw DimensionError("left_field_coeffs: bad v size");
  VectorXd c(g.p);
  for (int k = 0; k < g.p; ++k) c[k] = -0.5 * (g.B[k] * v)[j];
  return c;
}

bool AdaptedFrame::is_signed_permutation(double tol) const {
  const int n = static_cast<int>(R.rows());
  for (int c = 0; c < n; ++c) {
    int hits = 0;
    for (int r = 0; r < n; ++r) {
      const double a = std::abs(R(r, c));
      if (a > tol) {
        if (std::abs(a - 1.0) > tol) return false;
        ++hits;
      }
    }
    if (hits != 1) return false;
  }
  return true;
}

AdaptedFrame adapted_frame(const GroupStructure& g, const VectorXd& lambda) {
  if (lambda.size() != g.p) throw DimensionError("adapted_frame: lambda size");
  const double norm = lambda.norm();
  if (norm == 0.0) throw DomainError("adapted_frame: lambda must be nonzero");
  const int n = g.dim_v();
  const int d = g.d;
  // M is orthogonal and skew with M^2 = -I; columns are built in
  // quaternionic pairs (P_j, Q_j = -M P_j).
  const MatrixXd M = g.b_of(lambda) / norm;

  MatrixXd P(n, d), Q(n, d);
  MatrixXd basis(n, 0);
  for (int j = 0; j < d; ++j) {
    // Deterministic pivot: project each coordinate axis onto the orthogonal
    // complement of the columns found so far, take the largest residual
    // (ties to the lowest index), normalize with positive leading entry.
    VectorXd best;
    double best_norm = -1.0;
    for (int i = 0; i < n; ++i) {
      VectorXd cand = VectorXd::Unit(n, i);
      if (basis.cols() > 0) cand -= basis * (basis.transpose() * cand);
      const double cn = cand.norm();
      if (cn > best_norm + 1e-12) {
        best_norm = cn;
        best = cand;
      }
    }
    if (best_norm < 1e-8)
      throw NumericsError("adapted_frame: degenerate pivot search");
    best /= best.norm();
    for (int i = 0; i < n; ++i) {
      if (std::abs(best[i]) > 1e-12) {
        if (best[i] < 0) best = -best;
        break;
      }
    }
    P.col(j) = best;
    Q.col(j) = -M * best;
    MatrixXd grown(n, basis.cols() + 2);
    grown << basis, P.col(j), Q.col(j);
    basis = grown;
  }
  AdaptedFrame f;
  f.lambda = lambda;
  f.R.resize(n, n);
  f.R << P, Q;
  return f;
}

}  // namespace htsc
