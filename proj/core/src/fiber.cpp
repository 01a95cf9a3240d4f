#include "htsc/fiber.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace htsc {

namespace {
const cd kI(0.0, 1.0);

double norm_checked(const VectorXd& lambda) {
  const double n = lambda.norm();
  if (n == 0.0) throw DomainError("fiber: lambda must be nonzero");
  return n;
}
}  // namespace

FiberOperator hamiltonian(const VectorXd& lambda, const FramePtr& frame) {
  const double n = norm_checked(lambda);
  FiberOperator op{lambda, frame, MatrixXcd::Zero(frame->size(), frame->size())};
  for (int i = 0; i < frame->size(); ++i)
    op.mat(i, i) = n * (2.0 * frame->degree(i) + frame->d());
  return op;
}

FiberOperator ladder(const VectorXd& lambda, const FramePtr& frame, int j,
                     LadderKind kind) {
  const double nrm = norm_checked(lambda);
  if (j < 0 || j >= frame->d()) throw DomainError("ladder: coordinate out of range");
  FiberOperator op{lambda, frame, MatrixXcd::Zero(frame->size(), frame->size())};
  for (int col = 0; col < frame->size(); ++col) {
    std::vector<int> a = frame->alpha(col);
    if (kind == LadderKind::Lower) {
      if (a[j] == 0) continue;
      const double entry = std::sqrt(nrm * a[j] / 2.0);
      a[j] -= 1;
      const int row = frame->index_of(a);
      op.mat(row, col) = entry;
    } else {
      const double entry = -std::sqrt(nrm * (a[j] + 1) / 2.0);
      a[j] += 1;
      const int row = frame->index_of(a);
      if (row >= 0) op.mat(row, col) = entry;
    }
  }
  return op;
}

FiberOperator vector_field_rep(const VectorXd& lambda, const FramePtr& frame,
                               FieldSelector which, int index) {
  norm_checked(lambda);
  if (which == FieldSelector::Z) {
    if (index < 0 || index >= lambda.size())
      throw DomainError("vector_field_rep: central index out of range");
    FiberOperator op{lambda, frame,
                     kI * lambda[index] *
                         MatrixXcd::Identity(frame->size(), frame->size())};
    return op;
  }
  const FiberOperator lo = ladder(lambda, frame, index, LadderKind::Lower);
  const FiberOperator hi = ladder(lambda, frame, index, LadderKind::Raise);
  FiberOperator op{lambda, frame, MatrixXcd()};
  if (which == FieldSelector::P)
    op.mat = lo.mat + hi.mat;
  else
    op.mat = kI * (lo.mat - hi.mat);
  return op;
}

FiberOperator projector(int n, const VectorXd& lambda, const FramePtr& frame) {
  norm_checked(lambda);
  if (n < 0 || n > frame->cutoff())
    throw DomainError("projector: band beyond cutoff");
  FiberOperator op{lambda, frame, MatrixXcd::Zero(frame->size(), frame->size())};
  const auto [a, b] = frame->band_range(n);
  for (int i = a; i < b; ++i) op.mat(i, i) = 1.0;
  return op;
}

FiberOperator projector_contour(int n, const VectorXd& lambda, const FramePtr& frame,
                                int quad_nodes, double rho) {
  norm_checked(lambda);
  if (n < 0 || n > frame->cutoff())
    throw DomainError("projector_contour: band beyond cutoff");
  if (rho <= 0.0 || rho >= 2.0)
    throw DomainError("projector_contour: radius must lie in (0,2)");
  if (quad_nodes < 16) throw DomainError("projector_contour: need >= 16 nodes");

  const double nrm = lambda.norm();
  const MatrixXcd H = hamiltonian(lambda, frame).mat / nrm;
  const MatrixXcd id = MatrixXcd::Identity(frame->size(), frame->size());
  const double center = 2.0 * n + frame->d();

  MatrixXcd acc = MatrixXcd::Zero(frame->size(), frame->size());
  for (int m = 0; m < quad_nodes; ++m) {
    const double t = 2.0 * kPi * m / quad_nodes;
    const cd z = center + rho * std::exp(kI * t);
    for (int i = 0; i < frame->size(); ++i) {
      const double ev = 2.0 * frame->degree(i) + frame->d();
      if (std::abs(ev - z) < 1e-8)
        throw NumericsError("projector_contour: node hit the spectrum");
    }
    const cd dz = kI * rho * std::exp(kI * t) * (2.0 * kPi / quad_nodes);
    acc += dz * (H - z * id).partialPivLu().solve(id);
  }
  // Residue calculus: the enclosed pole of (|l|^-1 H - z)^-1 carries -Pi_n.
  FiberOperator op{lambda, frame, -acc / (2.0 * kPi * kI)};
  return op;
}

FiberOperator spectral_function(const std::function<double(double)>& f,
                                const VectorXd& lambda, const FramePtr& frame) {
  return spectral_function_cplx([&f](double e) { return cd(f(e), 0.0); }, lambda,
                                frame);
}

FiberOperator spectral_function_cplx(const std::function<cd(double)>& f,
                                     const VectorXd& lambda, const FramePtr& frame) {
  const double n = norm_checked(lambda);
  FiberOperator op{lambda, frame, MatrixXcd::Zero(frame->size(), frame->size())};
  for (int i = 0; i < frame->size(); ++i) {
    const cd val = f(n * (2.0 * frame->degree(i) + frame->d()));
    if (!std::isfinite(val.real()) || !std::isfinite(val.imag()))
      throw DomainError("spectral_function: f undefined at a spectral point");
    op.mat(i, i) = val;
  }
  return op;
}

double smooth_step(double x) {
  if (x <= 0.5) return 0.0;
  if (x >= 1.0) return 1.0;
  const double s = 2.0 * (x - 0.5);
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

MatrixXcd m1_matrix(double a, double b, int nmax, const HermiteQuadrature& quad) {
  // Substituting x = eta - a/2 makes the Gaussian mass of the integrand sit
  // at the nodes: M1 = e^{-iab/2} HL^T diag(w e^{ib eta}) HR.
  const VectorXd left = quad.nodes.array() - 0.5 * a;
  const VectorXd right = quad.nodes.array() + 0.5 * a;
  const MatrixXd HL = hermite_table(nmax, left);
  const MatrixXd HR = hermite_table(nmax, right);
  VectorXcd w(quad.nodes.size());
  for (int i = 0; i < quad.nodes.size(); ++i)
    w[i] = quad.weights[i] * std::exp(kI * b * quad.nodes[i]);
  return std::exp(-kI * (0.5 * a * b)) *
         (HL.transpose() * w.asDiagonal() * HR.cast<cd>());
}

MatrixXcd matrix_coefficient(const VectorXd& lambda, const FramePtr& frame,
                             const VectorXd& p, const VectorXd& q, const VectorXd& z,
                             const HermiteQuadrature& quad) {
  const double nrm = norm_checked(lambda);
  const int d = frame->d();
  if (p.size() != d || q.size() != d)
    throw DimensionError("matrix_coefficient: adapted coordinates have wrong size");
  const double root = std::sqrt(nrm);
  std::vector<MatrixXcd> m1(d);
  for (int j = 0; j < d; ++j)
    m1[j] = m1_matrix(root * p[j], root * q[j], frame->cutoff(), quad);
  const cd phase = std::exp(kI * (lambda.dot(z) + 0.5 * nrm * p.dot(q)));
  const int N = frame->size();
  MatrixXcd out(N, N);
  for (int r = 0; r < N; ++r) {
    const auto& alpha = frame->alpha(r);
    for (int c = 0; c < N; ++c) {
      const auto& beta = frame->alpha(c);
      cd prod = phase;
      for (int j = 0; j < d; ++j) prod *= m1[j](alpha[j], beta[j]);
      out(r, c) = prod;
    }
  }
  return out;
}

MatrixXcd matrix_coefficient(const GroupStructure& g, const VectorXd& lambda,
                             const FramePtr& frame, const GroupPoint& x,
                             const HermiteQuadrature& quad) {
  const AdaptedFrame af = adapted_frame(g, lambda);
  const VectorXd pq = af.R.transpose() * x.v;
  return matrix_coefficient(lambda, frame, pq.head(g.d), pq.tail(g.d), x.z, quad);
}

double unitarity_residual(const MatrixXcd& m, const HermiteFrame& frame, int guard) {
  const MatrixXcd gram = m.adjoint() * m;
  double worst = 0.0;
  for (int c = 0; c < frame.size(); ++c) {
    if (frame.degree(c) > frame.cutoff() - guard) continue;
    for (int r = 0; r < frame.size(); ++r) {
      if (frame.degree(r) > frame.cutoff() - guard) continue;
      const double want = (r == c) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(gram(r, c) - want));
    }
  }
  return worst;
}

BracketCheck bracket_identity_check(const VectorXd& lambda, const FramePtr& frame,
                                    int guard) {
  const double nrm = norm_checked(lambda);
  if (frame->cutoff() < 4)
    throw DomainError("bracket_identity_check: cutoff too small");
  // pi(Delta_G) assembled from the ladder route, sum_j pi(P_j)^2 + pi(Q_j)^2;
  // its top bands carry the truncation error the full-block residual reports.
  const int N = frame->size();
  MatrixXcd delta = MatrixXcd::Zero(N, N);
  std::vector<MatrixXcd> P(frame->d()), Q(frame->d());
  for (int j = 0; j < frame->d(); ++j) {
    P[j] = vector_field_rep(lambda, frame, FieldSelector::P, j).mat;
    Q[j] = vector_field_rep(lambda, frame, FieldSelector::Q, j).mat;
    delta += P[j] * P[j] + Q[j] * Q[j];
  }
  const cd piZ = kI * nrm * nrm;  // pi(Z^(lambda)) = i |lambda|^2
  const VectorXd inner = frame->interior_mask(guard);

  BracketCheck out;
  for (int j = 0; j < frame->d(); ++j) {
    const MatrixXcd r1 = (delta * P[j] - P[j] * delta) + (2.0 / nrm) * piZ * Q[j];
    const MatrixXcd r2 = (delta * Q[j] - Q[j] * delta) - (2.0 / nrm) * piZ * P[j];
    for (const MatrixXcd* r : {&r1, &r2}) {
      out.full = std::max({out.full, r->cwiseAbs().maxCoeff()});
      const MatrixXcd masked = inner.asDiagonal() * (*r) * inner.asDiagonal();
      out.interior = std::max(out.interior, masked.cwiseAbs().maxCoeff());
    }
  }
  return out;
}

double band_T_identity_check(const VectorXd& lambda, const FramePtr& frame, int n,
                             int guard) {
  const double nrm = norm_checked(lambda);
  if (n > frame->cutoff() - guard)
    throw DomainError("band_T_identity_check: band beyond guard");
  const int d = frame->d();
  const int N = frame->size();
  const MatrixXcd id = MatrixXcd::Identity(N, N);

  MatrixXcd first = MatrixXcd::Zero(N * N, N * N);
  MatrixXcd second = MatrixXcd::Zero(N * N, N * N);
  for (int j = 0; j < d; ++j) {
    const MatrixXcd P = vector_field_rep(lambda, frame, FieldSelector::P, j).mat;
    const MatrixXcd Q = vector_field_rep(lambda, frame, FieldSelector::Q, j).mat;
    first += Eigen::kroneckerProduct(P, P) + Eigen::kroneckerProduct(Q, Q);
    second += Eigen::kroneckerProduct(P, Q) - Eigen::kroneckerProduct(Q, P);
  }
  const MatrixXcd Pi = projector(n, lambda, frame).mat;
  const MatrixXcd IxPi = Eigen::kroneckerProduct(id, Pi);
  const MatrixXcd lhs = IxPi * (first * second) * IxPi;

  const MatrixXcd H = hamiltonian(lambda, frame).mat;
  const cd piZ = kI * nrm * nrm;
  const MatrixXcd inner_x = (2.0 * n + d) / nrm * piZ * id - kI * H;
  const MatrixXcd rhs = 0.5 * nrm * Eigen::kroneckerProduct(inner_x, Pi);

  // Interior guard on both tensor factors.
  const VectorXd mask1 = frame->interior_mask(guard);
  VectorXd mask(N * N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) mask[a * N + b] = mask1[a] * mask1[b];
  const MatrixXcd res = mask.asDiagonal() * (lhs - rhs) * mask.asDiagonal();
  return res.cwiseAbs().maxCoeff();
}

}  // namespace htsc
