#include "htsc/hermite.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace htsc {

namespace {
constexpr int kHermiteGuard = 200;
const double kH0 = std::pow(kPi, -0.25);
}  // namespace

double hermite_eval(int n, double x) {
  if (n < 0 || n > kHermiteGuard)
    throw DomainError("hermite_eval: order outside the stability guard");
  double hm1 = 0.0;
  double h = kH0 * std::exp(-0.5 * x * x);
  for (int k = 0; k < n; ++k) {
    const double next =
        std::sqrt(2.0 / (k + 1)) * x * h - std::sqrt(double(k) / (k + 1)) * hm1;
    hm1 = h;
    h = next;
  }
  return h;
}

void hermite_all(int nmax, double x, double* out) {
  // Bulk variant used internally by quadrature tables; the function
  // recurrence stays stable far beyond the public guard.
  if (nmax < 0 || nmax > 4096)
    throw DomainError("hermite_all: order outside the stability guard");
  double hm1 = 0.0;
  double h = kH0 * std::exp(-0.5 * x * x);
  out[0] = h;
  for (int k = 0; k < nmax; ++k) {
    const double next =
        std::sqrt(2.0 / (k + 1)) * x * h - std::sqrt(double(k) / (k + 1)) * hm1;
    hm1 = h;
    h = next;
    out[k + 1] = h;
  }
}

MatrixXd hermite_table(int nmax, const VectorXd& points) {
  MatrixXd T(points.size(), nmax + 1);
  std::vector<double> row(nmax + 1);
  for (int i = 0; i < points.size(); ++i) {
    hermite_all(nmax, points[i], row.data());
    for (int m = 0; m <= nmax; ++m) T(i, m) = row[m];
  }
  return T;
}

HermiteQuadrature HermiteQuadrature::make(int num_nodes) {
  if (num_nodes < 1) throw DomainError("HermiteQuadrature: need >= 1 node");
  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix with
  // off-diagonal sqrt(k/2).
  MatrixXd J = MatrixXd::Zero(num_nodes, num_nodes);
  for (int k = 1; k < num_nodes; ++k) {
    const double b = std::sqrt(0.5 * k);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(J);
  HermiteQuadrature q;
  q.nodes = es.eigenvalues();
  q.weights.resize(num_nodes);
  std::vector<double> h(num_nodes);
  for (int i = 0; i < num_nodes; ++i) {
    hermite_all(num_nodes - 1, q.nodes[i], h.data());
    double s = 0.0;
    for (int k = 0; k < num_nodes; ++k) s += h[k] * h[k];
    q.weights[i] = 1.0 / s;
  }
  return q;
}

}  // namespace htsc
