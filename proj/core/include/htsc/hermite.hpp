#pragma once

#include "htsc/common.hpp"

namespace htsc {

// Orthonormal Hermite function h_n on the line, via the stable three-term
// recurrence h_{n+1} = sqrt(2/(n+1)) x h_n - sqrt(n/(n+1)) h_{n-1},
// h_0(x) = pi^{-1/4} exp(-x^2/2).
double hermite_eval(int n, double x);

// All of h_0..h_nmax at one point; out has size nmax+1.
void hermite_all(int nmax, double x, double* out);

// Columns m = 0..nmax evaluated at the given points (rows).
MatrixXd hermite_table(int nmax, const VectorXd& points);

/**
 * Gauss-Hermite rule stated for integrals of Hermite *functions*:
 * integral f(x) dx ~= sum_i w[i] f(x[i]) is exact when f is a polynomial of
 * degree < 2K times exp(-x^2). Weights are the modified ones
 * w_i = 1 / sum_{k<K} h_k(x_i)^2, so nothing overflows at large K.
 */
struct HermiteQuadrature {
  VectorXd nodes;
  VectorXd weights;

  static HermiteQuadrature make(int num_nodes);
};

}  // namespace htsc
