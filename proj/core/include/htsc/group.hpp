#pragma once

#include <string>
#include <vector>

#include "htsc/common.hpp"

namespace htsc {

/**
 * Step-2 stratified Lie algebra data of Heisenberg type.
 *
 * The first stratum has dimension 2d, the center dimension p, and the
 * bracket is encoded by p skew-symmetric matrices: [U,V]_k = U^T B_k V.
 * The H-type condition requires B(mu)^2 = -|mu|^2 Id for every mu != 0,
 * with B(mu) = sum_k mu_k B_k.
 */
struct GroupStructure {
  int d = 1;
  int p = 1;
  std::vector<MatrixXd> B;

  int dim_v() const { return 2 * d; }
  int dim_z() const { return p; }
  int homogeneous_dimension() const { return 2 * d + 2 * p; }

  MatrixXd b_of(const VectorXd& mu) const;

  // Max residual of skewness and the H-type identity over random samples.
  double htype_residual(int samples = 32, std::uint64_t seed = 7) const;
  void validate() const;

  static GroupStructure heisenberg(int d = 1);
  // d=2, p=3 example built from the three anticommuting quaternion units.
  static GroupStructure quaternionic();

  std::string to_json() const;
  static GroupStructure from_json(const std::string& text);
};

struct GroupPoint {
  VectorXd v;
  VectorXd z;

  static GroupPoint identity(const GroupStructure& g);
};

// [v1, v2] as a vector in the center.
VectorXd bracket(const GroupStructure& g, const VectorXd& v1, const VectorXd& v2);

GroupPoint multiply(const GroupStructure& g, const GroupPoint& x, const GroupPoint& y);
GroupPoint inverse(const GroupPoint& x);
GroupPoint dilate(double t, const GroupPoint& x);
double quasi_norm(const GroupPoint& x);

// Central coefficients of the left-invariant field V_j at first-stratum
// position v:  V_j f = d/dt f(x Exp(t e_j)) = d_{v_j} f + sum_k c_k d_{z_k} f
// with c_k = 1/2 [v, e_j]_k = -1/2 (B_k v)_j.
VectorXd left_field_coeffs(const GroupStructure& g, int j, const VectorXd& v);

/**
 * Orthogonal change of first-stratum basis adapted to a central frequency:
 * columns (P_1..P_d, Q_1..Q_d) satisfy R^T B(lambda) R = |lambda| J with
 * J = [[0, I], [-I, 0]]. Deterministic pivoting makes the frame a function
 * of lambda alone.
 */
struct AdaptedFrame {
  VectorXd lambda;
  MatrixXd R;

  // True if R is a signed permutation (enables the separable transform path).
  bool is_signed_permutation(double tol = 1e-12) const;
};

AdaptedFrame adapted_frame(const GroupStructure& g, const VectorXd& lambda);

}  // namespace htsc
