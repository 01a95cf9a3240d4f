#pragma once

#include <functional>

#include "htsc/frame.hpp"
#include "htsc/group.hpp"
#include "htsc/hermite.hpp"

namespace htsc {

/**
 * A complex matrix on the truncated Hermite basis, attached to a nonzero
 * central frequency. Column beta holds the image of h_beta.
 */
struct FiberOperator {
  VectorXd lambda;
  FramePtr frame;
  MatrixXcd mat;
};

enum class LadderKind { Lower, Raise };
enum class FieldSelector { P, Q, Z };

// H(lambda): diagonal with entries |lambda| (2|alpha| + d).
FiberOperator hamiltonian(const VectorXd& lambda, const FramePtr& frame);

// Annihilation/creation in coordinate j. Lower maps alpha -> alpha - 1_j with
// entry sqrt(|lambda| alpha_j / 2); Raise maps alpha -> alpha + 1_j with entry
// -sqrt(|lambda| (alpha_j + 1) / 2). Rows past the cutoff are dropped.
FiberOperator ladder(const VectorXd& lambda, const FramePtr& frame, int j,
                     LadderKind kind);

// pi^lambda of the adapted frame fields: P_j = R_j + Rbar_j (sqrt|l| d_xi),
// Q_j = i (R_j - Rbar_j) (i sqrt|l| xi), Z_k = i lambda_k Id.
FiberOperator vector_field_rep(const VectorXd& lambda, const FramePtr& frame,
                               FieldSelector which, int index);

// Spectral projector onto the band |alpha| = n.
FiberOperator projector(int n, const VectorXd& lambda, const FramePtr& frame);

// Same projector through the resolvent integral
// (1/2 pi i) contour_integral (|lambda|^-1 H - z)^-1 dz over the circle of
// radius rho around 2n+d, by the trapezoid rule.
FiberOperator projector_contour(int n, const VectorXd& lambda, const FramePtr& frame,
                                int quad_nodes, double rho);

// f applied to the spectrum: diagonal f(|lambda| (2|alpha| + d)).
FiberOperator spectral_function(const std::function<double(double)>& f,
                                const VectorXd& lambda, const FramePtr& frame);
FiberOperator spectral_function_cplx(const std::function<cd(double)>& f,
                                     const VectorXd& lambda, const FramePtr& frame);

// Smooth 0->1 step: 0 on (-inf,1/2], 1 on [1,inf), C^inf ramp in between.
double smooth_step(double x);

/**
 * One-dimensional building block of the representation matrices:
 * M1(a,b)[m,n] = integral h_m(x) e^{i b x} h_n(x + a) dx,
 * by Gauss-Hermite quadrature centred at -a/2.
 */
MatrixXcd m1_matrix(double a, double b, int nmax, const HermiteQuadrature& quad);

/**
 * Matrix of pi^lambda_x in the truncated basis, with x given in the
 * lambda-adapted coordinates (p, q, z):
 * entry(alpha,beta) = <pi_x h_beta, h_alpha>
 *                   = e^{i(lambda.z + |lambda| p.q / 2)} prod_j M1_j.
 * Entries factor exactly across coordinates.
 */
MatrixXcd matrix_coefficient(const VectorXd& lambda, const FramePtr& frame,
                             const VectorXd& p, const VectorXd& q, const VectorXd& z,
                             const HermiteQuadrature& quad);

// Convenience: x in fixed coordinates, frame computed from lambda.
MatrixXcd matrix_coefficient(const GroupStructure& g, const VectorXd& lambda,
                             const FramePtr& frame, const GroupPoint& x,
                             const HermiteQuadrature& quad);

// Largest column-orthonormality defect over interior columns.
double unitarity_residual(const MatrixXcd& m, const HermiteFrame& frame, int guard);

/**
 * Bracket identities in the infinitesimal representation, checked on the
 * interior block: [pi(Delta_G), pi(P_j)] = -2|l|^-1 pi(Z^(l)) pi(Q_j) and
 * [pi(Delta_G), pi(Q_j)] = 2|l|^-1 pi(Z^(l)) pi(P_j), with pi(Delta_G) = -H.
 * Returns the max residual over j and the full-block residual (which is
 * expected to be large; the truncation corrupts the top bands).
 */
struct BracketCheck {
  double interior = 0.0;
  double full = 0.0;
};
BracketCheck bracket_identity_check(const VectorXd& lambda, const FramePtr& frame,
                                    int guard = 2);

/**
 * Band compression of T = (sum_j1 V_j1 pi(V_j1)) (sum_j2 P_j2 pi(Q_j2) -
 * Q_j2 pi(P_j2)) with the outer fields realized on a second tensor factor:
 * (I (x) Pi_n) T (I (x) Pi_n) = (|l|/2)(|l|^{-1} (2n+d) pi(Z) + i pi(Delta_G))
 * (x) Pi_n. Returns the residual on the interior block of both factors.
 */
double band_T_identity_check(const VectorXd& lambda, const FramePtr& frame, int n,
                             int guard = 2);

}  // namespace htsc
