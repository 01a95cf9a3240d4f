#include <doctest.h>

#include <random>

#include "htsc/group.hpp"

using namespace htsc;

namespace {
GroupPoint random_point(const GroupStructure& g, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  GroupPoint x{VectorXd(g.dim_v()), VectorXd(g.dim_z())};
  for (int i = 0; i < g.dim_v(); ++i) x.v[i] = gauss(rng);
  for (int i = 0; i < g.dim_z(); ++i) x.z[i] = gauss(rng);
  return x;
}
}  // namespace

TEST_CASE("heisenberg structure is H-type") {
  const auto g = GroupStructure::heisenberg(1);
  CHECK(g.htype_residual() <= 1e-12);
  CHECK(g.homogeneous_dimension() == 4);
  const auto g2 = GroupStructure::heisenberg(3);
  CHECK(g2.htype_residual() <= 1e-12);
  const auto q = GroupStructure::quaternionic();
  CHECK(q.htype_residual() <= 1e-12);
  CHECK(q.homogeneous_dimension() == 10);
}

TEST_CASE("group law: identity, BCH example, associativity") {
  const auto g = GroupStructure::heisenberg(1);
  std::mt19937_64 rng(11);
  const auto e = GroupPoint::identity(g);

  const auto x = random_point(g, rng);
  const auto xe = multiply(g, x, e);
  CHECK((xe.v - x.v).norm() == 0.0);
  CHECK((xe.z - x.z).norm() == 0.0);

  // Exp(tP) Exp(tQ) = (v=(t,t), z=t^2/2) since [P,Q] = Z.
  const double t = 0.7;
  GroupPoint a{VectorXd(2), VectorXd(1)}, b{VectorXd(2), VectorXd(1)};
  a.v << t, 0.0;
  a.z << 0.0;
  b.v << 0.0, t;
  b.z << 0.0;
  const auto ab = multiply(g, a, b);
  CHECK(ab.v[0] == doctest::Approx(t).epsilon(1e-14));
  CHECK(ab.v[1] == doctest::Approx(t).epsilon(1e-14));
  CHECK(ab.z[0] == doctest::Approx(t * t / 2.0).epsilon(1e-14));

  for (int i = 0; i < 100; ++i) {
    const auto p = random_point(g, rng);
    const auto q = random_point(g, rng);
    const auto w = random_point(g, rng);
    const auto l = multiply(g, multiply(g, p, q), w);
    const auto r = multiply(g, p, multiply(g, q, w));
    CHECK((l.v - r.v).norm() + (l.z - r.z).norm() <= 1e-12);
  }
}

TEST_CASE("inverse") {
  const auto g = GroupStructure::quaternionic();
  std::mt19937_64 rng(5);
  const auto e = GroupPoint::identity(g);
  const auto ie = inverse(e);
  CHECK(ie.v.norm() == 0.0);
  CHECK(ie.z.norm() == 0.0);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_point(g, rng);
    const auto ix = inverse(x);
    CHECK((ix.v + x.v).norm() == 0.0);
    const auto prod = multiply(g, x, ix);
    CHECK(prod.v.norm() + prod.z.norm() <= 1e-14);
  }
}

TEST_CASE("dilations are automorphisms; quasi-norm homogeneity") {
  const auto g = GroupStructure::heisenberg(2);
  std::mt19937_64 rng(3);
  const auto x = random_point(g, rng);
  const auto d1 = dilate(1.0, x);
  CHECK((d1.v - x.v).norm() == 0.0);

  const auto d2 = dilate(2.0, x);
  CHECK((d2.v - 2.0 * x.v).norm() == 0.0);
  CHECK((d2.z - 4.0 * x.z).norm() == 0.0);

  for (int i = 0; i < 30; ++i) {
    const auto a = random_point(g, rng);
    const auto b = random_point(g, rng);
    const double t = 0.25 + 2.0 * std::abs(std::sin(i + 1.0));
    const auto l = dilate(t, multiply(g, a, b));
    const auto r = multiply(g, dilate(t, a), dilate(t, b));
    CHECK((l.v - r.v).norm() + (l.z - r.z).norm() <= 1e-12);
    CHECK(quasi_norm(dilate(t, a)) ==
          doctest::Approx(t * quasi_norm(a)).epsilon(1e-12));
  }

  CHECK(quasi_norm(GroupPoint::identity(g)) == 0.0);
  GroupPoint vonly{x.v, VectorXd::Zero(g.p)};
  CHECK(quasi_norm(vonly) == doctest::Approx(x.v.norm()).epsilon(1e-13));
  CHECK_THROWS_AS(dilate(0.0, x), DomainError);
}

TEST_CASE("left-invariant field coefficients") {
  const auto g = GroupStructure::heisenberg(1);
  CHECK(left_field_coeffs(g, 0, VectorXd::Zero(2)).norm() == 0.0);

  // Fields V1 = d_v1 + c1(v) d_z, V2 = d_v2 + c2(v) d_z applied to f = z:
  // [V1, V2] z must equal [e1, e2]_1 = +1 on the Heisenberg group.
  VectorXd v(2);
  v << 0.3, -1.2;
  const auto c1 = [&](const VectorXd& w) { return left_field_coeffs(g, 0, w)[0]; };
  const auto c2 = [&](const VectorXd& w) { return left_field_coeffs(g, 1, w)[0]; };
  const double h = 1e-6;
  VectorXd e1 = VectorXd::Unit(2, 0), e2 = VectorXd::Unit(2, 1);
  const double d1c2 = (c2(v + h * e1) - c2(v - h * e1)) / (2 * h);
  const double d2c1 = (c1(v + h * e2) - c1(v - h * e2)) / (2 * h);
  CHECK(d1c2 - d2c1 == doctest::Approx(1.0).epsilon(1e-7));

  // Central coefficient of the P-field is linear in q with weight 1/2.
  VectorXd pq(2);
  pq << 0.5, 0.8;
  CHECK(std::abs(left_field_coeffs(g, 0, pq)[0]) == doctest::Approx(0.4));
  CHECK_THROWS_AS(left_field_coeffs(g, 7, pq), DomainError);
}

TEST_CASE("adapted frames") {
  const auto g = GroupStructure::heisenberg(1);
  VectorXd lp(1), lm(1);
  lp << 1.0;
  lm << -1.0;

  const auto fp = adapted_frame(g, lp);
  CHECK((fp.R - MatrixXd::Identity(2, 2)).norm() <= 1e-12);

  MatrixXd J(2, 2);
  J << 0, 1, -1, 0;
  for (const auto& lam : {lp, lm}) {
    const auto f = adapted_frame(g, lam);
    CHECK((f.R.transpose() * f.R - MatrixXd::Identity(2, 2)).norm() <= 1e-12);
    CHECK((f.R.transpose() * g.b_of(lam) * f.R - lam.norm() * J).norm() <= 1e-10);
    CHECK(f.is_signed_permutation());
  }

  // Quaternionic example, random directions.
  const auto q = GroupStructure::quaternionic();
  MatrixXd J4 = MatrixXd::Zero(4, 4);
  J4.topRightCorner(2, 2) = MatrixXd::Identity(2, 2);
  J4.bottomLeftCorner(2, 2) = -MatrixXd::Identity(2, 2);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 20; ++i) {
    VectorXd lam(3);
    for (int k = 0; k < 3; ++k) lam[k] = gauss(rng);
    if (lam.norm() < 0.1) continue;
    const auto f = adapted_frame(q, lam);
    CHECK((f.R.transpose() * f.R - MatrixXd::Identity(4, 4)).norm() <= 1e-10);
    CHECK((f.R.transpose() * q.b_of(lam) * f.R - lam.norm() * J4).norm() <= 1e-10);
    const auto f2 = adapted_frame(q, lam);
    CHECK((f.R - f2.R).norm() == 0.0);
  }
  CHECK_THROWS_AS(adapted_frame(q, VectorXd::Zero(3)), DomainError);
}

TEST_CASE("bracket relations in the adapted frame") {
  // [P_j, Q_j] = |l|^{-1} Z^(l) holds as a full vector identity. The cross
  // brackets vanish lambda-paired (the content of R^T B(l) R = |l| J); for
  // p >= 2 their components orthogonal to lambda need not vanish, and do not
  // for the quaternionic group, so only the paired form is asserted.
  const auto q = GroupStructure::quaternionic();
  VectorXd lam(3);
  lam << 0.6, -1.1, 0.4;
  const VectorXd lhat = lam / lam.norm();
  const auto f = adapted_frame(q, lam);
  const int d = q.d;
  for (int j1 = 0; j1 < 2 * d; ++j1) {
    for (int j2 = 0; j2 < 2 * d; ++j2) {
      const VectorXd br = bracket(q, f.R.col(j1), f.R.col(j2));
      if (j2 == j1 + d) {
        CHECK((br - lhat).norm() <= 1e-10);
      } else if (j1 == j2 + d) {
        CHECK((br + lhat).norm() <= 1e-10);
      } else if (j1 != j2) {
        CHECK(std::abs(br.dot(lhat)) <= 1e-10);
      }
    }
  }

  // On Heisenberg groups (p = 1) the cross brackets vanish outright.
  const auto h2 = GroupStructure::heisenberg(2);
  VectorXd l1(1);
  l1 << -0.8;
  const auto fh = adapted_frame(h2, l1);
  for (int j1 = 0; j1 < 4; ++j1)
    for (int j2 = 0; j2 < 4; ++j2)
      if (j1 != j2 && j2 != j1 + 2 && j1 != j2 + 2)
        CHECK(bracket(h2, fh.R.col(j1), fh.R.col(j2)).norm() <= 1e-12);
}

TEST_CASE("group json round-trip") {
  const auto q = GroupStructure::quaternionic();
  const auto q2 = GroupStructure::from_json(q.to_json());
  CHECK(q2.d == q.d);
  CHECK(q2.p == q.p);
  for (int k = 0; k < q.p; ++k) CHECK((q2.B[k] - q.B[k]).norm() == 0.0);
}
