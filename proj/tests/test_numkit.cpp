#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "gamc/errors.hpp"
#include "gamc/numkit.hpp"
#include "gamc/random.hpp"

using namespace gamc;
using namespace gamc::numkit;

namespace {

SymMatrix random_spd(Rng& rng, Eigen::Index n) {
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) b.col(i) = standard_normal(rng, n);
  return b.transpose() * b + SymMatrix::Identity(n, n);
}

SymMatrix random_symmetric(Rng& rng, Eigen::Index n) {
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) b.col(i) = standard_normal(rng, n);
  return 0.5 * (b + b.transpose());
}

double min_eigenvalue(const SymMatrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("cholesky closed forms") {
  CHECK(max_abs(cholesky(SymMatrix::Identity(3, 3)).lower() - Matrix::Identity(3, 3)) == 0.0);
  SymMatrix a(2, 2);
  a << 4, 2, 2, 3;
  Matrix l(2, 2);
  l << 2, 0, 1, std::sqrt(2.0);
  CHECK(max_abs(cholesky(a).lower() - l) <= 1e-15);
}

TEST_CASE("cholesky reconstructs random SPD matrices") {
  Rng rng = make_rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const SymMatrix a = random_spd(rng, 6);
    const PosDefFactor f = cholesky(a);
    CHECK(max_abs(f.reconstruct() - a) <= 1e-10);
    CHECK((f.lower().diagonal().array() > 0.0).all());
    CHECK(f.log_det() == doctest::Approx(std::log(a.determinant())).epsilon(1e-10));
  }
}

TEST_CASE("cholesky rejects indefinite and non-finite input") {
  SymMatrix a(2, 2);
  a << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky(a), NotPositiveDefinite);
  CHECK_THROWS_AS(cholesky(SymMatrix::Zero(3, 3)), NotPositiveDefinite);
  SymMatrix b = SymMatrix::Identity(2, 2);
  b(0, 1) = b(1, 0) = std::nan("");
  CHECK_THROWS_AS(cholesky(b), NonFiniteInput);
  CHECK_THROWS_AS(cholesky(Matrix::Identity(2, 3)), DimensionMismatch);
}

TEST_CASE("rank-one update and downdate") {
  const PosDefFactor id = cholesky(SymMatrix::Identity(3, 3));
  const Vector e1 = Vector::Unit(3, 0);
  const PosDefFactor up = rank_one_update(id, e1, +1);
  Vector diag(3);
  diag << 2, 1, 1;
  CHECK(max_abs(up.reconstruct() - SymMatrix(diag.asDiagonal())) <= 1e-15);
  CHECK(max_abs(rank_one_update(up, e1, -1).lower() - id.lower()) <= 1e-10);

  Rng rng = make_rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    const auto n = static_cast<Eigen::Index>(2 + rep % 8);
    const SymMatrix a = random_spd(rng, n);
    const Vector v = standard_normal(rng, n);
    const PosDefFactor f = cholesky(a);
    const PosDefFactor u = rank_one_update(f, v, +1);
    CHECK(max_abs(u.lower() - cholesky(a + v * v.transpose()).lower()) <= 1e-9);
    CHECK(max_abs(rank_one_update(u, v, -1).lower() - f.lower()) <= 1e-9);
    // safe downdate: v scaled well inside the unit ball of a
    const Vector w = f.apply(standard_normal(rng, n).normalized()) * 0.5;
    CHECK(max_abs(rank_one_update(f, w, -1).lower() - cholesky(a - w * w.transpose()).lower()) <= 1e-9);
  }
}

TEST_CASE("downdate that breaks positivity throws") {
  const PosDefFactor id = cholesky(SymMatrix::Identity(2, 2));
  CHECK_THROWS_AS(rank_one_update(id, Vector::Unit(2, 0), -1), DowndateBreaksPositivity);
  CHECK_THROWS_AS(rank_one_update(id, 2.0 * Vector::Unit(2, 1), -1), DowndateBreaksPositivity);
  CHECK_THROWS_AS(rank_one_update(id, Vector::Ones(3), +1), DimensionMismatch);
}

TEST_CASE("chol_solve") {
  const Vector b = Vector::LinSpaced(4, -1.0, 2.0);
  CHECK(max_abs(chol_solve(cholesky(SymMatrix::Identity(4, 4)), b) - b) == 0.0);
  SymMatrix four(1, 1);
  four << 4;
  Vector eight(1);
  eight << 8;
  CHECK(chol_solve(cholesky(four), eight)(0) == doctest::Approx(2.0).epsilon(1e-15));

  Rng rng = make_rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const SymMatrix a = random_spd(rng, 6);
    const Vector rhs = standard_normal(rng, 6);
    const Vector x = chol_solve(cholesky(a), rhs);
    CHECK((a * x - rhs).norm() <= 1e-9 * rhs.norm());
    CHECK(max_abs(x - a.inverse() * rhs) <= 1e-9);
  }
  CHECK_THROWS_AS(chol_solve(cholesky(four), b), DimensionMismatch);
}

TEST_CASE("invert_spd") {
  CHECK(max_abs(invert_spd(SymMatrix::Identity(4, 4)) - Matrix::Identity(4, 4)) == 0.0);
  SymMatrix d = SymMatrix::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 4;
  SymMatrix inv = SymMatrix::Zero(2, 2);
  inv(0, 0) = 0.5;
  inv(1, 1) = 0.25;
  CHECK(max_abs(invert_spd(d) - inv) <= 1e-16);
  Rng rng = make_rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    const SymMatrix a = random_spd(rng, 6);
    const SymMatrix ai = invert_spd(a);
    CHECK(max_abs(a * ai - Matrix::Identity(6, 6)) <= 1e-8);
    CHECK(is_symmetric(ai));
  }
  SymMatrix bad(2, 2);
  bad << 0, 1, 1, 0;
  CHECK_THROWS_AS(invert_spd(bad), NotPositiveDefinite);
}

TEST_CASE("softabs limits") {
  SymMatrix h = SymMatrix::Zero(2, 2);
  h(0, 0) = 2;
  h(1, 1) = -2;
  const SymMatrix s = softabs_metric(h, 1e6);
  CHECK(std::abs(s(0, 0) - 2.0) <= 1e-5);
  CHECK(std::abs(s(1, 1) - 2.0) <= 1e-5);
  CHECK(std::abs(s(0, 1)) <= 1e-5);

  for (double alpha : {1.0, 1000.0, 1e6}) {
    const SymMatrix z = softabs_metric(SymMatrix::Zero(2, 2), alpha);
    CHECK(max_abs(z - SymMatrix::Identity(2, 2) / alpha) <= 1e-12 / alpha);
  }
  // lambda coth(alpha lambda) at a moderate argument
  CHECK(softabs_value(0.5, 2.0) == doctest::Approx(0.5 / std::tanh(1.0)).epsilon(1e-14));
  CHECK(softabs_value(-0.5, 2.0) == doctest::Approx(0.5 / std::tanh(1.0)).epsilon(1e-14));

  SymMatrix bad = SymMatrix::Identity(2, 2);
  bad(0, 0) = HUGE_VAL;
  CHECK_THROWS_AS(softabs_metric(bad, 1000.0), NonFiniteInput);
}

TEST_CASE("softabs on random indefinite matrices") {
  Rng rng = make_rng(15);
  for (int rep = 0; rep < 100; ++rep) {
    const SymMatrix h = random_symmetric(rng, 5);
    const SymMatrix s = softabs_metric(h, 1000.0);
    CHECK(is_symmetric(s));
    CHECK(min_eigenvalue(s) > 0.0);
    // eigenvectors shared: s is diagonal in h's eigenbasis with |lambda| coth
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const Matrix in_basis = es.eigenvectors().transpose() * s * es.eigenvectors();
    for (Eigen::Index i = 0; i < 5; ++i) {
      const double lam = es.eigenvalues()(i);
      CHECK(in_basis(i, i) == doctest::Approx(lam / std::tanh(1000.0 * lam)).epsilon(1e-10));
      for (Eigen::Index j = 0; j < 5; ++j) {
        if (i != j) CHECK(std::abs(in_basis(i, j)) <= 1e-8);
      }
    }
    // even in the eigenvalue sign
    Vector lam = es.eigenvalues();
    lam(rep % 5) = -lam(rep % 5);
    const SymMatrix flipped = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    CHECK(max_abs(softabs_metric(flipped, 1000.0) - s) <= 1e-10);
  }
}

TEST_CASE("softabs derivative matches finite differences") {
  Rng rng = make_rng(16);
  for (int rep = 0; rep < 10; ++rep) {
    const double alpha = rep % 2 ? 1.0 : 3.0;
    const SymMatrix h = random_symmetric(rng, 4);
    const SymMatrix dh = random_symmetric(rng, 4);
    const double t = 1e-6;
    const SymMatrix fd = (softabs_metric(h + t * dh, alpha) - softabs_metric(h - t * dh, alpha)) / (2 * t);
    CHECK(max_abs(softabs_derivative(h, dh, alpha) - fd) <= 1e-6 * (1.0 + max_abs(fd)));
  }
  // repeated eigenvalues use the slope on the diagonal of the divided differences
  const SymMatrix h = SymMatrix::Identity(3, 3);
  const SymMatrix dh = random_symmetric(rng, 3);
  const double t = 1e-6;
  const SymMatrix fd = (softabs_metric(h + t * dh, 2.0) - softabs_metric(h - t * dh, 2.0)) / (2 * t);
  CHECK(max_abs(softabs_derivative(h, dh, 2.0) - fd) <= 1e-6);
}

TEST_CASE("factors produced by every operation stay positive definite") {
  Rng rng = make_rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const SymMatrix a = random_spd(rng, 4);
    PosDefFactor f = cholesky(a);
    f = rank_one_update(f, standard_normal(rng, 4), +1);
    f = f.scaled(0.3);
    const SymMatrix r = f.reconstruct();
    CHECK(is_symmetric(r));
    CHECK(min_eigenvalue(r) > 0.0);
    const Vector b = standard_normal(rng, 4);
    CHECK((r * chol_solve(f, b) - b).norm() <= 1e-9 * b.norm());
  }
}
