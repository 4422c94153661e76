#include "linalg.hpp"

#include <Eigen/Eigenvalues>

#include "rng.hpp"
#include "test_util.hpp"

using namespace tvlab;

namespace {

MatrixXd random_symmetric(int d, Rng& rng, double scale = 1.0) {
  MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = scale * rng.normal();
  return 0.5 * (a + a.transpose());
}

// characteristic polynomial residual, scaled
double charpoly_residual(const MatrixXd& a, double lambda) {
  MatrixXd shifted = a - lambda * MatrixXd::Identity(a.rows(), a.cols());
  return std::abs(shifted.determinant());
}

void test_closed_forms_against_charpoly() {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    for (int d = 1; d <= 3; ++d) {
      MatrixXd a = random_symmetric(d, rng, 2.0);
      VectorXd ev = sym_eigenvalues(a);
      REQUIRE(ev.size() == d);
      for (int i = 0; i + 1 < d; ++i) REQUIRE(ev(i) <= ev(i + 1));
      double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
      for (int i = 0; i < d; ++i)
        REQUIRE_MSG(charpoly_residual(a, ev(i)) <= 1e-8 * std::pow(scale, d),
                    "d=%d trial=%d lambda=%.17g", d, trial, ev(i));
      // trace and det identities
      REQUIRE_CLOSE(ev.sum(), a.trace(), 1e-9 * scale * d);
      double det = 1.0;
      for (int i = 0; i < d; ++i) det *= ev(i);
      REQUIRE_CLOSE(det, a.determinant(), 1e-8 * std::pow(scale, d));
    }
  }
  test_pass("closed-form eigenvalues satisfy the characteristic polynomial");
}

void test_against_eigen_solver() {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    for (int d = 2; d <= 6; ++d) {
      MatrixXd a = random_symmetric(d, rng, 3.0);
      VectorXd ours = sym_eigenvalues(a);
      Eigen::SelfAdjointEigenSolver<MatrixXd> reference(a);
      double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
      for (int i = 0; i < d; ++i)
        REQUIRE_CLOSE(ours(i), reference.eigenvalues()(i), 1e-9 * scale);
    }
  }
  test_pass("eigenvalues match the Eigen reference solver");
}

void test_eigenvectors() {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    for (int d = 2; d <= 5; ++d) {
      MatrixXd a = random_symmetric(d, rng);
      SymEigen e = sym_eigen(a);
      double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
      // A v = lambda v and orthonormality
      for (int i = 0; i < d; ++i) {
        VectorXd resid = a * e.vectors.col(i) - e.values(i) * e.vectors.col(i);
        REQUIRE(resid.norm() <= 1e-9 * scale);
      }
      MatrixXd gram = e.vectors.transpose() * e.vectors;
      REQUIRE((gram - MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  test_pass("eigenvectors orthonormal and consistent");
}

void test_inverse_sqrt() {
  // diagonal closed form
  MatrixXd d2 = MatrixXd::Zero(2, 2);
  d2(0, 0) = 4.0;
  d2(1, 1) = 1.0;
  MatrixXd t = inverse_sqrt_psd(d2, 0.0);
  REQUIRE_CLOSE(t(0, 0), 0.5, 1e-12);
  REQUIRE_CLOSE(t(1, 1), 1.0, 1e-12);
  REQUIRE_CLOSE(t(0, 1), 0.0, 1e-12);

  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd a = random_symmetric(3, rng);
    a = a * a.transpose();  // PSD
    double ridge = 1e-6 * a.trace() / 3 + 1e-12;
    MatrixXd w = inverse_sqrt_psd(a, ridge);
    MatrixXd should_be_identity =
        w * (a + ridge * MatrixXd::Identity(3, 3)) * w;
    REQUIRE((should_be_identity - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
  }
  test_pass("inverse sqrt inverts the ridged matrix");
}

void test_damped_solve_and_kron() {
  Rng rng(15);
  MatrixXd a = random_symmetric(4, rng);
  a = a * a.transpose();
  VectorXd b(4);
  for (int i = 0; i < 4; ++i) b(i) = rng.normal();
  double damping = 0.1;
  VectorXd x = solve_damped_psd(a, damping, b);
  VectorXd resid = (a + damping * MatrixXd::Identity(4, 4)) * x - b;
  REQUIRE(resid.norm() <= 1e-9 * b.norm());

  MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  MatrixXd k = kron_with_identity(m, 2);
  REQUIRE(k.rows() == 4 && k.cols() == 4);
  REQUIRE(k(0, 0) == 1 && k(1, 1) == 1 && k(0, 2) == 2 && k(1, 3) == 2);
  REQUIRE(k(2, 0) == 3 && k(3, 1) == 3 && k(2, 2) == 4 && k(3, 3) == 4);
  REQUIRE(k(0, 1) == 0 && k(1, 0) == 0);
  test_pass("damped solve and kron with identity");
}

}  // namespace

int main() {
  test_closed_forms_against_charpoly();
  test_against_eigen_solver();
  test_eigenvectors();
  test_inverse_sqrt();
  test_damped_solve_and_kron();
  std::printf("test_linalg: all passed\n");
  return 0;
}
