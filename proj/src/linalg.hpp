#pragma once

#include <Eigen/Dense>

namespace tvlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SymEigen {
  VectorXd values;   // ascending
  MatrixXd vectors;  // orthonormal columns, vectors.col(i) <-> values(i)
};

// Symmetric eigensolver used throughout: closed-form eigenvalues for
// d <= 3, cyclic Jacobi beyond (and whenever eigenvectors are needed).
// Off-diagonal convergence threshold 1e-12 relative to the matrix scale.
VectorXd sym_eigenvalues(const MatrixXd& a);
SymEigen sym_eigen(const MatrixXd& a);

double lambda_min(const MatrixXd& a);
double lambda_max(const MatrixXd& a);

// (a + ridge*I)^(-1/2) via the symmetric eigendecomposition.
MatrixXd inverse_sqrt_psd(const MatrixXd& a, double ridge);

// Solve (a + damping*I) x = b for symmetric PSD a.
VectorXd solve_damped_psd(const MatrixXd& a, double damping, const VectorXd& b);

// a (x) I_m
MatrixXd kron_with_identity(const MatrixXd& a, int m);

}  // namespace tvlab
