#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "errors.hpp"

namespace tvlab {

namespace {

// Eigenvalues of [[a, b], [b, c]], ascending.
void eig2(double a, double b, double c, double& lo, double& hi) {
  double mean = 0.5 * (a + c);
  double disc = std::hypot(0.5 * (a - c), b);
  lo = mean - disc;
  hi = mean + disc;
}

// Closed-form symmetric 3x3 eigenvalues (trigonometric method), ascending.
void eig3(const MatrixXd& m, double out[3]) {
  double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
  if (p1 == 0.0) {
    out[0] = m(0, 0);
    out[1] = m(1, 1);
    out[2] = m(2, 2);
    std::sort(out, out + 3);
    return;
  }
  double q = m.trace() / 3.0;
  double p2 = (m(0, 0) - q) * (m(0, 0) - q) + (m(1, 1) - q) * (m(1, 1) - q) +
              (m(2, 2) - q) * (m(2, 2) - q) + 2.0 * p1;
  double p = std::sqrt(p2 / 6.0);
  Eigen::Matrix3d b = (m - q * MatrixXd::Identity(3, 3)) / p;
  double r = b.determinant() / 2.0;
  r = std::clamp(r, -1.0, 1.0);
  double phi = std::acos(r) / 3.0;
  double l1 = q + 2.0 * p * std::cos(phi);
  double l3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  double l2 = 3.0 * q - l1 - l3;
  out[0] = l3;
  out[1] = l2;
  out[2] = l1;
  std::sort(out, out + 3);
}

// Cyclic Jacobi with accumulated rotations.
void jacobi(MatrixXd a, SymEigen& out) {
  const int d = static_cast<int>(a.rows());
  MatrixXd v = MatrixXd::Identity(d, d);
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  const double tol = 1e-12 * scale;
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= tol) break;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        if (std::abs(a(p, q)) <= tol) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < d; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  // sort ascending, keep vectors in sync
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i) < a(j, j); });
  out.values.resize(d);
  out.vectors.resize(d, d);
  for (int i = 0; i < d; ++i) {
    out.values(i) = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
}

MatrixXd symmetrized(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw ConfigError("eigensolver requires a square matrix");
  return 0.5 * (a + a.transpose());
}

}  // namespace

VectorXd sym_eigenvalues(const MatrixXd& a) {
  MatrixXd s = symmetrized(a);
  const int d = static_cast<int>(s.rows());
  VectorXd out(d);
  if (d == 1) {
    out(0) = s(0, 0);
  } else if (d == 2) {
    double lo, hi;
    eig2(s(0, 0), s(0, 1), s(1, 1), lo, hi);
    out(0) = lo;
    out(1) = hi;
  } else if (d == 3) {
    double l[3];
    eig3(s, l);
    out(0) = l[0];
    out(1) = l[1];
    out(2) = l[2];
  } else {
    SymEigen e;
    jacobi(s, e);
    out = e.values;
  }
  return out;
}

SymEigen sym_eigen(const MatrixXd& a) {
  MatrixXd s = symmetrized(a);
  const int d = static_cast<int>(s.rows());
  SymEigen e;
  if (d == 1) {
    e.values.resize(1);
    e.values(0) = s(0, 0);
    e.vectors = MatrixXd::Identity(1, 1);
    return e;
  }
  jacobi(s, e);
  return e;
}

double lambda_min(const MatrixXd& a) { return sym_eigenvalues(a)(0); }

double lambda_max(const MatrixXd& a) {
  VectorXd v = sym_eigenvalues(a);
  return v(v.size() - 1);
}

MatrixXd inverse_sqrt_psd(const MatrixXd& a, double ridge) {
  SymEigen e = sym_eigen(a);
  const int d = static_cast<int>(e.values.size());
  VectorXd inv(d);
  for (int i = 0; i < d; ++i) {
    double lam = std::max(e.values(i), 0.0) + ridge;
    if (lam <= 0.0) throw NumericError("inverse_sqrt_psd: nonpositive eigenvalue after ridge");
    inv(i) = 1.0 / std::sqrt(lam);
  }
  return e.vectors * inv.asDiagonal() * e.vectors.transpose();
}

VectorXd solve_damped_psd(const MatrixXd& a, double damping, const VectorXd& b) {
  SymEigen e = sym_eigen(a);
  const int d = static_cast<int>(e.values.size());
  VectorXd y = e.vectors.transpose() * b;
  for (int i = 0; i < d; ++i) {
    double lam = std::max(e.values(i), 0.0) + damping;
    if (lam <= 0.0) throw NumericError("solve_damped_psd: singular after damping");
    y(i) /= lam;
  }
  return e.vectors * y;
}

MatrixXd kron_with_identity(const MatrixXd& a, int m) {
  const int r = static_cast<int>(a.rows());
  const int c = static_cast<int>(a.cols());
  MatrixXd out = MatrixXd::Zero(r * m, c * m);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      for (int k = 0; k < m; ++k) out(i * m + k, j * m + k) = a(i, j);
  return out;
}

}  // namespace tvlab
