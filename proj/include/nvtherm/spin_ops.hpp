#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

#include "nvtherm/units.hpp"

namespace nvtherm {

using Complex = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXcd = Eigen::VectorXcd;

// Angular-momentum matrices for a spin of given multiplicity 2S+1,
// dimensionless units. sz is diagonal with entries S, S-1, ..., -S.
struct SpinOperatorSet {
  int multiplicity = 0;
  MatrixXcd sx, sy, sz;
};

inline SpinOperatorSet build_spin_operators(int multiplicity) {
  if (multiplicity < 2)
    throw std::invalid_argument("build_spin_operators: multiplicity must be >= 2");

  const int n = multiplicity;
  const double s = 0.5 * (n - 1);

  MatrixXcd sp = MatrixXcd::Zero(n, n);  // raising operator
  MatrixXcd sz = MatrixXcd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double m = s - k;
    sz(k, k) = m;
    if (k > 0) {
      const double mm = s - k;  // S+ |s, mm> = sqrt(s(s+1) - mm(mm+1)) |s, mm+1>
      sp(k - 1, k) = std::sqrt(s * (s + 1) - mm * (mm + 1));
    }
  }

  SpinOperatorSet ops;
  ops.multiplicity = n;
  ops.sz = sz;
  ops.sx = 0.5 * (sp + sp.adjoint());
  ops.sy = Complex(0, -0.5) * (sp - sp.adjoint());
  return ops;
}

// Kronecker product, row-major block convention: (A kron B)(i*nb+k, j*nb+l).
inline MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline VectorXcd kron(const VectorXcd& a, const VectorXcd& b) {
  VectorXcd out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// exp(-2 pi i H t) for Hermitian H (MHz) and time t (us).
inline MatrixXcd propagator(const MatrixXcd& h, double t) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
  const Eigen::VectorXd& ev = es.eigenvalues();
  VectorXcd phases(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    phases(k) = std::exp(Complex(0, -two_pi * ev(k) * t));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace nvtherm
