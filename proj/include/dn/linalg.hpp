#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "dn/error.hpp"

namespace dn {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Determinant with closed forms for the small blocks that dominate sampling.
inline std::complex<double> determinant(const CMatrix& a) {
    switch (a.rows()) {
    case 0: return 1.0;
    case 1: return a(0, 0);
    case 2: return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    case 3:
        return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
               a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
               a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    default: return a.partialPivLu().determinant();
    }
}

/// Eigenvalues of a dense square matrix (LAPACK zgeev), unsorted.
inline std::vector<std::complex<double>> dense_eigenvalues(CMatrix a) {
    const auto n = static_cast<lapack_int>(a.rows());
    std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
    if (n == 0) return w;
    const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(),
                                          nullptr, 1, nullptr, 1);
    if (info != 0)
        throw ComputationError("eigensolver did not converge (zgeev info " + std::to_string(info) + ")");
    return w;
}

/// Singular values in decreasing order (LAPACK zgesdd).
inline std::vector<double> dense_singular_values(CMatrix a) {
    const auto m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
    std::vector<double> s(static_cast<std::size_t>(std::min(m, n)));
    if (s.empty()) return s;
    const lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, a.data(), m, s.data(),
                                           nullptr, 1, nullptr, 1);
    if (info != 0)
        throw ComputationError("SVD did not converge (zgesdd info " + std::to_string(info) + ")");
    return s;
}

} // namespace dn
