#ifndef QMAP_MATRIX_HPP
#define QMAP_MATRIX_HPP

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <stdexcept>

namespace qmap {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Basis convention used throughout: matrix units e_ij are ordered row-major
// over (i,j), and vec(A) stacks the rows of A.  With this convention, column
// (i*n+j) of a superoperator's action matrix is vec of the image of e_ij.

inline Vec vec_rm(const Mat& a) {
    Vec v(a.rows() * a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            v(i * a.cols() + j) = a(i, j);
    return v;
}

inline Mat unvec_rm(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols)
        throw std::invalid_argument("unvec_rm: size mismatch");
    Mat a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            a(i, j) = v(i * cols + j);
    return a;
}

inline Mat matrix_unit(Eigen::Index rows, Eigen::Index cols, Eigen::Index i, Eigen::Index j) {
    Mat e = Mat::Zero(rows, cols);
    e(i, j) = 1.0;
    return e;
}

inline Mat matrix_unit(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
    return matrix_unit(n, n, i, j);
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
}

// Action matrix of A -> L A R on row-major vectorization: vec(LAR) = (L x R^T) vec(A).
inline Mat left_right_action(const Mat& l, const Mat& r) {
    return kron(l, r.transpose());
}

inline double frob(const Mat& a) { return a.norm(); }

inline double op_norm(const Mat& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

inline Mat hermitize(const Mat& a) { return 0.5 * (a + a.adjoint()); }

inline double hermiticity_defect(const Mat& a) { return (a - a.adjoint()).norm(); }

inline bool is_hermitian(const Mat& a, double tol) {
    return hermiticity_defect(a) <= tol * (1.0 + a.norm());
}

inline bool is_unitary(const Mat& u, double tol = 1e-10) {
    if (u.rows() != u.cols()) return false;
    return (u.adjoint() * u - Mat::Identity(u.rows(), u.cols())).norm() <= tol * (1.0 + u.norm());
}

// Smallest eigenvalue of the hermitized matrix.
inline double min_herm_eig(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline bool is_psd(const Mat& a, double eig_floor) {
    return min_herm_eig(a) >= -eig_floor * (1.0 + a.norm());
}

inline Mat random_gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            a(i, j) = cplx(g(rng), g(rng));
    return a;
}

// Haar-like unitary: QR of a Gaussian matrix with the R-diagonal phases absorbed.
inline Mat random_unitary(std::mt19937_64& rng, Eigen::Index n) {
    Mat a = random_gaussian(rng, n, n);
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j) {
        cplx d = r(j, j);
        if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
    }
    return q;
}

inline Mat random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
    return hermitize(random_gaussian(rng, n, n));
}

// Random density matrix (PSD, unit trace).
inline Mat random_density(std::mt19937_64& rng, Eigen::Index n) {
    Mat g = random_gaussian(rng, n, n);
    Mat d = g * g.adjoint();
    return d / d.trace().real();
}

// Unitary whose first column is the given unit vector.
inline Mat unitary_with_first_column(const Vec& x) {
    const Eigen::Index n = x.size();
    Mat seed = Mat::Identity(n, n);
    seed.col(0) = x;
    Eigen::HouseholderQR<Mat> qr(seed);
    Mat q = qr.householderQ();
    cplx phase = q.col(0).dot(x);  // QR fixes the first column up to phase
    q *= phase / std::abs(phase);
    return q;
}

// Swap unitary exchanging coordinates a and b.
inline Mat swap_unitary(Eigen::Index n, Eigen::Index a, Eigen::Index b) {
    Mat u = Mat::Identity(n, n);
    u(a, a) = 0.0;
    u(b, b) = 0.0;
    u(a, b) = 1.0;
    u(b, a) = 1.0;
    return u;
}

// Multiply each eigenvector column so its first nonzero component is real positive.
inline void phase_normalize_columns(Mat& v, double tol = 1e-12) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            if (std::abs(v(i, j)) > tol) {
                v.col(j) *= std::conj(v(i, j)) / std::abs(v(i, j));
                break;
            }
        }
    }
}

}  // namespace qmap

#endif
