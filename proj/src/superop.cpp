#include "qmap/superop.hpp"

#include <cmath>

namespace qmap {

Superoperator::Superoperator(int dim, Mat act) : n(dim), action(std::move(act)) {
    if (n <= 0) throw std::invalid_argument("Superoperator: dimension must be positive");
    if (action.rows() != dim2() || action.cols() != dim2())
        throw std::invalid_argument("Superoperator: action must be n^2 x n^2");
}

Superoperator identity_superop(int n) {
    return Superoperator(n, Mat::Identity(static_cast<Eigen::Index>(n) * n,
                                          static_cast<Eigen::Index>(n) * n));
}

Superoperator zero_superop(int n) {
    return Superoperator(n, Mat::Zero(static_cast<Eigen::Index>(n) * n,
                                      static_cast<Eigen::Index>(n) * n));
}

Superoperator operator+(const Superoperator& a, const Superoperator& b) {
    if (a.n != b.n) throw std::invalid_argument("superop +: dimension mismatch");
    return Superoperator(a.n, a.action + b.action);
}

Superoperator operator-(const Superoperator& a, const Superoperator& b) {
    if (a.n != b.n) throw std::invalid_argument("superop -: dimension mismatch");
    return Superoperator(a.n, a.action - b.action);
}

Superoperator operator*(double s, const Superoperator& a) {
    return Superoperator(a.n, s * a.action);
}

Superoperator compose(const Superoperator& a, const Superoperator& b) {
    if (a.n != b.n) throw std::invalid_argument("compose: dimension mismatch");
    return Superoperator(a.n, a.action * b.action);
}

double distance(const Superoperator& a, const Superoperator& b) {
    if (a.n != b.n) throw std::invalid_argument("distance: dimension mismatch");
    return (a.action - b.action).norm();
}

Mat Superoperator::operator()(const Mat& a) const {
    if (a.rows() != n || a.cols() != n)
        throw std::invalid_argument("superoperator application: input must be n x n");
    return unvec_rm(action * vec_rm(a), n, n);
}

bool is_unital(const Superoperator& phi, double tol) {
    Mat id = Mat::Identity(phi.n, phi.n);
    return (phi(id) - id).norm() <= tol * std::sqrt(static_cast<double>(phi.n));
}

RectangularMap::RectangularMap(int ir, int ic, int orr, int oc, Mat act)
    : in_rows(ir), in_cols(ic), out_rows(orr), out_cols(oc), action(std::move(act)) {
    if (ir <= 0 || ic <= 0 || orr <= 0 || oc <= 0)
        throw std::invalid_argument("RectangularMap: dimensions must be positive");
    if (action.rows() != static_cast<Eigen::Index>(orr) * oc ||
        action.cols() != static_cast<Eigen::Index>(ir) * ic)
        throw std::invalid_argument("RectangularMap: action shape mismatch");
}

RectangularMap zero_rect_map(int rows, int cols) {
    return RectangularMap(rows, cols, rows, cols,
                          Mat::Zero(static_cast<Eigen::Index>(rows) * cols,
                                    static_cast<Eigen::Index>(rows) * cols));
}

RectangularMap rect_from_superop(const Superoperator& phi) {
    return RectangularMap(phi.n, phi.n, phi.n, phi.n, phi.action);
}

Mat RectangularMap::operator()(const Mat& a) const {
    if (a.rows() != in_rows || a.cols() != in_cols)
        throw std::invalid_argument("rectangular map application: input shape mismatch");
    return unvec_rm(action * vec_rm(a), out_rows, out_cols);
}

double distance(const RectangularMap& a, const RectangularMap& b) {
    if (a.in_rows != b.in_rows || a.in_cols != b.in_cols || a.out_rows != b.out_rows ||
        a.out_cols != b.out_cols)
        throw std::invalid_argument("distance: shape mismatch");
    return (a.action - b.action).norm();
}

RectangularMap compose(const RectangularMap& a, const RectangularMap& b) {
    if (a.in_rows != b.out_rows || a.in_cols != b.out_cols)
        throw std::invalid_argument("compose: shape mismatch");
    return RectangularMap(b.in_rows, b.in_cols, a.out_rows, a.out_cols, a.action * b.action);
}

RectangularMap adjoint_corner(const RectangularMap& g) {
    // gamma^* maps M_{out_cols x out_rows} -> M_{in_cols x in_rows}.
    const int ir = g.out_cols, ic = g.out_rows;
    const int orr = g.in_cols, oc = g.in_rows;
    Mat act(static_cast<Eigen::Index>(orr) * oc, static_cast<Eigen::Index>(ir) * ic);
    for (int p = 0; p < ir; ++p)
        for (int q = 0; q < ic; ++q) {
            Mat img = g(matrix_unit(g.in_rows, g.in_cols, q, p)).adjoint();
            act.col(static_cast<Eigen::Index>(p) * ic + q) = vec_rm(img);
        }
    return RectangularMap(ir, ic, orr, oc, act);
}

ChoiMatrix choi_matrix(const Superoperator& phi) {
    const int n = phi.n;
    Mat c(phi.dim2(), phi.dim2());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Mat img = unvec_rm(phi.action.col(static_cast<Eigen::Index>(i) * n + j), n, n);
            c.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(j) * n, n, n) =
                img;
        }
    return ChoiMatrix{n, std::move(c)};
}

Superoperator superop_from_choi(const ChoiMatrix& c) {
    const int n = c.n;
    Mat act(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            act.col(static_cast<Eigen::Index>(i) * n + j) = vec_rm(
                c.blocks.block(static_cast<Eigen::Index>(i) * n,
                               static_cast<Eigen::Index>(j) * n, n, n));
    return Superoperator(n, std::move(act));
}

CpVerdict is_completely_positive(const Superoperator& phi, const ToleranceConfig& cfg) {
    ChoiMatrix c = choi_matrix(phi);
    CpVerdict v;
    v.hermiticity_defect = hermiticity_defect(c.blocks);
    v.hermiticity_preserving = v.hermiticity_defect <= cfg.eig_floor * (1.0 + c.blocks.norm());
    v.min_eigenvalue = min_herm_eig(c.blocks);
    v.cp = v.hermiticity_preserving &&
           v.min_eigenvalue >= -cfg.eig_floor * (1.0 + c.blocks.norm());
    return v;
}

Superoperator superop_from_kraus(int n, const std::vector<Mat>& kraus) {
    Mat act = Mat::Zero(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(n) * n);
    for (const Mat& s : kraus) {
        if (s.rows() != n || s.cols() != n)
            throw std::invalid_argument("superop_from_kraus: element is not n x n");
        act += left_right_action(s, s.adjoint());
    }
    return Superoperator(n, std::move(act));
}

std::vector<Mat> kraus_decomposition(const Superoperator& phi, const ToleranceConfig& cfg) {
    CpVerdict v = is_completely_positive(phi, cfg);
    if (!v.cp)
        throw std::runtime_error("kraus_decomposition: map is not completely positive");
    ChoiMatrix c = choi_matrix(phi);
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(c.blocks));
    const double floor = cfg.eig_floor * (1.0 + c.blocks.norm());
    std::vector<Mat> kraus;
    // Largest eigenvalue first, for a stable ordering of the elements.
    for (Eigen::Index m = es.eigenvalues().size() - 1; m >= 0; --m) {
        double lam = es.eigenvalues()(m);
        if (lam <= floor) continue;
        // Choi eigenvector w relates to a Kraus element by S(k,i) = w(i*n+k).
        Mat s = unvec_rm(es.eigenvectors().col(m), phi.n, phi.n).transpose();
        kraus.push_back(std::sqrt(lam) * s);
    }
    return kraus;
}

Superoperator schur_map(const Mat& mask) {
    if (mask.rows() != mask.cols())
        throw std::invalid_argument("schur_map: mask must be square");
    const int n = static_cast<int>(mask.rows());
    Mat act = Mat::Zero(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(n) * n);
    act.diagonal() = vec_rm(mask);
    return Superoperator(n, std::move(act));
}

std::optional<Mat> is_schur_map(const Superoperator& phi, const ToleranceConfig& cfg) {
    const int n = phi.n;
    const double tol = cfg.eig_floor * (1.0 + phi.action.norm());
    Mat mask(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Mat img = phi(matrix_unit(n, i, j));
            mask(i, j) = img(i, j);
            img(i, j) = 0.0;
            if (img.norm() > tol) return std::nullopt;
        }
    return mask;
}

Superoperator conjugate_map(const Superoperator& phi, const Mat& u) {
    if (u.rows() != phi.n || u.cols() != phi.n)
        throw std::invalid_argument("conjugate_map: unitary has wrong dimension");
    if (!is_unitary(u)) throw std::invalid_argument("conjugate_map: U is not unitary");
    Mat pre = left_right_action(u, u.adjoint());          // A -> U A U^*
    Mat post = left_right_action(u.adjoint(), u);         // X -> U^* X U
    return Superoperator(phi.n, post * phi.action * pre);
}

Superoperator state_map(const Mat& density) {
    const int n = static_cast<int>(density.rows());
    if (density.cols() != n) throw std::invalid_argument("state_map: density must be square");
    Mat id = Mat::Identity(n, n);
    Mat act(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx w = (density * matrix_unit(n, i, j)).trace();
            act.col(static_cast<Eigen::Index>(i) * n + j) = w * vec_rm(id);
        }
    return Superoperator(n, std::move(act));
}

Superoperator state_map_from_weights(const std::vector<double>& weights) {
    const int n = static_cast<int>(weights.size());
    Mat d = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) d(i, i) = weights[i];
    return state_map(d);
}

Superoperator diagonal_map(int n) {
    return schur_map(Mat::Identity(n, n));
}

Superoperator assemble_block_map(const Superoperator& phi, const RectangularMap& gamma,
                                 const Superoperator& psi) {
    const int n = phi.n, k = psi.n;
    if (gamma.in_rows != n || gamma.in_cols != k || gamma.out_rows != n || gamma.out_cols != k)
        throw std::invalid_argument("assemble_block_map: corner shape mismatch");
    RectangularMap gstar = adjoint_corner(gamma);
    const int m = n + k;
    Mat act = Mat::Zero(static_cast<Eigen::Index>(m) * m, static_cast<Eigen::Index>(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Mat out = Mat::Zero(m, m);
            if (i < n && j < n) {
                out.topLeftCorner(n, n) = phi(matrix_unit(n, i, j));
            } else if (i < n && j >= n) {
                out.topRightCorner(n, k) = gamma(matrix_unit(n, k, i, j - n));
            } else if (i >= n && j < n) {
                out.bottomLeftCorner(k, n) = gstar(matrix_unit(k, n, i - n, j));
            } else {
                out.bottomRightCorner(k, k) = psi(matrix_unit(k, i - n, j - n));
            }
            act.col(static_cast<Eigen::Index>(i) * m + j) = vec_rm(out);
        }
    return Superoperator(m, std::move(act));
}

Superoperator top_left_block_map(const Superoperator& upsilon, int n) {
    const int m = upsilon.n;
    Mat act(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Mat in = Mat::Zero(m, m);
            in(i, j) = 1.0;
            act.col(static_cast<Eigen::Index>(i) * n + j) =
                vec_rm(Mat(upsilon(in).topLeftCorner(n, n)));
        }
    return Superoperator(n, std::move(act));
}

Superoperator bottom_right_block_map(const Superoperator& upsilon, int n) {
    const int m = upsilon.n;
    const int k = m - n;
    Mat act(static_cast<Eigen::Index>(k) * k, static_cast<Eigen::Index>(k) * k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            Mat in = Mat::Zero(m, m);
            in(n + i, n + j) = 1.0;
            act.col(static_cast<Eigen::Index>(i) * k + j) =
                vec_rm(Mat(upsilon(in).bottomRightCorner(k, k)));
        }
    return Superoperator(k, std::move(act));
}

RectangularMap top_right_block_map(const Superoperator& upsilon, int n) {
    const int m = upsilon.n;
    const int k = m - n;
    Mat act(static_cast<Eigen::Index>(n) * k, static_cast<Eigen::Index>(n) * k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            Mat in = Mat::Zero(m, m);
            in(i, n + j) = 1.0;
            act.col(static_cast<Eigen::Index>(i) * k + j) =
                vec_rm(Mat(upsilon(in).topRightCorner(n, k)));
        }
    return RectangularMap(n, k, n, k, std::move(act));
}

int superop_rank(const Superoperator& phi, const ToleranceConfig& cfg) {
    Eigen::JacobiSVD<Mat> svd(phi.action);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double floor = cfg.rank_tol * sv(0);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > floor) ++r;
    return r;
}

}  // namespace qmap
