#include "qmap/corners.hpp"

#include <cmath>

namespace qmap {

CornerProblem make_corner_problem(const Superoperator& phi, const RectangularMap& gamma,
                                  const Superoperator& psi) {
    CornerProblem p{phi, psi, gamma, assemble_block_map(phi, gamma, psi)};
    return p;
}

bool is_corner(const CornerProblem& p, const ToleranceConfig& cfg) {
    return is_completely_positive(p.upsilon, cfg).cp;
}

QPositivityVerdict is_q_corner(const CornerProblem& p, const ToleranceConfig& cfg) {
    return certify_q_positive(p.upsilon, cfg);
}

CornerProblem flip_corner(const Superoperator& phi, const Mat& u) {
    if (!is_unitary(u)) throw std::invalid_argument("flip_corner: U is not unitary");
    const int n = phi.n;
    // gamma(A) = phi(A U^*) U.
    Mat act(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Mat img = phi(matrix_unit(n, i, j) * u.adjoint()) * u;
            act.col(static_cast<Eigen::Index>(i) * n + j) = vec_rm(img);
        }
    RectangularMap gamma(n, n, n, n, std::move(act));
    return make_corner_problem(phi, gamma, conjugate_map(phi, u));
}

bool flip_block_psd(const Mat& u, const Mat& x, const Mat& y, double eig_floor) {
    const int n = static_cast<int>(u.rows());
    Mat b(2 * n, 2 * n);
    b.topLeftCorner(n, n) = x;
    b.topRightCorner(n, n) = u;
    b.bottomLeftCorner(n, n) = u.adjoint();
    b.bottomRightCorner(n, n) = y;
    return is_psd(b, eig_floor);
}

RectangularMap limit_corner(const CornerProblem& p, const ToleranceConfig& cfg) {
    LimitReport rep = limit_map(p.upsilon, cfg);
    return top_right_block_map(rep.limit, p.phi.n);
}

namespace {

// Compression candidates P = I - e_jj, then P = I - e_jj - e_kk, in index order.
std::vector<Mat> compression_family(int m) {
    std::vector<Mat> ps;
    for (int j = 0; j < m; ++j) {
        Mat p = Mat::Identity(m, m);
        p(j, j) = 0.0;
        ps.push_back(p);
    }
    for (int j = 0; j < m; ++j)
        for (int k = j + 1; k < m; ++k) {
            Mat p = Mat::Identity(m, m);
            p(j, j) = 0.0;
            p(k, k) = 0.0;
            ps.push_back(p);
        }
    return ps;
}

}  // namespace

std::optional<HypermaxWitness> hypermax_refutation_search(const CornerProblem& p,
                                                          const ToleranceConfig& cfg) {
    const int n = p.phi.n;
    const int m = p.upsilon.n;
    const double tol = 1e3 * cfg.eig_floor * (1.0 + p.upsilon.action.norm());

    for (const Mat& proj : compression_family(m)) {
        Mat comp = left_right_action(proj, proj);
        Superoperator theta_prime(m, comp * p.upsilon.action);

        // (a) strictly smaller than Theta.
        if (distance(theta_prime, p.upsilon) <= tol) continue;
        // (b) same off-diagonal corner.
        RectangularMap corner = top_right_block_map(theta_prime, n);
        if (distance(corner, p.gamma) > tol) continue;
        // (c) Theta still dominates the compression.
        DominanceVerdict dom = q_dominates(p.upsilon, theta_prime, cfg);
        if (dom.tag == VerdictTag::refuted) continue;
        // (d) the compression is itself q-positive.
        QPositivityVerdict qp = certify_q_positive(theta_prime, cfg);
        if (qp.tag == VerdictTag::refuted) continue;

        HypermaxWitness w;
        w.theta_prime = theta_prime;
        w.compression = proj;
        w.dominance = dom;
        double diag_gap = distance(top_left_block_map(theta_prime, n), p.phi) +
                          distance(bottom_right_block_map(theta_prime, n), p.psi);
        w.inequality_evidence = diag_gap;
        return w;
    }
    return std::nullopt;
}

double rank_obstruction_quadratic_form(double rho_ii, const Mat& m, int j, double lambda,
                                       const Vec& g) {
    const int n = static_cast<int>(m.rows());
    const int k = static_cast<int>(m.cols());
    Mat r(n + k, n + k);
    r.topLeftCorner(n, n) = rho_ii * Mat::Identity(n, n);
    r.topRightCorner(n, k) = m;
    r.bottomLeftCorner(k, n) = m.adjoint();
    r.bottomRightCorner(k, k) = matrix_unit(k, j, j);
    Vec w(n + k);
    w.head(n) = m * g;
    w.tail(k) = -lambda * g;
    return (w.adjoint() * r * w)(0, 0).real();
}

std::optional<Vec> rank_obstruction_direction(const Mat& m, int j) {
    const int k = static_cast<int>(m.cols());
    for (int c = 0; c < k; ++c) {
        if (c == j) continue;
        Vec g = Vec::Zero(k);
        g(c) = 1.0;
        if ((m * g).norm() > 1e-12) return g;
    }
    return std::nullopt;
}

}  // namespace qmap
