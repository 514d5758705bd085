#include "qmap/classify.hpp"

#include <algorithm>
#include <cmath>

namespace qmap {

namespace {

constexpr double kCluster = 1e-8;   // relative eigenvalue cluster radius
constexpr double kEntryTol = 1e-6;  // tolerance on read-off functional entries

double rel_tol(const Superoperator& phi) { return kEntryTol * (1.0 + phi.action.norm()); }

// Tracks a chain of conjugations: cur = conjugate_map(input, w).
struct ConjChain {
    Superoperator cur;
    Mat w;
    explicit ConjChain(const Superoperator& phi)
        : cur(phi), w(Mat::Identity(phi.n, phi.n)) {}
    void step(const Mat& u) {
        cur = conjugate_map(cur, u);
        w = w * u;
    }
};

// rho with phi(A) = rho(A) I, as a density matrix; nullopt if phi is not of
// state form within tolerance.
std::optional<Mat> state_form_density(const Superoperator& phi) {
    const int n = phi.n;
    Mat id = Mat::Identity(n, n);
    Mat density(n, n);
    double residual = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Mat img = phi(matrix_unit(n, i, j));
            cplx w = img.trace() / static_cast<double>(n);
            density(j, i) = w;  // rho(e_ij) = tr(density e_ij) = density(j,i)
            residual += (img - w * id).squaredNorm();
        }
    if (std::sqrt(residual) > rel_tol(phi)) return std::nullopt;
    return hermitize(density);
}

// Fills the state-form fields: ascending weights and the conjugator that
// rebuilds the input from the diagonal-weight canonical map.
void fill_state_form(CanonicalForm& form, const Mat& density) {
    Eigen::SelfAdjointEigenSolver<Mat> es(density);
    Mat q = es.eigenvectors();  // ascending eigenvalues
    phase_normalize_columns(q);
    form.weights.assign(es.eigenvalues().data(),
                        es.eigenvalues().data() + es.eigenvalues().size());
    form.conjugator = q.adjoint();
}

// A self-adjoint fixed point of phi linearly independent from I: hermitized
// eigenvectors at eigenvalue 1, keeping the candidate farthest from span{I}.
std::optional<Mat> hermitian_fixed_off_identity(const Superoperator& phi) {
    Eigen::ComplexEigenSolver<Mat> es(phi.action, true);
    if (es.info() != Eigen::Success) return std::nullopt;
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    std::optional<Mat> best;
    double best_dist = kCluster * (1.0 + scale);
    const int n = phi.n;
    Mat id = Mat::Identity(n, n);
    for (Eigen::Index m = 0; m < es.eigenvalues().size(); ++m) {
        if (std::abs(es.eigenvalues()(m) - 1.0) > kCluster * (1.0 + scale)) continue;
        Mat a = unvec_rm(es.eigenvectors().col(m), n, n);
        for (const Mat& h : {Mat(a + a.adjoint()), Mat(cplx(0, 1) * (a - a.adjoint()))}) {
            Mat off = h - (h.trace() / static_cast<double>(n)) * id;
            if (off.norm() > best_dist) {
                best_dist = off.norm();
                best = h;
            }
        }
    }
    return best;
}

// Eigenbasis of a self-adjoint matrix, eigenvalues in decreasing order,
// eigenvector phases normalized.
Mat descending_eigenbasis(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    Mat v = es.eigenvectors();
    Mat rev(v.rows(), v.cols());
    for (Eigen::Index j = 0; j < v.cols(); ++j) rev.col(j) = v.col(v.cols() - 1 - j);
    phase_normalize_columns(rev);
    return rev;
}

// Compression of a map on M_3 to the lower-right 2x2 corner.
Superoperator inner_2x2(const Superoperator& phi3) {
    Mat act(4, 4);
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
            Mat in = Mat::Zero(3, 3);
            in(p + 1, q + 1) = 1.0;
            act.col(p * 2 + q) = vec_rm(Mat(phi3(in).bottomRightCorner(2, 2)));
        }
    return Superoperator(2, act);
}

Mat embed_inner(const Mat& v2) {
    Mat u = Mat::Identity(3, 3);
    u.block(1, 1, 2, 2) = v2;
    return u;
}

bool near(cplx z, double target, double tol) { return std::abs(z - target) <= tol; }

void verify_reconstruction(CanonicalForm& form, const Superoperator& input,
                           const char* where) {
    if (!form.reconstructable) return;
    form.reconstruction_residual = distance(reconstruct(form), input);
    if (form.reconstruction_residual > rel_tol(input))
        throw std::runtime_error(std::string(where) +
                                 ": inconclusive, reconstruction residual " +
                                 std::to_string(form.reconstruction_residual));
}

double entry_tol(const Superoperator& phi) { return kEntryTol * (1.0 + phi.action.norm()); }

}  // namespace

const char* family_tag(Family f) {
    switch (f) {
        case Family::E2_state: return "E2_state";
        case Family::E2_diagonal: return "E2_diagonal";
        case Family::E2_identity: return "E2_identity";
        case Family::E3_state: return "E3_state";
        case Family::E3_I: return "E3_I";
        case Family::E3_II: return "E3_II";
        case Family::E3_III: return "E3_III";
        case Family::E3_IV: return "E3_IV";
        case Family::E3_V: return "E3_V";
        case Family::E3_VI: return "E3_VI";
        case Family::E3_VII: return "E3_VII";
        case Family::M2_rank1: return "M2_rank1";
        case Family::M2_rank2: return "M2_rank2";
        case Family::M2_invertible: return "M2_invertible";
    }
    return "unknown";
}

std::string family_display_name(Family f) {
    switch (f) {
        case Family::E2_state: return "E2 state form rho(A)I";
        case Family::E2_diagonal: return "E2 diagonal map";
        case Family::E2_identity: return "E2 identity";
        case Family::E3_state: return "E3 faithful-state form rho(A)I";
        case Family::E3_I: return "E3 form (I)";
        case Family::E3_II: return "E3 form (II)";
        case Family::E3_III: return "E3 form (III)";
        case Family::E3_IV: return "E3 form (IV)";
        case Family::E3_V: return "E3 form (V)";
        case Family::E3_VI: return "E3 form (VI)";
        case Family::E3_VII: return "E3 form (VII)";
        case Family::M2_rank1: return "M2 rank-one state map";
        case Family::M2_rank2: return "M2 rank-two canonical map";
        case Family::M2_invertible: return "M2 invertible map";
    }
    return "unknown";
}

std::optional<Family> family_from_tag(const std::string& tag) {
    static const Family all[] = {
        Family::E2_state,  Family::E2_diagonal, Family::E2_identity, Family::E3_state,
        Family::E3_I,      Family::E3_II,       Family::E3_III,      Family::E3_IV,
        Family::E3_V,      Family::E3_VI,       Family::E3_VII,      Family::M2_rank1,
        Family::M2_rank2,  Family::M2_invertible};
    for (Family f : all)
        if (tag == family_tag(f)) return f;
    return std::nullopt;
}

Superoperator e3_form(Family f, double lambda) {
    switch (f) {
        case Family::E3_I:
            return state_map_from_weights({0.0, lambda, 1.0 - lambda});
        case Family::E3_II: {
            Mat act = Mat::Zero(9, 9);
            act.col(4) = vec_rm(Mat(lambda * matrix_unit(3, 0, 0) + matrix_unit(3, 1, 1)));
            act.col(8) =
                vec_rm(Mat((1.0 - lambda) * matrix_unit(3, 0, 0) + matrix_unit(3, 2, 2)));
            return Superoperator(3, act);
        }
        case Family::E3_III: {
            Superoperator s = e3_form(Family::E3_II, lambda);
            s.action.col(5) = vec_rm(matrix_unit(3, 1, 2));
            s.action.col(7) = vec_rm(matrix_unit(3, 2, 1));
            return s;
        }
        case Family::E3_IV:
            return diagonal_map(3);
        case Family::E3_V: {
            Mat mask(3, 3);
            mask << 1, 0, 0, 0, 1, 1, 0, 1, 1;
            return schur_map(mask);
        }
        case Family::E3_VI: {
            Mat act = Mat::Zero(9, 9);
            Mat inner = matrix_unit(3, 1, 1) + matrix_unit(3, 2, 2);
            act.col(0) = vec_rm(matrix_unit(3, 0, 0));
            act.col(4) = vec_rm(Mat(lambda * inner));
            act.col(8) = vec_rm(Mat((1.0 - lambda) * inner));
            return Superoperator(3, act);
        }
        case Family::E3_VII:
            return identity_superop(3);
        default:
            throw std::invalid_argument("e3_form: not an E3 lambda-form");
    }
}

Superoperator m2_rank2_canonical(double lambda, double lambda_prime) {
    Mat act = Mat::Zero(4, 4);
    act(0, 0) = lambda;
    act(3, 0) = lambda_prime;
    act(0, 3) = 1.0 - lambda;
    act(3, 3) = 1.0 - lambda_prime;
    return Superoperator(2, act);
}

Superoperator qpure_invertible_canonical(const std::vector<double>& lambdas) {
    const int n = static_cast<int>(lambdas.size());
    if (n == 0) throw std::invalid_argument("qpure_invertible_canonical: empty exponent list");
    double sum = 0.0, scale = 0.0;
    for (double l : lambdas) {
        sum += l;
        scale = std::max(scale, std::abs(l));
    }
    if (std::abs(sum) > 1e-9 * (1.0 + scale))
        throw std::invalid_argument("qpure_invertible_canonical: exponents must sum to zero");
    Mat mask(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            mask(j, k) = 1.0 / cplx(1.0, lambdas[j] - lambdas[k]);
    return schur_map(mask);
}

Superoperator canonical_map(const CanonicalForm& form) {
    switch (form.family) {
        case Family::E2_state:
        case Family::E3_state:
        case Family::M2_rank1:
            return state_map_from_weights(form.weights);
        case Family::E2_diagonal:
            return diagonal_map(2);
        case Family::E2_identity:
            return identity_superop(2);
        case Family::E3_I:
        case Family::E3_II:
        case Family::E3_III:
        case Family::E3_IV:
        case Family::E3_V:
        case Family::E3_VI:
        case Family::E3_VII:
            return e3_form(form.family, form.lambda.value_or(0.0));
        case Family::M2_rank2:
            return m2_rank2_canonical(form.lambda.value(), form.lambda_prime.value());
        case Family::M2_invertible:
            if (!form.reconstructable)
                throw std::runtime_error("canonical_map: no canonical form for this invertible map");
            return qpure_invertible_canonical(form.schur_exponents);
    }
    throw std::logic_error("canonical_map: unreachable");
}

Superoperator reconstruct(const CanonicalForm& form) {
    return conjugate_map(canonical_map(form), form.conjugator);
}

CanonicalForm classify_E2(const Superoperator& phi, const ToleranceConfig& cfg) {
    if (phi.n != 2) throw std::invalid_argument("classify_E2: map must act on M_2");
    if (!is_idempotent_ucp(phi, cfg))
        throw std::invalid_argument("classify_E2: map is not an idempotent unital CP map");
    const int r = superop_rank(phi, cfg);
    CanonicalForm form;
    if (r == 1) {
        auto density = state_form_density(phi);
        if (!density) throw std::runtime_error("classify_E2: rank-1 map is not of state form");
        form.family = Family::E2_state;
        fill_state_form(form, *density);
    } else if (r == 2) {
        auto fixed = hermitian_fixed_off_identity(phi);
        if (!fixed)
            throw std::runtime_error("classify_E2: no fixed self-adjoint matrix found off span{I}");
        Mat u = descending_eigenbasis(*fixed);
        Superoperator cand = conjugate_map(phi, u);
        if (distance(cand, diagonal_map(2)) > rel_tol(phi))
            throw std::runtime_error("classify_E2: rank-2 map did not reduce to the diagonal map");
        form.family = Family::E2_diagonal;
        form.conjugator = u.adjoint();
    } else if (r == 4) {
        form.family = Family::E2_identity;
        form.conjugator = Mat::Identity(2, 2);
    } else if (r == 3) {
        throw std::runtime_error(
            "classify_E2: rank 3 detected; idempotent unital CP maps on M_2 satisfy rank(phi) != 3");
    } else {
        throw std::runtime_error("classify_E2: unexpected rank " + std::to_string(r));
    }
    if (form.conjugator.size() == 0) form.conjugator = Mat::Identity(2, 2);
    verify_reconstruction(form, phi, "classify_E2");
    return form;
}

CanonicalForm classify_E3(const Superoperator& phi, const ToleranceConfig& cfg) {
    if (phi.n != 3) throw std::invalid_argument("classify_E3: map must act on M_3");
    if (!is_idempotent_ucp(phi, cfg))
        throw std::invalid_argument("classify_E3: map is not an idempotent unital CP map");

    CanonicalForm form;
    const double tol = entry_tol(phi);
    std::optional<Vec> annihilated = find_annihilated_unit_vector(phi, cfg);

    if (annihilated) {
        // Annihilating branch: move the killed projection to e_11; the map then
        // factors through the lower 2x2 corner, whose idempotent decides the form.
        ConjChain chain(phi);
        chain.step(unitary_with_first_column(*annihilated));
        CanonicalForm inner = classify_E2(inner_2x2(chain.cur), cfg);
        switch (inner.family) {
            case Family::E2_state: {
                chain.step(embed_inner(inner.conjugator.adjoint()));
                form.family = Family::E3_I;
                form.lambda = inner.weights[0];
                break;
            }
            case Family::E2_diagonal:
            case Family::E2_identity: {
                if (inner.family == Family::E2_diagonal) {
                    chain.step(embed_inner(inner.conjugator.adjoint()));
                } else {
                    // The identity inner block fixes no basis; the corner
                    // state rho_1 supplies the rotation, diagonalized
                    // ascending.
                    Mat r1(2, 2);
                    for (int p = 0; p < 2; ++p)
                        for (int q = 0; q < 2; ++q)
                            r1(q, p) = chain.cur(matrix_unit(3, p + 1, q + 1))(0, 0);
                    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(r1));
                    Mat rot = es.eigenvectors();
                    phase_normalize_columns(rot);
                    chain.step(embed_inner(rot));
                }
                double lam = chain.cur(matrix_unit(3, 1, 1))(0, 0).real();
                if (lam > 0.5) {  // lambda and 1-lambda are conjugate; keep lambda <= 1/2
                    chain.step(swap_unitary(3, 1, 2));
                    lam = 1.0 - lam;
                }
                form.family =
                    inner.family == Family::E2_diagonal ? Family::E3_II : Family::E3_III;
                form.lambda = lam;
                break;
            }
            default:
                throw std::runtime_error("classify_E3: unexpected inner form");
        }
        form.conjugator = chain.w.adjoint();
        verify_reconstruction(form, phi, "classify_E3");
        return form;
    }

    const int r = superop_rank(phi, cfg);
    if (r == 1) {
        auto density = state_form_density(phi);
        if (!density) throw std::runtime_error("classify_E3: rank-1 map is not of state form");
        form.family = Family::E3_state;
        fill_state_form(form, *density);
        if (form.weights.front() < 1e2 * cfg.rank_tol)
            throw std::runtime_error(
                "classify_E3: rank-1 state is not faithful yet annihilates no projection");
        verify_reconstruction(form, phi, "classify_E3");
        return form;
    }

    // Fix-a-projection branch: a fixed self-adjoint matrix off span{I}
    // diagonalizes to a basis in which some e_jj is fixed.
    ConjChain chain(phi);
    auto fixed = hermitian_fixed_off_identity(phi);
    if (!fixed)
        throw std::runtime_error("classify_E3: no fixed self-adjoint matrix found off span{I}");
    chain.step(descending_eigenbasis(*fixed));
    int fixed_j = -1;
    for (int j = 0; j < 3; ++j) {
        Mat e = matrix_unit(3, j, j);
        if ((chain.cur(e) - e).norm() <= tol) {
            fixed_j = j;
            break;
        }
    }
    if (fixed_j < 0)
        throw std::runtime_error("classify_E3: no fixed rank-one projection found");
    if (fixed_j != 0) chain.step(swap_unitary(3, 0, fixed_j));

    CanonicalForm inner = classify_E2(inner_2x2(chain.cur), cfg);
    switch (inner.family) {
        case Family::E2_state: {
            // Nonzero off-corner functionals would force an annihilated
            // projection, which this branch has excluded.
            Mat c(2, 2);
            c << chain.cur(matrix_unit(3, 0, 1))(0, 1),
                chain.cur(matrix_unit(3, 0, 2))(0, 1),
                chain.cur(matrix_unit(3, 0, 1))(0, 2),
                chain.cur(matrix_unit(3, 0, 2))(0, 2);
            if (c.norm() > tol)
                throw std::runtime_error(
                    "classify_E3: inconsistent corner functionals for a rank-one inner form");
            chain.step(embed_inner(inner.conjugator.adjoint()));
            double lam = inner.weights[0];
            if (lam <= 1e2 * cfg.rank_tol || lam >= 1.0 - 1e2 * cfg.rank_tol)
                throw std::runtime_error("classify_E3: inner state not faithful in form (VI)");
            form.family = Family::E3_VI;
            form.lambda = lam;
            break;
        }
        case Family::E2_diagonal:
        case Family::E2_identity: {
            chain.step(embed_inner(inner.conjugator.adjoint()));
            cplx z2 = chain.cur(matrix_unit(3, 0, 1))(0, 1);
            cplx z3 = chain.cur(matrix_unit(3, 0, 2))(0, 2);
            const bool z2zero = near(z2, 0.0, tol), z2one = near(z2, 1.0, tol);
            const bool z3zero = near(z3, 0.0, tol), z3one = near(z3, 1.0, tol);
            if (inner.family == Family::E2_diagonal) {
                if (z2zero && z3zero) {
                    form.family = Family::E3_IV;
                } else if (z2one && z3zero) {
                    chain.step(swap_unitary(3, 0, 2));
                    form.family = Family::E3_V;
                } else if (z2zero && z3one) {
                    chain.step(swap_unitary(3, 0, 1));
                    form.family = Family::E3_V;
                } else {
                    throw std::runtime_error("classify_E3: corner entries not in {0,1}");
                }
            } else {
                if (z2one && z3one) {
                    form.family = Family::E3_VII;
                } else if (z2zero && z3zero) {
                    form.family = Family::E3_V;
                } else {
                    throw std::runtime_error("classify_E3: corner entries not in {0,1}");
                }
            }
            break;
        }
        default:
            throw std::runtime_error("classify_E3: unexpected inner form");
    }
    form.conjugator = chain.w.adjoint();
    verify_reconstruction(form, phi, "classify_E3");
    return form;
}

Rank2Params canonical_rank2_params(const Superoperator& phi, const ToleranceConfig& cfg) {
    if (phi.n != 2) throw std::invalid_argument("canonical_rank2_params: map must act on M_2");
    LimitReport lr = limit_map(phi, cfg);
    CanonicalForm l2 = classify_E2(lr.limit, cfg);
    if (l2.family != Family::E2_diagonal)
        throw std::runtime_error("canonical_rank2_params: limit map is not the diagonal form");

    ConjChain chain(phi);
    chain.step(l2.conjugator.adjoint());
    auto read = [&chain]() {
        Mat img = chain.cur(matrix_unit(2, 0, 0));
        return std::pair<double, double>(img(0, 0).real(), img(1, 1).real());
    };
    auto [lam, lamp] = read();
    if (lam - lamp < -kCluster) {
        chain.step(swap_unitary(2, 0, 1));
        std::tie(lam, lamp) = read();
    }
    if (lam - lamp <= kCluster)
        throw std::runtime_error(
            "canonical_rank2_params: lambda = lambda' contradicts rank 2");
    if (distance(chain.cur, m2_rank2_canonical(lam, lamp)) > rel_tol(phi))
        throw std::runtime_error("canonical_rank2_params: map did not reduce to the canonical form");
    return Rank2Params{lam, lamp, chain.w.adjoint()};
}

GeneratorExtraction extract_generator_Y(const Superoperator& phi, const ToleranceConfig& cfg) {
    (void)cfg;
    const int n = phi.n;
    const Eigen::Index d = phi.dim2();
    Eigen::FullPivLU<Mat> lu(phi.action);
    if (!lu.isInvertible() || lu.rcond() < 1e-12)
        throw std::runtime_error("extract_generator_Y: map is singular or ill-conditioned");
    Mat inv = lu.inverse();

    // Real least squares for psi(e_ij) - e_ij = Y e_ij + e_ij Y^* over all
    // units; the direction Y -> Y + ic I is exactly the null space, so the
    // minimum-norm solution already has purely real trace.
    auto col_re = [n](int p, int q) { return 2 * (p * n + q); };
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * d * d, 2 * d);
    Eigen::VectorXd b(2 * d * d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Mat target = unvec_rm(inv.col(static_cast<Eigen::Index>(i) * n + j), n, n) -
                         matrix_unit(n, i, j);
            for (int rr = 0; rr < n; ++rr)
                for (int cc = 0; cc < n; ++cc) {
                    Eigen::Index row =
                        2 * ((static_cast<Eigen::Index>(i) * n + j) * d + rr * n + cc);
                    b(row) = target(rr, cc).real();
                    b(row + 1) = target(rr, cc).imag();
                    if (cc == j) {  // (Y e_ij)(rr,cc) = Y(rr,i)
                        a(row, col_re(rr, i)) += 1.0;
                        a(row + 1, col_re(rr, i) + 1) += 1.0;
                    }
                    if (rr == i) {  // (e_ij Y^*)(rr,cc) = conj(Y(cc,j))
                        a(row, col_re(cc, j)) += 1.0;
                        a(row + 1, col_re(cc, j) + 1) -= 1.0;
                    }
                }
        }
    Eigen::VectorXd sol = a.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);

    GeneratorExtraction g;
    g.y = Mat(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            g.y(p, q) = cplx(sol(col_re(p, q)), sol(col_re(p, q) + 1));
    g.y -= cplx(0.0, g.y.trace().imag() / n) * Mat::Identity(n, n);

    double res2 = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Mat e = matrix_unit(n, i, j);
            Mat target = unvec_rm(inv.col(static_cast<Eigen::Index>(i) * n + j), n, n) - e;
            res2 += (target - g.y * e - e * g.y.adjoint()).squaredNorm();
        }
    g.residual = std::sqrt(res2);
    g.skew_defect = (g.y + g.y.adjoint()).norm();
    g.trace_defect = std::abs(g.y.trace());
    return g;
}

CanonicalForm classify_unital_qpos_m2(const Superoperator& phi, const ToleranceConfig& cfg) {
    if (phi.n != 2)
        throw std::invalid_argument("classify_unital_qpos_m2: map must act on M_2");
    if (!is_unital(phi))
        throw std::invalid_argument("classify_unital_qpos_m2: map is not unital");
    const int r = superop_rank(phi, cfg);
    CanonicalForm form;
    switch (r) {
        case 1: {
            auto density = state_form_density(phi);
            if (!density)
                throw std::runtime_error(
                    "classify_unital_qpos_m2: rank-1 map is not of state form");
            form.family = Family::M2_rank1;
            fill_state_form(form, *density);
            verify_reconstruction(form, phi, "classify_unital_qpos_m2");
            return form;
        }
        case 2: {
            Rank2Params p = canonical_rank2_params(phi, cfg);
            form.family = Family::M2_rank2;
            form.lambda = p.lambda;
            form.lambda_prime = p.lambda_prime;
            form.conjugator = p.conjugator;
            verify_reconstruction(form, phi, "classify_unital_qpos_m2");
            return form;
        }
        case 3:
            throw std::runtime_error(
                "classify_unital_qpos_m2: rank 3 detected; unital q-positive maps on M_2 "
                "satisfy rank(phi) != 3");
        case 4: {
            form.family = Family::M2_invertible;
            form.generator = extract_generator_Y(phi, cfg);
            if (form.generator->canonical()) {
                Mat h = hermitize(cplx(0, -1) * form.generator->y);
                Eigen::SelfAdjointEigenSolver<Mat> es(h);
                Mat w = es.eigenvectors();
                Mat wd(2, 2);
                wd.col(0) = w.col(1);
                wd.col(1) = w.col(0);
                phase_normalize_columns(wd);
                form.schur_exponents = {es.eigenvalues()(1), es.eigenvalues()(0)};
                form.conjugator = wd.adjoint();
                verify_reconstruction(form, phi, "classify_unital_qpos_m2");
            } else {
                form.reconstructable = false;
                form.conjugator = Mat::Identity(2, 2);
            }
            return form;
        }
        default:
            throw std::runtime_error("classify_unital_qpos_m2: unexpected rank " +
                                     std::to_string(r));
    }
}

GeneratedForm random_e2_member(std::mt19937_64& rng, Family family) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    CanonicalForm truth;
    truth.family = family;
    switch (family) {
        case Family::E2_state: {
            double w = 0.02 + 0.48 * u01(rng);
            truth.weights = {w, 1.0 - w};
            break;
        }
        case Family::E2_diagonal:
        case Family::E2_identity:
            break;
        default:
            throw std::invalid_argument("random_e2_member: not an E2 family");
    }
    truth.conjugator = random_unitary(rng, 2);
    return GeneratedForm{conjugate_map(canonical_map(truth), truth.conjugator), truth};
}

GeneratedForm random_e3_member(std::mt19937_64& rng, Family family) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    CanonicalForm truth;
    truth.family = family;
    switch (family) {
        case Family::E3_state: {
            double a = 0.08 + 0.5 * u01(rng), b = 0.08 + 0.5 * u01(rng), c = 0.08 + 0.5 * u01(rng);
            double s = a + b + c;
            std::vector<double> w = {a / s, b / s, c / s};
            std::sort(w.begin(), w.end());
            truth.weights = w;
            break;
        }
        case Family::E3_I:
        case Family::E3_II:
        case Family::E3_III:
            truth.lambda = 0.02 + 0.48 * u01(rng);  // canonical half of [0,1]
            break;
        case Family::E3_VI:
            truth.lambda = 0.05 + 0.45 * u01(rng);
            break;
        case Family::E3_IV:
        case Family::E3_V:
        case Family::E3_VII:
            break;
        default:
            throw std::invalid_argument("random_e3_member: not an E3 family");
    }
    truth.conjugator = random_unitary(rng, 3);
    return GeneratedForm{conjugate_map(canonical_map(truth), truth.conjugator), truth};
}

GeneratedForm random_m2_qpos(std::mt19937_64& rng, Family family) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    CanonicalForm truth;
    truth.family = family;
    switch (family) {
        case Family::M2_rank1: {
            double w = 0.02 + 0.48 * u01(rng);
            truth.weights = {w, 1.0 - w};
            break;
        }
        case Family::M2_rank2: {
            double lamp = 0.8 * u01(rng);
            double lam = lamp + 0.1 + (1.0 - lamp - 0.1) * u01(rng);
            truth.lambda = std::min(lam, 1.0);
            truth.lambda_prime = lamp;
            break;
        }
        case Family::M2_invertible: {
            double gap = 0.3 + 2.2 * u01(rng);
            truth.schur_exponents = {gap / 2.0, -gap / 2.0};
            break;
        }
        default:
            throw std::invalid_argument("random_m2_qpos: not an M2 class");
    }
    truth.conjugator = random_unitary(rng, 2);
    return GeneratedForm{conjugate_map(canonical_map(truth), truth.conjugator), truth};
}

Superoperator random_unital_qpos_m2(std::uint64_t seed, std::optional<Family> cls) {
    std::mt19937_64 rng(seed);
    Family family;
    if (cls) {
        family = *cls;
    } else {
        const Family classes[] = {Family::M2_rank1, Family::M2_rank2, Family::M2_invertible};
        family = classes[rng() % 3];
    }
    return random_m2_qpos(rng, family).map;
}

}  // namespace qmap
