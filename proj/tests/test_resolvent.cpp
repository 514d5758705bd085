#include <doctest.h>

#include "qmap/classify.hpp"
#include "qmap/limits.hpp"
#include "qmap/resolvent.hpp"
#include "test_support.hpp"

using namespace qmap;

namespace {

Superoperator rank2_canonical(double lam, double lamp) {
    Mat act = Mat::Zero(4, 4);
    act(0, 0) = lam;
    act(3, 0) = lamp;
    act(0, 3) = 1.0 - lam;
    act(3, 3) = 1.0 - lamp;
    return Superoperator(2, act);
}

Superoperator sign_flip_map() {
    Mat mask(2, 2);
    mask << 1, -1, -1, 1;
    return schur_map(mask);
}

Superoperator rank3_remark_map() {
    const double c = 1.0 / std::sqrt(3.0);
    Mat s(2, 2);
    s << 0, 1, 1, 0;
    return superop_from_kraus(2, {c * Mat::Identity(2, 2), c * s, c * matrix_unit(2, 0, 0),
                                  c * matrix_unit(2, 1, 1)});
}

}  // namespace

TEST_CASE("spectrum") {
    SUBCASE("identity map on M_2 has eigenvalues {1,1,1,1}") {
        for (const cplx& z : spectrum(identity_superop(2)))
            CHECK(std::abs(z - cplx(1, 0)) < 1e-12);
    }
    SUBCASE("sign-flip Schur map contains -1") {
        auto eigs = spectrum(sign_flip_map());
        bool found = false;
        for (const cplx& z : eigs) found = found || std::abs(z - cplx(-1, 0)) < 1e-10;
        CHECK(found);
        CHECK_FALSE(has_no_negative_eigenvalues(sign_flip_map()));
    }
    SUBCASE("rank-2 canonical map has eigenvalues {0,0,1,lambda-lambda'}") {
        auto eigs = spectrum(rank2_canonical(0.7, 0.2));  // sorted by descending real part
        CHECK(std::abs(eigs[0] - cplx(1, 0)) < 1e-12);
        CHECK(std::abs(eigs[1] - cplx(0.5, 0)) < 1e-12);
        CHECK(std::abs(eigs[2]) < 1e-12);
        CHECK(std::abs(eigs[3]) < 1e-12);
    }
    SUBCASE("phi_r eigenvalues avoid the negative axis") {
        CHECK(has_no_negative_eigenvalues(phi_r_family(1.2)));
        auto eigs = spectrum(phi_r_family(1.2));
        int complex_pair = 0;
        for (const cplx& z : eigs)
            if (std::abs(z - 0.6 * cplx(1, 1)) < 1e-12 || std::abs(z - 0.6 * cplx(1, -1)) < 1e-12)
                ++complex_pair;
        CHECK(complex_pair == 2);
    }
}

TEST_CASE("resolvent map") {
    std::mt19937_64 rng(5);
    SUBCASE("t = 0 returns the map itself") {
        Superoperator s = testing::random_cp_map(rng, 2, 2);
        CHECK(distance(resolvent_map(s, 0.0), s) == 0.0);
    }
    SUBCASE("identity map shrinks to 1/(1+t)") {
        Superoperator r = resolvent_map(identity_superop(2), 3.0);
        CHECK(distance(r, 0.25 * identity_superop(2)) < 1e-13);
    }
    SUBCASE("phi_r resolvent is the Schur map with the shifted mask") {
        const double r = 1.2, t = 0.8;
        Superoperator res = resolvent_map(phi_r_family(r), t);
        auto mask = is_schur_map(res);
        REQUIRE(mask.has_value());
        CHECK(std::abs((*mask)(0, 0) - 1.0 / (1.0 + t)) < 1e-12);
        cplx expected = r * cplx(1, 1) / (2.0 + t * r * cplx(1, 1));
        CHECK(std::abs((*mask)(0, 1) - expected) < 1e-12);
        CHECK(std::abs((*mask)(1, 0) - std::conj(expected)) < 1e-12);
    }
    SUBCASE("resolvent identity holds on random q-positive maps") {
        ToleranceConfig cfg;
        for (int trial = 0; trial < 50; ++trial) {
            Superoperator s = random_unital_qpos_m2(1000 + trial);
            for (double t : cfg.t_grid()) {
                if (t > 1e6) continue;
                Superoperator res = resolvent_map(s, t);
                Mat lhs = res.action + t * s.action * res.action;
                CHECK((lhs - s.action).norm() <= 1e-9 * (1.0 + s.action.norm()));
            }
        }
    }
    SUBCASE("sign-flip map hits a pole at t = 1") {
        CHECK_THROWS_AS(resolvent_map(sign_flip_map(), 1.0), SingularResolvent);
    }
}

TEST_CASE("unital norm law ||t phi(I+t phi)^{-1}(I)|| = t/(1+t)") {
    for (int trial = 0; trial < 20; ++trial) {
        Superoperator s = random_unital_qpos_m2(2000 + trial);
        for (double t : {0.3, 1.0, 7.5, 120.0}) {
            Superoperator r = resolvent_map(s, t);
            double norm = op_norm(t * r(Mat::Identity(2, 2)));
            CHECK(std::abs(norm - t / (1.0 + t)) <= 1e-9);
        }
    }
}

TEST_CASE("phi_r family") {
    SUBCASE("mask matches the displayed form at r = 1.2") {
        auto mask = is_schur_map(phi_r_family(1.2));
        REQUIRE(mask.has_value());
        CHECK(std::abs((*mask)(0, 1) - 0.6 * cplx(1, 1)) < 1e-15);
    }
    SUBCASE("r out of range is rejected") {
        CHECK_THROWS_AS(phi_r_family(1.0), std::invalid_argument);
        CHECK_THROWS_AS(phi_r_family(1.5), std::invalid_argument);
    }
    SUBCASE("boundary r -> 1+ is CP") {
        CHECK(is_completely_positive(phi_r_family(1.0 + 1e-6)).cp);
    }
    SUBCASE("resolvent mask determinant changes sign exactly at the threshold") {
        const double r = 1.2;
        const double tstar = phi_r_threshold(r);
        for (double t : {0.3, 0.9, tstar - 1e-3}) {
            auto mask = is_schur_map(resolvent_map(phi_r_family(r), t));
            CHECK(min_herm_eig(*mask) > 0.0);
        }
        for (double t : {tstar + 1e-3, 5.0, 50.0}) {
            auto mask = is_schur_map(resolvent_map(phi_r_family(r), t));
            CHECK(min_herm_eig(*mask) < 0.0);
        }
    }
    SUBCASE("choi min eigenvalue of the resolvent flips sign with the mask") {
        const double r = 1.2, tstar = phi_r_threshold(r);
        ToleranceConfig cfg;
        for (double t : {0.5 * tstar, 2.0 * tstar}) {
            CpVerdict v = is_completely_positive(resolvent_map(phi_r_family(r), t), cfg);
            CHECK(v.cp == (t < tstar));
        }
    }
}

TEST_CASE("certify_q_positive") {
    ToleranceConfig cfg;
    SUBCASE("identity is certified") {
        QPositivityVerdict v = certify_q_positive(identity_superop(2), cfg);
        CHECK(v.tag == VerdictTag::certified_sampled);
        CHECK(v.eig_check);
        for (const auto& [t, me] : v.min_eig_trace) CHECK(me >= -1e-9);
    }
    SUBCASE("phi_r at r = 1.2 is refuted near 7/6") {
        QPositivityVerdict v = certify_q_positive(phi_r_family(1.2), cfg);
        CHECK(v.tag == VerdictTag::refuted);
        REQUIRE(v.witness_t.has_value());
        CHECK(*v.witness_t == doctest::Approx(7.0 / 6.0).epsilon(1e-3));
        CHECK(*v.witness_t >= 7.0 / 6.0 - cfg.bisect_tol);
    }
    SUBCASE("rank-3 map is refuted at a finite witness") {
        QPositivityVerdict v = certify_q_positive(rank3_remark_map(), cfg);
        CHECK(v.tag == VerdictTag::refuted);
        REQUIRE(v.witness_t.has_value());
        CHECK(*v.witness_t > 0.0);
        CHECK(*v.witness_t < cfg.t_cap);
    }
    SUBCASE("refuted witnesses satisfy the verdict invariant") {
        QPositivityVerdict v = certify_q_positive(phi_r_family(1.3), cfg);
        REQUIRE(v.witness_t.has_value());
        Superoperator res = resolvent_map(phi_r_family(1.3), *v.witness_t);
        Mat c = choi_matrix(res).blocks;
        CHECK(min_herm_eig(c) < -cfg.eig_floor * (1.0 + c.norm()));
    }
}

TEST_CASE("subordinates of q-positive maps are never refuted on the grid") {
    ToleranceConfig cfg;
    for (int trial = 0; trial < 6; ++trial) {
        Superoperator phi = random_unital_qpos_m2(3000 + trial);
        for (double s : {0.5, 2.0, 10.0}) {
            QPositivityVerdict v = certify_q_positive(resolvent_map(phi, s), cfg);
            CHECK(v.tag != VerdictTag::refuted);
        }
    }
}

TEST_CASE("q_threshold") {
    ToleranceConfig cfg;
    SUBCASE("closed form for the phi_r family") {
        for (double r : {1.05, 1.1, 1.2, 1.3, 1.4}) {
            auto th = q_threshold(phi_r_family(r), cfg);
            REQUIRE(th.has_value());
            CHECK(std::abs(*th - phi_r_threshold(r)) < 1e-6);
        }
        CHECK(phi_r_threshold(1.1) == doctest::Approx(0.79 / 0.22).epsilon(1e-12));
        CHECK(phi_r_threshold(1.2) == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
    }
    SUBCASE("r = sqrt(2) leaves CP immediately") {
        auto th = q_threshold(phi_r_family(std::sqrt(2.0)), cfg);
        REQUIRE(th.has_value());
        CHECK(*th < 1e-3);
    }
    SUBCASE("identity never leaves CP") {
        CHECK_FALSE(q_threshold(identity_superop(2), cfg).has_value());
    }
    SUBCASE("non-CP inputs are rejected") {
        Mat mask(2, 2);
        mask << 1, 2, 2, 1;
        CHECK_THROWS_AS(q_threshold(schur_map(mask), cfg), std::invalid_argument);
    }
}

TEST_CASE("CP oracle agreement across the named corpus maps") {
    // The Choi-based verdict and the brute-force positive-input oracle must
    // agree map by map; violations only where the Choi test refuses.
    std::mt19937_64 rng(99);
    ToleranceConfig cfg;
    std::vector<Superoperator> corpus = {
        identity_superop(2),      phi_r_family(1.2),
        sign_flip_map(),          rank3_remark_map(),
        rank2_canonical(0.7, 0.2), state_map_from_weights({0.3, 0.7}),
        resolvent_map(phi_r_family(1.2), 2.0),  // beyond the threshold: not CP
    };
    for (const Superoperator& s : corpus) {
        bool cp = is_completely_positive(s, cfg).cp;
        int bad = testing::cp_oracle_violations(s, rng, 500, cfg.eig_floor);
        CHECK((cp ? bad == 0 : bad > 0));
    }
}
