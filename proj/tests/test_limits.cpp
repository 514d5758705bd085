#include <doctest.h>

#include "qmap/classify.hpp"
#include "qmap/limits.hpp"
#include "test_support.hpp"

using namespace qmap;

TEST_CASE("limit map on fixed points and canonical families") {
    ToleranceConfig cfg;
    SUBCASE("identity map limits to itself") {
        LimitReport rep = limit_map(identity_superop(2), cfg);
        CHECK(distance(rep.limit, identity_superop(2)) < 1e-10);
        CHECK(rep.method == LimitMethod::spectral);
    }
    SUBCASE("unital rank-one state map is its own limit") {
        Superoperator phi = state_map_from_weights({0.3, 0.7});
        LimitReport rep = limit_map(phi, cfg);
        CHECK(distance(rep.limit, phi) < 1e-10);
    }
    SUBCASE("rank-2 canonical map limits to the diagonal map") {
        // The scaled-resolvent coefficients mu_{1,t}, mu_{2,t} converge to the
        // coordinate functionals as t -> inf: the limit is the diagonal map.
        Superoperator phi = m2_rank2_canonical(0.7, 0.2);
        LimitReport rep = limit_map(phi, cfg);
        CHECK(distance(rep.limit, diagonal_map(2)) < 1e-9);
    }
    SUBCASE("denominator factorization D_t = (1+t)(1+tQ)") {
        Superoperator phi = m2_rank2_canonical(0.7, 0.2);
        const double q = 0.5;
        for (double t : {0.3, 1.0, 4.2}) {
            Mat m = Mat::Identity(4, 4) + t * phi.action;
            double dt = 1.0 + t * (1.0 + q) + t * t * q;
            CHECK(std::abs(m.determinant() - cplx(dt, 0)) < 1e-10 * dt);
        }
    }
    SUBCASE("limit hypothesis violation is reported") {
        // nilpotent action: t phi(I + t phi)^{-1} = t phi grows without bound
        Mat act = Mat::Zero(4, 4);
        act(0, 1) = 1.0;
        Superoperator bad(2, act);
        CHECK_THROWS_WITH_AS(limit_map(bad, cfg), doctest::Contains("limit hypothesis"),
                             std::runtime_error);
    }
}

TEST_CASE("verify_limit_properties") {
    ToleranceConfig cfg;
    SUBCASE("identity against identity has zero residuals") {
        auto res = verify_limit_properties(identity_superop(2), identity_superop(2), cfg);
        for (const auto& [key, value] : res) {
            CAPTURE(key);
            CHECK(value <= 1e-12);
        }
        CHECK(res.count("norm") == 1);
    }
    SUBCASE("the zero map is a loud negative control") {
        auto res = verify_limit_properties(identity_superop(2), zero_superop(2), cfg);
        CHECK(res["intertwining_left"] ==
              doctest::Approx(identity_superop(2).action.norm()).epsilon(1e-12));
        CHECK(res["range"] >= 1.0);
    }
    SUBCASE("random unital q-positive maps satisfy the six identities") {
        for (int trial = 0; trial < 100; ++trial) {
            Superoperator phi = random_unital_qpos_m2(7000 + trial);
            LimitReport rep = limit_map(phi, cfg);
            REQUIRE(rep.property_residuals.size() == 6);
            for (const auto& [key, value] : rep.property_residuals) {
                CAPTURE(key);
                CHECK(value <= 1e-8);
            }
        }
    }
}

TEST_CASE("idempotent UCP detection") {
    ToleranceConfig cfg;
    CHECK(is_idempotent_ucp(diagonal_map(2), cfg));
    CHECK(is_idempotent_ucp(state_map_from_weights({0.25, 0.75}), cfg));
    CHECK_FALSE(is_idempotent_ucp(phi_r_family(1.2), cfg));
    // every idempotent UCP map is its own limit
    for (Family f : {Family::E3_I, Family::E3_II, Family::E3_VI, Family::E3_VII}) {
        Superoperator phi = e3_form(f, 0.4);
        REQUIRE(is_idempotent_ucp(phi, cfg));
        CHECK(distance(limit_map(phi, cfg).limit, phi) < 1e-10);
    }
}

TEST_CASE("subordinates form a one-parameter semigroup in the parameter") {
    for (int trial = 0; trial < 10; ++trial) {
        Superoperator phi = random_unital_qpos_m2(7700 + trial);
        CHECK(distance(subordinate(phi, 0.0), phi) == 0.0);
        for (double s1 : {0.4, 2.0})
            for (double s2 : {0.9, 5.0}) {
                Superoperator lhs = subordinate(subordinate(phi, s1), s2);
                Superoperator rhs = subordinate(phi, s1 + s2);
                CHECK(distance(lhs, rhs) < 1e-10);
            }
    }
}

TEST_CASE("q_dominates") {
    ToleranceConfig cfg;
    SUBCASE("identity dominates itself") {
        DominanceVerdict v = q_dominates(identity_superop(2), identity_superop(2), cfg);
        CHECK(v.tag == VerdictTag::certified_sampled);
    }
    SUBCASE("maps dominate their subordinates") {
        for (int trial = 0; trial < 8; ++trial) {
            Superoperator phi = random_unital_qpos_m2(8100 + trial);
            for (double s : {0.5, 2.0, 10.0}) {
                DominanceVerdict v = q_dominates(phi, subordinate(phi, s), cfg);
                CHECK(v.tag == VerdictTag::certified_sampled);
            }
        }
    }
    SUBCASE("subordinate chain is monotone") {
        Superoperator phi = random_unital_qpos_m2(8200);
        DominanceVerdict v =
            q_dominates(subordinate(phi, 0.7), subordinate(phi, 0.7 + 1.5), cfg);
        CHECK(v.tag == VerdictTag::certified_sampled);
    }
    SUBCASE("reversal is refuted for a strict subordinate") {
        Superoperator phi = m2_rank2_canonical(0.9, 0.1);
        DominanceVerdict v = q_dominates(subordinate(phi, 2.0), phi, cfg);
        CHECK(v.tag == VerdictTag::refuted);
    }
}

TEST_CASE("rank-2 subordinate witness") {
    ToleranceConfig cfg;
    SUBCASE("boundary parameters give the diagonal map and the a11 corner") {
        auto [phi, witness] = rank2_m2_subordinate_witness(1.0, 0.0);
        CHECK(distance(phi, diagonal_map(2)) < 1e-14);
        Mat img = witness(Mat::Identity(2, 2));
        CHECK((img - matrix_unit(2, 0, 0)).norm() < 1e-14);
    }
    SUBCASE("witness coefficient Q/(1-lambda') at (0.7, 0.2)") {
        auto [phi, witness] = rank2_m2_subordinate_witness(0.7, 0.2);
        Mat img = witness(matrix_unit(2, 0, 0));
        CHECK(std::abs(img(0, 0) - cplx(0.5 / 0.8, 0)) < 1e-14);
        CHECK(superop_rank(witness, cfg) == 1);
        CHECK(superop_rank(phi, cfg) == 2);
    }
    SUBCASE("the witness is q-dominated but is not a subordinate") {
        auto [phi, witness] = rank2_m2_subordinate_witness(0.7, 0.2);
        DominanceVerdict v = q_dominates(phi, witness, cfg);
        CHECK(v.tag == VerdictTag::certified_sampled);
        for (double s : {0.0, 0.5, 2.0, 10.0})
            CHECK(superop_rank(subordinate(phi, s), cfg) == 2);
    }
    SUBCASE("coefficient positivity of the dominance difference at t = 1") {
        const double lam = 0.7, lamp = 0.2, q = lam - lamp, t = 1.0;
        CHECK((1.0 - lam) * lamp >= 0.0);
        CHECK((1.0 - lam) * (1.0 - lamp + t * q) >= 0.0);
    }
    SUBCASE("parameter domains are enforced") {
        CHECK_THROWS_AS(rank2_m2_subordinate_witness(0.2, 0.7), std::invalid_argument);
        CHECK_THROWS_AS(rank2_m2_subordinate_witness(1.2, 0.0), std::invalid_argument);
    }
}

TEST_CASE("conjugation equivariance of the limit map") {
    ToleranceConfig cfg;
    std::mt19937_64 rng(501);
    for (int trial = 0; trial < 50; ++trial) {
        Superoperator phi = random_unital_qpos_m2(9000 + trial);
        Mat u = random_unitary(rng, 2);
        Superoperator lhs = limit_map(conjugate_map(phi, u), cfg).limit;
        Superoperator rhs = conjugate_map(limit_map(phi, cfg).limit, u);
        CHECK(distance(lhs, rhs) <= 1e-8);
    }
}

TEST_CASE("annihilated projection detection") {
    ToleranceConfig cfg;
    SUBCASE("form II kills e_11") {
        auto x = find_annihilated_unit_vector(e3_form(Family::E3_II, 0.5), cfg);
        REQUIRE(x.has_value());
        CHECK(std::abs((*x)(0)) == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("identity annihilates nothing") {
        CHECK_FALSE(find_annihilated_unit_vector(identity_superop(3), cfg).has_value());
    }
    SUBCASE("detection is conjugation covariant") {
        std::mt19937_64 rng(77);
        Mat u = random_unitary(rng, 3);
        Superoperator phi = conjugate_map(e3_form(Family::E3_III, 0.3), u);
        auto x = find_annihilated_unit_vector(phi, cfg);
        REQUIRE(x.has_value());
        CHECK(phi((*x) * x->adjoint()).norm() < 1e-9);
    }
}

TEST_CASE("annihilator compression witness") {
    ToleranceConfig cfg;
    SUBCASE("form (II) at lambda = 0.5") {
        auto w = annihilator_compression_witness(e3_form(Family::E3_II, 0.5), cfg);
        REQUIRE(w.has_value());
        CHECK(w->phi_prime_qpos.tag == VerdictTag::certified_sampled);
        CHECK(w->dominance.tag == VerdictTag::certified_sampled);
        CHECK(w->subordinate_gap > 1e-3);
        // the compressed map leaves the e_11 corner empty
        CHECK(std::abs(w->phi_prime(Mat::Identity(3, 3))(0, 0)) < 1e-12);
    }
    SUBCASE("form (III) at lambda = 0.3") {
        auto w = annihilator_compression_witness(e3_form(Family::E3_III, 0.3), cfg);
        REQUIRE(w.has_value());
        CHECK(w->phi_prime_qpos.tag == VerdictTag::certified_sampled);
        CHECK(w->dominance.tag == VerdictTag::certified_sampled);
        CHECK(w->subordinate_gap > 1e-3);
    }
    SUBCASE("identity on M_3 yields no witness") {
        CHECK_FALSE(annihilator_compression_witness(identity_superop(3), cfg).has_value());
    }
}
