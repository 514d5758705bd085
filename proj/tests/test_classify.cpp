#include <doctest.h>

#include <set>

#include "qmap/classify.hpp"
#include "test_support.hpp"

using namespace qmap;

namespace {

Superoperator rank3_remark_map() {
    const double c = 1.0 / std::sqrt(3.0);
    Mat s(2, 2);
    s << 0, 1, 1, 0;
    return superop_from_kraus(2, {c * Mat::Identity(2, 2), c * s, c * matrix_unit(2, 0, 0),
                                  c * matrix_unit(2, 1, 1)});
}

void check_recovery(const GeneratedForm& gen, const CanonicalForm& got, double param_tol,
                    double roundtrip_tol) {
    CHECK(got.family == gen.truth.family);
    if (got.family == Family::M2_rank2) {
        // (lambda, lambda') and (1-lambda', 1-lambda) are swap conjugates of
        // the same class; the extractor reads whichever the input presents.
        double l = got.lambda.value_or(1e300), lp = got.lambda_prime.value_or(1e300);
        bool as_is = std::abs(l - *gen.truth.lambda) <= param_tol &&
                     std::abs(lp - *gen.truth.lambda_prime) <= param_tol;
        bool flipped = std::abs(l - (1.0 - *gen.truth.lambda_prime)) <= param_tol &&
                       std::abs(lp - (1.0 - *gen.truth.lambda)) <= param_tol;
        CHECK((as_is || flipped));
        CHECK(got.reconstruction_residual <= roundtrip_tol);
        return;
    }
    if (gen.truth.lambda)
        CHECK(std::abs(got.lambda.value_or(1e300) - *gen.truth.lambda) <= param_tol);
    if (gen.truth.lambda_prime)
        CHECK(std::abs(got.lambda_prime.value_or(1e300) - *gen.truth.lambda_prime) <= param_tol);
    REQUIRE(got.weights.size() == gen.truth.weights.size());
    for (size_t i = 0; i < got.weights.size(); ++i)
        CHECK(std::abs(got.weights[i] - gen.truth.weights[i]) <= param_tol);
    REQUIRE(got.schur_exponents.size() == gen.truth.schur_exponents.size());
    for (size_t i = 0; i < got.schur_exponents.size(); ++i)
        CHECK(std::abs(got.schur_exponents[i] - gen.truth.schur_exponents[i]) <= param_tol);
    CHECK(got.reconstruction_residual <= roundtrip_tol);
}

}  // namespace

TEST_CASE("classify_E2") {
    ToleranceConfig cfg;
    SUBCASE("the diagonal map is its own canonical form") {
        CanonicalForm form = classify_E2(diagonal_map(2), cfg);
        CHECK(form.family == Family::E2_diagonal);
        CHECK((form.conjugator - Mat::Identity(2, 2)).norm() < 1e-12);
    }
    SUBCASE("diagonal state weights are reported ascending") {
        CanonicalForm form = classify_E2(state_map_from_weights({0.7, 0.3}), cfg);
        CHECK(form.family == Family::E2_state);
        REQUIRE(form.weights.size() == 2);
        CHECK(form.weights[0] == doctest::Approx(0.3).epsilon(1e-10));
        CHECK(form.weights[1] == doctest::Approx(0.7).epsilon(1e-10));
    }
    SUBCASE("identity is E2_identity") {
        CHECK(classify_E2(identity_superop(2), cfg).family == Family::E2_identity);
    }
    SUBCASE("non-idempotent input is rejected") {
        CHECK_THROWS_AS(classify_E2(rank3_remark_map(), cfg), std::invalid_argument);
    }
    SUBCASE("conjugated members round trip") {
        std::mt19937_64 rng(61);
        for (Family f : {Family::E2_state, Family::E2_diagonal, Family::E2_identity}) {
            for (int trial = 0; trial < 25; ++trial) {
                GeneratedForm gen = random_e2_member(rng, f);
                CanonicalForm got = classify_E2(gen.map, cfg);
                check_recovery(gen, got, 1e-6, 1e-8);
            }
        }
    }
}

TEST_CASE("classify_E3") {
    ToleranceConfig cfg;
    SUBCASE("identity on M_3 is form (VII)") {
        CHECK(classify_E3(identity_superop(3), cfg).family == Family::E3_VII);
    }
    SUBCASE("form (II) at lambda = 0.4 is recovered after conjugation") {
        std::mt19937_64 rng(67);
        Superoperator phi = conjugate_map(e3_form(Family::E3_II, 0.4), random_unitary(rng, 3));
        CanonicalForm form = classify_E3(phi, cfg);
        CHECK(form.family == Family::E3_II);
        CHECK(std::abs(form.lambda.value() - 0.4) < 1e-8);
        CHECK(form.reconstruction_residual < 1e-8);
    }
    SUBCASE("form (VI) at lambda = 0.25 keeps its parameter") {
        CanonicalForm form = classify_E3(e3_form(Family::E3_VI, 0.25), cfg);
        CHECK(form.family == Family::E3_VI);
        CHECK(std::abs(form.lambda.value() - 0.25) < 1e-10);
    }
    SUBCASE("all families round trip under random conjugation") {
        std::mt19937_64 rng(71);
        for (Family f : {Family::E3_state, Family::E3_I, Family::E3_II, Family::E3_III,
                         Family::E3_IV, Family::E3_V, Family::E3_VI, Family::E3_VII}) {
            CAPTURE(family_tag(f));
            for (int trial = 0; trial < 25; ++trial) {
                GeneratedForm gen = random_e3_member(rng, f);
                CanonicalForm got = classify_E3(gen.map, cfg);
                check_recovery(gen, got, 1e-6, 1e-8);
            }
        }
    }
    SUBCASE("ranks of idempotent UCP maps on M_3 lie in {1,2,3,4,5,9}") {
        std::mt19937_64 rng(73);
        const std::set<int> allowed = {1, 2, 3, 4, 5, 9};
        const Family families[] = {Family::E3_state, Family::E3_I, Family::E3_II,
                                   Family::E3_III,   Family::E3_IV, Family::E3_V,
                                   Family::E3_VI,    Family::E3_VII};
        for (int trial = 0; trial < 100; ++trial) {
            GeneratedForm gen = random_e3_member(rng, families[trial % 8]);
            REQUIRE(is_idempotent_ucp(gen.map, cfg));
            CHECK(allowed.count(superop_rank(gen.map, cfg)) == 1);
        }
    }
}

TEST_CASE("canonical_rank2_params") {
    ToleranceConfig cfg;
    SUBCASE("the diagonal map is the (1, 0) member") {
        Rank2Params p = canonical_rank2_params(diagonal_map(2), cfg);
        CHECK(p.lambda == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(p.lambda_prime == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("canonical members are fixed points of the extractor") {
        Rank2Params p = canonical_rank2_params(m2_rank2_canonical(0.6, 0.1), cfg);
        CHECK(p.lambda == doctest::Approx(0.6).epsilon(1e-9));
        CHECK(p.lambda_prime == doctest::Approx(0.1).epsilon(1e-9));
    }
    SUBCASE("the swap conjugate reads as (1-lambda', 1-lambda)") {
        Superoperator phi = conjugate_map(m2_rank2_canonical(0.6, 0.1), swap_unitary(2, 0, 1));
        Rank2Params p = canonical_rank2_params(phi, cfg);
        CHECK(p.lambda == doctest::Approx(0.9).epsilon(1e-9));
        CHECK(p.lambda_prime == doctest::Approx(0.4).epsilon(1e-9));
    }
}

TEST_CASE("classify_unital_qpos_m2") {
    ToleranceConfig cfg;
    SUBCASE("state maps are rank one") {
        CanonicalForm form = classify_unital_qpos_m2(state_map_from_weights({0.5, 0.5}), cfg);
        CHECK(form.family == Family::M2_rank1);
    }
    SUBCASE("the rank-3 map raises the impossibility diagnostic") {
        CHECK_THROWS_WITH_AS(classify_unital_qpos_m2(rank3_remark_map(), cfg),
                             doctest::Contains("rank 3"), std::runtime_error);
    }
    SUBCASE("rank-2 members recover their parameters") {
        std::mt19937_64 rng(79);
        Superoperator phi = conjugate_map(m2_rank2_canonical(0.8, 0.3), random_unitary(rng, 2));
        CanonicalForm form = classify_unital_qpos_m2(phi, cfg);
        CHECK(form.family == Family::M2_rank2);
        CHECK(std::abs(form.lambda.value() - 0.8) < 1e-8);
        CHECK(std::abs(form.lambda_prime.value() - 0.3) < 1e-8);
        CHECK(form.reconstruction_residual < 1e-8);
    }
    SUBCASE("the canonical invertible map with gap 1.5 comes back with its exponents") {
        Superoperator phi = qpure_invertible_canonical({0.75, -0.75});
        CanonicalForm form = classify_unital_qpos_m2(phi, cfg);
        CHECK(form.family == Family::M2_invertible);
        REQUIRE(form.generator.has_value());
        CHECK(form.generator->canonical());
        REQUIRE(form.schur_exponents.size() == 2);
        CHECK(form.schur_exponents[0] - form.schur_exponents[1] ==
              doctest::Approx(1.5).epsilon(1e-9));
    }
    SUBCASE("all three classes round trip") {
        std::mt19937_64 rng(83);
        for (Family f : {Family::M2_rank1, Family::M2_rank2, Family::M2_invertible}) {
            CAPTURE(family_tag(f));
            for (int trial = 0; trial < 25; ++trial) {
                GeneratedForm gen = random_m2_qpos(rng, f);
                CanonicalForm got = classify_unital_qpos_m2(gen.map, cfg);
                check_recovery(gen, got, 1e-6, 1e-8);
            }
        }
    }
}

TEST_CASE("extract_generator_Y") {
    ToleranceConfig cfg;
    SUBCASE("identity extracts Y = 0") {
        GeneratorExtraction g = extract_generator_Y(identity_superop(2), cfg);
        CHECK(g.y.norm() < 1e-12);
        CHECK(g.residual < 1e-12);
    }
    SUBCASE("gap-2 canonical map extracts the skew diagonal i diag(1, -1)") {
        Superoperator phi = qpure_invertible_canonical({1.0, -1.0});
        GeneratorExtraction g = extract_generator_Y(phi, cfg);
        CHECK(g.residual < 1e-10);
        CHECK(g.skew_defect < 1e-10);
        CHECK(g.trace_defect < 1e-10);
        CHECK(std::abs(g.y(0, 0) - cplx(0, 1)) < 1e-9);
        CHECK(std::abs(g.y(1, 1) - cplx(0, -1)) < 1e-9);
        CHECK(std::abs(g.y(0, 1)) < 1e-9);
    }
    SUBCASE("canonical family satisfies the defect bounds for random exponents") {
        std::mt19937_64 rng(89);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        for (int trial = 0; trial < 50; ++trial) {
            int n = 2 + trial % 3;
            std::vector<double> ls(n);
            double sum = 0.0;
            for (int i = 0; i + 1 < n; ++i) {
                ls[i] = u(rng);
                sum += ls[i];
            }
            ls[n - 1] = -sum;
            GeneratorExtraction g = extract_generator_Y(qpure_invertible_canonical(ls), cfg);
            CHECK(g.residual <= 1e-8);
            CHECK(g.skew_defect <= 1e-8);
            CHECK(g.trace_defect <= 1e-8);
        }
    }
    SUBCASE("resolvents of phi_r are invertible but not canonical") {
        Superoperator phi = resolvent_map(phi_r_family(1.2), 1.0);
        GeneratorExtraction g = extract_generator_Y(phi, cfg);
        CHECK(g.skew_defect > 1e-6);
        CHECK_FALSE(g.canonical());
    }
    SUBCASE("singular maps are rejected") {
        CHECK_THROWS_AS(extract_generator_Y(diagonal_map(2), cfg), std::runtime_error);
    }
}

TEST_CASE("qpure_invertible_canonical") {
    SUBCASE("zero exponents give the identity") {
        CHECK(distance(qpure_invertible_canonical({0.0, 0.0}), identity_superop(2)) < 1e-15);
    }
    SUBCASE("mask entries match 1/(1+i(l_j-l_k))") {
        auto mask2 = is_schur_map(qpure_invertible_canonical({1.0, -1.0}));
        REQUIRE(mask2.has_value());
        CHECK(std::abs((*mask2)(0, 1) - 1.0 / cplx(1, 2)) < 1e-14);
        auto mask3 = is_schur_map(qpure_invertible_canonical({1.0, 0.0, -1.0}));
        REQUIRE(mask3.has_value());
        CHECK(std::abs((*mask3)(0, 1) - 1.0 / cplx(1, 1)) < 1e-14);
        CHECK(std::abs((*mask3)(0, 2) - 1.0 / cplx(1, 2)) < 1e-14);
        CHECK(std::abs((*mask3)(1, 2) - 1.0 / cplx(1, 1)) < 1e-14);
    }
    SUBCASE("these maps are q-positive on the sampled grid") {
        QPositivityVerdict v = certify_q_positive(qpure_invertible_canonical({0.75, -0.75}));
        CHECK(v.tag == VerdictTag::certified_sampled);
    }
    SUBCASE("nonzero exponent sums are rejected") {
        CHECK_THROWS_AS(qpure_invertible_canonical({1.0, 1.0}), std::invalid_argument);
    }
}

TEST_CASE("random_unital_qpos_m2 draws valid members") {
    ToleranceConfig cfg;
    for (int seed = 0; seed < 12; ++seed) {
        Superoperator phi = random_unital_qpos_m2(seed);
        CHECK(is_unital(phi));
        CHECK(is_completely_positive(phi, cfg).cp);
        CHECK(has_no_negative_eigenvalues(phi, cfg));
    }
    Superoperator r1 = random_unital_qpos_m2(3, Family::M2_rank1);
    CHECK(superop_rank(r1, cfg) == 1);
    Superoperator r2 = random_unital_qpos_m2(3, Family::M2_rank2);
    CHECK(superop_rank(r2, cfg) == 2);
    Superoperator r4 = random_unital_qpos_m2(3, Family::M2_invertible);
    CHECK(superop_rank(r4, cfg) == 4);
}
