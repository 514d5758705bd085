#ifndef QMAP_CLASSIFY_HPP
#define QMAP_CLASSIFY_HPP

#include <optional>
#include <string>
#include <vector>

#include "qmap/limits.hpp"

namespace qmap {

enum class Family {
    E2_state,
    E2_diagonal,
    E2_identity,
    E3_state,
    E3_I,
    E3_II,
    E3_III,
    E3_IV,
    E3_V,
    E3_VI,
    E3_VII,
    M2_rank1,
    M2_rank2,
    M2_invertible,
};

const char* family_tag(Family f);
std::string family_display_name(Family f);
std::optional<Family> family_from_tag(const std::string& tag);

// Least-squares fit of psi(A) - A = Y A + A Y^* over the matrix units, for
// psi the inverse of an invertible map.  The canonical invertible forms have
// Y skew with zero trace; the defects diagnose how far the input is from one.
struct GeneratorExtraction {
    Mat y;
    double residual = 0.0;      // least-squares misfit over the matrix-unit basis
    double skew_defect = 0.0;   // ||Y + Y^*||
    double trace_defect = 0.0;  // |tr Y|

    bool canonical(double tol = 1e-8) const {
        return residual <= tol && skew_defect <= tol && trace_defect <= tol;
    }
};

struct CanonicalForm {
    Family family = Family::E2_identity;
    std::optional<double> lambda;
    std::optional<double> lambda_prime;
    std::vector<double> weights;           // state weights, ascending
    std::vector<double> schur_exponents;   // invertible canonical parameters, descending
    std::optional<GeneratorExtraction> generator;
    Mat conjugator;                        // conjugate_map(canonical_map(*this), conjugator) ~ input
    bool reconstructable = true;
    double reconstruction_residual = 0.0;
};

// The canonical representative of a form, before conjugation.
Superoperator canonical_map(const CanonicalForm& form);
// canonical_map conjugated back to the input frame.
Superoperator reconstruct(const CanonicalForm& form);

// Canonical builders.
Superoperator e3_form(Family f, double lambda);
Superoperator m2_rank2_canonical(double lambda, double lambda_prime);

// Schur map with mask entries 1/(1 + i(l_j - l_k)); the canonical invertible
// q-pure family.  Requires the exponents to sum to zero.
Superoperator qpure_invertible_canonical(const std::vector<double>& lambdas);

// Classification of idempotent unital CP maps on M_2: state form, diagonal
// map, or the identity; rank 3 is impossible and raises an error.
CanonicalForm classify_E2(const Superoperator& phi, const ToleranceConfig& cfg = {});

// Classification of idempotent unital CP maps on M_3: the faithful-state form
// or one of the forms I-VII, found by the annihilate-or-fix decision tree.
CanonicalForm classify_E3(const Superoperator& phi, const ToleranceConfig& cfg = {});

// Classification of unital q-positive maps on M_2 by rank: state maps,
// the two-parameter rank-2 family, or invertible maps with a generator
// extraction attached.  Rank 3 raises the impossibility diagnostic.
CanonicalForm classify_unital_qpos_m2(const Superoperator& phi, const ToleranceConfig& cfg = {});

// Parameters (lambda, lambda') and conjugator of a rank-2 unital q-positive
// map on M_2, via the limit map's diagonal form.
struct Rank2Params {
    double lambda;
    double lambda_prime;
    Mat conjugator;
};
Rank2Params canonical_rank2_params(const Superoperator& phi, const ToleranceConfig& cfg = {});

GeneratorExtraction extract_generator_Y(const Superoperator& phi, const ToleranceConfig& cfg = {});

// Seeded corpus generators: a conjugated canonical form plus its ground truth.
struct GeneratedForm {
    Superoperator map;
    CanonicalForm truth;
};

GeneratedForm random_e2_member(std::mt19937_64& rng, Family family);
GeneratedForm random_e3_member(std::mt19937_64& rng, Family family);
GeneratedForm random_m2_qpos(std::mt19937_64& rng, Family family);

// Draws a class (uniformly unless given) and returns a random unital
// q-positive map on M_2 from it.
Superoperator random_unital_qpos_m2(std::uint64_t seed, std::optional<Family> cls = std::nullopt);

}  // namespace qmap

#endif
