#ifndef QMAP_LIMITS_HPP
#define QMAP_LIMITS_HPP

#include <map>
#include <optional>
#include <string>

#include "qmap/resolvent.hpp"

namespace qmap {

enum class LimitMethod { spectral, numeric_fallback };

struct LimitReport {
    Superoperator limit;
    LimitMethod method = LimitMethod::spectral;
    std::map<std::string, double> property_residuals;
};

// L_phi = lim_{t->inf} t phi(I + t phi)^{-1}, computed as I - P0 for the
// spectral projection P0 onto the generalized eigenspace of eigenvalue 0,
// cross-checked against the scaled resolvent at large t (Richardson fallback).
// Requires phi to have no negative eigenvalues and a bounded resolvent family.
LimitReport limit_map(const Superoperator& phi, const ToleranceConfig& cfg = {});

// Residuals for the limit identities: idempotency L^2 = L, intertwining
// L.phi = phi.L = phi, rank and nullspace agreement, and the unital norm law.
std::map<std::string, double> verify_limit_properties(const Superoperator& phi,
                                                      const Superoperator& l,
                                                      const ToleranceConfig& cfg = {});

// Unital, completely positive, and idempotent within tolerance.
bool is_idempotent_ucp(const Superoperator& phi, const ToleranceConfig& cfg = {});

// phi(I + s phi)^{-1}, the canonical one-parameter q-subordinate family.
Superoperator subordinate(const Superoperator& phi, double s);

using DominanceVerdict = QPositivityVerdict;

// Samples min Choi eigenvalue of phi(I+t phi)^{-1} - psi(I+t psi)^{-1} over
// the compactified grid, refining around the first sign change; the t -> inf
// endpoint compares the limit maps.
DominanceVerdict q_dominates(const Superoperator& phi, const Superoperator& psi,
                             const ToleranceConfig& cfg = {});

// The canonical rank-2 unital q-positive map on M_2 with parameters
// (lambda, lambda') and its rank-one q-subordinate Q nu_1 / (1-lambda') e_11,
// which witnesses that no rank-2 map is q-pure.
std::pair<Superoperator, Superoperator> rank2_m2_subordinate_witness(double lambda,
                                                                     double lambda_prime);

// Unit vector x with phi(x x^*) = 0, if one exists: the common kernel of the
// Kraus elements (phi must be CP).
std::optional<Vec> find_annihilated_unit_vector(const Superoperator& phi,
                                                const ToleranceConfig& cfg = {});

struct AnnihilatorWitness {
    Superoperator phi_conj;    // input conjugated so the annihilated projection is e_11
    Mat conjugator;            // unitary V with phi_conj = conjugate_map(phi, V)
    Superoperator phi_prime;   // A -> F phi_conj(A) F with F = I - e_11
    QPositivityVerdict phi_prime_qpos;
    DominanceVerdict dominance;
    double subordinate_gap;    // min over sampled s of |1/(1+s)| vs the zero corner entry
};

// For a unital q-positive map on M_3 annihilating a nonzero positive matrix:
// the compressed map F phi(.) F is a q-subordinate distinct from every
// phi(I + s phi)^{-1}, so phi is not q-pure.  Returns nullopt when no
// annihilated projection exists.
std::optional<AnnihilatorWitness> annihilator_compression_witness(const Superoperator& phi,
                                                                  const ToleranceConfig& cfg = {});

}  // namespace qmap

#endif
