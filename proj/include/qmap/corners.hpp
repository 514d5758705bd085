#ifndef QMAP_CORNERS_HPP
#define QMAP_CORNERS_HPP

#include <optional>

#include "qmap/limits.hpp"

namespace qmap {

// A candidate corner gamma from phi (on M_n) to psi (on M_k), with the
// assembled block map Upsilon on M_{n+k} cached.
struct CornerProblem {
    Superoperator phi;
    Superoperator psi;
    RectangularMap gamma;
    Superoperator upsilon;
};

CornerProblem make_corner_problem(const Superoperator& phi, const RectangularMap& gamma,
                                  const Superoperator& psi);

// gamma is a corner iff Upsilon is completely positive.
bool is_corner(const CornerProblem& p, const ToleranceConfig& cfg = {});

// gamma is a q-corner iff Upsilon is q-positive (sampled certification).
QPositivityVerdict is_q_corner(const CornerProblem& p, const ToleranceConfig& cfg = {});

// gamma(A) = phi(A U^*) U, a hyper maximal q-corner from phi to phi_U.
CornerProblem flip_corner(const Superoperator& phi, const Mat& u);

// The positivity-forcing block [[X, U], [U^*, Y]]: PSD together with X,Y <= I
// forces X = Y = I.  Exposed so the forcing can be checked directly.
bool flip_block_psd(const Mat& u, const Mat& x, const Mat& y, double eig_floor = 1e-9);

// sigma = lim_{t->inf} t gamma(I + t gamma)^{-1}, read off the top-right block
// of the limit of Upsilon; idempotent with the same range as gamma.
RectangularMap limit_corner(const CornerProblem& p, const ToleranceConfig& cfg = {});

struct HypermaxWitness {
    Superoperator theta_prime;
    Mat compression;              // the projection P with theta'(A) = P Theta(A) P
    DominanceVerdict dominance;
    double inequality_evidence;   // norm of the diagonal-block discrepancy
};

// Searches the compressions Theta'(A) = P Theta(A) P over P = I - e_jj and
// P = I - e_jj - e_kk for a strictly smaller q-subordinate with the same
// corner; a witness refutes hyper-maximality of gamma.  Deterministic
// (index-ascending) order; nullopt when the family exhausts without a witness.
std::optional<HypermaxWitness> hypermax_refutation_search(const CornerProblem& p,
                                                          const ToleranceConfig& cfg = {});

// Quadratic form <w, R w> for R = [[rho_ii I_n, M], [M^*, e_jj]] along the
// direction w = (Mg, -lambda g); equals (rho_ii - 2 lambda) ||Mg||^2 whenever
// e_jj g = 0, which is negative for lambda > 1.  This is the rank obstruction
// ruling out nonzero corners from a faithful-state map to a Schur-limit map.
double rank_obstruction_quadratic_form(double rho_ii, const Mat& m, int j, double lambda,
                                       const Vec& g);

// A g with e_jj g = 0 and M g != 0, if one exists.
std::optional<Vec> rank_obstruction_direction(const Mat& m, int j);

}  // namespace qmap

#endif
