#ifndef QMAP_RESOLVENT_HPP
#define QMAP_RESOLVENT_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmap/superop.hpp"

namespace qmap {

// Thrown when I + t*phi is singular or too ill-conditioned to invert.
struct SingularResolvent : std::runtime_error {
    double t;
    explicit SingularResolvent(double tt)
        : std::runtime_error("resolvent: I + t*phi is singular or ill-conditioned at t = " +
                             std::to_string(tt)),
          t(tt) {}
};

// Eigenvalues of the action matrix, with multiplicity, sorted by descending
// real part then descending imaginary part.
std::vector<cplx> spectrum(const Superoperator& phi);

bool has_no_negative_eigenvalues(const Superoperator& phi, const ToleranceConfig& cfg = {});

// phi (I + t phi)^{-1}.
Superoperator resolvent_map(const Superoperator& phi, double t);

enum class VerdictTag { certified_sampled, refuted, inconclusive };

const char* verdict_tag_name(VerdictTag tag);

struct GridMeta {
    int grid_points = 0;
    int refine_steps_used = 0;
    int skipped_points = 0;     // resolvent-singularity guards
    double t_cap = 0.0;
    bool limit_checked = false; // t -> infinity endpoint via the limit map
    std::string note;
};

struct QPositivityVerdict {
    VerdictTag tag = VerdictTag::inconclusive;
    std::optional<double> witness_t;
    std::vector<std::pair<double, double>> min_eig_trace;  // (t, min Choi eigenvalue)
    bool eig_check = false;
    GridMeta grid_meta;
};

// Samples min Choi eigenvalue of the resolvent family over the compactified
// grid, refining around the first sign change.  Certification is sampled-only.
QPositivityVerdict certify_q_positive(const Superoperator& phi, const ToleranceConfig& cfg = {});

// sup{ s : resolvent CP on [0,s] }, located by bisection; nullopt if no
// violation is found up to the grid cap.
std::optional<double> q_threshold(const Superoperator& phi, const ToleranceConfig& cfg = {});

// lim_{t->inf} t phi(I + t phi)^{-1}: spectral projection off the zero
// eigencluster, cross-checked against Richardson extrapolation of the scaled
// resolvents (which is also the fallback).  spectral_ok reports which route
// produced the result.  Throws when the family has no computable limit.
Superoperator limit_of_scaled_resolvents(const Superoperator& phi, bool* spectral_ok = nullptr);

// Schur map with mask diag 1 and off-diagonals r(1+i)/2, r(1-i)/2; requires
// r in (1, sqrt(2)].  Its resolvent leaves CP exactly at t = (2-r^2)/(2r(r-1)).
Superoperator phi_r_family(double r);

double phi_r_threshold(double r);

}  // namespace qmap

#endif
