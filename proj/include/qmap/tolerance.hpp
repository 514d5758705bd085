#ifndef QMAP_TOLERANCE_HPP
#define QMAP_TOLERANCE_HPP

#include <stdexcept>
#include <vector>

namespace qmap {

// Shared numeric policy.  All PSD verdicts use the relative floor
// lambda_min >= -eig_floor * (1 + ||C||); ranks count singular values above
// rank_tol * sigma_max.
struct ToleranceConfig {
    double eig_floor = 1e-9;    // relative eigenvalue tolerance
    double rank_tol = 1e-8;     // relative singular-value threshold
    int grid_points = 64;       // samples of the compactified t-grid
    int refine_depth = 60;      // max bisection steps when bracketing a sign change
    double bisect_tol = 1e-8;   // absolute t tolerance for bisection
    double t_cap = 1e3;         // largest sampled t; grid is uniform in s = t/(1+t)

    void validate() const {
        if (eig_floor <= 0 || rank_tol <= 0 || bisect_tol <= 0 || t_cap <= 0)
            throw std::invalid_argument("ToleranceConfig: tolerances must be positive");
        if (grid_points < 16)
            throw std::invalid_argument("ToleranceConfig: grid_points must be >= 16");
        if (refine_depth <= 0)
            throw std::invalid_argument("ToleranceConfig: refine_depth must be positive");
    }

    // t-grid t = s/(1-s) with s uniform on [0, t_cap/(1+t_cap)].
    std::vector<double> t_grid() const {
        std::vector<double> ts;
        ts.reserve(grid_points);
        const double s_cap = t_cap / (1.0 + t_cap);
        for (int k = 0; k < grid_points; ++k) {
            double s = s_cap * static_cast<double>(k) / static_cast<double>(grid_points - 1);
            ts.push_back(s / (1.0 - s));
        }
        return ts;
    }
};

}  // namespace qmap

#endif
