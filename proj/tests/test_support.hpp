#ifndef QMAP_TEST_SUPPORT_HPP
#define QMAP_TEST_SUPPORT_HPP

#include <random>

#include "qmap/superop.hpp"

namespace qmap::testing {

// Brute-force CP oracle, independent of the Choi route: applies the lifted
// map blockwise to random rank-one positive inputs of M_n(M_n) and checks
// positivity of each output.  Returns the number of probes that came out
// negative (0 means "looks CP").
inline int cp_oracle_violations(const Superoperator& phi, std::mt19937_64& rng, int probes,
                                double eig_floor) {
    const int n = phi.n;
    int bad = 0;
    for (int p = 0; p < probes; ++p) {
        Vec v = vec_rm(random_gaussian(rng, n, n));
        v.normalize();
        Mat x = v * v.adjoint();
        Mat y(n * n, n * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                y.block(i * n, j * n, n, n) = phi(Mat(x.block(i * n, j * n, n, n)));
        if (min_herm_eig(y) < -eig_floor * (1.0 + y.norm())) ++bad;
    }
    return bad;
}

// Random CP map from Gaussian Kraus elements, normalized to be trace
// comparable (not unital in general).
inline Superoperator random_cp_map(std::mt19937_64& rng, int n, int kraus_count) {
    std::vector<Mat> ops;
    for (int i = 0; i < kraus_count; ++i)
        ops.push_back(random_gaussian(rng, n, n) / std::sqrt(2.0 * n * kraus_count));
    return superop_from_kraus(n, ops);
}

}  // namespace qmap::testing

#endif
