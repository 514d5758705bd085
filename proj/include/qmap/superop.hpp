#ifndef QMAP_SUPEROP_HPP
#define QMAP_SUPEROP_HPP

#include <optional>
#include <vector>

#include "qmap/matrix.hpp"
#include "qmap/tolerance.hpp"

namespace qmap {

// Linear map on M_n(C) stored as its n^2 x n^2 action matrix in the ordered
// matrix-unit basis; column (i*n+j) is vec of the image of e_ij.
struct Superoperator {
    int n = 0;
    Mat action;

    Superoperator() = default;
    Superoperator(int dim, Mat act);

    Eigen::Index dim2() const { return static_cast<Eigen::Index>(n) * n; }

    // Applies the map to an n x n matrix.
    Mat operator()(const Mat& a) const;
};

Superoperator identity_superop(int n);
Superoperator zero_superop(int n);

Superoperator operator+(const Superoperator& a, const Superoperator& b);
Superoperator operator-(const Superoperator& a, const Superoperator& b);
Superoperator operator*(double s, const Superoperator& a);
Superoperator compose(const Superoperator& a, const Superoperator& b);  // a after b
double distance(const Superoperator& a, const Superoperator& b);

bool is_unital(const Superoperator& phi, double tol = 1e-9);

// Linear map M_{in_rows x in_cols} -> M_{out_rows x out_cols}, action matrix
// on row-major vectorizations.
struct RectangularMap {
    int in_rows = 0, in_cols = 0, out_rows = 0, out_cols = 0;
    Mat action;

    RectangularMap() = default;
    RectangularMap(int ir, int ic, int orr, int oc, Mat act);

    // Applies the map to an in_rows x in_cols matrix.
    Mat operator()(const Mat& a) const;
};

RectangularMap zero_rect_map(int rows, int cols);
RectangularMap rect_from_superop(const Superoperator& phi);
double distance(const RectangularMap& a, const RectangularMap& b);
RectangularMap compose(const RectangularMap& a, const RectangularMap& b);

// gamma^*(C) = (gamma(C^*))^*; an involution on corner maps.
RectangularMap adjoint_corner(const RectangularMap& g);

// Block matrix [phi(e_ij)]; block (i,j) lives at rows i*n.., cols j*n..
struct ChoiMatrix {
    int n = 0;
    Mat blocks;
};

ChoiMatrix choi_matrix(const Superoperator& phi);
Superoperator superop_from_choi(const ChoiMatrix& c);

struct CpVerdict {
    bool cp = false;
    double min_eigenvalue = 0.0;
    bool hermiticity_preserving = true;
    double hermiticity_defect = 0.0;
};

// Choi criterion: phi is CP iff its (hermitized) Choi matrix is PSD.
CpVerdict is_completely_positive(const Superoperator& phi, const ToleranceConfig& cfg = {});

Superoperator superop_from_kraus(int n, const std::vector<Mat>& kraus);

// Eigendecomposition of the Choi matrix; eigenvalues below the relative floor
// are dropped, so the result has at most n^2 elements.
std::vector<Mat> kraus_decomposition(const Superoperator& phi, const ToleranceConfig& cfg = {});

Superoperator schur_map(const Mat& mask);
std::optional<Mat> is_schur_map(const Superoperator& phi, const ToleranceConfig& cfg = {});

// phi_U(A) = U^* phi(U A U^*) U.
Superoperator conjugate_map(const Superoperator& phi, const Mat& u);

// A -> rho(A) I where rho(A) = tr(density * A).
Superoperator state_map(const Mat& density);
Superoperator state_map_from_weights(const std::vector<double>& weights);
Superoperator diagonal_map(int n);

// Upsilon acting blockwise on M_{n+k}: phi on the top-left block, gamma on the
// top-right, gamma^* on the bottom-left, psi on the bottom-right.
Superoperator assemble_block_map(const Superoperator& phi, const RectangularMap& gamma,
                                 const Superoperator& psi);

// Block extraction (inverses of assemble_block_map).
Superoperator top_left_block_map(const Superoperator& upsilon, int n);
Superoperator bottom_right_block_map(const Superoperator& upsilon, int n);
RectangularMap top_right_block_map(const Superoperator& upsilon, int n);

// Numerical rank of the action matrix at the relative singular-value floor.
int superop_rank(const Superoperator& phi, const ToleranceConfig& cfg = {});

}  // namespace qmap

#endif
