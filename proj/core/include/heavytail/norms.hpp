#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "heavytail/rng.hpp"

namespace heavytail {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CapError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// SVD failure with condition diagnostics attached to the message.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Inf2Result {
    double value = 0.0;
    std::vector<int> signs; // entries in {-1, +1}, witness with ||B s|| = value
};

inline constexpr int kInf2ExactCap = 24;

// Exact max of ||Bv|| over v in {-1,1}^cols, Gray-code enumeration with O(rows)
// incremental updates per flip. cols must be <= cap.
Inf2Result inf2_exact(const Matrix& B, int cap = kInf2ExactCap);

// Sign-ascent lower bound: fixpoint of v_j <- sign((B^T B v)_j) from random
// starts; the returned value is ||B v|| of the best witness found.
Inf2Result inf2_lower(const Matrix& B, int restarts, Rng& rng);
// Ascent from a given start vector (used by tests and by inf2_lower).
Inf2Result inf2_ascent_from(const Matrix& B, std::vector<int> signs);

// min( sqrt(cols) * ||B||_{2->2},  sqrt(sum_i (sum_j |b_ij|)^2) )
double inf2_upper(const Matrix& B);

double spectral_norm(const Matrix& B);
double smin(const Matrix& B);

// Euclidean norm of the least-squares residual of x against the column space.
double distance_to_span(const Vector& x, const Matrix& columns);

struct UnitNormalResult {
    Vector x;
    bool ill_determined = false; // smallest two singular values nearly tied
};

// Unit vector in the (right) nullspace of the (n-1) x n matrix Ap. When the
// numerical nullspace has dimension > 1, a uniformly random unit vector of it
// is drawn from the seed stream.
UnitNormalResult unit_normal(const Matrix& Ap, Rng& rng);

// Each row independently permuted by a uniform random permutation.
Matrix permute_rows_independently(const Matrix& B, Rng& rng);

} // namespace heavytail
