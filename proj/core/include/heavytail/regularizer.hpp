#pragma once

#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "heavytail/distributions.hpp"
#include "heavytail/grid_operator.hpp"
#include "heavytail/norms.hpp"

namespace heavytail {

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RegularizerParams {
    double L = 2.0 * std::numbers::e; // budget constant, must stay >= 2e
    double p_moment = 2.0;
    double alpha = 0.5;
    int level_cap = 0;           // 0 => ceil(log2(L n / delta)) + 2
    bool adaptive_levels = true; // raise the cap per input until covered; else clamp & flag
    double smoothing = 1e-6;     // uniform[0,w] magnitude perturbation for atomic laws

    void validate() const;
};

// One multiplicative building block of a contraction: every index in the set
// was multiplied by exp(log_factor) at the given level.
struct LevelFactor {
    int level;
    double log_factor; // <= 0
    std::vector<int> indices;
};

// Positive diagonal contraction with diagonal values in (0,1], stored in log
// space, together with the factor decomposition that produced it.
class DiagonalContraction {
public:
    explicit DiagonalContraction(int n)
        : log_diag_(static_cast<size_t>(n), 0.0), log_det_(0.0) {}

    int n() const { return static_cast<int>(log_diag_.size()); }
    double log_diag(int i) const { return log_diag_[static_cast<size_t>(i)]; }
    double diag(int i) const { return std::exp(log_diag_[static_cast<size_t>(i)]); }
    double log_det() const { return log_det_; }
    const std::vector<LevelFactor>& factors() const { return factors_; }

    void apply_factor(LevelFactor f);
    // Multiplies in another contraction raised to `exponent` (log scale).
    void multiply_scaled(const DiagonalContraction& other, double exponent);

    // Recomputes the diagonal from the recorded factors; returns the max
    // absolute log discrepancy (bookkeeping identity, should be ~0).
    double decomposition_error() const;

private:
    std::vector<double> log_diag_;
    std::vector<LevelFactor> factors_;
    double log_det_;
};

struct HeartResult {
    DiagonalContraction D;
    double l1_bound = 0.0;   // (L n / delta) * sum_{k < levels_used} tau_{k+1} 2^-k
    double l1_fitted = 0.0;  // realized <D y, 1>
    int levels_used = 0;     // number of shrink levels processed
    bool clamped = false;    // a coordinate sat at/above the top level after raising
    std::vector<int> flagged_indices;
};

// Extends a level sequence beyond its stored range: k -> tau_k.
using LevelExtender = std::function<double(int)>;

// Diagonal contraction fitting y into the l1 budget (L n / delta) * sum tau_{k+1} 2^-k.
// Levels are consumed with the deterministic coupling  xi_i^k = 1{y_i >= tau_k}
// (k >= 1; level 0 always fires), which preserves the dyadic marginals.
HeartResult heart_contraction(const std::vector<double>& y, const LevelSequence& levels,
                              double delta, const RegularizerParams& params,
                              const LevelExtender& extend = {});

// Paper-faithful variant with independent Bernoulli(2^-k) indicator fields,
// used to validate the determinant moment bound in isolation.
HeartResult heart_contraction_independent(Rng& rng, int n, const LevelSequence& levels,
                                          double delta, const RegularizerParams& params);

struct RowRegularizerResult {
    DiagonalContraction D;
    double row_norm_bound = 0.0; // deterministic: every row of A D has norm <= this
    double max_row_norm = 0.0;   // realized
    bool clamped = false;
};

// Per row i: heart contraction of (a_ij^2)_j with p = 2; D = prod_i T_i^(1/2).
// Atomic laws get the uniform magnitude perturbation before level comparison,
// derived deterministically from the matrix content so the operation stays a
// pure function of (A, dist, params).
RowRegularizerResult row_regularizer(const Matrix& A, double delta, const EntryDistribution& dist,
                                     const RegularizerParams& params = {});

struct DiscretizeResult {
    GridOperator G;
    bool underflow_flagged = false; // some diagonal below the representable grid floor
};

// Per coordinate t: largest grid element <= sqrt(2) t; then t^2 <= t~ <= sqrt(2) t.
DiscretizeResult discretize(const DiagonalContraction& D);
int discretize_code_for_log(double log_t); // exposed for direct grid-search tests

struct RegularizeCertificate {
    int n = 0;
    double delta = 0.0;
    double logdet = 0.0;
    double logdet_threshold = 0.0; // -delta n
    double max_row_norm = 0.0;     // rows of A G
    double inf2_upper = 0.0;       // upper bound on ||A G||_{inf->2}
    bool pass = false;             // logdet >= threshold

    std::string serialize() const; // flat key-value text
};

struct RegularizeToGridResult {
    GridOperator G;
    DiagonalContraction D; // pre-discretization contraction
    RegularizeCertificate certificate;
    bool clamped = false;
};

// row_regularizer (at delta/4, so the discretized determinant clears the
// exp(-delta n) threshold with the intended margin) followed by discretize.
RegularizeToGridResult regularize_to_grid(const Matrix& A, double delta,
                                          const EntryDistribution& dist,
                                          const RegularizerParams& params = {});

} // namespace heavytail
