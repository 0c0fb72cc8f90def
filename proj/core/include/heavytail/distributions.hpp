#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "heavytail/rng.hpp"

namespace heavytail {

// Thrown when a distribution spec or parameter is invalid.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when an empirical quantile cannot be resolved at the requested depth.
struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Family {
    Gaussian,
    Rademacher,
    UniformSymmetric,
    StudentT,
    SymmetrizedPareto,
    CenteredLognormal,
    TwoPointSparse,
    Empirical,
};

enum class LevelSource { AnalyticInverseCdf, EmpiricalQuantile };

// Dyadic exceedance levels tau_0..tau_K for a non-negative variable xi:
// P{xi >= tau_k} = 2^-k.
struct LevelSequence {
    std::vector<double> tau;
    LevelSource source = LevelSource::AnalyticInverseCdf;

    int max_level() const { return static_cast<int>(tau.size()) - 1; }
    // truncated form of  E xi >= sum_k 2^{-k-1} tau_k
    double truncated_expectation_lower_bound() const;
};

LevelSequence levels_from_inverse_survival(const std::function<double(double)>& inv_survival, int K);
LevelSequence levels_from_samples(std::vector<double> xi_samples, int K);

// A mean-zero unit-variance entry law. Normalization constants are closed
// form for the analytic families; the empirical family carries its sample set.
class EntryDistribution {
public:
    static EntryDistribution gaussian();
    static EntryDistribution rademacher();
    static EntryDistribution uniform_symmetric();
    static EntryDistribution student_t(double df);           // df > 2
    static EntryDistribution symmetrized_pareto(double tail); // tail index > 2
    static EntryDistribution centered_lognormal(double sigma);
    static EntryDistribution two_point_sparse(double p);      // p in (0,1)
    static EntryDistribution empirical(std::vector<double> raw_samples);

    // CLI grammar: family[:param[,param]], e.g. "student-t:3", "pareto:2.5".
    // "empirical:<path>" loads newline-delimited reals.
    static EntryDistribution parse(const std::string& spec);

    Family family() const { return family_; }
    double param() const { return param_; }
    double shift() const { return shift_; }
    double scale() const { return scale_; }
    std::string spec_string() const;

    // Smoothing width used for level computation on atomic laws only.
    double smoothing_width() const { return smoothing_width_; }
    void set_smoothing_width(double w);

    bool is_atomic() const;
    bool has_analytic_levels() const { return family_ != Family::Empirical; }

    double sample_one(Rng& rng) const;
    std::vector<double> sample(Rng& rng, long long count) const;

    // Survival S(t) = P{|x| + u >= t} of the normalized entry magnitude,
    // with u ~ U[0, smoothing] for atomic laws and u = 0 otherwise.
    double abs_survival(double t) const;
    // inf{t >= 0 : S(t) = u}; exact piecewise closed form or monotone inversion.
    double abs_survival_inv(double u) const;

    // Levels of xi = |x|^p_moment. Analytic families invert the closed-form
    // survival; the empirical family uses lower quantiles of its sample set.
    LevelSequence levels(double p_moment, int K) const;
    // MC fallback used for cross-checking: quantiles over max(1e6, 2^(K+6)) draws.
    LevelSequence levels_empirical(double p_moment, int K, Rng& rng) const;

    const std::vector<double>& empirical_samples() const { return empirical_; }

private:
    EntryDistribution(Family f, double param);
    Family family_;
    double param_ = 0.0;
    double shift_ = 0.0;    // subtracted before scaling
    double scale_ = 1.0;    // divided after shifting
    double smoothing_width_ = 1e-6;
    std::vector<double> empirical_; // normalized samples (empirical family)
};

// Empirical Levy concentration: max over lambda of the fraction of samples in
// [lambda - z, lambda + z]. Exact sort + two-pointer sweep.
struct LevyConcentration {
    double value;
    double lambda;
};
LevyConcentration levy_concentration(std::span<const double> samples, double z);

// Pair (v, u) with estimated L(xi, v) <= u - margin, margin = 3/sqrt(N).
struct LevyParams {
    double v;
    double u;
};
LevyParams levy_params(const EntryDistribution& dist, Rng& rng, long long confidence_samples,
                       std::optional<double> v_request = std::nullopt);

} // namespace heavytail
