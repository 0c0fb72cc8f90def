#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "heavytail/coverings.hpp"
#include "heavytail/distributions.hpp"
#include "heavytail/geometry.hpp"
#include "heavytail/norms.hpp"
#include "heavytail/regularizer.hpp"

namespace heavytail {

// Constants frozen from calibration runs (see README): 99th-percentile scale
// of the regularized inf->2 upper bound and of the symmetrized exact norm.
inline constexpr double kRegularizerScaleRef = 11.0;   // inf2_upper(A G) * sqrt(delta)/n
inline constexpr double kSymmetrizationScaleRef = 3.0; // inf2_upper(B~)/n

struct ExperimentConfig {
    std::string dist_spec = "gaussian";
    int n = 64;
    long long trials = 100;
    uint64_t master_seed = 1;
    double delta = 0.25;
    double theta = 0.3;
    double rho = 0.3;
    std::vector<double> eps_grid = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
    double lcd_r = 0.1;
    double lcd_h = 0.0;     // 0 => s * sqrt(n)
    double lcd_s = 1.0;
    double lcd_t_max = 0.0; // 0 => experiment default
    double lcd_tolerance = 1e-9;
    double smoothing = 1e-6;
    int exact_norm_cap = 12;
    double c_ref = kRegularizerScaleRef;
    double c_sym = kSymmetrizationScaleRef;
    int located_points = 100; // covering experiment: points located per trial
    int jobs = 1;
    std::string out_csv;
    std::string out_summary;

    void validate() const;
    EntryDistribution distribution() const;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrialRecord {
    long long index = 0;
    uint64_t seed = 0;
    double smin = kNaN;
    double logdet = kNaN;
    double max_row_norm = kNaN;
    double inf2_upper = kNaN;
    double inf2_lower = kNaN;
    double lcd_lower = kNaN;
    double lcd_t = kNaN;
    int lcd_censored = -1; // -1 when not applicable
    int error = 0;         // 1 when a numerical failure was recorded
    double wall_ms = 0.0;  // kept out of the CSV: reruns must be byte-identical
};

// Pinned CSV dialect: comma separator, '.' decimal, mandatory header, LF.
std::string trial_csv_header();
std::string trial_csv_row(const TrialRecord& rec);
void write_trial_csv(const std::string& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_trial_csv(const std::string& path);

struct SmallBallFit {
    std::vector<double> eps;
    std::vector<double> p_hat;
    std::vector<double> std_err; // sqrt(p(1-p)/trials)
    double slope = 0.0;          // least squares of p ~ slope * eps on eps <= 0.5
    std::vector<double> residuals;
};

SmallBallFit fit_small_ball(const std::vector<double>& eps_grid, const std::vector<double>& p_hat,
                            long long trials);

struct SminReport {
    std::vector<TrialRecord> records;
    SmallBallFit fit;
    std::string summary() const;
};
SminReport run_smin_mc(const ExperimentConfig& config);

struct RegularizerMcReport {
    std::vector<TrialRecord> records;
    double success_frequency = 0.0;
    double success_std_err = 0.0;
    double paper_floor = 0.0; // 1 - 4 exp(-delta n / 8)
    double det_pass_frequency = 0.0;
    double scale_p99 = 0.0; // 99th percentile of inf2_upper * sqrt(delta)/n
    std::string summary() const;
};
RegularizerMcReport run_regularizer_mc(const ExperimentConfig& config);

struct CoveringMcReport {
    std::vector<TrialRecord> records;
    std::vector<double> ratio; // certificate / (sqrt(n)/delta), per trial
    long long located_points = 0;
    long long containment_failures = 0;
    double ratio_p50 = 0.0, ratio_p95 = 0.0;
    std::string summary() const;
};
CoveringMcReport run_covering_mc(const ExperimentConfig& config);

struct SymmetrizationReport {
    std::vector<TrialRecord> records;
    long long resampled_rows = 0;
    long long rescaled_rows = 0;
    double bound_frequency = 0.0; // freq{ inf2_upper(B~) <= c_sym n }
    double exact_p99_over_n = 0.0; // only when n <= exact cap
    std::string summary() const;
};
SymmetrizationReport run_symmetrization_mc(const ExperimentConfig& config);

struct TensorizationReport {
    long long trials = 0;
    long long hits = 0;
    double v_used = 0.0;
    double v_tilde = 0.0, u_tilde = 0.0;
    double implied_log10_bound = 0.0; // n log10(u'), u' = max(1/2, u~)
    std::string summary() const;
};
TensorizationReport run_tensorization_check(const EntryDistribution& dist, int n, const Vector& y,
                                            long long trials, uint64_t master_seed,
                                            std::optional<double> v_override = std::nullopt);

struct SmallBallProfileReport {
    std::vector<double> eps;
    std::vector<double> l_hat;       // empirical Levy concentration at eps * v~
    std::vector<int> in_range;       // theorem-applicable flag per eps
    double lcd_lower = 0.0, lcd_hi = 0.0;
    bool lcd_censored = false;
    double v_tilde = 0.0, u_tilde = 0.0;
    double c_star = 0.0; // smallest constant making the bound hold over in-range eps
    std::string summary() const;
};
SmallBallProfileReport run_small_ball_profile(const Vector& x, const EntryDistribution& dist,
                                              const LcdParams& lcd_params, long long trials,
                                              const std::vector<double>& eps_grid,
                                              uint64_t master_seed);

struct NormalLcdReport {
    std::vector<TrialRecord> records;
    double comp_fraction = 0.0;
    double censored_fraction = 0.0;
    double lower_bound_p05 = 0.0; // 5th percentile of certified lower bounds
    std::string summary() const;
};
NormalLcdReport run_normal_lcd_mc(const ExperimentConfig& config);

struct DistanceBoundReport {
    std::vector<double> eps;
    std::vector<double> lhs;        // P{ smin < eps rho n^-1/2, v_min incompressible }
    std::vector<double> rhs;        // (1/theta) P{ |<X*, a_n>| < eps }
    std::vector<double> pooled_err; // 2-sigma comparison margin
    long long trials = 0;
    double max_distance_crosscheck = 0.0; // |<X*,a_n>| vs distance_to_span
    bool all_ordered = false;
    std::string summary() const;
};
DistanceBoundReport run_distance_bound_check(const ExperimentConfig& config);

// Deterministic worker pool: results land in trial-index order whatever the
// schedule, so reruns are byte-identical for any --jobs.
void parallel_for_ordered(long long count, int jobs, const std::function<void(long long)>& body);

void write_text_file(const std::string& path, const std::string& content);
uint64_t fnv1a_file_digest(const std::string& path);

} // namespace heavytail
