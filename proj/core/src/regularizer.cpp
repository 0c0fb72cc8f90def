#include "heavytail/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace heavytail {

// ---------------------------------------------------------------------------
// GridOperator

GridOperator::GridOperator(std::vector<int> codes) : codes_(std::move(codes)) {
    if (codes_.empty()) throw DomainError("GridOperator: empty code vector");
    for (int c : codes_)
        if (!valid_code(c)) throw DomainError("GridOperator: invalid exponent code");
}

bool GridOperator::valid_code(int code) {
    if (code == 0) return true;
    if (code < 0 || code > kMaxCode) return false;
    return (code & (code - 1)) == 0; // power of two
}

void GridOperator::set_code(int i, int code) {
    if (!valid_code(code)) throw DomainError("GridOperator: invalid exponent code");
    codes_[static_cast<size_t>(i)] = code;
}

double GridOperator::diag(int i) const { return std::exp2(-static_cast<double>(code(i))); }

double GridOperator::log_diag(int i) const { return -std::numbers::ln2 * code(i); }

double GridOperator::log_det() const {
    long long total = 0;
    for (int c : codes_) total += c;
    return -std::numbers::ln2 * static_cast<double>(total);
}

bool GridOperator::is_identity() const {
    return std::all_of(codes_.begin(), codes_.end(), [](int c) { return c == 0; });
}

std::string GridOperator::serialize() const {
    std::ostringstream os;
    for (size_t i = 0; i < codes_.size(); ++i) {
        if (i) os << ' ';
        os << codes_[i];
    }
    return os.str();
}

GridOperator GridOperator::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::vector<int> codes;
    int c;
    while (is >> c) codes.push_back(c);
    return GridOperator(std::move(codes));
}

// ---------------------------------------------------------------------------
// DiagonalContraction

void DiagonalContraction::apply_factor(LevelFactor f) {
    if (f.log_factor > 0.0) throw DomainError("apply_factor: factor must be <= 1");
    for (int i : f.indices) {
        log_diag_[static_cast<size_t>(i)] += f.log_factor;
        log_det_ += f.log_factor;
    }
    factors_.push_back(std::move(f));
}

void DiagonalContraction::multiply_scaled(const DiagonalContraction& other, double exponent) {
    if (other.n() != n()) throw ShapeError("multiply_scaled: dimension mismatch");
    for (const auto& f : other.factors_) {
        LevelFactor scaled{f.level, f.log_factor * exponent, f.indices};
        apply_factor(std::move(scaled));
    }
}

double DiagonalContraction::decomposition_error() const {
    std::vector<double> rebuilt(log_diag_.size(), 0.0);
    for (const auto& f : factors_)
        for (int i : f.indices) rebuilt[static_cast<size_t>(i)] += f.log_factor;
    double err = 0.0;
    for (size_t i = 0; i < rebuilt.size(); ++i)
        err = std::max(err, std::fabs(rebuilt[i] - log_diag_[i]));
    return err;
}

// ---------------------------------------------------------------------------
// Heart contraction

void RegularizerParams::validate() const {
    if (!(L >= 2.0 * std::numbers::e)) throw ParameterError("RegularizerParams: L must be >= 2e");
    if (!(p_moment >= 1.0)) throw ParameterError("RegularizerParams: p_moment must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("RegularizerParams: alpha must be in (0,1)");
    if (!(smoothing >= 0.0)) throw ParameterError("RegularizerParams: smoothing must be >= 0");
}

namespace {

constexpr int kHardLevelCap = 64;

int default_level_cap(double L, int n, double delta) {
    const double v = std::log2(L * static_cast<double>(n) / delta);
    return static_cast<int>(std::ceil(v)) + 2;
}

void check_delta(double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("delta must be in (0,1]");
}

// Shared k-loop: builds the contraction from exceedance index sets.
// exceedance(k) must return the indices of the level-k set (level 0 = all).
HeartResult build_from_levels(int n, const std::vector<double>& tau, int shrink_levels,
                              double delta, const RegularizerParams& params,
                              const std::function<std::vector<int>(int)>& exceedance) {
    HeartResult res{DiagonalContraction(n)};
    res.levels_used = shrink_levels;
    for (int k = 0; k < shrink_levels; ++k) {
        std::vector<int> set = exceedance(k);
        const double nu = static_cast<double>(set.size());
        if (set.empty()) continue;
        const double budget = params.L * std::ldexp(1.0, -k) * static_cast<double>(n);
        if (delta * nu > budget) {
            const double log_f = std::log(budget / (delta * nu));
            res.D.apply_factor({k, log_f, std::move(set)});
        }
    }
    double bound_sum = 0.0;
    for (int k = 0; k < shrink_levels; ++k) bound_sum += std::ldexp(tau[static_cast<size_t>(k) + 1], -k);
    res.l1_bound = params.L * static_cast<double>(n) / delta * bound_sum;
    return res;
}

} // namespace

HeartResult heart_contraction(const std::vector<double>& y, const LevelSequence& levels,
                              double delta, const RegularizerParams& params,
                              const LevelExtender& extend) {
    params.validate();
    check_delta(delta);
    const int n = static_cast<int>(y.size());
    if (n == 0) throw ShapeError("heart_contraction: empty input");
    for (double v : y)
        if (!(v >= 0.0)) throw DomainError("heart_contraction: coordinates must be non-negative");

    std::vector<double> tau = levels.tau;
    if (tau.size() < 2) throw ParameterError("heart_contraction: need at least levels tau_0, tau_1");

    const double y_max = *std::max_element(y.begin(), y.end());
    int cap = params.level_cap > 0 ? params.level_cap : default_level_cap(params.L, n, delta);
    cap = std::min(cap, kHardLevelCap);

    // Shrink levels use tau_k (exceedance) and tau_{k+1} (majorant): with the
    // stored sequence tau_0..tau_K we can process K shrink levels. The majorant
    // covers a coordinate iff y_i < tau at the top index, so raise the cap until
    // everything is covered or extension runs out.
    int top = std::min<int>(static_cast<int>(tau.size()) - 1, cap);
    if (params.adaptive_levels) {
        while (y_max >= tau[static_cast<size_t>(top)] && top < kHardLevelCap) {
            if (top + 1 <= static_cast<int>(tau.size()) - 1) {
                ++top;
            } else if (extend) {
                tau.push_back(std::max(extend(top + 1), tau.back()));
                ++top;
            } else {
                break;
            }
        }
    }

    auto exceedance = [&](int k) {
        std::vector<int> set;
        if (k == 0) {
            set.resize(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) set[static_cast<size_t>(i)] = i;
            return set;
        }
        const double t = tau[static_cast<size_t>(k)];
        for (int i = 0; i < n; ++i)
            if (y[static_cast<size_t>(i)] >= t) set.push_back(i);
        return set;
    };

    HeartResult res = build_from_levels(n, tau, top, delta, params, exceedance);

    for (int i = 0; i < n; ++i)
        if (y[static_cast<size_t>(i)] >= tau[static_cast<size_t>(top)]) res.flagged_indices.push_back(i);
    res.clamped = !res.flagged_indices.empty();

    double fitted = 0.0;
    for (int i = 0; i < n; ++i) fitted += res.D.diag(i) * y[static_cast<size_t>(i)];
    res.l1_fitted = fitted;

    if (!res.clamped) {
        // Majorant identity: z_i = sum_k tau_{k+1} 1{y_i >= tau_k} >= y_i, and
        // the fitted l1 mass stays under the deterministic budget.
        for (int i = 0; i < n; ++i) {
            double z = tau[1];
            for (int k = 1; k < top; ++k)
                if (y[static_cast<size_t>(i)] >= tau[static_cast<size_t>(k)]) z += tau[static_cast<size_t>(k) + 1];
            if (z + 1e-9 * std::max(1.0, z) < y[static_cast<size_t>(i)])
                throw std::logic_error("heart_contraction: majorant identity violated");
        }
        if (fitted > res.l1_bound * (1.0 + 1e-9))
            throw std::logic_error("heart_contraction: deterministic l1 bound violated");
    }
    return res;
}

HeartResult heart_contraction_independent(Rng& rng, int n, const LevelSequence& levels,
                                          double delta, const RegularizerParams& params) {
    params.validate();
    check_delta(delta);
    const std::vector<double>& tau = levels.tau;
    if (tau.size() < 2) throw ParameterError("heart_contraction_independent: need tau_0, tau_1");
    int cap = params.level_cap > 0 ? params.level_cap : default_level_cap(params.L, n, delta);
    const int top = std::min<int>(static_cast<int>(tau.size()) - 1, std::min(cap, kHardLevelCap));

    // Pre-draw the independent Bernoulli(2^-k) fields.
    std::vector<std::vector<int>> sets(static_cast<size_t>(top));
    for (int k = 0; k < top; ++k) {
        auto& set = sets[static_cast<size_t>(k)];
        if (k == 0) {
            set.resize(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) set[static_cast<size_t>(i)] = i;
            continue;
        }
        const double p = std::ldexp(1.0, -k);
        for (int i = 0; i < n; ++i)
            if (rng.next_double() < p) set.push_back(i);
    }
    auto exceedance = [&](int k) { return sets[static_cast<size_t>(k)]; };
    return build_from_levels(n, tau, top, delta, params, exceedance);
}

// ---------------------------------------------------------------------------
// Row regularizer

namespace {

// Deterministic per-row seed from the row content, so atomic-law smoothing
// stays a pure function of (A, dist, params).
uint64_t row_content_seed(const Matrix& A, int row) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
        uint64_t bits;
        const double v = A(row, j);
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        h = (h ^ bits) * 0x100000001b3ULL;
        h ^= static_cast<uint64_t>(row) * 0x9e3779b97f4a7c15ULL;
    }
    return h;
}

} // namespace

RowRegularizerResult row_regularizer(const Matrix& A, double delta, const EntryDistribution& dist,
                                     const RegularizerParams& params) {
    params.validate();
    check_delta(delta);
    if (A.rows() != A.cols()) throw ShapeError("row_regularizer: matrix must be square");
    if (!A.allFinite()) throw DomainError("row_regularizer: entries must be finite");
    const int n = static_cast<int>(A.rows());

    const int cap = params.level_cap > 0 ? params.level_cap : default_level_cap(params.L, n, delta);
    LevelSequence levels = dist.levels(2.0, std::min(cap, kHardLevelCap));
    LevelExtender extend;
    if (dist.has_analytic_levels()) {
        extend = [&dist](int k) {
            const double t = dist.abs_survival_inv(std::ldexp(1.0, -k));
            return t * t;
        };
    }

    RegularizerParams row_params = params;
    row_params.p_moment = 2.0;

    RowRegularizerResult out{DiagonalContraction(n)};
    const bool smooth = dist.is_atomic() && params.smoothing > 0.0;
    double worst_bound_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> y(static_cast<size_t>(n));
        if (smooth) {
            Rng noise(row_content_seed(A, i));
            for (int j = 0; j < n; ++j) {
                const double m = std::fabs(A(i, j)) + noise.uniform(0.0, params.smoothing);
                y[static_cast<size_t>(j)] = m * m;
            }
        } else {
            for (int j = 0; j < n; ++j) y[static_cast<size_t>(j)] = A(i, j) * A(i, j);
        }
        HeartResult h = heart_contraction(y, levels, delta, row_params, extend);
        out.clamped = out.clamped || h.clamped;
        worst_bound_sq = std::max(worst_bound_sq, h.l1_bound);
        out.D.multiply_scaled(h.D, 0.5);
    }
    out.row_norm_bound = std::sqrt(worst_bound_sq);

    double max_row_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = A(i, j) * out.D.diag(j);
            s += v * v;
        }
        max_row_sq = std::max(max_row_sq, s);
    }
    out.max_row_norm = std::sqrt(max_row_sq);
    if (!out.clamped && out.max_row_norm > out.row_norm_bound * (1.0 + 1e-9))
        throw std::logic_error("row_regularizer: row-norm bound violated");
    return out;
}

// ---------------------------------------------------------------------------
// Discretization

int discretize_code_for_log(double log_t) {
    if (!(log_t <= 0.0)) throw DomainError("discretize: diagonal must be in (0,1]");
    // Smallest exponent e with 2^-e <= sqrt(2) t, i.e. e >= -log2(t) - 1/2,
    // rounded up to the code ladder {0, 1, 2, 4, ..., 512}.
    const double e_min = -log_t / std::numbers::ln2 - 0.5;
    if (e_min <= 0.0) return 0;
    if (e_min > GridOperator::kMaxCode) return -1; // underflow: below the grid floor
    int code = 1;
    while (code < e_min) code <<= 1;
    return code;
}

DiscretizeResult discretize(const DiagonalContraction& D) {
    DiscretizeResult out{GridOperator(D.n())};
    for (int i = 0; i < D.n(); ++i) {
        const double lt = D.log_diag(i);
        int code = discretize_code_for_log(lt);
        if (code < 0) {
            out.underflow_flagged = true;
            code = GridOperator::kMaxCode;
        } else {
            // sandwich check: t^2 <= 2^-code <= sqrt(2) t
            const double lg = -std::numbers::ln2 * code;
            if (lg < 2.0 * lt - 1e-9 || lg > lt + 0.5 * std::numbers::ln2 + 1e-9)
                throw std::logic_error("discretize: sandwich postcondition violated");
        }
        out.G.set_code(i, code);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grid regularization with certificate

std::string RegularizeCertificate::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "n=" << n << '\n'
       << "delta=" << delta << '\n'
       << "logdet=" << logdet << '\n'
       << "logdet_threshold=" << logdet_threshold << '\n'
       << "max_row_norm=" << max_row_norm << '\n'
       << "inf2_upper=" << inf2_upper << '\n'
       << "pass=" << (pass ? 1 : 0) << '\n';
    return os.str();
}

RegularizeToGridResult regularize_to_grid(const Matrix& A, double delta,
                                          const EntryDistribution& dist,
                                          const RegularizerParams& params) {
    check_delta(delta);
    const int n = static_cast<int>(A.rows());
    // The determinant target det >= exp(-delta n) is met by running the row
    // construction at delta/4: discretization at most squares the inverse
    // determinant, and Markov on E det D^-1 <= exp(delta n / 4) does the rest.
    auto rows = row_regularizer(A, delta / 4.0, dist, params);
    auto disc = discretize(rows.D);

    Matrix AG = A;
    for (int j = 0; j < n; ++j) AG.col(j) *= disc.G.diag(j);

    RegularizeToGridResult out{std::move(disc.G), std::move(rows.D), {}, rows.clamped};
    out.certificate.n = n;
    out.certificate.delta = delta;
    out.certificate.logdet = out.G.log_det();
    out.certificate.logdet_threshold = -delta * static_cast<double>(n);
    out.certificate.max_row_norm = AG.rowwise().norm().maxCoeff();
    out.certificate.inf2_upper = inf2_upper(AG);
    out.certificate.pass = out.certificate.logdet >= out.certificate.logdet_threshold;
    return out;
}

} // namespace heavytail
