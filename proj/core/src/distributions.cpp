#include "heavytail/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "heavytail/special.hpp"

namespace heavytail {

double LevelSequence::truncated_expectation_lower_bound() const {
    double sum = 0.0;
    for (size_t k = 0; k < tau.size(); ++k) sum += std::ldexp(tau[k], -static_cast<int>(k) - 1);
    return sum;
}

LevelSequence levels_from_inverse_survival(const std::function<double(double)>& inv_survival, int K) {
    if (K < 1) throw ParameterError("levels: K must be >= 1");
    LevelSequence seq;
    seq.source = LevelSource::AnalyticInverseCdf;
    seq.tau.resize(K + 1);
    for (int k = 0; k <= K; ++k) seq.tau[k] = inv_survival(std::ldexp(1.0, -k));
    for (int k = 1; k <= K; ++k) {
        if (seq.tau[k] + 1e-12 < seq.tau[k - 1])
            throw std::logic_error("levels: inverse survival produced a decreasing sequence");
        seq.tau[k] = std::max(seq.tau[k], seq.tau[k - 1]);
    }
    return seq;
}

LevelSequence levels_from_samples(std::vector<double> xi, int K) {
    if (K < 1) throw ParameterError("levels: K must be >= 1");
    const auto n = static_cast<long long>(xi.size());
    if (n <= 0) throw ParameterError("levels: empty sample set");
    if (std::ldexp(static_cast<double>(n), -K) < 32.0)
        throw ResolutionError("levels: 2^-K * N < 32, deepest level unresolvable");
    std::sort(xi.begin(), xi.end());
    LevelSequence seq;
    seq.source = LevelSource::EmpiricalQuantile;
    seq.tau.resize(K + 1);
    seq.tau[0] = xi.front();
    for (int k = 1; k <= K; ++k) {
        // lower (left-continuous) quantile at probability 1 - 2^-k
        const double q = 1.0 - std::ldexp(1.0, -k);
        auto idx = static_cast<long long>(std::ceil(q * static_cast<double>(n)));
        idx = std::clamp(idx, 1LL, n);
        seq.tau[k] = std::max(xi[idx - 1], seq.tau[k - 1]);
    }
    return seq;
}

// ---------------------------------------------------------------------------
// EntryDistribution

EntryDistribution::EntryDistribution(Family f, double param) : family_(f), param_(param) {}

EntryDistribution EntryDistribution::gaussian() { return EntryDistribution(Family::Gaussian, 0.0); }

EntryDistribution EntryDistribution::rademacher() { return EntryDistribution(Family::Rademacher, 0.0); }

EntryDistribution EntryDistribution::uniform_symmetric() {
    EntryDistribution d(Family::UniformSymmetric, 0.0);
    d.scale_ = 1.0 / std::sqrt(3.0); // raw U[-1,1] has sd 1/sqrt(3)
    return d;
}

EntryDistribution EntryDistribution::student_t(double df) {
    if (!(df > 2.0)) throw ParameterError("student-t: df must be > 2");
    EntryDistribution d(Family::StudentT, df);
    d.scale_ = std::sqrt(df / (df - 2.0));
    return d;
}

EntryDistribution EntryDistribution::symmetrized_pareto(double tail) {
    if (!(tail > 2.0)) throw ParameterError("pareto: tail index must be > 2");
    EntryDistribution d(Family::SymmetrizedPareto, tail);
    d.scale_ = std::sqrt(tail / (tail - 2.0));
    return d;
}

EntryDistribution EntryDistribution::centered_lognormal(double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("lognormal: sigma must be > 0");
    EntryDistribution d(Family::CenteredLognormal, sigma);
    const double m = std::exp(sigma * sigma / 2.0);
    d.shift_ = m;
    d.scale_ = std::sqrt((std::exp(sigma * sigma) - 1.0)) * m;
    return d;
}

EntryDistribution EntryDistribution::two_point_sparse(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("two-point: p must be in (0,1)");
    return EntryDistribution(Family::TwoPointSparse, p);
}

EntryDistribution EntryDistribution::empirical(std::vector<double> raw) {
    if (raw.size() < 16) throw ParameterError("empirical: need at least 16 samples");
    const auto n = static_cast<double>(raw.size());
    double mean = 0.0;
    for (double v : raw) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : raw) var += (v - mean) * (v - mean);
    var /= n;
    if (!(var > 0.0)) throw ParameterError("empirical: sample variance is zero");
    EntryDistribution d(Family::Empirical, 0.0);
    d.shift_ = mean;
    d.scale_ = std::sqrt(var);
    d.empirical_.resize(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) d.empirical_[i] = (raw[i] - mean) / d.scale_;
    return d;
}

EntryDistribution EntryDistribution::parse(const std::string& spec) {
    std::string name = spec;
    std::string args;
    if (auto pos = spec.find(':'); pos != std::string::npos) {
        name = spec.substr(0, pos);
        args = spec.substr(pos + 1);
    }
    auto one_param = [&](const char* what) {
        if (args.empty()) throw ParameterError(std::string(what) + ": missing parameter");
        return std::stod(args);
    };
    if (name == "gaussian") return gaussian();
    if (name == "rademacher") return rademacher();
    if (name == "uniform" || name == "uniform-symmetric") return uniform_symmetric();
    if (name == "student-t") return student_t(one_param("student-t"));
    if (name == "pareto" || name == "symmetrized-pareto") return symmetrized_pareto(one_param("pareto"));
    if (name == "lognormal" || name == "centered-lognormal") return centered_lognormal(one_param("lognormal"));
    if (name == "two-point" || name == "two-point-sparse") return two_point_sparse(one_param("two-point"));
    if (name == "empirical") {
        if (args.empty()) throw ParameterError("empirical: missing file path");
        std::ifstream in(args);
        if (!in) throw ParameterError("empirical: cannot open " + args);
        std::vector<double> raw;
        double v;
        while (in >> v) raw.push_back(v);
        return empirical(std::move(raw));
    }
    throw ParameterError("unknown distribution family: " + name);
}

std::string EntryDistribution::spec_string() const {
    std::ostringstream os;
    switch (family_) {
        case Family::Gaussian: return "gaussian";
        case Family::Rademacher: return "rademacher";
        case Family::UniformSymmetric: return "uniform";
        case Family::StudentT: os << "student-t:" << param_; break;
        case Family::SymmetrizedPareto: os << "pareto:" << param_; break;
        case Family::CenteredLognormal: os << "lognormal:" << param_; break;
        case Family::TwoPointSparse: os << "two-point:" << param_; break;
        case Family::Empirical: os << "empirical:n=" << empirical_.size(); break;
    }
    return os.str();
}

void EntryDistribution::set_smoothing_width(double w) {
    if (!(w >= 0.0)) throw ParameterError("smoothing width must be >= 0");
    smoothing_width_ = w;
}

bool EntryDistribution::is_atomic() const {
    return family_ == Family::Rademacher || family_ == Family::TwoPointSparse;
}

namespace {

double sample_standard_normal(Rng& rng) {
    const double u1 = 1.0 - rng.next_double(); // (0,1]
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Marsaglia-Tsang, valid for shape a >= 1
double sample_gamma(Rng& rng, double a) {
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = sample_standard_normal(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = 1.0 - rng.next_double();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

struct TwoPointValues {
    double pos;   // value taken with probability p
    double neg;   // magnitude of the value taken with probability 1-p
};

TwoPointValues two_point_values(double p) {
    return {std::sqrt((1.0 - p) / p), std::sqrt(p / (1.0 - p))};
}

} // namespace

double EntryDistribution::sample_one(Rng& rng) const {
    switch (family_) {
        case Family::Gaussian:
            return sample_standard_normal(rng);
        case Family::Rademacher:
            return rng.next_bool() ? 1.0 : -1.0;
        case Family::UniformSymmetric:
            return rng.uniform(-1.0, 1.0) / scale_;
        case Family::StudentT: {
            const double z = sample_standard_normal(rng);
            const double chi2 = 2.0 * sample_gamma(rng, param_ / 2.0);
            return (z / std::sqrt(chi2 / param_)) / scale_;
        }
        case Family::SymmetrizedPareto: {
            const double u = 1.0 - rng.next_double();
            const double mag = std::pow(u, -1.0 / param_);
            return (rng.next_bool() ? mag : -mag) / scale_;
        }
        case Family::CenteredLognormal: {
            const double y = std::exp(param_ * sample_standard_normal(rng));
            return (y - shift_) / scale_;
        }
        case Family::TwoPointSparse: {
            const auto tp = two_point_values(param_);
            return rng.next_double() < param_ ? tp.pos : -tp.neg;
        }
        case Family::Empirical:
            return empirical_[rng.next_below(empirical_.size())];
    }
    throw std::logic_error("unreachable family");
}

std::vector<double> EntryDistribution::sample(Rng& rng, long long count) const {
    if (count < 1) throw ParameterError("sample: count must be >= 1");
    std::vector<double> out(static_cast<size_t>(count));
    for (auto& v : out) v = sample_one(rng);
    return out;
}

// ---------------------------------------------------------------------------
// Survival of the (smoothed) magnitude

namespace {

// Survival of |x| + U[0,w] for an atomic |x| with atoms (value_i, prob_i), w > 0:
// piecewise linear, each atom contributes prob * clamp((v + w - t)/w, 0, 1).
struct AtomicSurvival {
    std::vector<std::pair<double, double>> atoms; // (magnitude, probability)
    double w;

    double operator()(double t) const {
        double s = 0.0;
        for (auto [v, p] : atoms) s += p * std::clamp((v + w - t) / w, 0.0, 1.0);
        return s;
    }

    // inf{t >= 0 : S(t) = u}, with the u = 1 boundary mapped to the essential
    // infimum (right edge of the S == 1 plateau).
    double inverse(double u) const {
        std::vector<double> knots{0.0};
        for (auto [v, p] : atoms) {
            knots.push_back(v);
            knots.push_back(v + w);
        }
        std::sort(knots.begin(), knots.end());
        if (u >= 1.0) {
            double t = 0.0;
            for (size_t i = 1; i < knots.size(); ++i)
                if ((*this)(knots[i]) >= 1.0) t = knots[i];
            return t;
        }
        for (size_t i = 1; i < knots.size(); ++i) {
            const double sl = (*this)(knots[i - 1]);
            const double sr = (*this)(knots[i]);
            if (sr <= u && u <= sl) {
                if (sl == sr) return knots[i - 1]; // plateau: take the left edge
                return knots[i - 1] + (sl - u) / (sl - sr) * (knots[i] - knots[i - 1]);
            }
        }
        return knots.back();
    }
};

AtomicSurvival make_atomic_survival(const EntryDistribution& d) {
    AtomicSurvival s;
    s.w = std::max(d.smoothing_width(), 1e-300);
    if (d.family() == Family::Rademacher) {
        s.atoms = {{1.0, 1.0}};
    } else {
        const double p = d.param();
        auto tp = two_point_values(p);
        s.atoms = {{tp.pos, p}, {tp.neg, 1.0 - p}};
    }
    return s;
}

// Monotone bisection for a strictly decreasing survival function.
double invert_decreasing(const std::function<double(double)>& s, double u, double hi_start) {
    double lo = 0.0, hi = hi_start;
    while (s(hi) > u) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw std::runtime_error("survival inversion diverged");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (s(mid) > u)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

} // namespace

double EntryDistribution::abs_survival(double t) const {
    if (t <= 0.0) return 1.0;
    switch (family_) {
        case Family::Gaussian:
            return std::erfc(t / std::sqrt(2.0));
        case Family::UniformSymmetric: {
            const double s3 = std::sqrt(3.0);
            return t >= s3 ? 0.0 : 1.0 - t / s3;
        }
        case Family::StudentT:
            return student_t_abs_survival(param_, t * scale_);
        case Family::SymmetrizedPareto: {
            const double raw = t * scale_;
            return raw <= 1.0 ? 1.0 : std::pow(raw, -param_);
        }
        case Family::CenteredLognormal: {
            const double sig = param_;
            double s = 1.0 - normal_cdf(std::log(shift_ + scale_ * t) / sig);
            if (shift_ - scale_ * t > 0.0) s += normal_cdf(std::log(shift_ - scale_ * t) / sig);
            return s;
        }
        case Family::Rademacher:
        case Family::TwoPointSparse:
            return make_atomic_survival(*this)(t);
        case Family::Empirical:
            throw std::logic_error("abs_survival: empirical family has no analytic survival");
    }
    throw std::logic_error("unreachable family");
}

double EntryDistribution::abs_survival_inv(double u) const {
    if (!(u > 0.0 && u <= 1.0)) throw ParameterError("abs_survival_inv: u must be in (0,1]");
    switch (family_) {
        case Family::Gaussian:
            return u >= 1.0 ? 0.0 : normal_quantile(1.0 - u / 2.0);
        case Family::UniformSymmetric:
            return std::sqrt(3.0) * (1.0 - u);
        case Family::StudentT: {
            if (u >= 1.0) return 0.0;
            auto s = [this](double t) { return abs_survival(t); };
            return invert_decreasing(s, u, 1.0);
        }
        case Family::SymmetrizedPareto:
            return u >= 1.0 ? 1.0 / scale_ : std::pow(u, -1.0 / param_) / scale_;
        case Family::CenteredLognormal: {
            if (u >= 1.0) return 0.0;
            auto s = [this](double t) { return abs_survival(t); };
            return invert_decreasing(s, u, 1.0);
        }
        case Family::Rademacher:
        case Family::TwoPointSparse:
            return make_atomic_survival(*this).inverse(u);
        case Family::Empirical:
            throw std::logic_error("abs_survival_inv: empirical family is quantile-based");
    }
    throw std::logic_error("unreachable family");
}

LevelSequence EntryDistribution::levels(double p_moment, int K) const {
    if (!(p_moment >= 1.0)) throw ParameterError("levels: p_moment must be >= 1");
    if (family_ == Family::Empirical) {
        std::vector<double> xi(empirical_.size());
        for (size_t i = 0; i < xi.size(); ++i) xi[i] = std::pow(std::fabs(empirical_[i]), p_moment);
        return levels_from_samples(std::move(xi), K);
    }
    auto inv = [this, p_moment](double u) { return std::pow(abs_survival_inv(u), p_moment); };
    return levels_from_inverse_survival(inv, K);
}

LevelSequence EntryDistribution::levels_empirical(double p_moment, int K, Rng& rng) const {
    if (!(p_moment >= 1.0)) throw ParameterError("levels: p_moment must be >= 1");
    const long long n = std::max(1000000LL, 1LL << std::min(K + 6, 30));
    std::vector<double> xi(static_cast<size_t>(n));
    const double w = is_atomic() ? smoothing_width_ : 0.0;
    for (auto& v : xi) {
        double mag = std::fabs(sample_one(rng));
        if (w > 0.0) mag += rng.uniform(0.0, w);
        v = std::pow(mag, p_moment);
    }
    return levels_from_samples(std::move(xi), K);
}

// ---------------------------------------------------------------------------
// Levy concentration

LevyConcentration levy_concentration(std::span<const double> samples, double z) {
    if (samples.empty()) throw ParameterError("levy_concentration: empty sample set");
    if (!(z >= 0.0)) throw ParameterError("levy_concentration: z must be >= 0");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const size_t n = s.size();
    size_t best = 0, best_i = 0, j = 0;
    for (size_t i = 0; i < n; ++i) {
        if (j < i) j = i;
        while (j < n && s[j] <= s[i] + 2.0 * z) ++j;
        if (j - i > best) {
            best = j - i;
            best_i = i;
        }
    }
    return {static_cast<double>(best) / static_cast<double>(n), s[best_i] + z};
}

LevyParams levy_params(const EntryDistribution& dist, Rng& rng, long long confidence_samples,
                       std::optional<double> v_request) {
    if (confidence_samples < 100) throw ParameterError("levy_params: need >= 100 samples");
    const auto samples = dist.sample(rng, confidence_samples);
    const double margin = 3.0 / std::sqrt(static_cast<double>(confidence_samples));
    auto try_v = [&](double v) -> std::optional<LevyParams> {
        const double est = levy_concentration(samples, v).value;
        if (est + margin >= 1.0) return std::nullopt;
        return LevyParams{v, est + margin};
    };
    if (v_request) {
        auto got = try_v(*v_request);
        if (!got) throw std::runtime_error("levy_params: no valid pair at requested v");
        return *got;
    }
    for (int j = 0; j <= 40; ++j) {
        const double v = std::ldexp(1.0, -j);
        const double est = levy_concentration(samples, v).value;
        if (est <= 0.9) {
            auto got = try_v(v);
            if (got) return *got;
        }
    }
    throw std::runtime_error("levy_params: no valid (v,u) pair; input looks degenerate");
}

} // namespace heavytail
