#include "heavytail/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "heavytail/matrix_io.hpp"

namespace heavytail {

void ExperimentConfig::validate() const {
    if (n < 1) throw ParameterError("config: n must be >= 1");
    if (trials < 1) throw ParameterError("config: trials must be >= 1");
    if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("config: delta must be in (0,1]");
    if (jobs < 1) throw ParameterError("config: jobs must be >= 1");
    if (eps_grid.empty()) throw ParameterError("config: eps grid must be non-empty");
    for (size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0)) throw ParameterError("config: eps grid must be positive");
        if (i > 0 && !(eps_grid[i] > eps_grid[i - 1]))
            throw ParameterError("config: eps grid must be strictly increasing");
    }
    (void)distribution();
}

EntryDistribution ExperimentConfig::distribution() const {
    auto d = EntryDistribution::parse(dist_spec);
    d.set_smoothing_width(smoothing);
    return d;
}

// ---------------------------------------------------------------------------
// plumbing

void parallel_for_ordered(long long count, int jobs, const std::function<void(long long)>& body) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (long long i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<long long> next{0};
    std::vector<std::thread> workers;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const int workers_n = static_cast<int>(std::min<long long>(jobs, count));
    workers.reserve(static_cast<size_t>(workers_n));
    for (int w = 0; w < workers_n; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                const long long i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double percentile(std::vector<double> values, double frac) {
    if (values.empty()) return kNaN;
    std::sort(values.begin(), values.end());
    auto idx = static_cast<long long>(std::ceil(frac * static_cast<double>(values.size()))) - 1;
    idx = std::clamp<long long>(idx, 0, static_cast<long long>(values.size()) - 1);
    return values[static_cast<size_t>(idx)];
}

double binom_se(double p, long long trials) {
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials));
}

Matrix sample_matrix(const EntryDistribution& dist, Rng& rng, int rows, int cols) {
    Matrix A(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) A(i, j) = dist.sample_one(rng);
    return A;
}

Vector sample_ball_point(Rng& rng, int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) {
        const double u1 = 1.0 - rng.next_double();
        const double u2 = rng.next_double();
        v[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    const double radius = std::pow(rng.next_double(), 1.0 / static_cast<double>(n));
    return v * (radius / v.norm());
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

} // namespace

std::string trial_csv_header() {
    return "trial,seed,smin,logdet,max_row_norm,inf2_upper,inf2_lower,lcd_lower,lcd_t,"
           "lcd_censored,error";
}

std::string trial_csv_row(const TrialRecord& r) {
    std::ostringstream os;
    os << r.index << ',' << r.seed << ',' << fmt(r.smin) << ',' << fmt(r.logdet) << ','
       << fmt(r.max_row_norm) << ',' << fmt(r.inf2_upper) << ',' << fmt(r.inf2_lower) << ','
       << fmt(r.lcd_lower) << ',' << fmt(r.lcd_t) << ',' << r.lcd_censored << ',' << r.error;
    return os.str();
}

void write_trial_csv(const std::string& path, const std::vector<TrialRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << trial_csv_header() << '\n';
    for (const auto& r : records) out << trial_csv_row(r) << '\n';
}

std::vector<TrialRecord> read_trial_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string header;
    if (!std::getline(in, header) || header != trial_csv_header())
        throw std::runtime_error("CSV header mismatch in " + path);
    std::vector<TrialRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream is(line);
        TrialRecord r;
        if (!(is >> r.index >> r.seed >> r.smin >> r.logdet >> r.max_row_norm >> r.inf2_upper >>
              r.inf2_lower >> r.lcd_lower >> r.lcd_t >> r.lcd_censored >> r.error))
            throw std::runtime_error("CSV row parse failure in " + path);
        out.push_back(r);
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

uint64_t fnv1a_file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

// ---------------------------------------------------------------------------
// small-ball fit

SmallBallFit fit_small_ball(const std::vector<double>& eps_grid, const std::vector<double>& p_hat,
                            long long trials) {
    SmallBallFit fit;
    fit.eps = eps_grid;
    fit.p_hat = p_hat;
    fit.std_err.resize(p_hat.size());
    for (size_t i = 0; i < p_hat.size(); ++i) fit.std_err[i] = binom_se(p_hat[i], trials);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < eps_grid.size(); ++i) {
        if (eps_grid[i] > 0.5 + 1e-12) continue;
        num += p_hat[i] * eps_grid[i];
        den += eps_grid[i] * eps_grid[i];
    }
    fit.slope = den > 0.0 ? num / den : 0.0;
    fit.residuals.resize(p_hat.size());
    for (size_t i = 0; i < p_hat.size(); ++i) fit.residuals[i] = p_hat[i] - fit.slope * eps_grid[i];
    return fit;
}

// ---------------------------------------------------------------------------
// smin Monte Carlo

SminReport run_smin_mc(const ExperimentConfig& config) {
    config.validate();
    const auto dist = config.distribution();
    SminReport rep;
    rep.records.resize(static_cast<size_t>(config.trials));
    parallel_for_ordered(config.trials, config.jobs, [&](long long i) {
        Timer timer;
        TrialRecord rec;
        rec.index = i;
        rec.seed = stable_hash(config.master_seed, static_cast<uint64_t>(i));
        Rng rng(rec.seed);
        try {
            const Matrix A = sample_matrix(dist, rng, config.n, config.n);
            rec.smin = smin(A);
        } catch (const std::exception&) {
            rec.error = 1;
        }
        rec.wall_ms = timer.ms();
        rep.records[static_cast<size_t>(i)] = std::move(rec);
    });
    const double scale = 1.0 / std::sqrt(static_cast<double>(config.n));
    std::vector<double> p_hat(config.eps_grid.size(), 0.0);
    long long ok = 0;
    for (const auto& r : rep.records) {
        if (r.error) continue;
        ++ok;
        for (size_t e = 0; e < config.eps_grid.size(); ++e)
            if (r.smin <= config.eps_grid[e] * scale) p_hat[e] += 1.0;
    }
    for (auto& p : p_hat) p /= static_cast<double>(std::max<long long>(ok, 1));
    rep.fit = fit_small_ball(config.eps_grid, p_hat, std::max<long long>(ok, 1));
    return rep;
}

std::string SminReport::summary() const {
    std::ostringstream os;
    os << "experiment=smin\n";
    os << "trials=" << records.size() << '\n';
    for (size_t i = 0; i < fit.eps.size(); ++i)
        os << "eps_" << fmt(fit.eps[i]) << "_p=" << fmt(fit.p_hat[i])
           << " se=" << fmt(fit.std_err[i]) << " resid=" << fmt(fit.residuals[i]) << '\n';
    os << "fitted_slope=" << fmt(fit.slope) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// regularizer Monte Carlo

RegularizerMcReport run_regularizer_mc(const ExperimentConfig& config) {
    config.validate();
    const auto dist = config.distribution();
    RegularizerMcReport rep;
    rep.records.resize(static_cast<size_t>(config.trials));
    RegularizerParams params;
    params.smoothing = config.smoothing;
    parallel_for_ordered(config.trials, config.jobs, [&](long long i) {
        Timer timer;
        TrialRecord rec;
        rec.index = i;
        rec.seed = stable_hash(config.master_seed, static_cast<uint64_t>(i));
        Rng rng(rec.seed);
        try {
            const Matrix A = sample_matrix(dist, rng, config.n, config.n);
            auto result = regularize_to_grid(A, config.delta, dist, params);
            rec.logdet = result.certificate.logdet;
            rec.max_row_norm = result.certificate.max_row_norm;
            rec.inf2_upper = result.certificate.inf2_upper;
            Matrix AG = A;
            for (int j = 0; j < config.n; ++j) AG.col(j) *= result.G.diag(j);
            rec.inf2_lower = inf2_lower(AG, 2, rng).value;
        } catch (const std::exception&) {
            rec.error = 1;
        }
        rec.wall_ms = timer.ms();
        rep.records[static_cast<size_t>(i)] = std::move(rec);
    });
    const double n = static_cast<double>(config.n);
    long long success = 0, det_pass = 0, ok = 0;
    std::vector<double> scales;
    for (const auto& r : rep.records) {
        if (r.error) continue;
        ++ok;
        const bool det_ok = r.logdet >= -config.delta * n;
        const double scale = r.inf2_upper * std::sqrt(config.delta) / n;
        scales.push_back(scale);
        if (det_ok) ++det_pass;
        if (det_ok && scale <= config.c_ref) ++success;
    }
    rep.success_frequency = ok ? static_cast<double>(success) / static_cast<double>(ok) : 0.0;
    rep.success_std_err = binom_se(rep.success_frequency, std::max<long long>(ok, 1));
    rep.det_pass_frequency = ok ? static_cast<double>(det_pass) / static_cast<double>(ok) : 0.0;
    rep.paper_floor = 1.0 - 4.0 * std::exp(-config.delta * n / 8.0);
    rep.scale_p99 = percentile(scales, 0.99);
    return rep;
}

std::string RegularizerMcReport::summary() const {
    std::ostringstream os;
    os << "experiment=regularize\n";
    os << "trials=" << records.size() << '\n';
    os << "success_frequency=" << fmt(success_frequency) << '\n';
    os << "success_std_err=" << fmt(success_std_err) << '\n';
    os << "det_pass_frequency=" << fmt(det_pass_frequency) << '\n';
    os << "paper_floor=" << fmt(paper_floor) << '\n';
    os << "scale_p99=" << fmt(scale_p99) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// covering Monte Carlo

CoveringMcReport run_covering_mc(const ExperimentConfig& config) {
    config.validate();
    const auto dist = config.distribution();
    CoveringMcReport rep;
    rep.records.resize(static_cast<size_t>(config.trials));
    std::vector<long long> failures(static_cast<size_t>(config.trials), 0);
    rep.ratio.resize(static_cast<size_t>(config.trials), kNaN);
    RegularizerParams params;
    params.smoothing = config.smoothing;
    parallel_for_ordered(config.trials, config.jobs, [&](long long i) {
        Timer timer;
        TrialRecord rec;
        rec.index = i;
        rec.seed = stable_hash(config.master_seed, static_cast<uint64_t>(i));
        Rng rng(rec.seed);
        try {
            const Matrix A = sample_matrix(dist, rng, config.n, config.n);
            auto result = regularize_to_grid(A, config.delta, dist, params);
            rec.logdet = result.certificate.logdet;
            rec.max_row_norm = result.certificate.max_row_norm;
            rec.inf2_upper = result.certificate.inf2_upper;
            const double cert =
                result.certificate.inf2_upper / std::sqrt(static_cast<double>(config.n) * config.delta);
            rep.ratio[static_cast<size_t>(i)] =
                cert / (std::sqrt(static_cast<double>(config.n)) / config.delta);
            for (int s = 0; s < config.located_points; ++s) {
                const Vector x = sample_ball_point(rng, config.n);
                try {
                    (void)locate_parallelepiped(x, result.G, config.delta);
                } catch (const std::logic_error&) {
                    ++failures[static_cast<size_t>(i)];
                }
            }
        } catch (const std::exception&) {
            rec.error = 1;
        }
        rec.wall_ms = timer.ms();
        rep.records[static_cast<size_t>(i)] = std::move(rec);
    });
    rep.located_points = static_cast<long long>(config.trials) * config.located_points;
    for (long long f : failures) rep.containment_failures += f;
    std::vector<double> ratios;
    for (double v : rep.ratio)
        if (std::isfinite(v)) ratios.push_back(v);
    rep.ratio_p50 = percentile(ratios, 0.50);
    rep.ratio_p95 = percentile(ratios, 0.95);
    return rep;
}

std::string CoveringMcReport::summary() const {
    std::ostringstream os;
    os << "experiment=cover\n";
    os << "trials=" << records.size() << '\n';
    os << "located_points=" << located_points << '\n';
    os << "containment_failures=" << containment_failures << '\n';
    os << "ratio_p50=" << fmt(ratio_p50) << '\n';
    os << "ratio_p95=" << fmt(ratio_p95) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// symmetrization Monte Carlo

SymmetrizationReport run_symmetrization_mc(const ExperimentConfig& config) {
    config.validate();
    const auto dist = config.distribution();
    SymmetrizationReport rep;
    rep.records.resize(static_cast<size_t>(config.trials));
    std::vector<long long> resampled(static_cast<size_t>(config.trials), 0);
    std::vector<long long> rescaled(static_cast<size_t>(config.trials), 0);
    std::vector<double> exact_over_n(static_cast<size_t>(config.trials), kNaN);
    const double sqrt_n = std::sqrt(static_cast<double>(config.n));
    parallel_for_ordered(config.trials, config.jobs, [&](long long i) {
        Timer timer;
        TrialRecord rec;
        rec.index = i;
        rec.seed = stable_hash(config.master_seed, static_cast<uint64_t>(i));
        Rng rng(rec.seed);
        try {
            Matrix B(config.n, config.n);
            for (int row = 0; row < config.n; ++row) {
                bool accepted = false;
                for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
                    for (int j = 0; j < config.n; ++j) B(row, j) = dist.sample_one(rng);
                    const double norm = B.row(row).norm();
                    const double sum = std::fabs(B.row(row).sum());
                    if (norm <= sqrt_n && sum <= sqrt_n) {
                        accepted = true;
                    } else {
                        ++resampled[static_cast<size_t>(i)];
                    }
                }
                if (!accepted) {
                    const double norm = B.row(row).norm();
                    const double sum = std::fabs(B.row(row).sum());
                    const double c = std::min({1.0, sqrt_n / norm, sqrt_n / std::max(sum, 1e-300)});
                    B.row(row) *= c;
                    ++rescaled[static_cast<size_t>(i)];
                }
            }
            const Matrix Bt = permute_rows_independently(B, rng);
            rec.inf2_upper = inf2_upper(Bt);
            rec.inf2_lower = inf2_lower(Bt, 2, rng).value;
            if (config.n <= config.exact_norm_cap)
                exact_over_n[static_cast<size_t>(i)] =
                    inf2_exact(Bt).value / static_cast<double>(config.n);
        } catch (const std::exception&) {
            rec.error = 1;
        }
        rec.wall_ms = timer.ms();
        rep.records[static_cast<size_t>(i)] = std::move(rec);
    });
    for (long long v : resampled) rep.resampled_rows += v;
    for (long long v : rescaled) rep.rescaled_rows += v;
    long long ok = 0, within = 0;
    std::vector<double> exacts;
    for (size_t i = 0; i < rep.records.size(); ++i) {
        const auto& r = rep.records[i];
        if (r.error) continue;
        ++ok;
        if (r.inf2_upper <= config.c_sym * static_cast<double>(config.n)) ++within;
        if (std::isfinite(exact_over_n[i])) exacts.push_back(exact_over_n[i]);
    }
    rep.bound_frequency = ok ? static_cast<double>(within) / static_cast<double>(ok) : 0.0;
    rep.exact_p99_over_n = percentile(exacts, 0.99);
    return rep;
}

std::string SymmetrizationReport::summary() const {
    std::ostringstream os;
    os << "experiment=symmetrize\n";
    os << "trials=" << records.size() << '\n';
    os << "resampled_rows=" << resampled_rows << '\n';
    os << "rescaled_rows=" << rescaled_rows << '\n';
    os << "bound_frequency=" << fmt(bound_frequency) << '\n';
    os << "exact_p99_over_n=" << fmt(exact_p99_over_n) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// tensorization check

TensorizationReport run_tensorization_check(const EntryDistribution& dist, int n, const Vector& y,
                                            long long trials, uint64_t master_seed,
                                            std::optional<double> v_override) {
    if (n < 1 || trials < 1) throw ParameterError("tensorization: bad n or trials");
    if (std::fabs(y.norm() - 1.0) > 1e-10) throw DomainError("tensorization: y must be unit");
    TensorizationReport rep;
    rep.trials = trials;
    Rng levy_rng(stable_hash(master_seed, 0xfeedULL));
    const auto lp = levy_params(dist, levy_rng, 200000);
    rep.v_tilde = lp.v;
    rep.u_tilde = lp.u;
    rep.v_used = v_override ? *v_override : lp.v * std::sqrt(1.0 - lp.u) / 4.0;
    const double u_prime = std::max(0.5, lp.u);
    rep.implied_log10_bound = static_cast<double>(n) * std::log10(u_prime);
    const double cutoff = rep.v_used * std::sqrt(static_cast<double>(n));
    std::atomic<long long> hits{0};
    parallel_for_ordered(trials, 1, [&](long long i) {
        Rng rng(stable_hash(master_seed, static_cast<uint64_t>(i + 1)));
        double norm_sq = 0.0;
        for (int row = 0; row < n; ++row) {
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += dist.sample_one(rng) * y[j];
            norm_sq += dot * dot;
        }
        if (std::sqrt(norm_sq) <= cutoff) hits.fetch_add(1);
    });
    rep.hits = hits.load();
    return rep;
}

std::string TensorizationReport::summary() const {
    std::ostringstream os;
    os << "experiment=tensorize\n";
    os << "trials=" << trials << '\n';
    os << "hits=" << hits << '\n';
    os << "v_used=" << fmt(v_used) << '\n';
    os << "v_tilde=" << fmt(v_tilde) << '\n';
    os << "u_tilde=" << fmt(u_tilde) << '\n';
    os << "implied_log10_bound=" << fmt(implied_log10_bound) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// small-ball profile for a fixed direction

SmallBallProfileReport run_small_ball_profile(const Vector& x, const EntryDistribution& dist,
                                              const LcdParams& lcd_params, long long trials,
                                              const std::vector<double>& eps_grid,
                                              uint64_t master_seed) {
    if (trials < 1) throw ParameterError("small_ball_profile: trials must be >= 1");
    if (std::fabs(x.norm() - 1.0) > 1e-10) throw DomainError("small_ball_profile: x must be unit");
    SmallBallProfileReport rep;
    rep.eps = eps_grid;

    Rng levy_rng(stable_hash(master_seed, 0xfeedULL));
    const auto lp = levy_params(dist, levy_rng, 200000);
    rep.v_tilde = lp.v;
    rep.u_tilde = lp.u;

    const auto res = lcd(x, lcd_params);
    rep.lcd_lower = res.lower_bound;
    rep.lcd_censored = res.censored;
    rep.lcd_hi = res.censored ? res.lower_bound : res.t_star;

    const int n = static_cast<int>(x.size());
    std::vector<double> sums(static_cast<size_t>(trials));
    parallel_for_ordered(trials, 1, [&](long long i) {
        Rng rng(stable_hash(master_seed, static_cast<uint64_t>(i + 1)));
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += x[j] * dist.sample_one(rng);
        sums[static_cast<size_t>(i)] = s;
    });

    const double range_floor = 1.0 / rep.lcd_hi; // eps below this is out of range
    const double tail_term = std::exp(-2.0 * (1.0 - lp.u) * lcd_params.h * lcd_params.h);
    rep.l_hat.resize(eps_grid.size());
    rep.in_range.resize(eps_grid.size());
    double c_star = 0.0;
    for (size_t e = 0; e < eps_grid.size(); ++e) {
        rep.l_hat[e] = levy_concentration(sums, eps_grid[e] * lp.v).value;
        rep.in_range[e] = eps_grid[e] >= range_floor ? 1 : 0;
        if (rep.in_range[e]) {
            const double denom =
                eps_grid[e] / (lcd_params.r * std::sqrt(1.0 - lp.u)) + tail_term;
            c_star = std::max(c_star, rep.l_hat[e] / denom);
        }
    }
    rep.c_star = c_star;
    return rep;
}

std::string SmallBallProfileReport::summary() const {
    std::ostringstream os;
    os << "experiment=smallball\n";
    os << "lcd_lower=" << fmt(lcd_lower) << '\n';
    os << "lcd_hi=" << fmt(lcd_hi) << '\n';
    os << "lcd_censored=" << (lcd_censored ? 1 : 0) << '\n';
    os << "v_tilde=" << fmt(v_tilde) << '\n';
    os << "u_tilde=" << fmt(u_tilde) << '\n';
    for (size_t i = 0; i < eps.size(); ++i)
        os << "eps_" << fmt(eps[i]) << "_L=" << fmt(l_hat[i]) << " in_range=" << in_range[i] << '\n';
    os << "c_star=" << fmt(c_star) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// random-normal LCD

NormalLcdReport run_normal_lcd_mc(const ExperimentConfig& config) {
    config.validate();
    const auto dist = config.distribution();
    const double sqrt_n = std::sqrt(static_cast<double>(config.n));
    LcdParams lcd_params;
    lcd_params.r = config.lcd_r;
    lcd_params.h = config.lcd_h > 0.0 ? config.lcd_h : config.lcd_s * sqrt_n;
    lcd_params.t_max = config.lcd_t_max > 0.0 ? config.lcd_t_max : 1e3 * sqrt_n;
    lcd_params.tolerance = config.lcd_tolerance;
    lcd_params.validate();
    const SphereParams sphere{config.theta, config.rho};

    NormalLcdReport rep;
    rep.records.resize(static_cast<size_t>(config.trials));
    std::vector<int> comp(static_cast<size_t>(config.trials), 0);
    parallel_for_ordered(config.trials, config.jobs, [&](long long i) {
        Timer timer;
        TrialRecord rec;
        rec.index = i;
        rec.seed = stable_hash(config.master_seed, static_cast<uint64_t>(i));
        Rng rng(rec.seed);
        try {
            const Matrix Ap = sample_matrix(dist, rng, config.n - 1, config.n);
            const auto normal = unit_normal(Ap, rng);
            comp[static_cast<size_t>(i)] =
                classify(normal.x, sphere) == SphereClass::Compressible ? 1 : 0;
            const auto res = lcd(normal.x, lcd_params);
            rec.lcd_lower = res.lower_bound;
            rec.lcd_censored = res.censored ? 1 : 0;
            rec.lcd_t = res.censored ? kNaN : res.t_star;
        } catch (const std::exception&) {
            rec.error = 1;
        }
        rec.wall_ms = timer.ms();
        rep.records[static_cast<size_t>(i)] = std::move(rec);
    });
    long long ok = 0, censored = 0, comp_count = 0;
    std::vector<double> lowers;
    for (size_t i = 0; i < rep.records.size(); ++i) {
        const auto& r = rep.records[i];
        if (r.error) continue;
        ++ok;
        comp_count += comp[i];
        if (r.lcd_censored == 1) ++censored;
        lowers.push_back(r.lcd_lower);
    }
    rep.comp_fraction = ok ? static_cast<double>(comp_count) / static_cast<double>(ok) : 0.0;
    rep.censored_fraction = ok ? static_cast<double>(censored) / static_cast<double>(ok) : 0.0;
    rep.lower_bound_p05 = percentile(lowers, 0.05);
    return rep;
}

std::string NormalLcdReport::summary() const {
    std::ostringstream os;
    os << "experiment=normal-lcd\n";
    os << "trials=" << records.size() << '\n';
    os << "comp_fraction=" << fmt(comp_fraction) << '\n';
    os << "censored_fraction=" << fmt(censored_fraction) << '\n';
    os << "lower_bound_p05=" << fmt(lower_bound_p05) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// distance-reduction inequality

DistanceBoundReport run_distance_bound_check(const ExperimentConfig& config) {
    config.validate();
    const auto dist = config.distribution();
    const int n = config.n;
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const SphereParams sphere{config.theta, config.rho};

    struct TrialOut {
        double smin = kNaN;
        int incomp = 0;
        double dist_n = kNaN;
        double crosscheck = kNaN;
        int error = 0;
    };
    std::vector<TrialOut> outs(static_cast<size_t>(config.trials));
    parallel_for_ordered(config.trials, config.jobs, [&](long long i) {
        Rng rng(stable_hash(config.master_seed, static_cast<uint64_t>(i)));
        TrialOut& out = outs[static_cast<size_t>(i)];
        try {
            const Matrix A = sample_matrix(dist, rng, n, n);
            Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinV);
            if (svd.info() != Eigen::Success) throw NumericalError("svd failed");
            const auto& sv = svd.singularValues();
            out.smin = sv(sv.size() - 1);
            Vector v_min = svd.matrixV().col(sv.size() - 1);
            v_min.normalize();
            out.incomp = classify(v_min, sphere) == SphereClass::Incompressible ? 1 : 0;
            const Matrix Ap = A.leftCols(n - 1).transpose();
            const auto normal = unit_normal(Ap, rng);
            out.dist_n = std::fabs(normal.x.dot(A.col(n - 1)));
            out.crosscheck = std::fabs(out.dist_n - distance_to_span(A.col(n - 1), A.leftCols(n - 1)));
        } catch (const std::exception&) {
            out.error = 1;
        }
    });

    DistanceBoundReport rep;
    rep.eps = config.eps_grid;
    rep.trials = config.trials;
    long long ok = 0;
    for (const auto& o : outs)
        if (!o.error) ++ok;
    rep.lhs.resize(rep.eps.size(), 0.0);
    rep.rhs.resize(rep.eps.size(), 0.0);
    rep.pooled_err.resize(rep.eps.size(), 0.0);
    for (const auto& o : outs) {
        if (o.error) continue;
        rep.max_distance_crosscheck = std::max(rep.max_distance_crosscheck, o.crosscheck);
        for (size_t e = 0; e < rep.eps.size(); ++e) {
            const double eps = rep.eps[e];
            if (o.smin < eps * config.rho / sqrt_n && o.incomp) rep.lhs[e] += 1.0;
            if (o.dist_n < eps) rep.rhs[e] += 1.0;
        }
    }
    rep.all_ordered = true;
    const auto T = static_cast<double>(std::max<long long>(ok, 1));
    for (size_t e = 0; e < rep.eps.size(); ++e) {
        const double p1 = rep.lhs[e] / T;
        const double p2 = rep.rhs[e] / T;
        rep.lhs[e] = p1;
        rep.rhs[e] = p2 / config.theta;
        const double se1 = binom_se(p1, ok);
        const double se2 = binom_se(p2, ok) / config.theta;
        rep.pooled_err[e] = 2.0 * std::sqrt(se1 * se1 + se2 * se2);
        if (rep.lhs[e] > rep.rhs[e] + rep.pooled_err[e]) rep.all_ordered = false;
    }
    return rep;
}

std::string DistanceBoundReport::summary() const {
    std::ostringstream os;
    os << "experiment=distance\n";
    os << "trials=" << trials << '\n';
    for (size_t i = 0; i < eps.size(); ++i)
        os << "eps_" << fmt(eps[i]) << "_lhs=" << fmt(lhs[i]) << " rhs=" << fmt(rhs[i])
           << " margin=" << fmt(pooled_err[i]) << '\n';
    os << "max_distance_crosscheck=" << fmt(max_distance_crosscheck) << '\n';
    os << "all_ordered=" << (all_ordered ? 1 : 0) << '\n';
    return os.str();
}

} // namespace heavytail
