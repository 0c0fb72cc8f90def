#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "heavytail/coverings.hpp"
#include "heavytail/experiments.hpp"
#include "heavytail/geometry.hpp"
#include "heavytail/matrix_io.hpp"
#include "heavytail/regularizer.hpp"

namespace ht = heavytail;

namespace {

constexpr const char* kVersion = "heavytail 0.1.0";

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// RunManifest: command, resolved config snapshot, seed, version, timestamps,
// and a digest per output file so every result is traceable to its inputs.
void write_manifest(const std::string& path, const std::string& command,
                    const std::string& config_snapshot, uint64_t seed,
                    const std::string& started, const std::vector<std::string>& outputs) {
    std::ostringstream os;
    os << "command=" << command << '\n';
    os << "version=" << kVersion << '\n';
    os << "master_seed=" << seed << '\n';
    os << "started=" << started << '\n';
    os << "finished=" << iso_timestamp() << '\n';
    for (const auto& out : outputs) {
        char digest[32];
        std::snprintf(digest, sizeof(digest), "%016llx",
                      static_cast<unsigned long long>(ht::fnv1a_file_digest(out)));
        os << "output=" << out << " fnv1a=" << digest << '\n';
    }
    std::istringstream cfg(config_snapshot);
    std::string line;
    while (std::getline(cfg, line))
        if (!line.empty()) os << "config." << line << '\n';
    ht::write_text_file(path, os.str());
}

void emit(const std::string& command, const ht::ExperimentConfig& cfg,
          const std::string& config_snapshot, const std::vector<ht::TrialRecord>& records,
          const std::string& summary, const std::string& started) {
    const std::string csv = cfg.out_csv.empty() ? command + ".csv" : cfg.out_csv;
    const std::string sum = cfg.out_summary.empty() ? command + "_summary.txt" : cfg.out_summary;
    ht::write_trial_csv(csv, records);
    ht::write_text_file(sum, summary);
    write_manifest(csv + ".manifest", command, config_snapshot, cfg.master_seed, started,
                   {csv, sum});
    std::cout << summary;
}

void add_common(CLI::App* sub, ht::ExperimentConfig& cfg) {
    sub->set_help_flag("--help", "print this help message and exit");
    sub->add_option("--dist", cfg.dist_spec, "entry law, family[:param[,param]]")
        ->capture_default_str();
    sub->add_option("--n", cfg.n, "matrix dimension")->capture_default_str();
    sub->add_option("--trials", cfg.trials, "Monte Carlo trials")->capture_default_str();
    sub->add_option("--seed", cfg.master_seed, "master seed")->capture_default_str();
    sub->add_option("--delta", cfg.delta, "determinant budget delta")->capture_default_str();
    sub->add_option("--theta", cfg.theta, "sparsity fraction theta")->capture_default_str();
    sub->add_option("--rho", cfg.rho, "compressibility radius rho")->capture_default_str();
    sub->add_option("--eps-grid", cfg.eps_grid, "epsilon grid (strictly increasing)")
        ->delimiter(',');
    sub->add_option("--r", cfg.lcd_r, "LCD relative tolerance")->capture_default_str();
    sub->add_option("--h", cfg.lcd_h, "LCD distance cap (0 = s*sqrt(n))")->capture_default_str();
    sub->add_option("--lcd-s", cfg.lcd_s, "LCD cap scale s when --h is 0")->capture_default_str();
    sub->add_option("--t-max", cfg.lcd_t_max, "LCD censoring point (0 = experiment default)")
        ->capture_default_str();
    sub->add_option("--lcd-tol", cfg.lcd_tolerance, "LCD bracket tolerance")->capture_default_str();
    sub->add_option("--smoothing", cfg.smoothing, "magnitude smoothing width for atomic laws")
        ->capture_default_str();
    sub->add_option("--exact-cap", cfg.exact_norm_cap, "dimension cap for exact inf->2 norms")
        ->capture_default_str();
    sub->add_option("--c-ref", cfg.c_ref, "frozen regularizer scale constant")
        ->capture_default_str();
    sub->add_option("--c-sym", cfg.c_sym, "frozen symmetrization scale constant")
        ->capture_default_str();
    sub->add_option("--located-points", cfg.located_points, "points located per covering trial")
        ->capture_default_str();
    sub->add_option("--jobs", cfg.jobs, "worker threads")->capture_default_str();
    sub->add_option("--out-csv", cfg.out_csv, "per-trial CSV path")->capture_default_str();
    sub->add_option("--out-summary", cfg.out_summary, "summary report path")
        ->capture_default_str();
}

ht::LcdParams lcd_params_from(const ht::ExperimentConfig& cfg, double default_t_max) {
    ht::LcdParams p;
    p.r = cfg.lcd_r;
    p.h = cfg.lcd_h > 0.0 ? cfg.lcd_h : cfg.lcd_s * std::sqrt(static_cast<double>(cfg.n));
    p.t_max = cfg.lcd_t_max > 0.0 ? cfg.lcd_t_max : default_t_max;
    p.tolerance = cfg.lcd_tolerance;
    return p;
}

int run_report(const std::vector<std::string>& inputs, const std::vector<double>& eps_grid,
               const std::string& out_summary) {
    std::vector<ht::TrialRecord> pooled;
    std::string header;
    for (const auto& path : inputs) {
        auto records = ht::read_trial_csv(path); // throws on header mismatch, names the file
        pooled.insert(pooled.end(), records.begin(), records.end());
    }
    std::ostringstream os;
    os << "experiment=report\n";
    os << "inputs=" << inputs.size() << '\n';
    os << "pooled_trials=" << pooled.size() << '\n';

    std::vector<double> smins;
    for (const auto& r : pooled)
        if (!r.error && std::isfinite(r.smin)) smins.push_back(r.smin);
    if (!smins.empty()) {
        // per-eps pooled probabilities with binomial error bars; the threshold
        // scale n^-1/2 is inferred from the record count per run being equal n
        // is not available here, so probabilities are reported on raw smin.
        std::vector<double> p_hat(eps_grid.size(), 0.0);
        for (double s : smins)
            for (size_t e = 0; e < eps_grid.size(); ++e)
                if (s <= eps_grid[e]) p_hat[e] += 1.0;
        for (auto& p : p_hat) p /= static_cast<double>(smins.size());
        auto fit = ht::fit_small_ball(eps_grid, p_hat, static_cast<long long>(smins.size()));
        for (size_t e = 0; e < eps_grid.size(); ++e) {
            char line[160];
            std::snprintf(line, sizeof(line), "eps_%.17g_p=%.17g se=%.17g\n", eps_grid[e],
                          fit.p_hat[e], fit.std_err[e]);
            os << line;
        }
        os << "fitted_slope=" << fit.slope << '\n';
    }
    auto column_stats = [&](const char* name, auto getter) {
        double mx = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        long long count = 0;
        for (const auto& r : pooled) {
            const double v = getter(r);
            if (!std::isfinite(v)) continue;
            mx = std::max(mx, v);
            sum += v;
            ++count;
        }
        if (count > 0)
            os << name << "_mean=" << sum / static_cast<double>(count) << ' ' << name << "_max=" << mx
               << '\n';
    };
    column_stats("logdet", [](const ht::TrialRecord& r) { return r.logdet; });
    column_stats("max_row_norm", [](const ht::TrialRecord& r) { return r.max_row_norm; });
    column_stats("inf2_upper", [](const ht::TrialRecord& r) { return r.inf2_upper; });
    column_stats("inf2_lower", [](const ht::TrialRecord& r) { return r.inf2_lower; });
    column_stats("lcd_lower", [](const ht::TrialRecord& r) { return r.lcd_lower; });
    const std::string text = os.str();
    if (!out_summary.empty()) ht::write_text_file(out_summary, text);
    std::cout << text;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kVersion) +
                 " - diagonal regularizers, ellipsoid coverings and smallest "
                 "singular values of heavy-tailed random matrices"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print this help message and exit");
    app.set_config("--config", "", "key-value config file with per-subcommand sections");
    app.get_config_formatter_base()->comment('#');
    bool print_config = false;
    app.add_flag("--print-config", print_config,
                 "print the fully resolved config and exit without running");

    ht::ExperimentConfig cfg;
    std::string vector_file;
    std::string matrix_file;
    std::string grid_out;
    std::vector<std::string> report_inputs;

    auto* c_regularize = app.add_subcommand(
        "regularize", "grid regularizer Monte Carlo, or one-shot certificate via --matrix-file");
    add_common(c_regularize, cfg);
    c_regularize->add_option("--matrix-file", matrix_file, "regularize a single matrix from file");
    c_regularize->add_option("--grid-out", grid_out, "write the grid operator codes here");

    auto* c_cover = app.add_subcommand("cover", "covering radius certificates plus containment");
    add_common(c_cover, cfg);

    auto* c_smin = app.add_subcommand("smin", "smallest singular value Monte Carlo");
    add_common(c_smin, cfg);

    auto* c_lcd = app.add_subcommand("lcd", "certified LCD scan of a unit vector");
    add_common(c_lcd, cfg);
    c_lcd->add_option("--vector-file", vector_file, "unit vector, one value per line")
        ->required();

    auto* c_normal = app.add_subcommand("normal-lcd", "LCD of random unit normals");
    add_common(c_normal, cfg);

    auto* c_smallball = app.add_subcommand("smallball", "small-ball profile of a fixed direction");
    add_common(c_smallball, cfg);
    c_smallball->add_option("--vector-file", vector_file,
                            "direction vector (default: flat unit vector)");

    auto* c_sym = app.add_subcommand("symmetrize", "row-permutation symmetrization norms");
    add_common(c_sym, cfg);

    auto* c_grid = app.add_subcommand("grid-count", "count grid operators with det >= exp(-delta n)");
    add_common(c_grid, cfg);

    auto* c_tensor = app.add_subcommand("tensorize", "tensorized lower-tail check for ||Ay||");
    add_common(c_tensor, cfg);
    c_tensor->add_option("--vector-file", vector_file, "direction y (default: flat unit vector)");

    auto* c_report = app.add_subcommand("report", "merge run CSVs into one pooled summary");
    c_report->add_option("inputs", report_inputs, "CSV files to merge");
    std::string report_out;
    c_report->add_option("--out-summary", report_out, "write the merged summary here");
    std::vector<double> report_eps = cfg.eps_grid;
    c_report->add_option("--eps-grid", report_eps, "epsilon grid for pooled probabilities")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (const char* env_seed = std::getenv("HEAVYTAIL_SEED")) {
        cfg.master_seed = std::strtoull(env_seed, nullptr, 10);
    }

    if (print_config) {
        std::cout << app.config_to_str(true, false);
        return 0;
    }

    const std::string started = iso_timestamp();
    const std::string snapshot = app.config_to_str(true, false);
    try {
        if (c_regularize->parsed()) {
            if (!matrix_file.empty()) {
                const ht::Matrix A = ht::read_matrix_file(matrix_file);
                auto result =
                    ht::regularize_to_grid(A, cfg.delta, cfg.distribution(), ht::RegularizerParams{});
                std::cout << result.certificate.serialize();
                if (!grid_out.empty())
                    ht::write_text_file(grid_out, result.G.serialize() + "\n");
                return result.certificate.pass ? 0 : 3;
            }
            auto rep = ht::run_regularizer_mc(cfg);
            emit("regularize", cfg, snapshot, rep.records, rep.summary(), started);
        } else if (c_cover->parsed()) {
            auto rep = ht::run_covering_mc(cfg);
            emit("cover", cfg, snapshot, rep.records, rep.summary(), started);
            if (rep.containment_failures > 0) return 3;
        } else if (c_smin->parsed()) {
            auto rep = ht::run_smin_mc(cfg);
            emit("smin", cfg, snapshot, rep.records, rep.summary(), started);
        } else if (c_lcd->parsed()) {
            ht::Vector x = ht::read_vector_file(vector_file);
            auto params = lcd_params_from(cfg, 2.0 * std::sqrt(static_cast<double>(x.size())) *
                                                   std::sqrt(cfg.theta) / 3.0 * 10.0);
            if (cfg.lcd_h <= 0.0 && cfg.lcd_s == 1.0)
                params.h = std::max(1.0, cfg.lcd_s * std::sqrt(static_cast<double>(x.size())));
            auto res = ht::lcd(x, params);
            std::cout << res.serialize();
            const std::string sum = cfg.out_summary.empty() ? "lcd_summary.txt" : cfg.out_summary;
            ht::write_text_file(sum, res.serialize());
            ht::TrialRecord rec;
            rec.index = 0;
            rec.seed = cfg.master_seed;
            rec.lcd_lower = res.lower_bound;
            rec.lcd_t = res.censored ? ht::kNaN : res.t_star;
            rec.lcd_censored = res.censored ? 1 : 0;
            const std::string csv = cfg.out_csv.empty() ? "lcd.csv" : cfg.out_csv;
            ht::write_trial_csv(csv, {rec});
            write_manifest(csv + ".manifest", "lcd", snapshot, cfg.master_seed, started,
                           {csv, sum});
        } else if (c_normal->parsed()) {
            auto rep = ht::run_normal_lcd_mc(cfg);
            emit("normal-lcd", cfg, snapshot, rep.records, rep.summary(), started);
        } else if (c_smallball->parsed()) {
            ht::Vector x;
            if (vector_file.empty()) {
                x = ht::Vector::Constant(cfg.n, 1.0 / std::sqrt(static_cast<double>(cfg.n)));
            } else {
                x = ht::read_vector_file(vector_file);
            }
            auto params = lcd_params_from(cfg, 1e3 * std::sqrt(static_cast<double>(x.size())));
            auto rep = ht::run_small_ball_profile(x, cfg.distribution(), params, cfg.trials,
                                                  cfg.eps_grid, cfg.master_seed);
            const std::string sum =
                cfg.out_summary.empty() ? "smallball_summary.txt" : cfg.out_summary;
            ht::write_text_file(sum, rep.summary());
            write_manifest(sum + ".manifest", "smallball", snapshot, cfg.master_seed, started,
                           {sum});
            std::cout << rep.summary();
        } else if (c_sym->parsed()) {
            auto rep = ht::run_symmetrization_mc(cfg);
            emit("symmetrize", cfg, snapshot, rep.records, rep.summary(), started);
        } else if (c_grid->parsed()) {
            std::cout << ht::count_grid_operators(cfg.n, cfg.delta).str() << '\n';
        } else if (c_tensor->parsed()) {
            ht::Vector y;
            if (vector_file.empty()) {
                y = ht::Vector::Constant(cfg.n, 1.0 / std::sqrt(static_cast<double>(cfg.n)));
            } else {
                y = ht::read_vector_file(vector_file);
            }
            auto rep = ht::run_tensorization_check(cfg.distribution(), cfg.n, y, cfg.trials,
                                                   cfg.master_seed);
            const std::string sum =
                cfg.out_summary.empty() ? "tensorize_summary.txt" : cfg.out_summary;
            ht::write_text_file(sum, rep.summary());
            write_manifest(sum + ".manifest", "tensorize", snapshot, cfg.master_seed, started,
                           {sum});
            std::cout << rep.summary();
        } else if (c_report->parsed()) {
            if (report_inputs.empty()) {
                std::cerr << "report: no input CSVs given\n" << app.help() << '\n';
                return 2;
            }
            return run_report(report_inputs, report_eps, report_out);
        }
    } catch (const ht::ParameterError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
