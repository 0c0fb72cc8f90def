#include "heavytail/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "heavytail/distributions.hpp"
#include "heavytail/regularizer.hpp"

namespace heavytail {

void SphereParams::validate() const {
    if (!(theta > 0.0 && theta < 1.0)) throw ParameterError("SphereParams: theta must be in (0,1)");
    if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("SphereParams: rho must be in (0,1)");
}

namespace {

void require_unit(const Vector& x, const char* who) {
    if (std::fabs(x.norm() - 1.0) > 1e-10)
        throw DomainError(std::string(who) + ": input must be a unit vector");
}

} // namespace

double sparse_distance(const Vector& x, double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("sparse_distance: theta in (0,1]");
    const auto n = x.size();
    const auto keep = static_cast<Eigen::Index>(std::floor(theta * static_cast<double>(n)));
    if (keep >= n) return 0.0;
    std::vector<double> mags(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<size_t>(i)] = std::fabs(x[i]);
    std::nth_element(mags.begin(), mags.begin() + keep, mags.end(), std::greater<>());
    double tail = 0.0;
    for (auto it = mags.begin() + keep; it != mags.end(); ++it) tail += *it * *it;
    return std::sqrt(tail);
}

SphereClass classify(const Vector& x, const SphereParams& params) {
    params.validate();
    require_unit(x, "classify");
    return sparse_distance(x, params.theta) <= params.rho ? SphereClass::Compressible
                                                          : SphereClass::Incompressible;
}

std::vector<int> spread_set(const Vector& x, const SphereParams& params) {
    params.validate();
    require_unit(x, "spread_set");
    const auto n = static_cast<double>(x.size());
    const double lo = params.rho / std::sqrt(2.0 * n);
    const double hi = 1.0 / std::sqrt(params.theta * n);
    std::vector<int> sigma;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double m = std::fabs(x[i]);
        if (m >= lo && m <= hi) sigma.push_back(static_cast<int>(i));
    }
    if (classify(x, params) == SphereClass::Incompressible) {
        const double needed = 0.5 * params.rho * params.rho * params.theta * n;
        if (static_cast<double>(sigma.size()) < needed)
            throw std::logic_error("spread_set: cardinality bound violated for incompressible input");
    }
    return sigma;
}

namespace {

// Greedy rho-packing over a candidate stream; a maximal packing is a rho-net.
void greedy_pack(std::vector<Vector>& kept, const std::function<Vector()>& draw, double rho,
                 int stop_streak, long long hard_cap) {
    int streak = 0;
    while (streak < stop_streak && static_cast<long long>(kept.size()) < hard_cap) {
        Vector cand = draw();
        bool separated = true;
        for (const auto& p : kept) {
            if ((cand - p).norm() <= rho) {
                separated = false;
                break;
            }
        }
        if (separated) {
            kept.push_back(std::move(cand));
            streak = 0;
        } else {
            ++streak;
        }
    }
}

Vector random_unit(Rng& rng, int dim) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) {
        const double u1 = 1.0 - rng.next_double();
        const double u2 = rng.next_double();
        v[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    const double norm = v.norm();
    if (norm == 0.0) return random_unit(rng, dim);
    return v / norm;
}

} // namespace

std::vector<Vector> comp_net(int n, const SphereParams& params, const CompNetOptions& options,
                             Rng& rng) {
    params.validate();
    const int m = static_cast<int>(std::floor(params.theta * n));
    if (m < 1) throw ParameterError("comp_net: theta n must be at least 1");

    std::vector<Vector> net;
    if (options.exhaustive) {
        // enumerate all supports of size m
        std::vector<int> support(static_cast<size_t>(m));
        std::iota(support.begin(), support.end(), 0);
        for (;;) {
            std::vector<Vector> sub;
            greedy_pack(
                sub, [&] { return random_unit(rng, m); }, params.rho, options.rejection_streak,
                options.budget);
            for (const auto& v : sub) {
                Vector full = Vector::Zero(n);
                for (int j = 0; j < m; ++j) full[support[static_cast<size_t>(j)]] = v[j];
                net.push_back(std::move(full));
                if (static_cast<long long>(net.size()) > options.budget)
                    throw ModeError("comp_net: exhaustive budget exceeded, use sampled mode");
            }
            // next combination
            int i = m - 1;
            while (i >= 0 && support[static_cast<size_t>(i)] == n - m + i) --i;
            if (i < 0) break;
            ++support[static_cast<size_t>(i)];
            for (int j = i + 1; j < m; ++j)
                support[static_cast<size_t>(j)] = support[static_cast<size_t>(j - 1)] + 1;
        }
        const double log_bound = params.theta * n *
                                 (std::log(std::numbers::e / params.theta) +
                                  std::log(5.0 / params.rho));
        if (std::log(static_cast<double>(net.size())) > log_bound + 1e-9)
            throw std::logic_error("comp_net: cardinality bound violated");
    } else {
        auto draw = [&] {
            Vector full = Vector::Zero(n);
            // random support then random sub-sphere point
            std::vector<int> idx(static_cast<size_t>(n));
            std::iota(idx.begin(), idx.end(), 0);
            for (int j = 0; j < m; ++j) {
                const int pick = j + static_cast<int>(rng.next_below(static_cast<uint64_t>(n - j)));
                std::swap(idx[static_cast<size_t>(j)], idx[static_cast<size_t>(pick)]);
            }
            Vector v = random_unit(rng, m);
            for (int j = 0; j < m; ++j) full[idx[static_cast<size_t>(j)]] = v[j];
            return full;
        };
        for (int s = 0; s < options.sampled_points; ++s) {
            Vector cand = draw();
            bool separated = true;
            for (const auto& q : net) {
                if ((cand - q).norm() <= params.rho) {
                    separated = false;
                    break;
                }
            }
            if (separated) net.push_back(std::move(cand));
            if (static_cast<long long>(net.size()) > options.budget)
                throw ModeError("comp_net: budget exceeded in sampled mode");
        }
    }
    return net;
}

// ---------------------------------------------------------------------------
// Essential least common denominator

void LcdParams::validate() const {
    if (!(h > 0.0)) throw ParameterError("LcdParams: h must be > 0");
    if (!(r > 0.0 && r < 1.0)) throw ParameterError("LcdParams: r must be in (0,1)");
    if (!(t_max > 0.0)) throw ParameterError("LcdParams: t_max must be > 0");
    if (coarse_step != 0.0 && !(coarse_step > 0.0 && coarse_step <= std::min(r, 1.0) / 8.0))
        throw ParameterError("LcdParams: coarse step must be <= min(r,1)/8");
    if (!(tolerance > 0.0)) throw ParameterError("LcdParams: tolerance must be > 0");
}

double LcdParams::step() const { return coarse_step > 0.0 ? coarse_step : std::min(r, 1.0) / 8.0; }

std::string LcdResult::serialize() const {
    std::ostringstream os;
    os.precision(17);
    if (censored)
        os << "t_star=censored\n";
    else
        os << "t_star=" << t_star << "\ndist=" << dist_at_t_star << "\n";
    os << "lower_bound=" << lower_bound << "\n";
    return os.str();
}

namespace {

double lattice_distance(const Vector& x, double t) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = t * x[i];
        const double d = v - std::nearbyint(v);
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace

LcdResult lcd(const Vector& x, const LcdParams& params) {
    params.validate();
    require_unit(x, "lcd");
    const double r = params.r, h = params.h;
    const double lip = 1.0 + r; // margin(t) = min(rt,h) - dist(tx,Z^n) is (1+r)-Lipschitz
    auto margin = [&](double t) { return std::min(r * t, h) - lattice_distance(x, t); };

    LcdResult res;
    // For t <= 1/2 the nearest lattice point is 0, so dist = t > min(rt, h).
    double frontier = std::min(0.5, params.t_max);
    res.lower_bound = frontier;
    if (frontier >= params.t_max) {
        res.censored = true;
        return res;
    }

    const double coarse = params.step();
    const double tol = std::max(params.tolerance, 1e-13);
    bool certifying = true;
    double last_nonpos = frontier; // margin(0.5) < 0 analytically

    // Left-to-right adaptive sweep: an interval is hit-free when the midpoint
    // margin plus the Lipschitz radius stays negative.
    std::vector<std::pair<double, double>> stack;
    stack.emplace_back(frontier, params.t_max);
    while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        if (b - a > coarse) {
            const double mid = 0.5 * (a + b);
            stack.emplace_back(mid, b);
            stack.emplace_back(a, mid);
            continue;
        }
        const double mid = 0.5 * (a + b);
        const double w = 0.5 * (b - a);
        const double fm = margin(mid);
        if (fm + lip * w < 0.0) {
            if (certifying) res.lower_bound = b;
            if (fm <= 0.0) last_nonpos = mid;
            continue;
        }
        if (fm > 0.0) {
            // exhibited hit: bisect (last_nonpos, mid] down to the tolerance
            double lo = last_nonpos, hi = mid;
            while (hi - lo > tol) {
                const double c = 0.5 * (lo + hi);
                if (margin(c) > 0.0)
                    hi = c;
                else
                    lo = c;
            }
            res.censored = false;
            res.t_star = hi;
            res.dist_at_t_star = lattice_distance(x, hi);
            if (certifying) res.lower_bound = std::max(res.lower_bound, lo);
            return res;
        }
        if (b - a <= tol) {
            // cannot certify and no positive probe: uncertainty gap
            certifying = false;
            last_nonpos = mid;
            continue;
        }
        const double m2 = 0.5 * (a + b);
        stack.emplace_back(m2, b);
        stack.emplace_back(a, m2);
    }
    res.censored = true;
    return res;
}

bool level_set_membership(const Vector& x, double k, const LcdParams& params) {
    if (!(k > 0.0)) throw ParameterError("level_set_membership: k must be > 0");
    const LcdResult res = lcd(x, params);
    const double tol = params.tolerance;
    const double lo = res.lower_bound;
    const double hi = res.censored ? std::numeric_limits<double>::infinity() : res.t_star;
    if (hi <= k - tol || lo >= 2.0 * k + tol) return false;
    if (lo >= k + tol && hi <= 2.0 * k - tol) return true;
    throw IndeterminateError("level_set_membership: bracket straddles a boundary");
}

IntegerPointNet integer_point_net(int n, double k, double h, long long budget_cap) {
    if (n < 1) throw ParameterError("integer_point_net: n must be >= 1");
    if (!(k > 0.0) || !(h > 0.0)) throw ParameterError("integer_point_net: k and h must be > 0");
    const double radius = 3.0 * k;
    const double r2 = radius * radius;
    const auto limit = static_cast<long long>(std::floor(radius));

    IntegerPointNet out;
    std::map<std::vector<long long>, bool> primitive_seen;
    std::vector<long long> p(static_cast<size_t>(n), 0);

    // depth-first over coordinates with partial-radius pruning
    std::function<void(int, double)> recurse = [&](int depth, double partial) {
        if (depth == n) {
            bool all_zero = std::all_of(p.begin(), p.end(), [](long long v) { return v == 0; });
            if (all_zero) return;
            ++out.lattice_points;
            if (out.lattice_points > budget_cap)
                throw ParameterError("integer_point_net: lattice enumeration budget exceeded");
            long long g = 0;
            for (long long v : p) g = std::gcd(g, std::llabs(v));
            std::vector<long long> prim(p);
            for (auto& v : prim) v /= g;
            primitive_seen.emplace(std::move(prim), true);
            return;
        }
        for (long long v = -limit; v <= limit; ++v) {
            const double next = partial + static_cast<double>(v) * static_cast<double>(v);
            if (next > r2 * (1.0 + 1e-12)) continue;
            p[static_cast<size_t>(depth)] = v;
            recurse(depth + 1, next);
        }
        p[static_cast<size_t>(depth)] = 0;
    };
    recurse(0, 0.0);

    out.points.reserve(primitive_seen.size());
    for (const auto& [prim, _] : primitive_seen) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v[i] = static_cast<double>(prim[static_cast<size_t>(i)]);
        out.points.push_back(v / v.norm());
    }
    if (static_cast<long long>(out.points.size()) > out.lattice_points)
        throw std::logic_error("integer_point_net: dedup grew the point set");
    return out;
}

} // namespace heavytail
