#pragma once

#include <string>
#include <vector>

#include "heavytail/norms.hpp"

namespace heavytail {

struct SphereParams {
    double theta = 0.3;
    double rho = 0.3;
    void validate() const;
};

enum class SphereClass { Compressible, Incompressible };

// Distance from x to the set of floor(theta n)-sparse vectors: the l2 mass
// outside the floor(theta n) largest-magnitude coordinates.
double sparse_distance(const Vector& x, double theta);

// Compressible iff sparse_distance <= rho (closed condition). Unit input only.
SphereClass classify(const Vector& x, const SphereParams& params);

// sigma = { i : rho/sqrt(2n) <= |x_i| <= 1/sqrt(theta n) }. For incompressible
// x the cardinality bound |sigma| >= rho^2 theta n / 2 is checked.
std::vector<int> spread_set(const Vector& x, const SphereParams& params);

struct CompNetOptions {
    bool exhaustive = true;
    long long budget = 4'000'000;   // exhaustive mode: max net points
    int sampled_points = 20000;     // sampled mode: candidate stream length
    int rejection_streak = 400;     // greedy packing stop rule per support
};

struct ModeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// rho-nets on the unit spheres of all floor(theta n)-supports (exhaustive) or
// a greedy packing over sampled compressible directions; a 3 rho-net on Comp.
std::vector<Vector> comp_net(int n, const SphereParams& params, const CompNetOptions& options,
                             Rng& rng);

struct LcdParams {
    double h = 1.0;             // distance cap
    double r = 0.1;             // relative tolerance, in (0,1)
    double t_max = 100.0;       // censoring point of the scan
    double coarse_step = 0.0;   // 0 => min(r,1)/8
    double tolerance = 1e-9;    // bracket refinement resolution
    void validate() const;
    double step() const;
};

struct LcdResult {
    bool censored = false;  // no hit exhibited by t_max
    double t_star = 0.0;    // first exhibited hit (valid when !censored)
    double dist_at_t_star = 0.0;
    double lower_bound = 0.0; // certified: no t in (0, lower_bound) satisfies the hit condition

    std::string serialize() const; // key-value record
};

// Scan for inf{t > 0 : dist(t x, Z^n) < min(r ||t x||, h)} with a certified
// lower bound. dist(t x, Z^n) is 1-Lipschitz in t for unit x, so interval
// bounds are rigorous.
LcdResult lcd(const Vector& x, const LcdParams& params);

struct IndeterminateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// True iff the certified bracket lies inside [k, 2k); throws IndeterminateError
// when the bracket straddles a boundary at the configured tolerance.
bool level_set_membership(const Vector& x, double k, const LcdParams& params);

struct IntegerPointNet {
    std::vector<Vector> points;  // distinct unit directions p/||p||
    long long lattice_points = 0; // raw nonzero lattice points enumerated
};

// { p/||p|| : p integer, 0 < ||p|| <= 3k }, deduplicated by direction.
IntegerPointNet integer_point_net(int n, double k, double h, long long budget_cap = 20'000'000);

} // namespace heavytail
