#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "heavytail/grid_operator.hpp"
#include "heavytail/norms.hpp"

namespace heavytail {

using BigInt = boost::multiprecision::cpp_int;

// Thrown when a queried point is not covered by the base net of a refinement.
struct CoverageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Natural log of a positive big integer (53-bit mantissa accuracy).
double log_big(const BigInt& v);

// Exact number of grid operators with det >= exp(-delta n), by dynamic
// programming over code multiplicities with multinomial position weights.
BigInt count_grid_operators(int n, double delta);

// Shared admissibility predicate: sum of exponent codes w gives det 2^-w.
bool grid_weight_admissible(long long weight, int n, double delta);

struct CubeLocation {
    std::vector<long long> index; // center_i = index_i * step
    double step;                  // K / sqrt(n)
};

// Sparse cube location: heavy coordinates (|x_i| >= K/(2 sqrt n)) snap to the
// nearest multiple of K/sqrt(n) (lower index at ties), light ones to 0.
CubeLocation locate_cube(const Vector& x, double K);

struct ParallelepipedId {
    std::vector<int> codes;        // grid operator
    std::vector<long long> outer;  // cube center indices
    std::vector<long long> inner;  // translate indices within the cube cell
    double delta = 0.0;

    std::string to_string() const;
    bool operator==(const ParallelepipedId&) const = default;
};

// Deterministic location of x inside the translate collection built from D.
// Requires the covering hypotheses delta <= 1/4 and n >= 1/(4 delta).
ParallelepipedId locate_parallelepiped(const Vector& x, const GridOperator& D, double delta);

// Center point of an identified parallelepiped (tests recompute containment).
Vector parallelepiped_center(const ParallelepipedId& id);

// Half of diam(A(P)) for the common inner shape D((1/sqrt(n delta)) B_inf):
// (1/sqrt(n delta)) * inf2_upper(A D). One number certifies every translate.
double covering_radius_certificate(const Matrix& A, const GridOperator& D, double delta);

// Lazy refinement of a Euclidean eps-net on S against the parallelepiped
// collection: each queried x is assigned the anchor memoized for its
// (base point, parallelepiped id) cell, first writer wins.
class RefinedNet {
public:
    RefinedNet(std::vector<Vector> base_net, double eps, double delta, GridOperator D);

    struct QueryResult {
        Vector anchor;
        ParallelepipedId id;
        int base_index;
        bool fresh; // this query created the anchor
    };
    QueryResult query(const Vector& x);

    size_t size() const;         // number of anchors assigned so far
    size_t distinct_ids() const; // distinct parallelepiped ids touched

private:
    std::vector<Vector> base_;
    double eps_;
    double delta_;
    GridOperator grid_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Vector> anchors_;
    std::unordered_map<std::string, int> id_counts_;
};

} // namespace heavytail
