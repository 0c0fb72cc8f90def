#include "heavytail/coverings.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "heavytail/regularizer.hpp"

namespace heavytail {

double log_big(const BigInt& v) {
    if (v <= 0) throw std::domain_error("log_big: argument must be positive");
    const auto bits = boost::multiprecision::msb(v); // highest set bit position
    if (bits <= 52) return std::log(v.convert_to<double>());
    const BigInt top = v >> (bits - 52);
    return std::log(top.convert_to<double>()) +
           static_cast<double>(bits - 52) * std::numbers::ln2;
}

bool grid_weight_admissible(long long weight, int n, double delta) {
    // det = 2^-weight >= exp(-delta n)  <=>  weight * ln2 <= delta * n
    return static_cast<double>(weight) * std::numbers::ln2 <=
           delta * static_cast<double>(n) * (1.0 + 1e-12);
}

BigInt count_grid_operators(int n, double delta) {
    if (n < 1) throw ParameterError("count_grid_operators: n must be >= 1");
    if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("count_grid_operators: delta in (0,1]");

    long long W = static_cast<long long>(std::floor(delta * n / std::numbers::ln2 + 1e-12));
    while (!grid_weight_admissible(W, n, delta)) --W; // guard the floor against float ties
    while (grid_weight_admissible(W + 1, n, delta)) ++W;
    if (W > 2000000) throw ParameterError("count_grid_operators: weight budget too large");

    std::vector<int> codes;
    for (int c = 1; c <= GridOperator::kMaxCode && c <= W; c <<= 1) codes.push_back(c);

    const long long max_used = std::min<long long>(n, W);
    // dp[used][weight] = weighted count over codes processed so far
    std::vector<std::vector<BigInt>> dp(static_cast<size_t>(max_used) + 1,
                                        std::vector<BigInt>(static_cast<size_t>(W) + 1));
    dp[0][0] = 1;
    for (int c : codes) {
        auto next = dp;
        for (long long used = 0; used <= max_used; ++used) {
            for (long long w = 0; w <= W; ++w) {
                const BigInt& base = dp[static_cast<size_t>(used)][static_cast<size_t>(w)];
                if (base == 0) continue;
                BigInt choose = 1; // C(n - used, m), built incrementally
                for (long long m = 1; used + m <= max_used && w + m * c <= W; ++m) {
                    choose = choose * (n - used - m + 1) / m;
                    next[static_cast<size_t>(used + m)][static_cast<size_t>(w + m * c)] +=
                        base * choose;
                }
            }
        }
        dp = std::move(next);
    }
    BigInt total = 0;
    for (auto& row : dp)
        for (auto& v : row) total += v;

    const double bound_log = 4.0 * delta * n * std::log(2.0 * std::numbers::e / delta);
    if (log_big(total) > bound_log + 1e-9)
        throw std::logic_error("count_grid_operators: count exceeds (2e/delta)^(4 delta n)");
    return total;
}

namespace {

// nearest multiple with the lower index at exact ties (half-open cells)
long long snap_lower(double q) { return static_cast<long long>(std::ceil(q - 0.5)); }

void check_covering_hypotheses(int n, double delta) {
    if (!(delta > 0.0 && delta <= 0.25))
        throw ParameterError("covering: delta must be in (0, 1/4]");
    if (static_cast<double>(n) < 1.0 / (4.0 * delta))
        throw ParameterError("covering: need n >= 1/(4 delta)");
}

} // namespace

CubeLocation locate_cube(const Vector& x, double K) {
    const auto n = x.size();
    if (n < 1) throw ShapeError("locate_cube: empty vector");
    if (x.norm() > 1.0 + 1e-10) throw DomainError("locate_cube: x must lie in the unit ball");
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    K = std::clamp(K, 2.0, 2.0 * sqrt_n);

    CubeLocation loc;
    loc.step = K / sqrt_n;
    const double heavy = K / (2.0 * sqrt_n);
    loc.index.resize(static_cast<size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::fabs(x[i]) >= heavy) loc.index[static_cast<size_t>(i)] = snap_lower(x[i] / loc.step);
        if (std::fabs(x[i] - static_cast<double>(loc.index[static_cast<size_t>(i)]) * loc.step) >
            heavy * (1.0 + 1e-9))
            throw std::logic_error("locate_cube: sup-distance guarantee violated");
    }
    return loc;
}

std::string ParallelepipedId::to_string() const {
    std::ostringstream os;
    os << "delta=" << delta << ";codes=";
    for (size_t i = 0; i < codes.size(); ++i) os << (i ? "," : "") << codes[i];
    os << ";outer=";
    for (size_t i = 0; i < outer.size(); ++i) os << (i ? "," : "") << outer[i];
    os << ";inner=";
    for (size_t i = 0; i < inner.size(); ++i) os << (i ? "," : "") << inner[i];
    return os.str();
}

ParallelepipedId locate_parallelepiped(const Vector& x, const GridOperator& D, double delta) {
    const int n = static_cast<int>(x.size());
    if (D.n() != n) throw ShapeError("locate_parallelepiped: dimension mismatch");
    check_covering_hypotheses(n, delta);

    const CubeLocation cube = locate_cube(x, 1.0 / std::sqrt(delta));
    const double inner_scale = 1.0 / std::sqrt(static_cast<double>(n) * delta);

    ParallelepipedId id;
    id.codes = D.codes();
    id.outer = cube.index;
    id.delta = delta;
    id.inner.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double resid = x[i] - static_cast<double>(cube.index[static_cast<size_t>(i)]) * cube.step;
        const double step_i = D.diag(i) * inner_scale;
        id.inner[static_cast<size_t>(i)] = snap_lower(resid / step_i);
        // containment: the cell is a translate of D((1/sqrt(n delta)) B_inf)
        const double center = static_cast<double>(cube.index[static_cast<size_t>(i)]) * cube.step +
                              static_cast<double>(id.inner[static_cast<size_t>(i)]) * step_i;
        if (std::fabs(x[i] - center) > step_i * (1.0 + 1e-9))
            throw std::logic_error("locate_parallelepiped: containment violated");
    }
    return id;
}

Vector parallelepiped_center(const ParallelepipedId& id) {
    const int n = static_cast<int>(id.codes.size());
    GridOperator D(id.codes);
    const double K = 1.0 / std::sqrt(id.delta);
    const double step = K / std::sqrt(static_cast<double>(n));
    const double inner_scale = 1.0 / std::sqrt(static_cast<double>(n) * id.delta);
    Vector c(n);
    for (int i = 0; i < n; ++i)
        c[i] = static_cast<double>(id.outer[static_cast<size_t>(i)]) * step +
               static_cast<double>(id.inner[static_cast<size_t>(i)]) * D.diag(i) * inner_scale;
    return c;
}

double covering_radius_certificate(const Matrix& A, const GridOperator& D, double delta) {
    const int n = static_cast<int>(A.cols());
    if (D.n() != n) throw ShapeError("covering_radius_certificate: dimension mismatch");
    check_covering_hypotheses(n, delta);
    Matrix AD = A;
    for (int j = 0; j < n; ++j) AD.col(j) *= D.diag(j);
    return inf2_upper(AD) / std::sqrt(static_cast<double>(n) * delta);
}

RefinedNet::RefinedNet(std::vector<Vector> base_net, double eps, double delta, GridOperator D)
    : base_(std::move(base_net)), eps_(eps), delta_(delta), grid_(std::move(D)) {
    if (base_.empty()) throw ParameterError("RefinedNet: base net is empty");
    if (!(eps_ > 0.0)) throw ParameterError("RefinedNet: eps must be > 0");
    check_covering_hypotheses(static_cast<int>(base_.front().size()), delta_);
}

RefinedNet::QueryResult RefinedNet::query(const Vector& x) {
    int base_index = -1;
    for (size_t i = 0; i < base_.size(); ++i) {
        if ((x - base_[i]).norm() <= eps_ * (1.0 + 1e-12)) {
            base_index = static_cast<int>(i);
            break;
        }
    }
    if (base_index < 0) {
        std::ostringstream os;
        os << "RefinedNet: base net is not an eps-net for query [";
        for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
        os << "]";
        throw CoverageError(os.str());
    }
    const Vector scaled = (x - base_[static_cast<size_t>(base_index)]) / eps_;
    ParallelepipedId id = locate_parallelepiped(scaled, grid_, delta_);

    const std::string id_key = id.to_string();
    const std::string key = std::to_string(base_index) + "|" + id_key;
    std::lock_guard<std::mutex> lock(mutex_);
    ++id_counts_[id_key];
    auto [it, inserted] = anchors_.try_emplace(key, x);
    return {it->second, std::move(id), base_index, inserted};
}

size_t RefinedNet::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return anchors_.size();
}

size_t RefinedNet::distinct_ids() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return id_counts_.size();
}

} // namespace heavytail
