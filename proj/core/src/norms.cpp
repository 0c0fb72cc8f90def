#include "heavytail/norms.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace heavytail {

namespace {

void require_finite(const Matrix& B, const char* who) {
    if (!B.allFinite()) throw ShapeError(std::string(who) + ": entries must be finite");
}

Eigen::VectorXd singular_values(const Matrix& B) {
    if (B.rows() == 0 || B.cols() == 0) throw ShapeError("svd: empty matrix");
    require_finite(B, "svd");
    if (std::min(B.rows(), B.cols()) <= 16) {
        Eigen::JacobiSVD<Matrix> svd(B);
        return svd.singularValues();
    }
    Eigen::BDCSVD<Matrix> svd(B);
    if (svd.info() != Eigen::Success) {
        std::ostringstream os;
        os << "svd did not converge: " << B.rows() << "x" << B.cols()
           << ", frob=" << B.norm() << ", max|b|=" << B.cwiseAbs().maxCoeff();
        throw NumericalError(os.str());
    }
    return svd.singularValues();
}

} // namespace

Inf2Result inf2_exact(const Matrix& B, int cap) {
    require_finite(B, "inf2_exact");
    const int n = static_cast<int>(B.cols());
    if (n > cap) throw CapError("inf2_exact: cols exceed enumeration cap");
    if (n > 62) throw CapError("inf2_exact: cols too large for Gray-code counter");

    // By symmetry ||B(-v)|| = ||Bv||, so the first coordinate is pinned to +1
    // and only 2^(n-1) vertices are visited.
    std::vector<int> signs(n, 1);
    Vector image = B.rowwise().sum();
    double best = image.squaredNorm();
    std::vector<int> best_signs = signs;

    const uint64_t steps = (n >= 2) ? (uint64_t{1} << (n - 1)) : 1;
    for (uint64_t i = 1; i < steps; ++i) {
        // Gray code: bit flipped at step i is the lowest set bit of i,
        // mapped onto coordinates 1..n-1.
        const int bit = __builtin_ctzll(i) + 1;
        const double delta = -2.0 * signs[bit];
        signs[bit] = -signs[bit];
        image += delta * B.col(bit);
        const double val = image.squaredNorm();
        if (val > best) {
            best = val;
            best_signs = signs;
        }
    }
    return {std::sqrt(best), std::move(best_signs)};
}

Inf2Result inf2_ascent_from(const Matrix& B, std::vector<int> signs) {
    require_finite(B, "inf2_lower");
    const int n = static_cast<int>(B.cols());
    if (static_cast<int>(signs.size()) != n) throw ShapeError("inf2_ascent_from: sign length mismatch");
    const Matrix Q = B.transpose() * B;
    Vector v(n);
    for (int j = 0; j < n; ++j) v[j] = signs[j];
    // Each executed flip strictly increases v^T Q v, so the loop terminates.
    bool changed = true;
    while (changed) {
        changed = false;
        Vector g = Q * v;
        for (int j = 0; j < n; ++j) {
            if (g[j] != 0.0 && v[j] * g[j] < 0.0) {
                g += (-2.0 * v[j]) * Q.col(j);
                v[j] = -v[j];
                changed = true;
            }
        }
    }
    Inf2Result out;
    out.signs.resize(n);
    for (int j = 0; j < n; ++j) out.signs[j] = v[j] > 0 ? 1 : -1;
    out.value = (B * v).norm();
    return out;
}

Inf2Result inf2_lower(const Matrix& B, int restarts, Rng& rng) {
    if (restarts < 1) throw ShapeError("inf2_lower: restarts must be >= 1");
    const int n = static_cast<int>(B.cols());
    Inf2Result best;
    best.value = -1.0;
    for (int r = 0; r < restarts; ++r) {
        std::vector<int> start(n);
        for (auto& s : start) s = rng.next_bool() ? 1 : -1;
        auto res = inf2_ascent_from(B, std::move(start));
        if (res.value > best.value) best = std::move(res);
    }
    return best;
}

double inf2_upper(const Matrix& B) {
    require_finite(B, "inf2_upper");
    const double via_spectral = std::sqrt(static_cast<double>(B.cols())) * spectral_norm(B);
    const double via_row_sums = B.cwiseAbs().rowwise().sum().norm();
    return std::min(via_spectral, via_row_sums);
}

double spectral_norm(const Matrix& B) { return singular_values(B)(0); }

double smin(const Matrix& B) {
    auto sv = singular_values(B);
    return sv(sv.size() - 1);
}

double distance_to_span(const Vector& x, const Matrix& columns) {
    if (columns.rows() != x.size()) throw ShapeError("distance_to_span: dimension mismatch");
    Eigen::ColPivHouseholderQR<Matrix> qr(columns);
    Vector coeffs = qr.solve(x);
    return (x - columns * coeffs).norm();
}

UnitNormalResult unit_normal(const Matrix& Ap, Rng& rng) {
    if (Ap.rows() + 1 != Ap.cols()) throw ShapeError("unit_normal: expected (n-1) x n matrix");
    require_finite(Ap, "unit_normal");
    const int n = static_cast<int>(Ap.cols());
    Eigen::JacobiSVD<Matrix> svd(Ap, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Matrix& V = svd.matrixV();

    UnitNormalResult out;
    // Numerical nullspace: kernel direction V.col(n-1) plus any directions
    // whose singular values vanish relative to the largest.
    const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
    const double tol = sigma_max * 1e-12;
    int null_dim = 1; // the (n-1) x n shape guarantees at least one
    for (int i = static_cast<int>(sv.size()) - 1; i >= 0; --i) {
        if (sv(i) <= tol)
            null_dim = n - i;
        else
            break;
    }
    if (sv.size() >= 2) {
        const double s_last = sv(sv.size() - 1);
        const double s_prev = sv(sv.size() - 2);
        if (s_prev <= tol || (s_prev > 0.0 && (s_prev - s_last) <= 1e-12 * s_prev))
            out.ill_determined = true;
    }
    if (null_dim == 1) {
        out.x = V.col(n - 1);
    } else {
        Vector combo = Vector::Zero(n);
        for (int i = 0; i < null_dim; ++i) {
            const double u1 = 1.0 - rng.next_double();
            const double u2 = rng.next_double();
            const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
            combo += z * V.col(n - 1 - i);
        }
        out.x = combo.normalized();
    }
    return out;
}

Matrix permute_rows_independently(const Matrix& B, Rng& rng) {
    Matrix out = B;
    const int n = static_cast<int>(B.cols());
    for (int i = 0; i < B.rows(); ++i) {
        // Fisher-Yates on the row
        for (int j = n - 1; j > 0; --j) {
            const int k = static_cast<int>(rng.next_below(static_cast<uint64_t>(j) + 1));
            std::swap(out(i, j), out(i, k));
        }
    }
    return out;
}

} // namespace heavytail
