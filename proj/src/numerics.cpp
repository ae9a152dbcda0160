#include "rsadp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rsadp/errors.hpp"

namespace rsadp {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        std::ostringstream os;
        os << what << ": size mismatch (" << a << " vs " << b << ")";
        throw ContractError(os.str());
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Vec

double Vec::dot(const Vec& other) const {
    require_same_size(size(), other.size(), "Vec::dot");
    return std::inner_product(data_.begin(), data_.end(), other.data_.begin(), 0.0);
}

double Vec::norm() const { return std::sqrt(dot(*this)); }

double Vec::norm_inf() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool Vec::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Vec& Vec::operator+=(const Vec& other) {
    require_same_size(size(), other.size(), "Vec::operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Vec& Vec::operator-=(const Vec& other) {
    require_same_size(size(), other.size(), "Vec::operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Vec& Vec::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Vec operator+(Vec a, const Vec& b) { return a += b; }
Vec operator-(Vec a, const Vec& b) { return a -= b; }
Vec operator-(Vec a) { return a *= -1.0; }
Vec operator*(Vec a, double s) { return a *= s; }
Vec operator*(double s, Vec a) { return a *= s; }

// ---------------------------------------------------------------------------
// Mat

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ContractError("Mat: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::diag(const Vec& d) {
    Mat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Mat Mat::column(const Vec& v) {
    Mat m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
}

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Vec Mat::row(std::size_t r) const {
    Vec v(cols_);
    for (std::size_t c = 0; c < cols_; ++c) v[c] = (*this)(r, c);
    return v;
}

Vec Mat::col(std::size_t c) const {
    Vec v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
}

double Mat::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double Mat::frobenius() const {
    return std::sqrt(std::inner_product(data_.begin(), data_.end(), data_.begin(), 0.0));
}

bool Mat::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool Mat::is_symmetric(double tol) const {
    if (rows_ != cols_) return false;
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = r + 1; c < cols_; ++c)
            if (std::abs((*this)(r, c) - (*this)(c, r)) > tol) return false;
    return true;
}

Mat& Mat::operator+=(const Mat& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw ContractError("Mat::operator+=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Mat& Mat::operator-=(const Mat& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw ContractError("Mat::operator-=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Mat& Mat::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
    require_same_size(a.cols(), b.rows(), "Mat*Mat");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vec operator*(const Mat& a, const Vec& x) {
    require_same_size(a.cols(), x.size(), "Mat*Vec");
    Vec y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Mat outer(const Vec& a, const Vec& b) {
    Mat m(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
    return m;
}

// ---------------------------------------------------------------------------
// Dense solves

namespace {

// In-place LU-style elimination on [A | B]; returns the solution columns.
Mat eliminate(Mat a, Mat b, double tol) {
    const std::size_t n = a.rows();
    const double scale = std::max(a.max_abs(), 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < n; ++r)
            if (std::abs(a(r, k)) > std::abs(a(piv, k))) piv = r;
        if (std::abs(a(piv, k)) <= tol * scale) throw SingularInputError("solve: matrix is singular to working precision");
        if (piv != k) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(piv, c));
            for (std::size_t c = 0; c < b.cols(); ++c) std::swap(b(k, c), b(piv, c));
        }
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = a(r, k) / a(k, k);
            if (f == 0.0) continue;
            for (std::size_t c = k; c < n; ++c) a(r, c) -= f * a(k, c);
            for (std::size_t c = 0; c < b.cols(); ++c) b(r, c) -= f * b(k, c);
        }
    }
    Mat x(n, b.cols());
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t i = n; i-- > 0;) {
            double s = b(i, c);
            for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x(j, c);
            x(i, c) = s / a(i, i);
        }
    }
    return x;
}

}  // namespace

Vec solve(const Mat& a, const Vec& b, double tol) {
    if (a.rows() != a.cols()) throw ContractError("solve: matrix must be square");
    require_same_size(a.rows(), b.size(), "solve");
    return eliminate(a, Mat::column(b), tol).col(0);
}

Mat inverse(const Mat& a, double tol) {
    if (a.rows() != a.cols()) throw ContractError("inverse: matrix must be square");
    return eliminate(a, Mat::identity(a.rows()), tol);
}

// ---------------------------------------------------------------------------
// Integration

Vec rk4_step(const Derivative& deriv, const Vec& x, double t, double h) {
    if (!(h > 0.0)) throw ContractError("rk4_step: step size must be positive");

    auto checked = [&](double ts, const Vec& xs, int stage) {
        Vec k = deriv(ts, xs);
        if (k.size() != x.size()) throw ContractError("rk4_step: derivative has wrong dimension");
        if (!k.all_finite()) {
            std::ostringstream os;
            os << "rk4_step: non-finite derivative at t=" << ts << " (stage " << stage << ")";
            throw IntegrationDivergedError(os.str(), ts, stage);
        }
        return k;
    };

    const Vec k1 = checked(t, x, 1);
    const Vec k2 = checked(t + 0.5 * h, x + (0.5 * h) * k1, 2);
    const Vec k3 = checked(t + 0.5 * h, x + (0.5 * h) * k2, 3);
    const Vec k4 = checked(t + h, x + h * k3, 4);

    Vec next = x;
    for (std::size_t i = 0; i < x.size(); ++i)
        next[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return next;
}

// ---------------------------------------------------------------------------
// Pseudoinverse, eigenvalues, rank

Mat pinv_full_column_rank(const Mat& g, double tol) {
    if (g.cols() == 0) return Mat(0, g.rows());
    if (g.rows() < g.cols()) throw SingularInputError("pinv: matrix is wide, cannot have full column rank");

    const Mat gt = g.transpose();
    const Mat gram = gt * g;
    // Singular values of G are the square roots of eig(G^T G).
    const SymEigen eig = sym_eig(gram);
    const double smax = std::sqrt(std::max(eig.values[eig.values.size() - 1], 0.0));
    const double smin = std::sqrt(std::max(eig.values[0], 0.0));
    if (smax == 0.0 || smin <= tol * smax) throw SingularInputError("pinv: input does not have full column rank");

    // Householder QR, G = Q R, then G^+ = R^-1 Q^T. Going through G^T G instead
    // would square the condition number.
    const std::size_t rows = g.rows(), cols = g.cols();
    Mat r = g;
    Mat qt = Mat::identity(rows);  // accumulates Q^T
    for (std::size_t k = 0; k < cols; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < rows; ++i) norm += r(i, k) * r(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double alpha = r(k, k) > 0.0 ? -norm : norm;
        Vec v(rows);
        v[k] = r(k, k) - alpha;
        for (std::size_t i = k + 1; i < rows; ++i) v[i] = r(i, k);
        const double vv = v.dot(v);
        if (vv == 0.0) continue;
        auto reflect = [&](Mat& m) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                double dot = 0.0;
                for (std::size_t i = k; i < rows; ++i) dot += v[i] * m(i, j);
                const double f = 2.0 * dot / vv;
                for (std::size_t i = k; i < rows; ++i) m(i, j) -= f * v[i];
            }
        };
        reflect(r);
        reflect(qt);
    }
    // Back-substitute R X = (Q^T)[0:cols, :].
    Mat x(cols, rows);
    for (std::size_t j = 0; j < rows; ++j)
        for (std::size_t i = cols; i-- > 0;) {
            double acc = qt(i, j);
            for (std::size_t l = i + 1; l < cols; ++l) acc -= r(i, l) * x(l, j);
            x(i, j) = acc / r(i, i);
        }
    return x;
}

SymEigen sym_eig(const Mat& m) {
    if (m.rows() != m.cols()) throw ContractError("sym_eig: matrix must be square");
    if (!m.is_symmetric(1e-12 * std::max(1.0, m.max_abs())))
        throw ContractError("sym_eig: matrix is not symmetric");

    const std::size_t n = m.rows();
    Mat a = m;
    Mat v = Mat::identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    const double threshold = 1e-12 * std::max(1.0, m.frobenius());
    int sweeps = 0;
    constexpr int kMaxSweeps = 100;
    while (off_norm() > threshold && sweeps < kMaxSweeps) {
        ++sweeps;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    SymEigen out{Vec(n), Mat(n, n), sweeps};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

double sym_eig_min(const Mat& m) {
    if (m.rows() == 0) throw ContractError("sym_eig_min: empty matrix");
    return sym_eig(m).values[0];
}

std::size_t matrix_rank(const Mat& m, double tol) {
    if (!(tol > 0.0)) throw ContractError("matrix_rank: tolerance must be positive");
    Mat a = m;
    std::size_t rank = 0;
    std::size_t row = 0;
    for (std::size_t c = 0; c < a.cols() && row < a.rows(); ++c) {
        std::size_t piv = row;
        for (std::size_t r = row + 1; r < a.rows(); ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (std::abs(a(piv, c)) < tol) continue;
        for (std::size_t k = 0; k < a.cols(); ++k) std::swap(a(row, k), a(piv, k));
        for (std::size_t r = row + 1; r < a.rows(); ++r) {
            const double f = a(r, c) / a(row, c);
            for (std::size_t k = c; k < a.cols(); ++k) a(r, k) -= f * a(row, k);
        }
        ++row;
        ++rank;
    }
    return rank;
}

std::size_t matrix_rank(const Mat& m) {
    const double scale = m.max_abs();
    if (scale == 0.0) return 0;
    return matrix_rank(m, 1e-8 * scale);
}

}  // namespace rsadp
