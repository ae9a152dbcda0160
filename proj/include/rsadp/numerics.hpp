#pragma once

// Small dense linear algebra and fixed-step integration. Sizes here never
// exceed a few dozen, so everything is plain row-major storage and O(n^3)
// textbook algorithms.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace rsadp {

class Vec {
public:
    Vec() = default;
    explicit Vec(std::size_t n, double value = 0.0) : data_(n, value) {}
    Vec(std::initializer_list<double> values) : data_(values) {}
    explicit Vec(std::vector<double> values) : data_(std::move(values)) {}

    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& as_vector() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    [[nodiscard]] auto begin() const noexcept { return data_.begin(); }
    [[nodiscard]] auto end() const noexcept { return data_.end(); }

    [[nodiscard]] double dot(const Vec& other) const;
    [[nodiscard]] double norm() const;
    [[nodiscard]] double norm_inf() const;
    [[nodiscard]] bool all_finite() const noexcept;

    Vec& operator+=(const Vec& other);
    Vec& operator-=(const Vec& other);
    Vec& operator*=(double s);

    friend bool operator==(const Vec&, const Vec&) = default;

private:
    std::vector<double> data_;
};

Vec operator+(Vec a, const Vec& b);
Vec operator-(Vec a, const Vec& b);
Vec operator-(Vec a);
Vec operator*(Vec a, double s);
Vec operator*(double s, Vec a);

class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}
    /// Row-major nested list, e.g. Mat{{1, 2}, {3, 4}}. Ragged rows throw ContractError.
    Mat(std::initializer_list<std::initializer_list<double>> rows);

    static Mat identity(std::size_t n);
    static Mat diag(const Vec& d);
    /// n x 1 column from a vector.
    static Mat column(const Vec& v);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

    [[nodiscard]] Mat transpose() const;
    [[nodiscard]] Vec row(std::size_t r) const;
    [[nodiscard]] Vec col(std::size_t c) const;
    [[nodiscard]] double max_abs() const noexcept;
    [[nodiscard]] double frobenius() const;
    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] bool is_symmetric(double tol = 1e-12) const;

    Mat& operator+=(const Mat& other);
    Mat& operator-=(const Mat& other);
    Mat& operator*=(double s);

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);
Mat operator*(const Mat& a, const Mat& b);
Vec operator*(const Mat& a, const Vec& x);

/// a * b^T for column vectors a, b.
Mat outer(const Vec& a, const Vec& b);

/// Solve A x = b for square A by Gaussian elimination with partial pivoting.
/// Throws SingularInputError when a pivot falls below `tol * max|A|`.
Vec solve(const Mat& a, const Vec& b, double tol = 1e-12);
Mat inverse(const Mat& a, double tol = 1e-12);

using Derivative = std::function<Vec(double t, const Vec& x)>;

/// One classical RK4 step from (t, x) with step h. Throws
/// IntegrationDivergedError if any stage derivative is non-finite.
Vec rk4_step(const Derivative& deriv, const Vec& x, double t, double h);

/// (G^T G)^{-1} G^T for a tall full-column-rank G. Throws SingularInputError
/// when the smallest singular value is below `tol` (relative to the largest).
Mat pinv_full_column_rank(const Mat& g, double tol = 1e-10);

struct SymEigen {
    Vec values;  // ascending
    Mat vectors; // column i pairs with values[i]
    int sweeps = 0;
};

/// Cyclic Jacobi diagonalization of a symmetric matrix; iterates until the
/// off-diagonal Frobenius norm drops below 1e-12 (scaled by the matrix norm
/// for large entries). Throws ContractError on asymmetric input.
SymEigen sym_eig(const Mat& m);
double sym_eig_min(const Mat& m);

/// Rank by row reduction with partial pivoting; pivots with magnitude below
/// `tol` count as zero.
std::size_t matrix_rank(const Mat& m, double tol);
/// Same, with the default tolerance 1e-8 * max|m|.
std::size_t matrix_rank(const Mat& m);

}  // namespace rsadp
