#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace semlab {

/// Dense row-major matrix of doubles. The one value type every numeric
/// routine in this project is written against; vectors are 1xN matrices
/// or spans over rows.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::span<double> row_span(std::size_t i) { return {row(i), cols_}; }
    std::span<const double> row_span(std::size_t i) const { return {row(i), cols_}; }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const;

    bool all_finite() const;
    /// Throws NumericError naming `context` if any entry is NaN/Inf.
    void require_finite(const char* context) const;

    Mat& operator+=(const Mat& o);
    Mat& operator-=(const Mat& o);
    Mat& operator*=(double s);

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Standard matrix product. Throws DimensionError naming both shapes on a
/// mismatch and NumericError if the result is not finite.
Mat matmul(const Mat& a, const Mat& b);

Mat transpose(const Mat& m);

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);

// Span-level helpers shared by the similarity metrics and the trainers.
double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> u);
double l1_norm(std::span<const double> u);
double l2_dist(std::span<const double> u, std::span<const double> v);
double l1_dist(std::span<const double> u, std::span<const double> v);
/// dst += s * src
void add_scaled(std::span<double> dst, std::span<const double> src, double s);

/// Cosine of the angle between two rows; throws UndefinedSimilarityError if
/// either has zero norm.
double cosine(std::span<const double> u, std::span<const double> v);

void require_same_shape(const Mat& a, const Mat& b, const char* context);

/// Copies of index ranges: rows [r0, r1) / cols [c0, c1).
Mat row_slice(const Mat& m, std::size_t r0, std::size_t r1);
Mat col_slice(const Mat& m, std::size_t c0, std::size_t c1);

/// 1 x cols vector of column sums.
Mat col_sums(const Mat& m);

/// m.row(i) += row for every i; `row` must be 1 x m.cols().
void add_row_broadcast(Mat& m, const Mat& row);

/// FNV-1a over the raw element bytes plus the shape; provenance fingerprint
/// for datasets and model files.
std::uint64_t mat_hash(const Mat& m);

}  // namespace semlab
