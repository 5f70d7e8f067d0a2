#include "semlab/mat.hpp"

#include <cmath>

#include "semlab/errors.hpp"

namespace semlab {

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Mat m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t i = 0;
    for (const auto& r : rows) {
        if (r.size() != m.cols_)
            throw DimensionError("from_rows: ragged row lengths");
        std::size_t j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

std::string Mat::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Mat::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Mat::require_finite(const char* context) const {
    if (!all_finite())
        throw NumericError(std::string(context) + ": non-finite values in " + shape_str() +
                           " matrix");
}

void require_same_shape(const Mat& a, const Mat& b, const char* context) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(context) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
}

Mat& Mat::operator+=(const Mat& o) {
    require_same_shape(*this, o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Mat& Mat::operator-=(const Mat& o) {
    require_same_shape(*this, o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Mat& Mat::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: cannot multiply " + a.shape_str() + " by " +
                             b.shape_str());
    Mat c(a.rows(), b.cols());
    // i-k-j order keeps both inner accesses sequential.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    c.require_finite("matmul");
    return c;
}

Mat transpose(const Mat& m) {
    Mat t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

Mat operator+(Mat a, const Mat& b) {
    a += b;
    return a;
}

Mat operator-(Mat a, const Mat& b) {
    a -= b;
    return a;
}

Mat operator*(Mat a, double s) {
    a *= s;
    return a;
}

Mat operator*(double s, Mat a) {
    a *= s;
    return a;
}

double dot(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw DimensionError("dot: length mismatch " + std::to_string(u.size()) + " vs " +
                             std::to_string(v.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
    return acc;
}

double l2_norm(std::span<const double> u) {
    double acc = 0.0;
    for (double x : u) acc += x * x;
    return std::sqrt(acc);
}

double l1_norm(std::span<const double> u) {
    double acc = 0.0;
    for (double x : u) acc += std::fabs(x);
    return acc;
}

double l2_dist(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw DimensionError("l2_dist: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double l1_dist(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw DimensionError("l1_dist: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += std::fabs(u[i] - v[i]);
    return acc;
}

void add_scaled(std::span<double> dst, std::span<const double> src, double s) {
    if (dst.size() != src.size()) throw DimensionError("add_scaled: length mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

double cosine(std::span<const double> u, std::span<const double> v) {
    const double nu = l2_norm(u);
    const double nv = l2_norm(v);
    if (nu == 0.0 || nv == 0.0)
        throw UndefinedSimilarityError("cosine similarity undefined for zero vector");
    return dot(u, v) / (nu * nv);
}

Mat row_slice(const Mat& m, std::size_t r0, std::size_t r1) {
    if (r0 > r1 || r1 > m.rows()) throw IndexError("row_slice: bad range");
    Mat out(r1 - r0, m.cols());
    for (std::size_t i = r0; i < r1; ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i - r0, j) = m(i, j);
    return out;
}

Mat col_slice(const Mat& m, std::size_t c0, std::size_t c1) {
    if (c0 > c1 || c1 > m.cols()) throw IndexError("col_slice: bad range");
    Mat out(m.rows(), c1 - c0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = c0; j < c1; ++j) out(i, j - c0) = m(i, j);
    return out;
}

Mat col_sums(const Mat& m) {
    Mat out(1, m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(0, j) += m(i, j);
    return out;
}

void add_row_broadcast(Mat& m, const Mat& row) {
    if (row.rows() != 1 || row.cols() != m.cols())
        throw DimensionError("add_row_broadcast: row is " + row.shape_str() +
                             ", expected 1x" + std::to_string(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        add_scaled(m.row_span(i), row.row_span(0), 1.0);
}

std::uint64_t mat_hash(const Mat& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const unsigned char* p, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::uint64_t dims[2] = {m.rows(), m.cols()};
    mix(reinterpret_cast<const unsigned char*>(dims), sizeof(dims));
    mix(reinterpret_cast<const unsigned char*>(m.data()), m.size() * sizeof(double));
    return h;
}

}  // namespace semlab
