#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "opmodel/errors.hpp"

namespace opmodel {

using Complex = std::complex<double>;

/// Dense complex matrix, row-major.  The universal carrier of every
/// finite-dimensional operator in the library.
class ComplexMatrix {
public:
    ComplexMatrix() = default;

    ComplexMatrix(std::size_t rows, std::size_t cols, Complex fill = {})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("ComplexMatrix: entry count does not match shape");
        }
    }

    ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) {
                throw DimensionError("ComplexMatrix: ragged initializer");
            }
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static ComplexMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static ComplexMatrix diagonal(std::span<const Complex> d) {
        ComplexMatrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    static ComplexMatrix diagonal(std::initializer_list<Complex> d) {
        return diagonal(std::span<const Complex>(d.begin(), d.size()));
    }

    static ComplexMatrix column(std::span<const Complex> v) {
        return {v.size(), 1, std::vector<Complex>(v.begin(), v.end())};
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    Complex& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const noexcept {
        return data_[i * cols_ + j];
    }

    std::span<Complex> data() noexcept { return data_; }
    std::span<const Complex> data() const noexcept { return data_; }
    std::span<Complex> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const Complex> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<Complex> col(std::size_t j) const {
        std::vector<Complex> v(rows_);
        for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
        return v;
    }

    void set_col(std::size_t j, std::span<const Complex> v) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
    }

    ComplexMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        if (r0 + nr > rows_ || c0 + nc > cols_) {
            throw DimensionError("ComplexMatrix::block out of range");
        }
        ComplexMatrix b(nr, nc);
        for (std::size_t i = 0; i < nr; ++i) {
            std::copy_n(data_.data() + (r0 + i) * cols_ + c0, nc, b.data_.data() + i * nc);
        }
        return b;
    }

    void set_block(std::size_t r0, std::size_t c0, const ComplexMatrix& b) {
        if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_) {
            throw DimensionError("ComplexMatrix::set_block out of range");
        }
        for (std::size_t i = 0; i < b.rows_; ++i) {
            std::copy_n(b.data_.data() + i * b.cols_, b.cols_, data_.data() + (r0 + i) * cols_ + c0);
        }
    }

    /// Columns selected by index, in the given order.
    ComplexMatrix columns(std::span<const std::size_t> idx) const {
        ComplexMatrix out(rows_, idx.size());
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = 0; k < idx.size(); ++k) out(i, k) = (*this)(i, idx[k]);
        }
        return out;
    }

    ComplexMatrix adjoint() const {
        ComplexMatrix a(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) a(j, i) = std::conj((*this)(i, j));
        }
        return a;
    }

    ComplexMatrix transpose() const {
        ComplexMatrix a(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) a(j, i) = (*this)(i, j);
        }
        return a;
    }

    ComplexMatrix& operator+=(const ComplexMatrix& o) {
        require_same_shape(o, "+=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }

    ComplexMatrix& operator-=(const ComplexMatrix& o) {
        require_same_shape(o, "-=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }

    ComplexMatrix& operator*=(Complex s) {
        for (auto& x : data_) x *= s;
        return *this;
    }

    /// Adds s·I (square matrices only).
    ComplexMatrix& add_identity(Complex s) {
        if (!is_square()) throw DimensionError("add_identity: matrix not square");
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, i) += s;
        return *this;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](const Complex& z) {
            return std::isfinite(z.real()) && std::isfinite(z.imag());
        });
    }

    friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

private:
    void require_same_shape(const ComplexMatrix& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) {
            throw DimensionError(std::string("ComplexMatrix ") + op + ": shape mismatch");
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Complex> data_;
};

inline ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
inline ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
inline ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
inline ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }
inline ComplexMatrix operator-(ComplexMatrix a) { return a *= -1.0; }

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matrix product: inner dimensions differ (" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()) + ")");
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    ComplexMatrix c(m, n);
    // Split real/imaginary accumulation; std::complex operator* carries NaN
    // recovery branches that block vectorisation.
    std::vector<double> re(n), im(n);
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(re.begin(), re.end(), 0.0);
        std::fill(im.begin(), im.end(), 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double ar = a(i, p).real(), ai = a(i, p).imag();
            if (ar == 0.0 && ai == 0.0) continue;
            const Complex* brow = b.row(p).data();
            for (std::size_t j = 0; j < n; ++j) {
                const double br = brow[j].real(), bi = brow[j].imag();
                re[j] += ar * br - ai * bi;
                im[j] += ar * bi + ai * br;
            }
        }
        for (std::size_t j = 0; j < n; ++j) c(i, j) = {re[j], im[j]};
    }
    return c;
}

/// a* · b without forming the adjoint explicitly.
inline ComplexMatrix adjoint_times(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows()) throw DimensionError("adjoint_times: row counts differ");
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    ComplexMatrix c(m, n);
    for (std::size_t p = 0; p < k; ++p) {
        const Complex* arow = a.row(p).data();
        const Complex* brow = b.row(p).data();
        for (std::size_t i = 0; i < m; ++i) {
            const double ar = arow[i].real(), ai = -arow[i].imag();
            if (ar == 0.0 && ai == 0.0) continue;
            Complex* crow = c.row(i).data();
            for (std::size_t j = 0; j < n; ++j) {
                const double br = brow[j].real(), bi = brow[j].imag();
                crow[j] += Complex(ar * br - ai * bi, ar * bi + ai * br);
            }
        }
    }
    return c;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const Complex s = a(i, j);
            if (s == Complex{}) continue;
            for (std::size_t p = 0; p < b.rows(); ++p) {
                for (std::size_t q = 0; q < b.cols(); ++q) {
                    k(i * b.rows() + p, j * b.cols() + q) = s * b(p, q);
                }
            }
        }
    }
    return k;
}

/// Kronecker product of a list, first factor most significant.
inline ComplexMatrix kron_all(std::span<const ComplexMatrix> factors) {
    ComplexMatrix out = ComplexMatrix::identity(1);
    for (const auto& f : factors) out = kron(out, f);
    return out;
}

/// Block-diagonal direct sum.
inline ComplexMatrix direct_sum(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix s(a.rows() + b.rows(), a.cols() + b.cols());
    s.set_block(0, 0, a);
    s.set_block(a.rows(), a.cols(), b);
    return s;
}

inline ComplexMatrix hstack(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.empty() && a.cols() == 0) return b;
    if (a.rows() != b.rows()) throw DimensionError("hstack: row counts differ");
    ComplexMatrix s(a.rows(), a.cols() + b.cols());
    s.set_block(0, 0, a);
    s.set_block(0, a.cols(), b);
    return s;
}

inline double frobenius_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (const auto& z : a.data()) s += std::norm(z);
    return std::sqrt(s);
}

inline double max_abs(const ComplexMatrix& a) {
    double s = 0.0;
    for (const auto& z : a.data()) s = std::max(s, std::abs(z));
    return s;
}

inline Complex trace(const ComplexMatrix& a) {
    Complex t{};
    for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
    return t;
}

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a * b - b * a;
}

inline ComplexMatrix matrix_power(const ComplexMatrix& a, std::size_t k) {
    if (!a.is_square()) throw DimensionError("matrix_power: matrix not square");
    ComplexMatrix result = ComplexMatrix::identity(a.rows());
    ComplexMatrix base = a;
    while (k > 0) {
        if (k & 1U) result = result * base;
        k >>= 1U;
        if (k > 0) base = base * base;
    }
    return result;
}

inline double vector_norm(std::span<const Complex> v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s);
}

} // namespace opmodel
