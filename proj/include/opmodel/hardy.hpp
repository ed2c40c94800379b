#pragma once

// Truncated vector-valued Hardy space H^2(D, E).  A vector is stored degree-major:
// coordinate m * dim(E) + i holds the coefficient of z^m xi_i, for m < N.
// Multiplication by an analytic symbol is then block lower-triangular Toeplitz, and
// these truncations multiply exactly like truncated power series.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "opmodel/numerics.hpp"

namespace opmodel {

/// Maclaurin coefficients c_0..c_{N-1} of phi_t(z) = exp(t (z + 1) / (z - 1)).
/// Closed form c_n = e^{-t} (L_n(2t) - L_{n-1}(2t)) with Laguerre polynomials L_n.
inline std::vector<double> phi_coeffs(double t, std::size_t n) {
    if (t < 0.0) throw PreconditionError("phi_coeffs: negative time");
    if (n < 1) throw PreconditionError("phi_coeffs: need at least one coefficient");
    const double x = 2.0 * t;
    const double scale = std::exp(-t);
    std::vector<double> c(n);
    c[0] = scale;
    double prev = 1.0;      // L_0
    double cur = 1.0 - x;   // L_1
    for (std::size_t k = 1; k < n; ++k) {
        c[k] = scale * (cur - prev);
        const double next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return c;
}

/// Operator-valued polynomial psi(z) = sum_k A_k z^k, each A_k of size coeff_dim.
class OperatorSymbol {
public:
    OperatorSymbol() = default;
    OperatorSymbol(std::size_t coeff_dim, std::vector<ComplexMatrix> coefficients)
        : coeff_dim_(coeff_dim), coefficients_(std::move(coefficients)) {
        if (coeff_dim_ == 0) throw DimensionError("OperatorSymbol: coefficient space must be nonzero");
        for (const auto& a : coefficients_) {
            if (a.rows() != coeff_dim_ || a.cols() != coeff_dim_) {
                throw DimensionError("OperatorSymbol: coefficient has wrong size");
            }
        }
        if (coefficients_.empty()) coefficients_.push_back(ComplexMatrix(coeff_dim_, coeff_dim_));
    }

    static OperatorSymbol constant(const ComplexMatrix& a) { return OperatorSymbol(a.rows(), {a}); }

    static OperatorSymbol zero(std::size_t d) { return constant(ComplexMatrix(d, d)); }

    /// z^E(w) = w I_E.
    static OperatorSymbol coordinate(std::size_t d) {
        return OperatorSymbol(d, {ComplexMatrix(d, d), ComplexMatrix::identity(d)});
    }

    /// Scalar polynomial sum_k c_k z^k, times I_E.
    static OperatorSymbol scalar(std::span<const Complex> c, std::size_t d = 1) {
        std::vector<ComplexMatrix> coeffs;
        coeffs.reserve(c.size());
        for (Complex ck : c) coeffs.push_back(ComplexMatrix::identity(d) * ck);
        return OperatorSymbol(d, std::move(coeffs));
    }

    /// phi_t composed with z^E, truncated to degree < n.
    static OperatorSymbol phi(double t, std::size_t n, std::size_t d = 1) {
        const auto c = phi_coeffs(t, n);
        std::vector<Complex> cc(c.begin(), c.end());
        return scalar(cc, d);
    }

    std::size_t coeff_dim() const noexcept { return coeff_dim_; }
    const std::vector<ComplexMatrix>& coefficients() const noexcept { return coefficients_; }
    std::size_t degree() const noexcept { return coefficients_.size() - 1; }

    ComplexMatrix evaluate(Complex z) const {
        // Horner
        ComplexMatrix acc = coefficients_.back();
        for (std::size_t k = coefficients_.size() - 1; k-- > 0;) {
            acc *= z;
            acc += coefficients_[k];
        }
        return acc;
    }

    /// Largest op_norm of psi over `samples` equispaced points of the unit circle.
    /// For polynomials the boundary maximum dominates the disc.
    double sup_norm(std::size_t samples = 256) const {
        double best = op_norm(coefficients_[0]);
        if (degree() == 0) return best;
        for (std::size_t k = 0; k < samples; ++k) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples);
            best = std::max(best, op_norm(evaluate(std::polar(1.0, th))));
        }
        return best;
    }

    bool is_contractive(double tol = 1e-8, std::size_t samples = 256) const {
        return sup_norm(samples) <= 1.0 + tol;
    }

    bool operator==(const OperatorSymbol&) const = default;

private:
    std::size_t coeff_dim_ = 1;
    std::vector<ComplexMatrix> coefficients_{ComplexMatrix(1, 1)};
};

inline OperatorSymbol product(const OperatorSymbol& a, const OperatorSymbol& b) {
    if (a.coeff_dim() != b.coeff_dim()) throw DimensionError("product: coefficient spaces differ");
    const std::size_t d = a.coeff_dim();
    std::vector<ComplexMatrix> c(a.degree() + b.degree() + 1, ComplexMatrix(d, d));
    for (std::size_t i = 0; i <= a.degree(); ++i) {
        for (std::size_t j = 0; j <= b.degree(); ++j) c[i + j] += a.coefficients()[i] * b.coefficients()[j];
    }
    return OperatorSymbol(d, std::move(c));
}

/// Pointwise direct sum psi1(z) (+) psi2(z) on E1 (+) E2.
inline OperatorSymbol direct_sum(const OperatorSymbol& a, const OperatorSymbol& b) {
    const std::size_t deg = std::max(a.degree(), b.degree());
    const std::size_t d1 = a.coeff_dim(), d2 = b.coeff_dim();
    std::vector<ComplexMatrix> c;
    c.reserve(deg + 1);
    for (std::size_t k = 0; k <= deg; ++k) {
        const ComplexMatrix x = k <= a.degree() ? a.coefficients()[k] : ComplexMatrix(d1, d1);
        const ComplexMatrix y = k <= b.degree() ? b.coefficients()[k] : ComplexMatrix(d2, d2);
        c.push_back(direct_sum(x, y));
    }
    return OperatorSymbol(d1 + d2, std::move(c));
}

inline nlohmann::json symbol_to_json(const OperatorSymbol& s) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& a : s.coefficients()) coeffs.push_back(matrix_to_json(a));
    return {{"coeff_dim", s.coeff_dim()}, {"coefficients", std::move(coeffs)}};
}

inline OperatorSymbol symbol_from_json(const nlohmann::json& j) {
    try {
        const auto d = j.at("coeff_dim").get<std::size_t>();
        std::vector<ComplexMatrix> coeffs;
        for (const auto& c : j.at("coefficients")) coeffs.push_back(matrix_from_json(c));
        return OperatorSymbol(d, std::move(coeffs));
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("symbol JSON: ") + ex.what());
    } catch (const DimensionError& ex) {
        throw IoError(std::string("symbol JSON: ") + ex.what());
    }
}

struct TruncationParams {
    std::size_t degree_cut = 64;   // N
    std::size_t margin = 8;        // M
    double tolerance = 1e-9;

    void validate() const {
        if (degree_cut < 1) throw PreconditionError("TruncationParams: N must be positive");
        if (margin >= degree_cut) throw PreconditionError("TruncationParams: margin must be below N");
    }
    /// Degrees < N - M, where truncated identities are asserted.
    std::size_t faithful_degrees() const { return degree_cut - margin; }
};

/// Orthonormal frame for a subspace of a finite-dimensional ambient space.
struct SubspaceBasis {
    std::size_t ambient_dim = 0;
    ComplexMatrix frame;

    SubspaceBasis() = default;
    explicit SubspaceBasis(ComplexMatrix f) : ambient_dim(f.rows()), frame(std::move(f)) {}

    std::size_t dim() const noexcept { return frame.cols(); }
    ComplexMatrix projector() const { return frame * frame.adjoint(); }
    double orthonormality_defect() const {
        return op_norm(adjoint_times(frame, frame) - ComplexMatrix::identity(frame.cols()));
    }
};

/// Block lower-triangular Toeplitz truncation of M_psi on degrees < N.
inline ComplexMatrix toeplitz_of_symbol(const OperatorSymbol& psi, const TruncationParams& p) {
    p.validate();
    const std::size_t n = p.degree_cut, d = psi.coeff_dim();
    ComplexMatrix out(n * d, n * d);
    for (std::size_t k = 0; k <= psi.degree() && k < n; ++k) {
        const ComplexMatrix& a = psi.coefficients()[k];
        for (std::size_t j = 0; j + k < n; ++j) out.set_block((j + k) * d, j * d, a);
    }
    return out;
}

/// M_z on the truncation: the degree-raising shift, nilpotent at finite N.
inline ComplexMatrix shift_matrix(const TruncationParams& p, std::size_t dim_e = 1) {
    return toeplitz_of_symbol(OperatorSymbol::coordinate(dim_e), p);
}

/// The shift semigroup conjugated to H^2(E): M_{phi_t o z^E}, truncated.
inline ComplexMatrix shift_semigroup_matrix(double t, const TruncationParams& p, std::size_t dim_e = 1) {
    if (t < 0.0) throw PreconditionError("shift_semigroup_matrix: negative time");
    p.validate();
    return toeplitz_of_symbol(OperatorSymbol::phi(t, p.degree_cut, dim_e), p);
}

/// Frame of the degrees < N - M, where truncated identities hold.
inline SubspaceBasis margin_subspace(const TruncationParams& p, std::size_t dim_e = 1) {
    p.validate();
    const std::size_t total = p.degree_cut * dim_e, keep = p.faithful_degrees() * dim_e;
    ComplexMatrix f(total, keep);
    for (std::size_t i = 0; i < keep; ++i) f(i, i) = 1.0;
    return SubspaceBasis(std::move(f));
}

/// e_n(x) = sqrt(2) e^{-x} L_n(2x), the image of z^n under the inverse of W.
inline std::vector<double> laguerre_basis(std::size_t n, const std::vector<double>& points) {
    std::vector<double> out;
    out.reserve(points.size());
    for (double x : points) {
        if (x < 0.0) throw DomainError("laguerre_basis: negative abscissa");
        const double y = 2.0 * x;
        double prev = 1.0, cur = 1.0 - y;
        double value = 1.0;
        if (n == 1) value = cur;
        for (std::size_t k = 1; k < n; ++k) {
            const double next = ((2.0 * k + 1.0 - y) * cur - k * prev) / (k + 1.0);
            prev = cur;
            cur = next;
            value = cur;
        }
        out.push_back(std::numbers::sqrt2 * std::exp(-x) * value);
    }
    return out;
}

inline ComplexMatrix compress(const ComplexMatrix& op, const SubspaceBasis& q) {
    if (op.rows() != q.ambient_dim || op.cols() != q.ambient_dim) {
        throw DimensionError("compress: operator and subspace dimensions differ");
    }
    return adjoint_times(q.frame, op * q.frame);
}

/// ||(I - P_Q) op* P_Q||: zero iff Q is invariant under op*.
inline double check_star_invariant(const ComplexMatrix& op, const SubspaceBasis& q) {
    if (op.rows() != q.ambient_dim || op.cols() != q.ambient_dim) {
        throw DimensionError("check_star_invariant: operator and subspace dimensions differ");
    }
    const ComplexMatrix image = adjoint_times(op, q.frame);
    return op_norm(image - q.frame * adjoint_times(q.frame, image));
}

struct ModelSpace {
    SubspaceBasis q;
    /// S_theta = P_Q M_z |_Q in the frame coordinates.
    ComplexMatrix compressed_shift;
    std::vector<Complex> zeros;
};

/// Model space of the finite Blaschke product with the given zeros, inside degrees < N.
/// Spanned by the Cauchy kernels k_w(z) = sum_m (conj(w) z)^m; a zero of multiplicity r
/// contributes the derivatives of k_w in conj(w) up to order r - 1.
inline ModelSpace blaschke_model_space(const std::vector<Complex>& zeros, std::size_t n = 64) {
    if (zeros.empty()) throw PreconditionError("blaschke_model_space: no zeros");
    if (zeros.size() > n) throw PreconditionError("blaschke_model_space: more zeros than truncation degrees");
    ComplexMatrix kernels(n, zeros.size());
    for (std::size_t j = 0; j < zeros.size(); ++j) {
        const Complex w = zeros[j];
        if (std::abs(w) >= 1.0) throw DomainError("blaschke_model_space: zero outside the open disc");
        std::size_t order = 0;  // earlier copies of the same zero
        for (std::size_t i = 0; i < j; ++i) {
            if (zeros[i] == w) ++order;
        }
        // d^r/dwbar^r of wbar^m = m (m-1) ... (m-r+1) wbar^(m-r)
        const Complex wb = std::conj(w);
        Complex power = 1.0;  // wbar^(m - order)
        for (std::size_t m = order; m < n; ++m) {
            double falling = 1.0;
            for (std::size_t r = 0; r < order; ++r) falling *= static_cast<double>(m - r);
            kernels(m, j) = falling * power;
            power *= wb;
        }
    }
    Qr f = qr(kernels);
    // fix phases so that R has a positive diagonal
    for (std::size_t c = 0; c < f.Q.cols(); ++c) {
        const Complex rc = f.R(c, c);
        if (std::abs(rc) == 0.0) throw StructureError("blaschke_model_space: kernels are linearly dependent");
        const Complex ph = rc / std::abs(rc);
        for (std::size_t r = 0; r < n; ++r) f.Q(r, c) *= ph;
    }
    ModelSpace out;
    out.q = SubspaceBasis(std::move(f.Q));
    out.compressed_shift = compress(shift_matrix(TruncationParams{n, 0, 1e-9}), out.q);
    out.zeros = zeros;
    return out;
}

/// span{1, z, ..., z^{k-1}}: the model space of z^k.
inline ModelSpace jet_space(std::size_t k, std::size_t n = 64) {
    return blaschke_model_space(std::vector<Complex>(k, Complex{}), n);
}

/// Taylor polynomial of the Blaschke factor (z - a) / (1 - conj(a) z), degree < n.
inline OperatorSymbol blaschke_factor(Complex a, std::size_t n = 64) {
    if (std::abs(a) >= 1.0) throw DomainError("blaschke_factor: zero outside the open disc");
    if (n < 2) throw PreconditionError("blaschke_factor: need degree at least 1");
    // (z - a) sum_k (conj(a) z)^k
    std::vector<Complex> c(n);
    const Complex ab = std::conj(a);
    Complex pw = 1.0;  // conj(a)^k
    c[0] = -a;
    for (std::size_t k = 1; k < n; ++k) {
        c[k] = pw - a * pw * ab;
        pw *= ab;
    }
    return OperatorSymbol::scalar(c);
}

/// Q tensor xi: the scalar subspace Q placed along the unit vector xi of E (degree-major layout).
inline SubspaceBasis embed_along(const SubspaceBasis& q, const ComplexMatrix& xi) {
    const std::size_t d = xi.rows();
    if (xi.cols() != 1) throw DimensionError("embed_along: xi must be a column");
    ComplexMatrix f(q.ambient_dim * d, q.dim());
    for (std::size_t m = 0; m < q.ambient_dim; ++m) {
        for (std::size_t c = 0; c < q.dim(); ++c) {
            for (std::size_t i = 0; i < d; ++i) f(m * d + i, c) = q.frame(m, c) * xi(i, 0);
        }
    }
    return SubspaceBasis(std::move(f));
}


} // namespace opmodel
