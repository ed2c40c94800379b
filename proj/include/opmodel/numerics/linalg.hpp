#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "opmodel/errors.hpp"
#include "opmodel/numerics/matrix.hpp"

namespace opmodel {

/// Default absolute tolerance on unit-normalised operators.
inline constexpr double default_tolerance = 1e-9;

/// Negative eigenvalues above -psd_clip_tolerance are treated as roundoff.
inline constexpr double psd_clip_tolerance = 1e-10;

namespace detail {

inline double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

inline double norm2(const std::vector<Complex>& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return s;
}

/// <a, b> = sum conj(a_i) b_i
inline Complex inner(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += ar * br + ai * bi;
        im += ar * bi - ai * br;
    }
    return {re, im};
}

/// Apply the 2x2 unitary [[c, s], [-s e, c e]] to a column pair (x, y).
inline void rotate_pair(std::vector<Complex>& x, std::vector<Complex>& y, double c, double s,
                        Complex e) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Complex xi = x[i], yi = y[i];
        x[i] = c * xi - s * e * yi;
        y[i] = s * xi + c * e * yi;
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Hermitian eigenproblem
// ---------------------------------------------------------------------------

struct HermitianEigen {
    std::vector<double> values;  // ascending
    ComplexMatrix vectors;       // columns are eigenvectors
};

inline double hermiticity_defect(const ComplexMatrix& h) {
    if (!h.is_square()) throw DimensionError("hermiticity_defect: matrix not square");
    double d = 0.0;
    for (std::size_t i = 0; i < h.rows(); ++i) {
        for (std::size_t j = i; j < h.cols(); ++j) {
            d = std::max(d, std::abs(h(i, j) - std::conj(h(j, i))));
        }
    }
    return d;
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
inline HermitianEigen herm_eig(const ComplexMatrix& h, double hermiticity_tol = default_tolerance) {
    if (!h.is_square()) throw DimensionError("herm_eig: matrix not square");
    const std::size_t n = h.rows();
    const double scale = std::max(1.0, max_abs(h));
    const double defect = hermiticity_defect(h);
    if (defect > hermiticity_tol * scale) {
        throw PreconditionError("herm_eig: input not Hermitian (defect " + std::to_string(defect) + ")");
    }

    // Column storage of the working matrix and the accumulated rotations.
    ComplexMatrix a = h;
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = a(i, i).real();
        for (std::size_t j = i + 1; j < n; ++j) {
            const Complex avg = 0.5 * (a(i, j) + std::conj(a(j, i)));
            a(i, j) = avg;
            a(j, i) = std::conj(avg);
        }
    }
    ComplexMatrix v = ComplexMatrix::identity(n);
    const double fro = frobenius_norm(a);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        }
        if (std::sqrt(2.0 * off) <= 1e-15 * fro || off == 0.0) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const Complex b = a(p, q);
                const double mag = std::abs(b);
                if (mag <= 1e-300 || mag <= 1e-18 * fro) continue;
                const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * mag);
                const double t = detail::sign_of(theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const Complex e = std::conj(b) / mag;  // e^{-i arg b}

                // A <- A J  (columns p, q)
                for (std::size_t i = 0; i < n; ++i) {
                    const Complex xp = a(i, p), xq = a(i, q);
                    a(i, p) = c * xp - s * e * xq;
                    a(i, q) = s * xp + c * e * xq;
                }
                // A <- J* A  (rows p, q)
                const Complex ec = std::conj(e);
                for (std::size_t j = 0; j < n; ++j) {
                    const Complex xp = a(p, j), xq = a(q, j);
                    a(p, j) = c * xp - s * ec * xq;
                    a(q, j) = s * xp + c * ec * xq;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                for (std::size_t i = 0; i < n; ++i) {
                    const Complex xp = v(i, p), xq = v(i, q);
                    v(i, p) = c * xp - s * e * xq;
                    v(i, q) = s * xp + c * e * xq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });
    HermitianEigen out;
    out.values.resize(n);
    out.vectors = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]).real();
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

/// U diag(f(lambda)) U* for Hermitian input.
template <typename F>
ComplexMatrix hermitian_function(const HermitianEigen& eig, F&& f) {
    const std::size_t n = eig.values.size();
    ComplexMatrix scaled = eig.vectors;
    for (std::size_t k = 0; k < n; ++k) {
        const Complex fk = f(eig.values[k]);
        for (std::size_t i = 0; i < n; ++i) scaled(i, k) *= fk;
    }
    ComplexMatrix out = scaled * eig.vectors.adjoint();
    return out;
}

/// Hermitian positive square root; eigenvalues in [-clip, 0) are clipped to zero.
inline ComplexMatrix psd_sqrt(const ComplexMatrix& h, double clip = psd_clip_tolerance) {
    const HermitianEigen eig = herm_eig(h);
    const double scale = std::max(1.0, eig.values.empty() ? 0.0 : std::abs(eig.values.back()));
    if (!eig.values.empty() && eig.values.front() < -clip * scale) {
        throw NotPsdError("psd_sqrt: eigenvalue " + std::to_string(eig.values.front()) +
                              " below clipping threshold",
                          eig.values.front());
    }
    ComplexMatrix r = hermitian_function(eig, [](double x) { return std::sqrt(std::max(x, 0.0)); });
    // enforce exact Hermitian symmetry
    for (std::size_t i = 0; i < r.rows(); ++i) {
        r(i, i) = r(i, i).real();
        for (std::size_t j = i + 1; j < r.cols(); ++j) {
            const Complex avg = 0.5 * (r(i, j) + std::conj(r(j, i)));
            r(i, j) = avg;
            r(j, i) = std::conj(avg);
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Singular value decomposition (one-sided Jacobi)
// ---------------------------------------------------------------------------

/// Thin SVD: A = U diag(s) V*, with k = min(rows, cols) columns in U and V.
struct Svd {
    ComplexMatrix U;
    std::vector<double> singular_values;  // descending
    ComplexMatrix V;
};

inline Svd svd(const ComplexMatrix& a) {
    if (a.rows() < a.cols()) {
        Svd t = svd(a.adjoint());
        return {std::move(t.V), std::move(t.singular_values), std::move(t.U)};
    }
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<std::vector<Complex>> w(n, std::vector<Complex>(m));
    std::vector<std::vector<Complex>> v(n, std::vector<Complex>(n));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) w[j][i] = a(i, j);
        v[j][j] = 1.0;
    }
    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) norms[j] = detail::norm2(w[j]);

    constexpr double eps = 1e-15;
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = norms[p], beta = norms[q];
                if (alpha == 0.0 || beta == 0.0) continue;
                const Complex gamma = detail::inner(w[p], w[q]);
                const double mag = std::abs(gamma);
                if (mag <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * mag);
                const double t = detail::sign_of(zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                const Complex e = std::conj(gamma) / mag;
                detail::rotate_pair(w[p], w[q], c, s, e);
                detail::rotate_pair(v[p], v[q], c, s, e);
                norms[p] = detail::norm2(w[p]);
                norms[q] = detail::norm2(w[q]);
            }
        }
        if (!rotated) break;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

    Svd out;
    out.singular_values.resize(n);
    out.U = ComplexMatrix(m, n);
    out.V = ComplexMatrix(n, n);
    const double smax = n == 0 ? 0.0 : std::sqrt(norms[order[0]]);
    std::vector<std::vector<Complex>> ucols;
    ucols.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        const double sigma = std::sqrt(norms[j]);
        out.singular_values[k] = sigma;
        std::vector<Complex> u(m);
        if (sigma > 0.0) {
            for (std::size_t i = 0; i < m; ++i) u[i] = w[j][i] / sigma;
        }
        if (sigma <= 1e-13 * smax || sigma == 0.0) {
            // Columns carrying (numerically) no energy: complete U by Gram-Schmidt.
            auto orthogonalise = [&](std::vector<Complex>& x) {
                for (int pass = 0; pass < 2; ++pass) {
                    for (const auto& prev : ucols) {
                        const Complex proj = detail::inner(prev, x);
                        for (std::size_t i = 0; i < m; ++i) x[i] -= proj * prev[i];
                    }
                }
                return std::sqrt(detail::norm2(x));
            };
            double nrm = orthogonalise(u);
            for (std::size_t cand = 0; nrm < 0.5 && cand < m; ++cand) {
                u.assign(m, Complex{});
                u[cand] = 1.0;
                nrm = orthogonalise(u);
            }
            for (auto& x : u) x /= nrm;
        }
        for (std::size_t i = 0; i < m; ++i) out.U(i, k) = u[i];
        for (std::size_t i = 0; i < n; ++i) out.V(i, k) = v[j][i];
        ucols.push_back(std::move(u));
    }
    return out;
}

inline std::vector<double> singular_values(const ComplexMatrix& a) { return svd(a).singular_values; }

/// Largest singular value, from the Hermitian Gram matrix of the smaller side.
inline double op_norm(const ComplexMatrix& a) {
    if (a.empty()) return 0.0;
    const ComplexMatrix g = a.rows() >= a.cols() ? adjoint_times(a, a) : a * a.adjoint();
    const HermitianEigen eig = herm_eig(g, 1.0);
    return std::sqrt(std::max(0.0, eig.values.back()));
}

inline double min_singular(const ComplexMatrix& a) {
    if (a.empty()) return 0.0;
    const auto s = singular_values(a);
    return s.back();
}

/// Orthonormal basis of {x : ||A x|| <= threshold}, via the right singular vectors.
inline ComplexMatrix kernel_basis(const ComplexMatrix& a, double threshold) {
    const std::size_t n = a.cols();
    ComplexMatrix padded = a;
    if (a.rows() < n) {
        padded = ComplexMatrix(n, n);
        padded.set_block(0, 0, a);
    }
    const Svd s = svd(padded);
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < n; ++k) {
        if (s.singular_values[k] <= threshold) idx.push_back(k);
    }
    return s.V.columns(idx);
}

/// Orthonormal basis of the range, keeping singular values above rel_threshold * sigma_max.
inline ComplexMatrix range_basis(const ComplexMatrix& a, double rel_threshold) {
    const Svd s = svd(a);
    std::vector<std::size_t> idx;
    const double smax = s.singular_values.empty() ? 0.0 : s.singular_values.front();
    for (std::size_t k = 0; k < s.singular_values.size(); ++k) {
        if (smax > 0.0 && s.singular_values[k] > rel_threshold * smax) idx.push_back(k);
    }
    return s.U.columns(idx);
}

/// Orthonormal basis of the orthogonal complement of range(frame) (frame orthonormal).
inline ComplexMatrix orthogonal_complement(const ComplexMatrix& frame) {
    const std::size_t m = frame.rows();
    ComplexMatrix proj = ComplexMatrix::identity(m) - frame * frame.adjoint();
    return range_basis(proj, 0.5);
}

// ---------------------------------------------------------------------------
// QR
// ---------------------------------------------------------------------------

struct Qr {
    ComplexMatrix Q;                  // m x k, orthonormal columns
    ComplexMatrix R;                  // k x n, upper triangular (in pivoted column order)
    std::vector<std::size_t> perm;    // column permutation (identity when unpivoted)
    std::size_t rank = 0;             // numerical rank when pivoted
};

namespace detail {

inline Qr householder_qr(const ComplexMatrix& a, bool pivot, double rel_threshold) {
    const std::size_t m = a.rows(), n = a.cols();
    const std::size_t kmax = std::min(m, n);
    // column-major working copy
    std::vector<std::vector<Complex>> cols(n, std::vector<Complex>(m));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) cols[j][i] = a(i, j);
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> colnorm(n);
    for (std::size_t j = 0; j < n; ++j) colnorm[j] = norm2(cols[j]);

    std::vector<std::vector<Complex>> reflectors;
    std::vector<Complex> rdiag;
    std::size_t rank = 0;
    double r00 = 0.0;
    std::size_t steps = 0;
    for (std::size_t k = 0; k < kmax; ++k) {
        if (pivot) {
            std::size_t best = k;
            for (std::size_t j = k + 1; j < n; ++j) {
                if (colnorm[j] > colnorm[best]) best = j;
            }
            if (best != k) {
                std::swap(cols[k], cols[best]);
                std::swap(colnorm[k], colnorm[best]);
                std::swap(perm[k], perm[best]);
            }
            // recompute the pivot norm exactly to avoid downdating drift
            double exact = 0.0;
            for (std::size_t i = k; i < m; ++i) exact += std::norm(cols[k][i]);
            const double nk = std::sqrt(exact);
            if (k == 0) r00 = nk;
            if (nk <= rel_threshold * r00 || nk == 0.0) break;
            ++rank;
        }
        std::vector<Complex> vk(m, Complex{});
        double xnorm2 = 0.0;
        for (std::size_t i = k; i < m; ++i) {
            vk[i] = cols[k][i];
            xnorm2 += std::norm(vk[i]);
        }
        const double xnorm = std::sqrt(xnorm2);
        Complex alpha;
        if (xnorm == 0.0) {
            alpha = 0.0;
        } else {
            const Complex x0 = vk[k];
            const Complex phase = std::abs(x0) == 0.0 ? Complex(1.0) : x0 / std::abs(x0);
            alpha = -phase * xnorm;
            vk[k] -= alpha;
            const double vn = std::sqrt(norm2(vk));
            if (vn > 0.0) {
                for (auto& x : vk) x /= vn;
            }
        }
        // apply H = I - 2 v v* to remaining columns
        for (std::size_t j = k; j < n; ++j) {
            Complex d{};
            for (std::size_t i = k; i < m; ++i) d += std::conj(vk[i]) * cols[j][i];
            if (d == Complex{}) continue;
            for (std::size_t i = k; i < m; ++i) cols[j][i] -= 2.0 * d * vk[i];
        }
        if (pivot) {
            for (std::size_t j = k + 1; j < n; ++j) {
                colnorm[j] = std::max(0.0, colnorm[j] - std::norm(cols[j][k]));
            }
        }
        reflectors.push_back(std::move(vk));
        ++steps;
    }
    if (!pivot) rank = steps;

    Qr out;
    out.perm = perm;
    out.rank = rank;
    const std::size_t k = pivot ? rank : steps;
    out.R = ComplexMatrix(k, n);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < n; ++j) out.R(i, j) = cols[j][i];
    }
    // Q = H_0 H_1 ... H_{k-1} applied to the first k unit vectors
    out.Q = ComplexMatrix(m, k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<Complex> e(m, Complex{});
        e[c] = 1.0;
        for (std::size_t r = k; r-- > 0;) {
            const auto& vr = reflectors[r];
            Complex d{};
            for (std::size_t i = r; i < m; ++i) d += std::conj(vr[i]) * e[i];
            if (d == Complex{}) continue;
            for (std::size_t i = r; i < m; ++i) e[i] -= 2.0 * d * vr[i];
        }
        for (std::size_t i = 0; i < m; ++i) out.Q(i, c) = e[i];
    }
    return out;
}

} // namespace detail

/// Householder QR (thin): A = Q R.
inline Qr qr(const ComplexMatrix& a) { return detail::householder_qr(a, false, 0.0); }

/// Column-pivoted Householder QR truncated at |R_kk| <= rel_threshold * |R_00|.
/// Q spans the numerical range; rank is the number of retained columns.
inline Qr qr_pivoted(const ComplexMatrix& a, double rel_threshold) {
    return detail::householder_qr(a, true, rel_threshold);
}

// ---------------------------------------------------------------------------
// Linear solves
// ---------------------------------------------------------------------------

inline std::size_t numerical_rank(const ComplexMatrix& a, double rel_threshold = 1e-12) {
    const auto s = singular_values(a);
    if (s.empty() || s.front() == 0.0) return 0;
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [&](double x) { return x > rel_threshold * s.front(); }));
}

/// Solves A X = B by LU with partial pivoting.
inline ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (!a.is_square()) throw DimensionError("solve: coefficient matrix not square");
    if (a.rows() != b.rows()) throw DimensionError("solve: right-hand side row count mismatch");
    const std::size_t n = a.rows(), k = b.cols();
    ComplexMatrix lu = a;
    ComplexMatrix x = b;
    const double scale = max_abs(a);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        double best = std::abs(lu(c, c));
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(lu(r, c)) > best) {
                best = std::abs(lu(r, c));
                piv = r;
            }
        }
        if (best <= 1e-14 * scale || best == 0.0) {
            const std::size_t r = numerical_rank(a);
            throw RankDeficiencyError("solve: matrix is singular to working precision (rank " +
                                          std::to_string(r) + " of " + std::to_string(n) + ")",
                                      r);
        }
        if (piv != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(c, j), lu(piv, j));
            for (std::size_t j = 0; j < k; ++j) std::swap(x(c, j), x(piv, j));
        }
        const Complex d = lu(c, c);
        for (std::size_t r = c + 1; r < n; ++r) {
            const Complex f = lu(r, c) / d;
            if (f == Complex{}) continue;
            lu(r, c) = f;
            for (std::size_t j = c + 1; j < n; ++j) lu(r, j) -= f * lu(c, j);
            for (std::size_t j = 0; j < k; ++j) x(r, j) -= f * x(c, j);
        }
    }
    for (std::size_t c = n; c-- > 0;) {
        for (std::size_t j = 0; j < k; ++j) {
            Complex s = x(c, j);
            for (std::size_t q = c + 1; q < n; ++q) s -= lu(c, q) * x(q, j);
            x(c, j) = s / lu(c, c);
        }
    }
    return x;
}

inline ComplexMatrix inverse(const ComplexMatrix& a) {
    return solve(a, ComplexMatrix::identity(a.rows()));
}

/// Minimum-norm Tikhonov least squares: argmin ||A x - b||^2 + ridge ||x||^2.
inline ComplexMatrix least_squares(const ComplexMatrix& a, const ComplexMatrix& b, double ridge) {
    if (a.rows() != b.rows()) throw DimensionError("least_squares: row count mismatch");
    const Svd s = svd(a);
    const ComplexMatrix ub = adjoint_times(s.U, b);
    ComplexMatrix scaled = ub;
    for (std::size_t i = 0; i < s.singular_values.size(); ++i) {
        const double sigma = s.singular_values[i];
        const double f = sigma == 0.0 ? 0.0 : sigma / (sigma * sigma + ridge);
        for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= f;
    }
    return s.V * scaled;
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

/// Scaling and squaring with the [13/13] Pade approximant; scaling is chosen from the
/// spectral norm.
inline ComplexMatrix expm(const ComplexMatrix& a) {
    if (!a.is_square()) throw DimensionError("expm: matrix not square");
    const std::size_t n = a.rows();
    if (n == 0) return a;
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const double nrm = op_norm(a);
    int squarings = 0;
    if (nrm > theta13) squarings = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    ComplexMatrix x = a * Complex(std::ldexp(1.0, -squarings));

    const ComplexMatrix id = ComplexMatrix::identity(n);
    const ComplexMatrix x2 = x * x;
    const ComplexMatrix x4 = x2 * x2;
    const ComplexMatrix x6 = x4 * x2;

    ComplexMatrix u_inner = x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2);
    u_inner += b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id;
    const ComplexMatrix u = x * u_inner;
    ComplexMatrix v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2);
    v += b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;

    ComplexMatrix r = solve(v - u, v + u);
    for (int k = 0; k < squarings; ++k) r = r * r;
    return r;
}

inline double unitarity_defect(const ComplexMatrix& u) {
    return op_norm(adjoint_times(u, u) - ComplexMatrix::identity(u.cols()));
}

} // namespace opmodel
