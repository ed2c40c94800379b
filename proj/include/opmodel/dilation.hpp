#pragma once

// Minimal isometric dilation of a doubly commuting pure tuple into the truncated
// polydisc Hardy space tensored with the defect space D_{T*}:
//
//   (Omega h)[m] = D_E (T*)^m h,   m in the box m_j < N_j,
//
// where D_E is D = (prod_j (I - T_j T_j*))^{1/2} written in an orthonormal basis of
// its range.  Truncation errors are controlled by tau_j = ||T_j*^{N_j}||.

#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "opmodel/cogenerator.hpp"
#include "opmodel/hardy.hpp"

namespace opmodel {

namespace detail {

inline std::string sci(double x) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

} // namespace detail

inline constexpr double rank_threshold = 1e-9;
inline constexpr double span_rank_tolerance = 1e-8;
/// Allowance added to a priori bounds for floating-point error in the residuals themselves.
inline constexpr double roundoff_allowance = 1e-12;

struct DefectOperator {
    ComplexMatrix d;          // D = psd_sqrt(prod (I - T_j T_j*))
    SubspaceBasis basis;      // orthonormal basis of range(D)
    std::size_t dim() const { return basis.dim(); }
};

/// Max over pairs of ||[T_i, T_j]|| and ||[T_i*, T_j]||.
inline double doubly_commuting_defect(const std::vector<ComplexMatrix>& ts) {
    double worst = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        for (std::size_t j = 0; j < ts.size(); ++j) {
            if (i == j) continue;
            if (i < j) worst = std::max(worst, op_norm(commutator(ts[i], ts[j])));
            worst = std::max(worst, op_norm(commutator(ts[i].adjoint(), ts[j])));
        }
    }
    return worst;
}

inline DefectOperator defect_operator(const std::vector<ComplexMatrix>& ts, double tol = 1e-8) {
    if (ts.empty()) throw PreconditionError("defect_operator: empty tuple");
    const std::size_t h = ts.front().rows();
    for (const auto& t : ts) {
        if (!t.is_square() || t.rows() != h) throw DimensionError("defect_operator: matrices of different sizes");
    }
    const double dc = doubly_commuting_defect(ts);
    if (dc > tol) throw PreconditionError("defect_operator: tuple is not doubly commuting (" + detail::sci(dc) + ")");
    for (std::size_t j = 0; j < ts.size(); ++j) {
        if (!is_pure(Contraction(ts[j], tol))) {
            throw PreconditionError("defect_operator: T_" + std::to_string(j + 1) + " is not pure");
        }
    }
    ComplexMatrix prod = ComplexMatrix::identity(h);
    for (const auto& t : ts) prod = prod * (ComplexMatrix::identity(h) - t * t.adjoint());
    // The rank cut is applied to the eigenvalues of D^2: taking the square root first
    // would lift roundoff of order 1e-16 to singular values of order 1e-8.
    const HermitianEigen eig = herm_eig((prod + prod.adjoint()) * Complex(0.5), 1e-6);
    const double top = std::max(eig.values.back(), 0.0);
    if (eig.values.front() < -std::max(psd_clip_tolerance, tol)) {
        throw PreconditionError("defect_operator: defect product has eigenvalue " + detail::sci(eig.values.front()) +
                                "; double commutativity fails");
    }
    DefectOperator out;
    ComplexMatrix scaled = eig.vectors;
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < h; ++k) {
        const double lam = eig.values[k];
        const double root = lam > rank_threshold * top ? std::sqrt(lam) : 0.0;
        if (root > 0.0) kept.push_back(k);
        for (std::size_t r = 0; r < h; ++r) scaled(r, k) *= root;
    }
    out.d = scaled * eig.vectors.adjoint();
    out.basis = SubspaceBasis(eig.vectors.columns(kept));
    return out;
}

/// Row layout of the truncated H^2(D^n) (x) E: multi-index m (leg 0 slowest), then E.
struct BoxLayout {
    std::vector<std::size_t> degrees;  // N_j
    std::size_t coeff_dim = 1;         // dim E

    std::size_t size() const {
        std::size_t s = coeff_dim;
        for (auto n : degrees) s *= n;
        return s;
    }
    std::size_t stride(std::size_t j) const {
        std::size_t s = coeff_dim;
        for (std::size_t i = j + 1; i < degrees.size(); ++i) s *= degrees[i];
        return s;
    }
    std::size_t degree_of(std::size_t row, std::size_t j) const { return (row / stride(j)) % degrees[j]; }
};

/// Applies the lower-triangular Toeplitz operator with coefficients c along leg j to the
/// rows of x, or its adjoint.  With c = (0, 1) this is M_{z_j} (x) I.
inline ComplexMatrix apply_leg_toeplitz(const BoxLayout& lay, const ComplexMatrix& x, std::size_t j,
                                        const std::vector<Complex>& c, bool adjoint) {
    if (x.rows() != lay.size()) throw DimensionError("apply_leg_toeplitz: row count does not match layout");
    const std::size_t st = lay.stride(j), nj = lay.degrees[j], cols = x.cols();
    ComplexMatrix y(x.rows(), cols);
    for (std::size_t row = 0; row < x.rows(); ++row) {
        const std::size_t mj = lay.degree_of(row, j);
        const std::size_t reach = adjoint ? nj - 1 - mj : mj;
        for (std::size_t k = 0; k <= reach && k < c.size(); ++k) {
            const Complex ck = adjoint ? std::conj(c[k]) : c[k];
            if (ck == Complex{}) continue;
            const std::size_t src = adjoint ? row + k * st : row - k * st;
            for (std::size_t col = 0; col < cols; ++col) y(row, col) += ck * x(src, col);
        }
    }
    return y;
}

inline std::vector<Complex> shift_coefficients() { return {Complex{}, Complex(1.0)}; }

inline std::vector<Complex> phi_complex_coeffs(double t, std::size_t n) {
    const auto c = phi_coeffs(t, n);
    return {c.begin(), c.end()};
}

struct DilationResidualBounds {
    double isometry = 0.0;                 // tau^2
    std::vector<double> intertwining;      // tau_j
    std::vector<double> compression;       // tau^2 + tau_j
};

struct DilationResult {
    std::size_t n = 0;
    std::size_t h_dim = 0;
    std::size_t defect_dim = 0;
    BoxLayout layout;
    ComplexMatrix omega;
    ComplexMatrix defect_coords;   // D_E = basis* D, defect_dim x h
    std::vector<double> leg_tails; // tau_j = ||T_j*^{N_j}||
    double tail_bound = 0.0;       // tau = sqrt(sum tau_j^2)
    DilationResidualBounds bounds;
    double isometry_defect = 0.0;
    // ||I - Omega* Omega|| from the telescoped identity I - prod_j (I - T_j^{N_j} T_j*^{N_j}),
    // expanded by inclusion-exclusion so that tiny tails do not cancel against I.
    double truncated_mass = 0.0;
    std::vector<double> intertwining;       // ||Omega T_j* - (M_{z_j} (x) I)* Omega||
    std::vector<double> compression;        // ||Omega* (M_{z_j} (x) I) Omega - T_j||
    std::vector<double> star_invariance;    // ||(I - P_Q)(M_{z_j} (x) I)* P_Q||, Q = range(Omega)
};

struct DilationOptions {
    /// Explicit N_j per leg; empty selects the smallest N_j with tau_j <= tail_target / sqrt(n).
    std::vector<std::size_t> truncation;
    std::size_t truncation_cap = 64;
    double tail_target = 1e-9;
    std::size_t max_ambient = 6000;
    double tol = 1e-8;
};

namespace detail {

inline std::vector<ComplexMatrix> adjoint_powers(const ComplexMatrix& t, std::size_t count) {
    std::vector<ComplexMatrix> p;
    p.reserve(count);
    p.push_back(ComplexMatrix::identity(t.rows()));
    const ComplexMatrix ta = t.adjoint();
    for (std::size_t k = 1; k < count; ++k) p.push_back(p.back() * ta);
    return p;
}

} // namespace detail

inline DilationResult dilation_isometry(const std::vector<ComplexMatrix>& ts, const DilationOptions& opt = {}) {
    const DefectOperator def = defect_operator(ts, opt.tol);
    const std::size_t n = ts.size(), h = ts.front().rows();
    DilationResult r;
    r.n = n;
    r.h_dim = h;
    r.defect_dim = def.dim();
    r.defect_coords = adjoint_times(def.basis.frame, def.d);

    std::vector<std::size_t> trunc = opt.truncation;
    const double per_leg = opt.tail_target / std::sqrt(static_cast<double>(n));
    if (trunc.empty()) {
        for (const auto& t : ts) {
            ComplexMatrix p = t.adjoint();
            std::size_t k = 1;
            while (op_norm(p) > per_leg) {
                if (k >= opt.truncation_cap) {
                    throw TruncationError("dilation_isometry: tail ||T*^N|| = " + detail::sci(op_norm(p)) +
                                              " still above the target " + detail::sci(per_leg) + " at the truncation cap N = " +
                                              std::to_string(opt.truncation_cap) + "; raise the cap",
                                          op_norm(p));
                }
                p = p * t.adjoint();
                ++k;
            }
            trunc.push_back(k);
        }
    }
    if (trunc.size() != n) throw DimensionError("dilation_isometry: need one truncation per leg");
    double tau2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double tj = op_norm(matrix_power(ts[j].adjoint(), trunc[j]));
        r.leg_tails.push_back(tj);
        tau2 += tj * tj;
    }
    r.tail_bound = std::sqrt(tau2);
    if (r.tail_bound > opt.tail_target) {
        throw TruncationError("dilation_isometry: tail bound " + detail::sci(r.tail_bound) + " exceeds " +
                                  detail::sci(opt.tail_target) + "; use a larger truncation",
                              r.tail_bound);
    }
    r.layout = BoxLayout{trunc, r.defect_dim};
    if (r.layout.size() > opt.max_ambient) {
        throw PreconditionError("dilation_isometry: dilation space of dimension " + std::to_string(r.layout.size()) +
                                " exceeds the limit " + std::to_string(opt.max_ambient));
    }

    // Omega row block for multi-index m is D_E prod_j (T_j*)^{m_j}, built leg by leg.
    std::vector<std::vector<ComplexMatrix>> pw;
    for (std::size_t j = 0; j < n; ++j) pw.push_back(detail::adjoint_powers(ts[j], trunc[j]));
    r.omega = ComplexMatrix(r.layout.size(), h);
    std::vector<ComplexMatrix> partial{r.defect_coords};  // partial[j] = D_E prod_{i<j} (T_i*)^{m_i}
    std::vector<std::size_t> m(n, 0);
    std::size_t block = 0;
    const std::function<void(std::size_t, const ComplexMatrix&)> walk = [&](std::size_t j, const ComplexMatrix& acc) {
        if (j == n) {
            r.omega.set_block(block * r.defect_dim, 0, acc);
            ++block;
            return;
        }
        for (std::size_t k = 0; k < trunc[j]; ++k) walk(j + 1, acc * pw[j][k]);
    };
    walk(0, r.defect_coords);

    r.bounds.isometry = tau2;
    r.isometry_defect = op_norm(adjoint_times(r.omega, r.omega) - ComplexMatrix::identity(h));
    {
        std::vector<ComplexMatrix> a;
        for (std::size_t j = 0; j < n; ++j) {
            const ComplexMatrix p = matrix_power(ts[j], trunc[j]);
            a.push_back(p * p.adjoint());
        }
        ComplexMatrix mass(h, h);
        for (std::size_t subset = 1; subset < (std::size_t{1} << n); ++subset) {
            ComplexMatrix term = ComplexMatrix::identity(h);
            int count = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (subset & (std::size_t{1} << j)) {
                    term = term * a[j];
                    ++count;
                }
            }
            mass += term * Complex(count % 2 == 1 ? 1.0 : -1.0);
        }
        r.truncated_mass = op_norm(mass);
    }
    const Qr q = qr(r.omega);
    for (std::size_t j = 0; j < n; ++j) {
        const ComplexMatrix down = apply_leg_toeplitz(r.layout, r.omega, j, shift_coefficients(), true);
        r.intertwining.push_back(op_norm(r.omega * ts[j].adjoint() - down));
        const ComplexMatrix up = apply_leg_toeplitz(r.layout, r.omega, j, shift_coefficients(), false);
        r.compression.push_back(op_norm(adjoint_times(r.omega, up) - ts[j]));
        const ComplexMatrix qd = apply_leg_toeplitz(r.layout, q.Q, j, shift_coefficients(), true);
        r.star_invariance.push_back(op_norm(qd - q.Q * adjoint_times(q.Q, qd)));
        r.bounds.intertwining.push_back(r.leg_tails[j]);
        r.bounds.compression.push_back(tau2 + r.leg_tails[j]);
    }
    return r;
}

struct SemigroupDilationCheck {
    double time = 0.0;
    std::size_t leg = 0;
    double residual = 0.0;  // ||Omega T_{j,t}* - (phi_t(M_{z_j}) (x) I)* Omega||
    double bound = 0.0;     // a priori tail estimate
};

/// sum_{k<N} |c_k| tau_j + sum_{k>=N} |c_k| ||T_j*^k||, the second sum truncated once the
/// powers are negligible and closed with a geometric remainder.
inline double semigroup_tail_bound(const ComplexMatrix& t, std::size_t n_j, double time) {
    constexpr std::size_t extra = 400;
    const auto c = phi_coeffs(time, n_j + extra + 1);
    ComplexMatrix p = matrix_power(t.adjoint(), n_j);
    const double tau = op_norm(p);
    double head = 0.0;
    for (std::size_t k = 0; k < n_j; ++k) head += std::abs(c[k]);
    double tail = 0.0;
    double last = tau;
    for (std::size_t k = n_j; k <= n_j + extra; ++k) {
        last = op_norm(p);
        tail += std::abs(c[k]) * last;
        if (last == 0.0) break;
        p = p * t.adjoint();
    }
    // ||T*^{K + i}|| <= ||T*^K|| tau^{floor(i / N)}, |c_k| <= 1
    if (last > 0.0) tail += tau < 1.0 ? last * static_cast<double>(n_j) / (1.0 - tau) : std::numeric_limits<double>::infinity();
    return head * tau + tail;
}

inline std::vector<SemigroupDilationCheck> verify_semigroup_dilation(const DilationResult& r,
                                                                     const std::vector<ComplexMatrix>& ts,
                                                                     const std::vector<double>& times) {
    std::vector<SemigroupDilationCheck> out;
    for (double t : times) {
        for (std::size_t j = 0; j < r.n; ++j) {
            SemigroupDilationCheck c;
            c.time = t;
            c.leg = j;
            if (t == 0.0) {
                out.push_back(c);
                continue;
            }
            const ComplexMatrix tt = semigroup_at(Contraction(ts[j], 1e-8), t);
            const auto coeffs = phi_complex_coeffs(t, r.layout.degrees[j]);
            const ComplexMatrix down = apply_leg_toeplitz(r.layout, r.omega, j, coeffs, true);
            c.residual = op_norm(r.omega * tt.adjoint() - down);
            c.bound = semigroup_tail_bound(ts[j], r.layout.degrees[j], t);
            out.push_back(c);
        }
    }
    return out;
}

namespace detail {

// r generators per multi-index: (M_z^m (x) I) Omega h_e with h_e = D_E* e.  Their span is
// contained in the full span, so defects computed from it are upper bounds.
inline ComplexMatrix seed_vectors(const DilationResult& r) { return r.omega * r.defect_coords.adjoint(); }

inline std::vector<std::size_t> margin_rows(const BoxLayout& lay, std::size_t headroom) {
    std::vector<std::size_t> rows;
    for (std::size_t row = 0; row < lay.size(); ++row) {
        bool inside = true;
        for (std::size_t j = 0; j < lay.degrees.size(); ++j) {
            if (lay.degree_of(row, j) + headroom >= lay.degrees[j] && headroom > 0) inside = false;
        }
        if (inside) rows.push_back(row);
    }
    return rows;
}

// Applies, for every multi-index k in the box k_j < count_j, the product over legs of
// op_j(k_j) to the columns of x, and concatenates the results.
inline ComplexMatrix sweep_generators(const BoxLayout& lay, const ComplexMatrix& x,
                                      const std::vector<std::vector<std::vector<Complex>>>& leg_coeffs) {
    std::vector<ComplexMatrix> cur{x};
    for (std::size_t j = 0; j < lay.degrees.size(); ++j) {
        std::vector<ComplexMatrix> next;
        for (const auto& g : cur) {
            for (const auto& c : leg_coeffs[j]) next.push_back(apply_leg_toeplitz(lay, g, j, c, false));
        }
        cur = std::move(next);
    }
    std::size_t cols = 0;
    for (const auto& g : cur) cols += g.cols();
    ComplexMatrix out(lay.size(), cols);
    std::size_t at = 0;
    for (const auto& g : cur) {
        out.set_block(0, at, g);
        at += g.cols();
    }
    return out;
}

inline std::vector<Complex> monomial(std::size_t k) {
    std::vector<Complex> c(k + 1);
    c[k] = 1.0;
    return c;
}

} // namespace detail

struct MinimalityReport {
    double defect = 0.0;        // ||(I - P_span) restricted to the margin||
    std::size_t rank = 0;       // numerical rank of the power generators
    std::size_t ambient = 0;
};

/// Defect of span{(M_z^m (x) I) Omega H : m_j <= max_power} on the margin.
inline MinimalityReport minimality_defect(const DilationResult& r, std::size_t max_power, std::size_t headroom = 1) {
    std::vector<std::vector<std::vector<Complex>>> legs(r.n);
    for (std::size_t j = 0; j < r.n; ++j) {
        for (std::size_t k = 0; k <= max_power && k < r.layout.degrees[j]; ++k) legs[j].push_back(detail::monomial(k));
    }
    const ComplexMatrix gens = detail::sweep_generators(r.layout, detail::seed_vectors(r), legs);
    const Qr q = qr_pivoted(gens, span_rank_tolerance);
    MinimalityReport out;
    out.rank = q.rank;
    out.ambient = r.layout.size();
    const auto rows = detail::margin_rows(r.layout, headroom);
    ComplexMatrix sel(r.layout.size(), rows.size());
    for (std::size_t c = 0; c < rows.size(); ++c) sel(rows[c], c) = 1.0;
    out.defect = op_norm(sel - q.Q * adjoint_times(q.Q, sel));
    return out;
}

struct SpanRankComparison {
    std::size_t power_rank = 0;
    std::size_t time_rank = 0;
    bool equal() const { return power_rank == time_rank; }
};

/// Ranks of the spans over integer powers m_j < N_j and over times t = 0.3 k, k < 2 N_j,
/// of the dilation tuple applied to Omega(H).
inline SpanRankComparison power_vs_time_span_ranks(const DilationResult& r, double step = 0.3) {
    std::vector<std::vector<std::vector<Complex>>> powers(r.n), times(r.n);
    for (std::size_t j = 0; j < r.n; ++j) {
        const std::size_t nj = r.layout.degrees[j];
        for (std::size_t k = 0; k < nj; ++k) powers[j].push_back(detail::monomial(k));
        // Each leg's family phi_t(M_z) spans the Toeplitz operators whose coefficient
        // vectors lie in span{c(t_k)}; an orthonormal basis of that span gives the same
        // joint span without multiplying the legs' conditioning.
        ComplexMatrix c(nj, 2 * nj);
        for (std::size_t k = 0; k < 2 * nj; ++k) {
            const auto ck = phi_coeffs(step * static_cast<double>(k), nj);
            for (std::size_t i = 0; i < nj; ++i) c(i, k) = ck[i];
        }
        const Qr f = qr_pivoted(c, span_rank_tolerance);
        for (std::size_t k = 0; k < f.rank; ++k) {
            std::vector<Complex> v(nj);
            for (std::size_t i = 0; i < nj; ++i) v[i] = f.Q(i, k);
            times[j].push_back(std::move(v));
        }
    }
    const ComplexMatrix seeds = detail::seed_vectors(r);
    SpanRankComparison out;
    out.power_rank = qr_pivoted(detail::sweep_generators(r.layout, seeds, powers), span_rank_tolerance).rank;
    out.time_rank = qr_pivoted(detail::sweep_generators(r.layout, seeds, times), span_rank_tolerance).rank;
    return out;
}

// ---------------------------------------------------------------------------
// Tensor invariant subspaces of the truncated polydisc Hardy space (scalar case)
// ---------------------------------------------------------------------------

struct TensorSubspaceReport {
    std::vector<double> star_invariance;     // per leg
    double double_commutation = 0.0;         // max over pairs of ||[C_i*, C_j]|| and ||[C_i, C_j]||
    std::size_t worst_i = 0, worst_j = 0;    // pair attaining it
    bool doubly_commuting = false;
    std::vector<SubspaceBasis> factors;      // when doubly commuting
    double factorization_residual = 0.0;     // ||P_Q - P_{Q_1} (x) ... (x) P_{Q_n}||
};

inline TensorSubspaceReport tensor_invariant_subspace_check(const SubspaceBasis& q, const std::vector<std::size_t>& degrees,
                                                            double tol = 1e-8) {
    const std::size_t n = degrees.size();
    if (n == 0 || n > 3) throw PreconditionError("tensor_invariant_subspace_check: supports 1 to 3 legs");
    const BoxLayout lay{degrees, 1};
    if (q.ambient_dim != lay.size()) throw DimensionError("tensor_invariant_subspace_check: frame does not match the box");
    TensorSubspaceReport rep;
    std::vector<ComplexMatrix> comp;
    for (std::size_t j = 0; j < n; ++j) {
        const ComplexMatrix down = apply_leg_toeplitz(lay, q.frame, j, shift_coefficients(), true);
        rep.star_invariance.push_back(op_norm(down - q.frame * adjoint_times(q.frame, down)));
        if (rep.star_invariance.back() > tol) {
            throw PreconditionError("tensor_invariant_subspace_check: Q is not invariant under M_{z_" +
                                    std::to_string(j + 1) + "}* (" + detail::sci(rep.star_invariance.back()) + ")");
        }
        comp.push_back(adjoint_times(q.frame, apply_leg_toeplitz(lay, q.frame, j, shift_coefficients(), false)));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = std::max(op_norm(commutator(comp[i].adjoint(), comp[j])), op_norm(commutator(comp[i], comp[j])));
            if (v > rep.double_commutation) {
                rep.double_commutation = v;
                rep.worst_i = i;
                rep.worst_j = j;
            }
        }
    }
    rep.doubly_commuting = rep.double_commutation <= tol;
    if (!rep.doubly_commuting) return rep;

    // Leg factors: ranges of the mode-j unfoldings of the frame tensor.
    ComplexMatrix tensor_frame = ComplexMatrix::identity(1);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t st = lay.stride(j), nj = degrees[j];
        const std::size_t others = lay.size() / nj;
        ComplexMatrix unfold(nj, others * q.dim());
        for (std::size_t row = 0; row < lay.size(); ++row) {
            const std::size_t mj = lay.degree_of(row, j);
            const std::size_t rest = (row / (st * nj)) * st + row % st;
            for (std::size_t c = 0; c < q.dim(); ++c) unfold(mj, rest * q.dim() + c) = q.frame(row, c);
        }
        rep.factors.emplace_back(range_basis(unfold, 1e-8));
        tensor_frame = kron(tensor_frame, rep.factors.back().frame);
    }
    // ||P_Q - P_T|| is the sine of the largest principal angle when the dimensions agree.
    if (tensor_frame.cols() != q.dim()) {
        rep.factorization_residual = 1.0;
    } else {
        const ComplexMatrix off = tensor_frame - q.frame * adjoint_times(q.frame, tensor_frame);
        rep.factorization_residual = op_norm(off);
    }
    return rep;
}

/// Frame of Q_1 (x) ... (x) Q_n.
inline SubspaceBasis tensor_subspace(const std::vector<SubspaceBasis>& factors) {
    ComplexMatrix f = ComplexMatrix::identity(1);
    for (const auto& q : factors) f = kron(f, q.frame);
    return SubspaceBasis(std::move(f));
}

// ---------------------------------------------------------------------------
// Test tuples: T_j = W (I (x) .. (x) C_j (x) .. (x) I) W*
// ---------------------------------------------------------------------------

/// Doubly commuting tuple from one factor per leg, conjugated by the unitary w
/// (identity when w is empty).
inline std::vector<ComplexMatrix> tensor_tuple(const std::vector<ComplexMatrix>& factors, const ComplexMatrix& w = {}) {
    std::vector<ComplexMatrix> out;
    for (std::size_t j = 0; j < factors.size(); ++j) {
        std::vector<ComplexMatrix> parts;
        for (std::size_t i = 0; i < factors.size(); ++i) {
            parts.push_back(i == j ? factors[i] : ComplexMatrix::identity(factors[i].rows()));
        }
        ComplexMatrix t = kron_all(parts);
        if (w.rows() > 0) t = w * t * w.adjoint();
        out.push_back(std::move(t));
    }
    return out;
}

/// Smallest N with ||C*^N|| <= target, or cap + 1 if none up to cap.
inline std::size_t tail_degree(const ComplexMatrix& c, double target, std::size_t cap) {
    ComplexMatrix p = c.adjoint();
    for (std::size_t k = 1; k <= cap; ++k) {
        if (op_norm(p) <= target) return k;
        p = p * c.adjoint();
    }
    return cap + 1;
}

/// One pure factor: a tiny scalar, a conjugated nilpotent Jordan block, or a small
/// random 2 x 2 contraction.
inline ComplexMatrix random_pure_factor(Rng& rng) {
    switch (uniform_index(rng, 0, 2)) {
    case 0:
        return ComplexMatrix(1, 1, std::polar(uniform(rng, 0.005, 0.05), uniform(rng, 0.0, 2.0 * std::numbers::pi)));
    case 1: {
        const std::size_t d = uniform_index(rng, 2, 4);
        ComplexMatrix j(d, d);
        for (std::size_t k = 0; k + 1 < d; ++k) j(k + 1, k) = 1.0;
        const ComplexMatrix v = random_unitary(rng, d);
        return v * j * v.adjoint();
    }
    default:
        return random_with_norm(rng, 2, uniform(rng, 0.01, 0.06));
    }
}

/// Random doubly commuting pure tuple whose dilation space (at the default tail
/// target) has dimension at most max_ambient.
inline std::vector<ComplexMatrix> random_pure_tuple(Rng& rng, std::size_t n, std::size_t max_ambient = 600,
                                                    double tail_target = 1e-9) {
    const double per_leg = tail_target / std::sqrt(static_cast<double>(n));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<ComplexMatrix> factors;
        std::size_t ambient = 1;
        for (std::size_t j = 0; j < n; ++j) {
            factors.push_back(random_pure_factor(rng));
            const ComplexMatrix& c = factors.back();
            const ComplexMatrix dd = ComplexMatrix::identity(c.rows()) - c * c.adjoint();
            ambient *= tail_degree(c, per_leg, 64) * numerical_rank(dd, rank_threshold);
        }
        if (ambient > max_ambient) continue;
        std::size_t h = 1;
        for (const auto& f : factors) h *= f.rows();
        return tensor_tuple(factors, random_unitary(rng, h));
    }
    throw PreconditionError("random_pure_tuple: no tuple within the size budget");
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline constexpr std::size_t inline_matrix_limit = 4096;  // entries

/// Residuals, bounds and dimensions; omega inline when small, else written next to
/// sidecar_dir and referenced by file name.
inline nlohmann::json dilation_to_json(const DilationResult& r, const std::optional<std::filesystem::path>& sidecar = {}) {
    nlohmann::json j{{"n", r.n},
                     {"h_dim", r.h_dim},
                     {"defect_dim", r.defect_dim},
                     {"truncation", r.layout.degrees},
                     {"leg_tails", r.leg_tails},
                     {"tail_bound", r.tail_bound},
                     {"isometry_defect", r.isometry_defect},
                     {"truncated_mass", r.truncated_mass},
                     {"intertwining", r.intertwining},
                     {"compression", r.compression},
                     {"star_invariance", r.star_invariance},
                     {"bounds",
                      {{"isometry", r.bounds.isometry},
                       {"intertwining", r.bounds.intertwining},
                       {"compression", r.bounds.compression}}}};
    if (r.omega.size() <= inline_matrix_limit) {
        j["omega"] = matrix_to_json(r.omega);
    } else if (sidecar) {
        write_json_file(*sidecar, matrix_to_json(r.omega));
        j["omega_file"] = sidecar->filename().string();
    } else {
        j["omega_file"] = nullptr;
    }
    return j;
}

} // namespace opmodel
