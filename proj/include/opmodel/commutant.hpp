#pragma once

// Commutant of a compressed shift and the eigenvalue-one repair of a commuting symbol.
//
// A contraction T commuting with P_Q M_z|_Q is the compression of a bounded analytic
// symbol eta.  When T has no eigenvalue 1, eta can be modified on the constant
// eigenspace of eta(z) at 1 without changing the compression, producing a symbol of
// class C_E (contractive, no eigenvalue 1 anywhere in the disc).

#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "opmodel/cogenerator.hpp"
#include "opmodel/hardy.hpp"

namespace opmodel {

inline constexpr double eigenspace_kernel_threshold = 1e-7;
inline constexpr double commutant_ridge = 1e-12;

/// 16 points on |z| = 0.95 together with the origin.
inline std::vector<Complex> default_ce_grid() {
    std::vector<Complex> g{Complex{}};
    for (int k = 0; k < 16; ++k) g.push_back(std::polar(0.95, 2.0 * std::numbers::pi * k / 16.0));
    return g;
}

struct ClassCEWitness {
    OperatorSymbol symbol;
    double norm_bound_residual = 0.0;  // max(0, max_z ||psi(z)|| - 1)
    double eig1_margin = 0.0;          // min_z min_singular(psi(z) - I)
};

struct ClassCERejection {
    Complex z;
    ComplexMatrix vector;  // unit vector attaining the defect
    std::string reason;
    double value = 0.0;
};

struct ClassCEResult {
    bool accepted = false;
    ClassCEWitness witness;               // worst margins, filled in either case
    std::optional<ClassCERejection> rejection;
};

inline ClassCEResult in_class_CE(const OperatorSymbol& psi, const std::vector<Complex>& grid = default_ce_grid(),
                                 double tol = 1e-8, double eig_threshold = eigenvalue_one_tolerance) {
    if (grid.empty()) throw PreconditionError("in_class_CE: empty grid");
    ClassCEResult r;
    r.witness.symbol = psi;
    r.witness.eig1_margin = std::numeric_limits<double>::infinity();
    double worst_norm = 0.0;
    for (Complex z : grid) {
        if (std::abs(z) >= 1.0) throw DomainError("in_class_CE: grid point outside the open disc");
        const ComplexMatrix v = psi.evaluate(z);
        const Svd sv = svd(v);
        worst_norm = std::max(worst_norm, sv.singular_values.front());
        ComplexMatrix shifted = v;
        shifted.add_identity(-1.0);
        const Svd sd = svd(shifted);
        const double margin = sd.singular_values.back();
        r.witness.eig1_margin = std::min(r.witness.eig1_margin, margin);
        if (!r.rejection) {
            if (sv.singular_values.front() > 1.0 + tol) {
                r.rejection = ClassCERejection{z, sv.V.columns(std::vector<std::size_t>{0}), "norm exceeds 1", sv.singular_values.front()};
            } else if (margin <= eig_threshold) {
                r.rejection = ClassCERejection{z, sd.V.columns(std::vector<std::size_t>{sd.V.cols() - 1}), "1 is an eigenvalue", margin};
            }
        }
    }
    r.witness.norm_bound_residual = std::max(0.0, worst_norm - 1.0);
    r.accepted = !r.rejection.has_value();
    return r;
}

struct CommutantSolution {
    OperatorSymbol symbol;
    double residual = 0.0;  // ||compress(M_psi, Q) - T||
};

/// Least-squares symbol psi of degree <= max_degree with P_Q M_psi|_Q = T.
/// q lives in the degree-major truncation with coefficient space of dimension dim_e.
inline CommutantSolution commutant_solve(const SubspaceBasis& q, const ComplexMatrix& t, std::size_t max_degree,
                                         std::size_t dim_e = 1, double tol = 1e-8) {
    const std::size_t d = dim_e, r = q.dim();
    if (d == 0 || q.ambient_dim % d != 0) throw DimensionError("commutant_solve: ambient not a multiple of dim E");
    if (t.rows() != r || t.cols() != r) throw DimensionError("commutant_solve: T does not act on Q");
    const std::size_t n = q.ambient_dim / d;
    const ComplexMatrix mz = shift_matrix(TruncationParams{n, 0, tol}, d);
    const ComplexMatrix sc = compress(mz, q);
    const double comm = op_norm(commutator(t, sc));
    if (comm > tol) {
        throw PreconditionError("commutant_solve: T does not commute with the compressed shift (commutator " +
                                std::to_string(comm) + ")");
    }
    const double tn = op_norm(t);
    if (tn > 1.0 + tol) throw PreconditionError("commutant_solve: T is not a contraction (norm " + std::to_string(tn) + ")");
    const double inv = check_star_invariant(mz, q);
    if (inv > tol) {
        throw PreconditionError("commutant_solve: Q is not invariant under the backward shift (residual " +
                                std::to_string(inv) + ")");
    }

    // Column (k, a, b) of the design matrix is vec(F* (L^k (x) e_a e_b*) F).
    const std::size_t unknowns = (max_degree + 1) * d * d;
    ComplexMatrix design(r * r, unknowns);
    std::size_t col = 0;
    for (std::size_t k = 0; k <= max_degree; ++k) {
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b, ++col) {
                // image rows (m + k) d + a receive frame rows m d + b
                ComplexMatrix image(q.ambient_dim, r);
                for (std::size_t m = 0; m + k < n; ++m) {
                    for (std::size_t c = 0; c < r; ++c) image((m + k) * d + a, c) = q.frame(m * d + b, c);
                }
                const ComplexMatrix block = adjoint_times(q.frame, image);
                for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < r; ++j) design(i * r + j, col) = block(i, j);
                }
            }
        }
    }
    ComplexMatrix rhs(r * r, 1);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) rhs(i * r + j, 0) = t(i, j);
    }
    const ComplexMatrix x = least_squares(design, rhs, commutant_ridge);

    std::vector<ComplexMatrix> coeffs(max_degree + 1, ComplexMatrix(d, d));
    col = 0;
    for (std::size_t k = 0; k <= max_degree; ++k) {
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b, ++col) coeffs[k](a, b) = x(col, 0);
        }
    }
    CommutantSolution out;
    out.symbol = OperatorSymbol(d, std::move(coeffs));
    out.residual = op_norm(compress(toeplitz_of_symbol(out.symbol, TruncationParams{n, 0, tol}), q) - t);
    return out;
}

/// Orthonormal basis (columns) of the common eigenspace of eta(z) at 1 over the grid.
inline ComplexMatrix eigenspace_one(const OperatorSymbol& eta, const std::vector<Complex>& grid = default_ce_grid(),
                                    double tol = 1e-8, double kernel_threshold = eigenspace_kernel_threshold) {
    if (grid.empty()) throw PreconditionError("eigenspace_one: empty grid");
    const std::size_t d = eta.coeff_dim();
    ComplexMatrix basis = ComplexMatrix::identity(d);
    std::optional<std::size_t> pointwise_dim;
    for (Complex z : grid) {
        ComplexMatrix shifted = eta.evaluate(z);
        const double nrm = op_norm(shifted);
        if (nrm > 1.0 + tol) throw PreconditionError("eigenspace_one: symbol not contractive on the grid");
        shifted.add_identity(-1.0);
        const std::size_t here = kernel_basis(shifted, kernel_threshold).cols();
        if (pointwise_dim && *pointwise_dim != here) {
            throw InconsistencyError("eigenspace_one: eigenspace dimension at 1 varies across the grid");
        }
        pointwise_dim = here;
        if (basis.cols() > 0) {
            const ComplexMatrix k = kernel_basis(shifted * basis, kernel_threshold);
            basis = basis * k;
        }
    }
    if (basis.cols() != *pointwise_dim) {
        throw InconsistencyError("eigenspace_one: eigenspace at 1 moves with z");
    }
    for (Complex z : grid) {
        ComplexMatrix shifted = eta.evaluate(z);
        shifted.add_identity(-1.0);
        if (basis.cols() > 0 && op_norm(shifted * basis) > kernel_threshold) {
            throw InconsistencyError("eigenspace_one: computed eigenspace fails the residual check");
        }
    }
    return basis;
}

struct RepairResult {
    OperatorSymbol symbol;
    ComplexMatrix e1;   // columns span E_1
    ComplexMatrix e2;   // columns span E_2 = E_1 complement
};

/// psi = kappa (+) theta with respect to E = E_1 (+) E_2, where eta = I (+) theta.
/// kappa acts on E_1 in the coordinates of the returned e1 columns; empty means zero.
inline RepairResult repair_symbol(const OperatorSymbol& eta, std::optional<OperatorSymbol> kappa = std::nullopt,
                                  const std::vector<Complex>& grid = default_ce_grid(), double tol = 1e-8) {
    RepairResult out;
    const std::size_t d = eta.coeff_dim();
    out.e1 = eigenspace_one(eta, grid, tol);
    const std::size_t k = out.e1.cols();
    out.e2 = k == 0 ? ComplexMatrix::identity(d) : orthogonal_complement(out.e1);
    if (k == 0) {
        out.symbol = eta;
        return out;
    }
    if (!kappa) kappa = OperatorSymbol::zero(k);
    if (kappa->coeff_dim() != k) throw DimensionError("repair_symbol: kappa must act on E_1");
    if (!in_class_CE(*kappa, grid, tol).accepted) throw PreconditionError("repair_symbol: kappa is not in class C");

    const std::size_t deg = std::max(eta.degree(), kappa->degree());
    std::vector<ComplexMatrix> coeffs;
    coeffs.reserve(deg + 1);
    for (std::size_t j = 0; j <= deg; ++j) {
        const ComplexMatrix a = j <= eta.degree() ? eta.coefficients()[j] : ComplexMatrix(d, d);
        const double coupling =
            std::max(op_norm(adjoint_times(out.e2, a * out.e1)), op_norm(adjoint_times(out.e1, a * out.e2)));
        if (coupling > tol) {
            throw StructureError("repair_symbol: eta couples E_1 and E_2 (coefficient " + std::to_string(j) +
                                 ", coupling " + std::to_string(coupling) + ")");
        }
        const ComplexMatrix theta = adjoint_times(out.e2, a * out.e2);
        const ComplexMatrix kap = j <= kappa->degree() ? kappa->coefficients()[j] : ComplexMatrix(k, k);
        coeffs.push_back(out.e1 * kap * out.e1.adjoint() + out.e2 * theta * out.e2.adjoint());
    }
    out.symbol = OperatorSymbol(d, std::move(coeffs));
    return out;
}

/// Truncated M_{phi_t o psi}, computed as phi_t of the truncated Toeplitz matrix.
/// Truncations form an algebra, so this equals the Toeplitz matrix of phi_t o psi.
inline ComplexMatrix symbol_semigroup_matrix(const OperatorSymbol& psi, double t, const TruncationParams& p) {
    return semigroup_at(Contraction(toeplitz_of_symbol(psi, p)), t);
}

struct CommutingModel {
    SubspaceBasis q;                     // {a_0 + a_1 z : a_i in E} inside degrees < 4
    std::size_t dim_e = 0;
    std::vector<OperatorSymbol> symbols;      // z^E, psi_2, ..., psi_n
    std::vector<ComplexMatrix> cogenerators;  // compressions of the symbols to Q
};

inline constexpr std::size_t commuting_model_truncation = 4;

/// psi_j(z) = (B_{j,0} (+) 0) + z (0 (+) B_{j,1}) on E = E_0 (+) E_1.
inline CommutingModel build_commuting_model(const std::vector<ComplexMatrix>& b0, const std::vector<ComplexMatrix>& b1) {
    if (b0.size() != b1.size()) throw DimensionError("build_commuting_model: B families differ in length");
    if (b0.empty()) throw PreconditionError("build_commuting_model: need n >= 2");
    const std::size_t d0 = b0.front().rows(), d1 = b1.front().rows(), d = d0 + d1;
    for (std::size_t j = 0; j < b0.size(); ++j) {
        if (!b0[j].is_square() || b0[j].rows() != d0 || !b1[j].is_square() || b1[j].rows() != d1) {
            throw DimensionError("build_commuting_model: inconsistent B sizes");
        }
    }
    const TruncationParams p{commuting_model_truncation, 0, 1e-9};
    CommutingModel m;
    m.dim_e = d;
    ComplexMatrix f(p.degree_cut * d, 2 * d);
    for (std::size_t i = 0; i < 2 * d; ++i) f(i, i) = 1.0;
    m.q = SubspaceBasis(std::move(f));
    m.symbols.push_back(OperatorSymbol::coordinate(d));
    for (std::size_t j = 0; j < b0.size(); ++j) {
        m.symbols.push_back(OperatorSymbol(
            d, {direct_sum(b0[j], ComplexMatrix(d1, d1)), direct_sum(ComplexMatrix(d0, d0), b1[j])}));
    }
    for (const auto& s : m.symbols) m.cogenerators.push_back(compress(toeplitz_of_symbol(s, p), m.q));
    return m;
}

/// Random instance: each B_{j,i} is a polynomial in one random contraction C_i, with
/// coefficient l1-norm at most 0.9 on E_0 (so no eigenvalue 1) and at most 1 on E_1.
inline CommutingModel build_commuting_model(std::size_t n, std::size_t dim_e0, std::size_t dim_e1, Rng& rng) {
    if (n < 2) throw PreconditionError("build_commuting_model: need n >= 2");
    const ComplexMatrix c0 = random_with_norm(rng, dim_e0, uniform(rng, 0.3, 1.0));
    const ComplexMatrix c1 = random_with_norm(rng, dim_e1, uniform(rng, 0.3, 1.0));
    auto poly = [&](const ComplexMatrix& c, double budget) {
        constexpr std::size_t degree = 3;
        std::vector<Complex> a(degree + 1);
        double l1 = 0.0;
        for (auto& x : a) {
            x = gaussian_complex(rng);
            l1 += std::abs(x);
        }
        const double scale = budget * uniform(rng, 0.2, 1.0) / l1;
        ComplexMatrix out(c.rows(), c.rows());
        ComplexMatrix pw = ComplexMatrix::identity(c.rows());
        for (std::size_t k = 0; k <= degree; ++k) {
            out += pw * (a[k] * scale);
            pw = pw * c;
        }
        return out;
    };
    std::vector<ComplexMatrix> b0, b1;
    for (std::size_t j = 1; j < n; ++j) {
        b0.push_back(poly(c0, 0.9));
        b1.push_back(poly(c1, 1.0));
    }
    return build_commuting_model(b0, b1);
}

} // namespace opmodel
