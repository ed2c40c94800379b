#pragma once

// Spectral models for commuting normal contractions and their semigroups.
// At finite dimension the measure space is the eigenbasis with counting measure.

#include <algorithm>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "opmodel/cogenerator.hpp"

namespace opmodel {

inline constexpr double cluster_threshold = 1e-6;
inline constexpr double atom_at_one_tolerance = 1e-8;

struct JointDiagonalization {
    ComplexMatrix gamma;                          // unitary; T_j = gamma diag(values[j]) gamma*
    std::vector<std::vector<Complex>> values;     // values[j][k]
    double off_diagonal_residual = 0.0;           // max_j ||offdiag(gamma* T_j gamma)||_F
};

namespace detail {

inline double off_diagonal_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (i != j) s += std::norm(a(i, j));
        }
    }
    return std::sqrt(s);
}

inline bool all_scalar(const std::vector<ComplexMatrix>& ts, double tol) {
    for (const auto& t : ts) {
        const Complex mean = trace(t) / static_cast<double>(t.rows());
        ComplexMatrix d = t;
        d.add_identity(-mean);
        if (frobenius_norm(d) > tol) return false;
    }
    return true;
}

// Orthonormal basis (columns) of the ambient space diagonalizing every t in ts.
inline ComplexMatrix joint_eigenbasis(const std::vector<ComplexMatrix>& ts, Rng& rng, double scale, int depth) {
    const std::size_t n = ts.front().rows();
    if (n == 1 || all_scalar(ts, 1e-10 * scale)) return ComplexMatrix::identity(n);
    if (depth > 12) throw DecompositionError("joint_diagonalize: degenerate clusters do not split");

    ComplexMatrix h(n, n);
    for (const auto& t : ts) {
        const ComplexMatrix ta = t.adjoint();
        const ComplexMatrix re = (t + ta) * Complex(0.5);
        const ComplexMatrix im = (t - ta) * Complex(0.0, -0.5);
        h += re * Complex(uniform(rng, -1.0, 1.0)) + im * Complex(uniform(rng, -1.0, 1.0));
    }
    const HermitianEigen eig = herm_eig(h, 1e-8);

    ComplexMatrix basis(n, n);
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && eig.values[end] - eig.values[end - 1] <= cluster_threshold * scale) ++end;
        std::vector<std::size_t> idx(end - start);
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = start + k;
        const ComplexMatrix v = eig.vectors.columns(idx);
        ComplexMatrix sub = v;
        if (idx.size() > 1) {
            std::vector<ComplexMatrix> restricted;
            for (const auto& t : ts) restricted.push_back(adjoint_times(v, t * v));
            sub = v * joint_eigenbasis(restricted, rng, scale, depth + 1);
        }
        basis.set_block(0, start, sub);
        start = end;
    }
    return basis;
}

} // namespace detail

/// Simultaneous unitary diagonalization of commuting normal matrices: diagonalize a
/// random Hermitian combination, then recurse inside clusters of nearly equal eigenvalues.
inline JointDiagonalization joint_diagonalize(const std::vector<ComplexMatrix>& ts, std::uint64_t seed = 0x5eed,
                                              double tol = 1e-8) {
    if (ts.empty()) throw PreconditionError("joint_diagonalize: empty tuple");
    const std::size_t n = ts.front().rows();
    double scale = 0.0;
    for (const auto& t : ts) {
        if (!t.is_square() || t.rows() != n) throw DimensionError("joint_diagonalize: matrices of different sizes");
        scale = std::max(scale, op_norm(t));
    }
    const double rel = tol * std::max(1.0, scale);
    for (std::size_t j = 0; j < ts.size(); ++j) {
        const double nd = op_norm(commutator(ts[j], ts[j].adjoint()));
        if (nd > rel) throw PreconditionError("joint_diagonalize: T_" + std::to_string(j + 1) + " is not normal (" + std::to_string(nd) + ")");
        for (std::size_t i = 0; i < j; ++i) {
            const double c = op_norm(commutator(ts[i], ts[j]));
            if (c > rel) {
                throw PreconditionError("joint_diagonalize: T_" + std::to_string(i + 1) + " and T_" +
                                        std::to_string(j + 1) + " do not commute (" + std::to_string(c) + ")");
            }
        }
    }
    Rng rng(seed);
    JointDiagonalization out;
    out.gamma = detail::joint_eigenbasis(ts, rng, std::max(scale, 1e-300), 0);
    for (const auto& t : ts) {
        const ComplexMatrix d = adjoint_times(out.gamma, t * out.gamma);
        out.off_diagonal_residual = std::max(out.off_diagonal_residual, detail::off_diagonal_norm(d));
        std::vector<Complex> v(n);
        for (std::size_t k = 0; k < n; ++k) v[k] = d(k, k);
        out.values.push_back(std::move(v));
    }
    return out;
}

/// Counting measure on eigenbasis indices, with psi_j(x_k) the joint eigenvalues.
struct DiscreteMeasureModel {
    std::vector<std::size_t> atoms;
    std::vector<double> weights;
    std::vector<std::vector<Complex>> values;  // values[j][k] = psi_j(x_k)
    ComplexMatrix gamma;

    std::size_t dim() const noexcept { return atoms.size(); }
    std::size_t tuple_size() const noexcept { return values.size(); }
};

inline DiscreteMeasureModel normal_model(const std::vector<ComplexMatrix>& ts, std::uint64_t seed = 0x5eed,
                                         double tol = 1e-8) {
    JointDiagonalization jd = joint_diagonalize(ts, seed, tol);
    DiscreteMeasureModel m;
    const std::size_t n = jd.gamma.rows();
    for (std::size_t k = 0; k < n; ++k) {
        m.atoms.push_back(k);
        m.weights.push_back(1.0);
    }
    for (std::size_t j = 0; j < jd.values.size(); ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            const Complex v = jd.values[j][k];
            if (std::abs(v - 1.0) <= atom_at_one_tolerance) {
                throw NotCogeneratorError("normal_model: atom " + std::to_string(k) + " of T_" + std::to_string(j + 1) +
                                          " sits at 1");
            }
            if (std::abs(v) > 1.0 + tol) {
                throw PreconditionError("normal_model: T_" + std::to_string(j + 1) + " is not a contraction");
            }
        }
    }
    m.values = std::move(jd.values);
    m.gamma = std::move(jd.gamma);
    return m;
}

/// phi_t(lambda) = exp(t (lambda + 1) / (lambda - 1)).
inline Complex phi_scalar(Complex lambda, double t) {
    if (t == 0.0) return 1.0;
    return std::exp(t * (lambda + 1.0) / (lambda - 1.0));
}

/// gamma M_{phi_t o psi_j} gamma*.
inline ComplexMatrix model_semigroup_at(const DiscreteMeasureModel& m, std::size_t j, double t) {
    if (t < 0.0) throw PreconditionError("model_semigroup_at: negative time");
    if (j >= m.tuple_size()) throw DimensionError("model_semigroup_at: no such semigroup");
    const std::size_t n = m.dim();
    ComplexMatrix scaled = m.gamma;
    for (std::size_t k = 0; k < n; ++k) {
        const Complex e = phi_scalar(m.values[j][k], t);
        for (std::size_t r = 0; r < n; ++r) scaled(r, k) *= e;
    }
    return scaled * m.gamma.adjoint();
}

inline nlohmann::json model_to_json(const DiscreteMeasureModel& m) {
    nlohmann::json values = nlohmann::json::array();
    for (const auto& row : m.values) {
        nlohmann::json r = nlohmann::json::array();
        for (Complex v : row) r.push_back({v.real(), v.imag()});
        values.push_back(std::move(r));
    }
    return {{"atoms", m.atoms}, {"weights", m.weights}, {"values", std::move(values)}, {"gamma", matrix_to_json(m.gamma)}};
}

inline DiscreteMeasureModel model_from_json(const nlohmann::json& j) {
    try {
        DiscreteMeasureModel m;
        m.atoms = j.at("atoms").get<std::vector<std::size_t>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        for (const auto& row : j.at("values")) {
            std::vector<Complex> r;
            for (const auto& v : row) r.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
            if (r.size() != m.atoms.size()) throw IoError("model JSON: value row length differs from atom count");
            m.values.push_back(std::move(r));
        }
        m.gamma = matrix_from_json(j.at("gamma"));
        if (m.weights.size() != m.atoms.size() || m.gamma.rows() != m.atoms.size() || !m.gamma.is_square()) {
            throw IoError("model JSON: inconsistent sizes");
        }
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("model JSON: ") + ex.what());
    }
}

enum class NormalKind { general, unitary, self_adjoint };

/// Random commuting normal contractions U diag(lambda_j) U* with no eigenvalue at 1.
/// Some eigenvalues are repeated to exercise the cluster recursion.
inline std::vector<ComplexMatrix> random_normal_tuple(Rng& rng, std::size_t dim, std::size_t n,
                                                      NormalKind kind = NormalKind::general) {
    const ComplexMatrix u = random_unitary(rng, dim);
    std::vector<ComplexMatrix> out;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<Complex> lam(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            if (k > 0 && uniform(rng, 0.0, 1.0) < 0.25) {
                lam[k] = lam[k - 1];
                continue;
            }
            switch (kind) {
            case NormalKind::general:
                lam[k] = std::polar(std::sqrt(uniform(rng, 0.0, 1.0)) * 0.98, uniform(rng, 0.0, 2.0 * std::numbers::pi));
                break;
            case NormalKind::unitary:
                lam[k] = std::polar(1.0, uniform(rng, 0.2, 2.0 * std::numbers::pi - 0.2));
                break;
            case NormalKind::self_adjoint:
                lam[k] = uniform(rng, -1.0, 0.9);
                break;
            }
        }
        ComplexMatrix scaled = u;
        for (std::size_t k = 0; k < dim; ++k) {
            for (std::size_t r = 0; r < dim; ++r) scaled(r, k) *= lam[k];
        }
        out.push_back(scaled * u.adjoint());
    }
    return out;
}

} // namespace opmodel
