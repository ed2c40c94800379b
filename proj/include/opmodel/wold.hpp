#pragma once

// Doubly commuting isometric tuples built from tensor legs, and their 2^n-fold
// Wold-Slocinski splitting.
//
// A pure shift has no finite-dimensional isometric realization, so shift legs are
// truncated shifts on N degrees.  These are nilpotent, so V^k V*^k vanishes on a shift
// leg once k >= N while it is the identity on a unitary leg.  Isometry identities are
// asserted only on the margin (shift-leg degrees < N - headroom).

#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "opmodel/cogenerator.hpp"
#include "opmodel/hardy.hpp"

namespace opmodel {

inline constexpr std::size_t default_power_horizon = 8;   // n_max
inline constexpr std::size_t default_shift_truncation = 6;

struct Leg {
    enum class Kind { shift, unitary };
    Kind kind = Kind::shift;
    std::size_t dim = default_shift_truncation;      // truncation N for shift legs
    std::map<std::size_t, ComplexMatrix> unitaries;  // unitary legs: index j -> U_j

    static Leg shift(std::size_t n) { return Leg{Kind::shift, n, {}}; }
    static Leg unitary(std::map<std::size_t, ComplexMatrix> us) {
        const std::size_t d = us.empty() ? 1 : us.begin()->second.rows();
        return Leg{Kind::unitary, d, std::move(us)};
    }
};

/// (legs[0] (x) ... (x) legs[k-1]) (x) C^multiplicity; V_j acts on legs[assignment[j]].
struct TensorBlock {
    std::vector<Leg> legs;
    std::vector<std::size_t> assignment;
    std::size_t multiplicity = 1;

    std::size_t dim() const {
        std::size_t d = multiplicity;
        for (const auto& l : legs) d *= l.dim;
        return d;
    }
    /// Bit j set iff V_{j+1} is a shift on this block.
    std::uint32_t shift_mask() const {
        std::uint32_t m = 0;
        for (std::size_t j = 0; j < assignment.size(); ++j) {
            if (legs[assignment[j]].kind == Leg::Kind::shift) m |= 1u << j;
        }
        return m;
    }
};

struct StructuredIsometryTuple {
    std::size_t n = 0;
    std::vector<TensorBlock> blocks;   // direct sum
    ComplexMatrix scramble;            // unitary on the direct sum
    std::uint64_t scramble_seed = 0;

    std::size_t dim() const {
        std::size_t d = 0;
        for (const auto& b : blocks) d += b.dim();
        return d;
    }
    /// Subset mask -> dimension of H_A, read off the construction.
    std::map<std::uint32_t, std::size_t> ground_truth() const {
        std::map<std::uint32_t, std::size_t> g;
        for (std::uint32_t a = 0; a < (1u << n); ++a) g[a] = 0;
        for (const auto& b : blocks) g[b.shift_mask()] += b.dim();
        return g;
    }

    void validate(double tol = 1e-10) const {
        if (n == 0 || n > 16) throw PreconditionError("StructuredIsometryTuple: n out of range");
        for (const auto& b : blocks) {
            if (b.assignment.size() != n) throw StructureError("StructuredIsometryTuple: assignment must cover every index");
            std::vector<int> uses(b.legs.size(), 0);
            for (std::size_t j = 0; j < n; ++j) {
                if (b.assignment[j] >= b.legs.size()) throw StructureError("StructuredIsometryTuple: assignment out of range");
                const Leg& l = b.legs[b.assignment[j]];
                ++uses[b.assignment[j]];
                if (l.kind == Leg::Kind::unitary) {
                    auto it = l.unitaries.find(j);
                    if (it == l.unitaries.end()) throw StructureError("StructuredIsometryTuple: unitary leg lacks U_j");
                    if (unitarity_defect(it->second) > tol) throw StructureError("StructuredIsometryTuple: U_j not unitary");
                }
            }
            for (std::size_t k = 0; k < b.legs.size(); ++k) {
                const Leg& l = b.legs[k];
                if (l.kind == Leg::Kind::shift && uses[k] != 1) {
                    throw StructureError("StructuredIsometryTuple: each shift leg needs exactly one index");
                }
                if (l.kind == Leg::Kind::unitary) {
                    for (const auto& [i, ui] : l.unitaries) {
                        if (ui.rows() != l.dim) throw DimensionError("StructuredIsometryTuple: unitary of wrong size");
                        for (const auto& [j, uj] : l.unitaries) {
                            if (i < j && op_norm(commutator(ui, uj)) > tol) {
                                throw StructureError("StructuredIsometryTuple: unitaries sharing a leg must commute");
                            }
                        }
                    }
                }
            }
        }
        if (scramble.rows() != dim() || unitarity_defect(scramble) > tol) {
            throw StructureError("StructuredIsometryTuple: scramble is not a unitary of the right size");
        }
    }
};

namespace detail {

// Factor on one leg for index j, given the per-leg map for the shift and unitary cases.
template <class ShiftFn, class UnitaryFn>
ComplexMatrix realize_block(const TensorBlock& b, std::size_t j, ShiftFn&& on_shift, UnitaryFn&& on_unitary) {
    std::vector<ComplexMatrix> factors;
    for (std::size_t k = 0; k < b.legs.size(); ++k) {
        const Leg& l = b.legs[k];
        if (b.assignment[j] != k) {
            factors.push_back(ComplexMatrix::identity(l.dim));
        } else if (l.kind == Leg::Kind::shift) {
            factors.push_back(on_shift(l));
        } else {
            factors.push_back(on_unitary(l.unitaries.at(j)));
        }
    }
    factors.push_back(ComplexMatrix::identity(b.multiplicity));
    return kron_all(factors);
}

template <class ShiftFn, class UnitaryFn>
std::vector<ComplexMatrix> realize_with(const StructuredIsometryTuple& s, ShiftFn&& on_shift, UnitaryFn&& on_unitary) {
    std::vector<ComplexMatrix> out;
    for (std::size_t j = 0; j < s.n; ++j) {
        ComplexMatrix v(0, 0);
        for (const auto& b : s.blocks) {
            ComplexMatrix blk = realize_block(b, j, [&](const Leg& l) { return on_shift(l, j); },
                                              [&](const ComplexMatrix& u) { return on_unitary(u, j); });
            v = v.rows() == 0 ? blk : direct_sum(v, blk);
        }
        out.push_back(s.scramble * v * s.scramble.adjoint());
    }
    return out;
}

} // namespace detail

/// V_j^{m_j} for every j (scrambled).
inline std::vector<ComplexMatrix> realize(const StructuredIsometryTuple& s, const std::vector<std::size_t>& powers) {
    if (powers.size() != s.n) throw DimensionError("realize: need one power per index");
    return detail::realize_with(
        s, [&](const Leg& l, std::size_t j) { return matrix_power(shift_matrix(TruncationParams{l.dim, 0, 1e-9}), powers[j]); },
        [&](const ComplexMatrix& u, std::size_t j) { return matrix_power(u, powers[j]); });
}

/// The cogenerators V_1..V_n.
inline std::vector<ComplexMatrix> realize(const StructuredIsometryTuple& s) {
    return realize(s, std::vector<std::size_t>(s.n, 1));
}

/// V_{j,t}: the truncated shift semigroup on shift legs and phi_t(U_j) on unitary legs.
inline std::vector<ComplexMatrix> realize_semigroup(const StructuredIsometryTuple& s, double t) {
    if (t < 0.0) throw PreconditionError("realize_semigroup: negative time");
    return detail::realize_with(
        s, [&](const Leg& l, std::size_t) { return shift_semigroup_matrix(t, TruncationParams{l.dim, 0, 1e-9}); },
        [&](const ComplexMatrix& u, std::size_t) { return semigroup_at(Contraction(u, 1e-8), t); });
}

/// Frame of the coordinates whose shift-leg degrees are all < N - headroom (scrambled).
inline SubspaceBasis margin_basis(const StructuredIsometryTuple& s, std::size_t headroom = 1) {
    std::vector<std::size_t> keep;
    std::size_t offset = 0;
    for (const auto& b : s.blocks) {
        const std::size_t d = b.dim();
        for (std::size_t idx = 0; idx < d; ++idx) {
            // decode the multi-index, last factor fastest
            std::size_t rest = idx / b.multiplicity;
            bool inside = true;
            for (std::size_t k = b.legs.size(); k-- > 0;) {
                const std::size_t deg = rest % b.legs[k].dim;
                rest /= b.legs[k].dim;
                if (b.legs[k].kind == Leg::Kind::shift && deg + headroom >= b.legs[k].dim) inside = false;
            }
            if (inside) keep.push_back(offset + idx);
        }
        offset += d;
    }
    return SubspaceBasis(s.scramble.columns(keep));
}

/// lim V^k V*^k realized at k = n_max: symmetrized, polished toward a projection and
/// checked to reduce V on the margin.
inline ComplexMatrix asymptotic_unitary_projection(const ComplexMatrix& v, std::size_t n_max, const SubspaceBasis& margin,
                                                   double tol = 1e-8) {
    if (!v.is_square() || v.rows() != margin.ambient_dim) throw DimensionError("asymptotic_unitary_projection: size mismatch");
    const ComplexMatrix vf = v * margin.frame;
    const double iso = op_norm(adjoint_times(vf, vf) - ComplexMatrix::identity(margin.dim()));
    if (iso > tol) {
        throw PreconditionError("asymptotic_unitary_projection: V is not isometric on the margin (" + std::to_string(iso) + ")");
    }
    const ComplexMatrix vk = matrix_power(v, n_max);
    ComplexMatrix e = vk * vk.adjoint();
    e = (e + e.adjoint()) * Complex(0.5);
    const ComplexMatrix e2 = e * e;
    const double idem = op_norm(e2 - e);
    if (idem > 1e-6) {
        throw HeadroomError("asymptotic_unitary_projection: V^k V*^k is not a projection (defect " + std::to_string(idem) +
                            "); raise n_max");
    }
    // one step of P -> 3P^2 - 2P^3 pulls eigenvalues to {0, 1}
    e = e2 * Complex(3.0) - e2 * e * Complex(2.0);
    e = (e + e.adjoint()) * Complex(0.5);
    const double red = op_norm(commutator(e, v) * margin.frame);
    if (red > tol) {
        throw HeadroomError("asymptotic_unitary_projection: projection does not reduce V on the margin (" +
                            std::to_string(red) + "); shift truncation exceeds n_max");
    }
    return e;
}

enum class PartKind { cnu, unitary };

inline const char* to_string(PartKind k) { return k == PartKind::cnu ? "cnu" : "unitary"; }

struct SlocinskiDecomposition {
    std::size_t n = 0;
    std::map<std::uint32_t, ComplexMatrix> projections;
    std::map<std::uint32_t, std::size_t> dimensions;
    /// (A, j) -> behaviour of V_{j+1} on H_A, for nonzero H_A.
    std::map<std::pair<std::uint32_t, std::size_t>, PartKind> classification;
    double completeness_residual = 0.0;   // ||sum P_A - I||
    double orthogonality_residual = 0.0;  // max ||P_A P_B||
    double reducing_residual = 0.0;       // max ||[P_A, V_j] margin||
};

/// Slocinski splitting of the doubly commuting isometries vs (the cogenerators).
inline SlocinskiDecomposition slocinski_decompose(const std::vector<ComplexMatrix>& vs, const SubspaceBasis& margin,
                                                  std::size_t n_max = default_power_horizon, double tol = 1e-8) {
    const std::size_t n = vs.size();
    if (n == 0 || n > 16) throw PreconditionError("slocinski_decompose: need 1..16 isometries");
    const std::size_t d = margin.ambient_dim;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double c = std::max(op_norm(commutator(vs[i], vs[j]) * margin.frame),
                                      op_norm(commutator(vs[i].adjoint(), vs[j]) * margin.frame));
            if (c > tol) throw PreconditionError("slocinski_decompose: tuple is not doubly commuting on the margin");
        }
    }
    std::vector<ComplexMatrix> e, f;
    for (const auto& v : vs) {
        e.push_back(asymptotic_unitary_projection(v, n_max, margin, tol));
        f.push_back(ComplexMatrix::identity(d) - e.back());
    }
    SlocinskiDecomposition out;
    out.n = n;
    ComplexMatrix total(d, d);
    for (std::uint32_t a = 0; a < (1u << n); ++a) {
        ComplexMatrix p = (a & 1u) ? f[0] : e[0];
        for (std::size_t i = 1; i < n; ++i) p = p * ((a >> i) & 1u ? f[i] : e[i]);
        p = (p + p.adjoint()) * Complex(0.5);
        total += p;
        const double tr = trace(p).real();
        out.dimensions[a] = static_cast<std::size_t>(std::llround(std::max(0.0, tr)));
        for (std::size_t j = 0; j < n; ++j) {
            out.reducing_residual = std::max(out.reducing_residual, op_norm(commutator(p, vs[j]) * margin.frame));
        }
        out.projections.emplace(a, std::move(p));
    }
    out.completeness_residual = op_norm(total - ComplexMatrix::identity(d));
    for (const auto& [a, pa] : out.projections) {
        for (const auto& [b, pb] : out.projections) {
            if (a < b && out.dimensions[a] > 0 && out.dimensions[b] > 0) {
                out.orthogonality_residual = std::max(out.orthogonality_residual, op_norm(pa * pb));
            }
        }
    }
    if (out.completeness_residual > tol || out.orthogonality_residual > tol) {
        throw DecompositionError("slocinski_decompose: projections incomplete or overlapping (completeness " +
                                 std::to_string(out.completeness_residual) + ", orthogonality " +
                                 std::to_string(out.orthogonality_residual) + ")");
    }
    for (const auto& [a, p] : out.projections) {
        const std::size_t dim = out.dimensions[a];
        if (dim == 0) continue;
        const Qr q = qr_pivoted(p, 1e-8);
        if (q.rank != dim) throw DecompositionError("slocinski_decompose: projection rank differs from its trace");
        for (std::size_t j = 0; j < n; ++j) {
            const ComplexMatrix c = adjoint_times(q.Q, vs[j] * q.Q);
            out.classification[{a, j}] = unitarity_defect(c) <= tol ? PartKind::unitary : PartKind::cnu;
        }
    }
    return out;
}

inline SlocinskiDecomposition slocinski_decompose(const StructuredIsometryTuple& s,
                                                  std::size_t n_max = default_power_horizon, double tol = 1e-8) {
    return slocinski_decompose(realize(s), margin_basis(s, 1), n_max, tol);
}

/// Tags consistent with the subsets: V_j c.n.u. on H_A iff j in A.
inline bool classification_consistent(const SlocinskiDecomposition& d) {
    for (const auto& [key, kind] : d.classification) {
        const bool in_a = (key.first >> key.second) & 1u;
        if (in_a != (kind == PartKind::cnu)) return false;
    }
    return true;
}

struct MultishiftClassification {
    bool is_multishift = false;
    std::size_t multiplicity = 0;       // dim of the wandering subspace, the joint kernel of the V_j*
    double largest_other_part = 0.0;    // max ||P_A|| over A != I_n
};

inline MultishiftClassification classify_multishift(const std::vector<ComplexMatrix>& vs, const SubspaceBasis& margin,
                                                    std::size_t n_max = default_power_horizon, double tol = 1e-8) {
    const auto dec = slocinski_decompose(vs, margin, n_max, tol);
    const std::uint32_t all = (1u << vs.size()) - 1u;
    MultishiftClassification out;
    for (const auto& [a, p] : dec.projections) {
        if (a != all) out.largest_other_part = std::max(out.largest_other_part, op_norm(p));
    }
    out.is_multishift = out.largest_other_part <= tol;
    if (out.is_multishift) {
        // prod_j (I - V_j V_j*) projects onto the intersection of the kernels of the V_j*
        const std::size_t d = margin.ambient_dim;
        ComplexMatrix w = ComplexMatrix::identity(d);
        for (const auto& v : vs) w = w * (ComplexMatrix::identity(d) - v * v.adjoint());
        out.multiplicity = static_cast<std::size_t>(std::llround(std::max(0.0, trace(w).real())));
    }
    return out;
}

inline MultishiftClassification classify_multishift(const StructuredIsometryTuple& s,
                                                    std::size_t n_max = default_power_horizon, double tol = 1e-8) {
    return classify_multishift(realize(s), margin_basis(s, 1), n_max, tol);
}

// ---------------------------------------------------------------------------
// Builders and serialization
// ---------------------------------------------------------------------------

/// Block whose shift indices are the bits of mask.  The remaining indices share one
/// unitary leg carrying commuting unitaries with spectrum away from 1.
inline TensorBlock pattern_block(std::size_t n, std::uint32_t mask, Rng& rng, std::size_t shift_n = default_shift_truncation,
                                 std::size_t unitary_dim = 2, std::size_t multiplicity = 1) {
    TensorBlock b;
    b.multiplicity = multiplicity;
    b.assignment.assign(n, 0);
    std::map<std::size_t, ComplexMatrix> us;
    const bool has_unitary = std::popcount(mask) < static_cast<int>(n);
    const ComplexMatrix w = has_unitary ? random_unitary(rng, unitary_dim) : ComplexMatrix();
    for (std::size_t j = 0; j < n; ++j) {
        if ((mask >> j) & 1u) {
            b.assignment[j] = b.legs.size();
            b.legs.push_back(Leg::shift(shift_n));
        } else {
            std::vector<Complex> lam(unitary_dim);
            for (auto& x : lam) x = std::polar(1.0, uniform(rng, 0.3, 2.0 * std::numbers::pi - 0.3));
            us[j] = w * ComplexMatrix::diagonal(lam) * w.adjoint();
        }
    }
    if (has_unitary) {
        const std::size_t leg = b.legs.size();
        b.legs.push_back(Leg::unitary(std::move(us)));
        for (std::size_t j = 0; j < n; ++j) {
            if (!((mask >> j) & 1u)) b.assignment[j] = leg;
        }
    }
    return b;
}

inline StructuredIsometryTuple assemble(std::size_t n, std::vector<TensorBlock> blocks, std::uint64_t scramble_seed,
                                        bool scrambled = true) {
    StructuredIsometryTuple s;
    s.n = n;
    s.blocks = std::move(blocks);
    s.scramble_seed = scramble_seed;
    if (scrambled) {
        Rng rng(scramble_seed);
        s.scramble = random_unitary(rng, s.dim());
    } else {
        s.scramble = ComplexMatrix::identity(s.dim());
    }
    s.validate();
    return s;
}

inline nlohmann::json tuple_to_json(const StructuredIsometryTuple& s) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : s.blocks) {
        nlohmann::json legs = nlohmann::json::array();
        for (const auto& l : b.legs) {
            nlohmann::json us = nlohmann::json::object();
            for (const auto& [j, u] : l.unitaries) us[std::to_string(j)] = matrix_to_json(u);
            legs.push_back({{"kind", l.kind == Leg::Kind::shift ? "shift" : "unitary"}, {"dim", l.dim}, {"unitaries", us}});
        }
        blocks.push_back({{"legs", legs}, {"assignment", b.assignment}, {"multiplicity", b.multiplicity}});
    }
    return {{"n", s.n}, {"blocks", blocks}, {"scramble_seed", s.scramble_seed}, {"scramble", matrix_to_json(s.scramble)}};
}

inline StructuredIsometryTuple tuple_from_json(const nlohmann::json& j) {
    try {
        StructuredIsometryTuple s;
        s.n = j.at("n").get<std::size_t>();
        for (const auto& bj : j.at("blocks")) {
            TensorBlock b;
            b.assignment = bj.at("assignment").get<std::vector<std::size_t>>();
            b.multiplicity = bj.at("multiplicity").get<std::size_t>();
            for (const auto& lj : bj.at("legs")) {
                Leg l;
                const auto kind = lj.at("kind").get<std::string>();
                if (kind != "shift" && kind != "unitary") throw IoError("tuple JSON: unknown leg kind " + kind);
                l.kind = kind == "shift" ? Leg::Kind::shift : Leg::Kind::unitary;
                l.dim = lj.at("dim").get<std::size_t>();
                for (const auto& [key, m] : lj.at("unitaries").items()) l.unitaries[std::stoul(key)] = matrix_from_json(m);
                b.legs.push_back(std::move(l));
            }
            s.blocks.push_back(std::move(b));
        }
        s.scramble_seed = j.at("scramble_seed").get<std::uint64_t>();
        s.scramble = matrix_from_json(j.at("scramble"));
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("tuple JSON: ") + ex.what());
    } catch (const StructureError& ex) {
        throw IoError(std::string("tuple JSON: ") + ex.what());
    }
}

} // namespace opmodel
