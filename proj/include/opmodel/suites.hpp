#pragma once

// Verification suites behind the command-line subcommands.  Each suite draws its random
// inputs from its own stream derived from the global seed, so suites can run in any order.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "opmodel/commutant.hpp"
#include "opmodel/dilation.hpp"
#include "opmodel/normal.hpp"
#include "opmodel/report.hpp"
#include "opmodel/wold.hpp"

namespace opmodel::suites {

struct Params {
    std::size_t dim = 8;
    std::size_t n = 2;
    std::size_t trunc = 32;
    std::size_t margin = 8;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    std::vector<double> times{0.1, 0.5, 1.0, 2.0};
    std::optional<std::filesystem::path> input;
};

inline nlohmann::json truncation_json(const Params& p) {
    return {{"degree_cut", p.trunc}, {"margin", p.margin}, {"tolerance", p.tol}};
}

namespace detail {

inline Rng stream(const Params& p, std::uint64_t salt) { return Rng(p.seed * 0x9e3779b97f4a7c15ULL + salt); }

inline VerificationReport start(const std::string& suite, const Params& p) {
    VerificationReport r;
    r.suite = suite;
    r.seed = p.seed;
    r.truncation = truncation_json(p);
    return r;
}

/// A single matrix document or an array of them.
inline std::vector<ComplexMatrix> read_matrices(const std::filesystem::path& path) {
    const nlohmann::json j = read_json_file(path);
    std::vector<ComplexMatrix> out;
    if (j.is_array() && !j.empty() && j.front().is_object()) {
        for (const auto& m : j) out.push_back(matrix_from_json(m));
    } else if (j.is_object() && j.contains("matrices")) {
        for (const auto& m : j.at("matrices")) out.push_back(matrix_from_json(m));
    } else {
        out.push_back(matrix_from_json(j));
    }
    if (out.empty()) throw IoError("input holds no matrices");
    return out;
}

inline double max_of(double a, double b) { return std::isnan(a) || std::isnan(b) ? NAN : std::max(a, b); }

} // namespace detail

// ---------------------------------------------------------------------------

inline VerificationReport roundtrip(const Params& p) {
    auto r = detail::start("roundtrip", p);
    std::vector<ComplexMatrix> cases;
    if (p.input) {
        cases = detail::read_matrices(*p.input);
    } else {
        if (p.dim == 0) throw PreconditionError("roundtrip: --dim must be positive");
        Rng rng = detail::stream(p, 1);
        while (cases.size() < 20) {
            ComplexMatrix t = random_with_norm(rng, p.dim, uniform(rng, 0.2, 1.0));
            ComplexMatrix shifted = t;
            shifted.add_identity(-1.0);
            if (min_singular(shifted) >= 0.1) cases.push_back(std::move(t));
        }
        const ComplexMatrix zero(p.dim, p.dim);
        r.measure("roundtrip.zero_operator", 1e-10, [&] {
            return op_norm(cogenerator_of(sampler_from_cogenerator(Contraction(zero))).matrix());
        });
    }
    double recovery = 0.0, law = 0.0, excess = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& t : cases) {
        const auto s = sampler_from_cogenerator(Contraction(t, p.tol));
        recovery = detail::max_of(recovery, op_norm(cogenerator_of(s).matrix() - t));
        const auto c = check_sampler(s, p.times);
        law = detail::max_of(law, std::max(c.semigroup_law, c.identity_at_zero));
        excess = detail::max_of(excess, std::max(0.0, c.max_norm_excess));
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    r.add("roundtrip.cogenerator_recovery", recovery, 1e-6, ms);
    r.add("roundtrip.semigroup_law", law, 1e-10);
    r.add("roundtrip.contractivity", excess, 1e-10);
    return r;
}

// ---------------------------------------------------------------------------

inline VerificationReport shift(const Params& p) {
    auto r = detail::start("shift", p);
    const TruncationParams tp{p.trunc, p.margin, p.tol};
    tp.validate();
    const std::vector<double> times{0.25, std::numbers::ln2, 1.0, 2.0};
    std::vector<ComplexMatrix> s;
    for (double t : times) s.push_back(shift_semigroup_matrix(t, tp));
    const ComplexMatrix margin = margin_subspace(tp).frame;

    r.measure("shift.margin_semigroup_law", 1e-8, [&] {
        double worst = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            for (std::size_t j = 0; j < times.size(); ++j) {
                const ComplexMatrix diff = shift_semigroup_matrix(times[i] + times[j], tp) - s[i] * s[j];
                worst = std::max(worst, op_norm(adjoint_times(margin, diff * margin)));
            }
        }
        return worst;
    });
    r.measure("shift.compressed_shift_semigroup", 1e-8, [&] {
        double worst = 0.0;
        for (std::size_t k : {2u, 4u, 8u}) {
            const TruncationParams small{k, 0, p.tol};
            const Contraction cog(shift_matrix(small));
            for (double t : times) worst = std::max(worst, op_norm(shift_semigroup_matrix(t, small) - semigroup_at(cog, t)));
        }
        return worst;
    });
    r.measure("shift.contractivity", 1e-10, [&] {
        double worst = 0.0;
        for (const auto& m : s) worst = std::max(worst, op_norm(m) - 1.0);
        return std::max(0.0, worst);
    });
    // sum c_n^2 r^{2n} against the circle mean of |phi_t|^2 at radius 0.7
    r.measure("shift.parseval_radius_0.7", 1e-8, [&] {
        constexpr double rad = 0.7;
        constexpr int points = 512;
        double worst = 0.0;
        for (double t : times) {
            const auto c = phi_coeffs(t, p.trunc);
            double series = 0.0;
            for (std::size_t k = 0; k < c.size(); ++k) series += c[k] * c[k] * std::pow(rad, 2.0 * static_cast<double>(k));
            double mean = 0.0;
            for (int q = 0; q < points; ++q) {
                const Complex z = std::polar(rad, 2.0 * std::numbers::pi * q / points);
                mean += std::norm(std::exp(t * (z + 1.0) / (z - 1.0)));
            }
            worst = std::max(worst, std::abs(series - mean / points));
        }
        return worst;
    });
    double deficiency = 0.0;
    for (const auto& m : s) {
        double col = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) col += std::norm(m(i, 0));
        deficiency = std::max(deficiency, std::abs(1.0 - std::sqrt(col)));
    }
    r.note("shift.degree0_column_deficiency", deficiency);
    return r;
}

// ---------------------------------------------------------------------------

inline VerificationReport commutant(const Params& p) {
    if (p.input) throw PreconditionError("commutant: --in is not supported; inputs are generated");
    auto r = detail::start("commutant", p);
    Rng rng = detail::stream(p, 2);
    const TruncationParams tp{p.trunc, 0, p.tol};
    const std::size_t top = std::clamp<std::size_t>(p.dim, 2, 8);
    double residual = 0.0, repaired = 0.0;
    double rejected = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = uniform_index(rng, 2, top);
        std::vector<Complex> zeros;
        for (std::size_t i = 0; i < d; ++i) zeros.push_back(std::polar(uniform(rng, 0.0, 0.4), uniform(rng, 0.0, 2.0 * std::numbers::pi)));
        const auto ms = blaschke_model_space(zeros, p.trunc);
        // p(S_theta) with coefficient l1 norm 0.9: a contraction without eigenvalue 1
        std::vector<Complex> a(d);
        double l1 = 0.0;
        for (auto& x : a) {
            x = gaussian_complex(rng);
            l1 += std::abs(x);
        }
        ComplexMatrix t(d, d), pw = ComplexMatrix::identity(d);
        for (Complex ak : a) {
            t += pw * (ak * (0.9 / l1));
            pw = pw * ms.compressed_shift;
        }
        const auto sol = commutant_solve(ms.q, t, d - 1, 1, p.tol);
        residual = detail::max_of(residual, sol.residual);
        const auto rep = repair_symbol(sol.symbol, std::nullopt, default_ce_grid(), p.tol);
        if (!in_class_CE(rep.symbol, default_ce_grid(), p.tol).accepted) rejected += 1.0;
        repaired = detail::max_of(repaired, op_norm(compress(toeplitz_of_symbol(rep.symbol, tp), ms.q) - t));
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    r.add("commutant.compression_residual", residual, 1e-8, ms);
    r.add("commutant.repair_rejections", rejected, 0.0);
    r.add("commutant.repair_compression", repaired, 1e-8);

    r.measure("commutant.diag_repair_example", 1e-10, [&] {
        const OperatorSymbol eta = direct_sum(OperatorSymbol::constant(ComplexMatrix::identity(1)), blaschke_factor(0.5, p.trunc));
        const auto rep = repair_symbol(eta, OperatorSymbol::constant(-ComplexMatrix::identity(1)));
        ComplexMatrix e2(2, 1);
        e2(1, 0) = 1.0;
        const auto q = embed_along(blaschke_model_space({0.5, 0.2}, p.trunc).q, e2);
        return op_norm(compress(toeplitz_of_symbol(rep.symbol, tp), q) - compress(toeplitz_of_symbol(eta, tp), q));
    });
    r.measure("commutant.semigroup_commutation", 1e-8, [&] {
        double worst = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
            const auto m = build_commuting_model(std::max<std::size_t>(p.n, 2), 2, 1, rng);
            for (double t : p.times) {
                std::vector<ComplexMatrix> st;
                for (const auto& c : m.cogenerators) st.push_back(semigroup_at(Contraction(c), t));
                for (std::size_t i = 0; i < st.size(); ++i) {
                    for (std::size_t j = i + 1; j < st.size(); ++j) worst = std::max(worst, op_norm(commutator(st[i], st[j])));
                }
            }
        }
        return worst;
    });
    return r;
}

// ---------------------------------------------------------------------------

inline VerificationReport normal(const Params& p) {
    auto r = detail::start("normal", p);
    Rng rng = detail::stream(p, 3);
    struct Case {
        std::vector<ComplexMatrix> ts;
        NormalKind kind;
    };
    std::vector<Case> cases;
    if (p.input) {
        cases.push_back({detail::read_matrices(*p.input), NormalKind::general});
    } else {
        if (p.dim == 0 || p.n == 0) throw PreconditionError("normal: --dim and --n must be positive");
        const NormalKind kinds[] = {NormalKind::general, NormalKind::unitary, NormalKind::self_adjoint};
        for (int k = 0; k < 9; ++k) cases.push_back({random_normal_tuple(rng, p.dim, p.n, kinds[k % 3]), kinds[k % 3]});
    }
    double offdiag = 0.0, recon = 0.0, sg = 0.0, unit = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& c : cases) {
        const auto m = normal_model(c.ts, 0x5eed, p.tol);
        const auto jd = joint_diagonalize(c.ts, 0x5eed, p.tol);
        offdiag = detail::max_of(offdiag, jd.off_diagonal_residual);
        for (std::size_t j = 0; j < c.ts.size(); ++j) {
            recon = detail::max_of(recon, op_norm(c.ts[j] -
                                                  m.gamma * ComplexMatrix::diagonal(m.values[j]) * m.gamma.adjoint()));
            for (double t : p.times) {
                const ComplexMatrix mt = model_semigroup_at(m, j, t);
                sg = detail::max_of(sg, op_norm(mt - semigroup_at(Contraction(c.ts[j], p.tol), t)));
                if (c.kind == NormalKind::unitary) unit = detail::max_of(unit, unitarity_defect(mt));
            }
        }
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    r.add("normal.joint_offdiagonal", offdiag, 1e-7, ms);
    r.add("normal.reconstruction", recon, 1e-7);
    r.add("normal.semigroup_model", sg, 1e-7);
    if (!p.input) r.add("normal.unitary_outputs", unit, 1e-9);
    r.measure("normal.atom_at_one_rejected", 0.0, [&] {
        auto ts = random_normal_tuple(rng, std::max<std::size_t>(p.dim, 2), 1);
        const auto jd = joint_diagonalize(ts);
        std::vector<Complex> v = jd.values[0];
        v[0] = 1.0;
        const ComplexMatrix bad = jd.gamma * ComplexMatrix::diagonal(v) * jd.gamma.adjoint();
        try {
            normal_model({bad});
        } catch (const NotCogeneratorError&) {
            return 0.0;
        }
        return 1.0;
    });
    return r;
}

// ---------------------------------------------------------------------------

inline VerificationReport wold(const Params& p) {
    auto r = detail::start("wold", p);
    std::vector<std::pair<StructuredIsometryTuple, std::size_t>> cases;  // tuple, expected multiplicity (0: none)
    if (p.input) {
        cases.emplace_back(tuple_from_json(read_json_file(*p.input)), 0);
    } else {
        if (p.n == 0 || p.n > 3) throw PreconditionError("wold: --n must be 1, 2 or 3");
        for (std::uint32_t mask = 0; mask < (1u << p.n); ++mask) {
            for (std::uint64_t seed = 0; seed < 3; ++seed) {
                Rng rng = detail::stream(p, 100 + 8 * mask + seed);
                const std::size_t mult = uniform_index(rng, 1, 2);
                auto s = assemble(p.n, {pattern_block(p.n, mask, rng, 3, 2, mult)}, p.seed * 31 + seed);
                cases.emplace_back(std::move(s), mask == (1u << p.n) - 1 ? mult : 0);
            }
        }
    }
    double dims = 0.0, complete = 0.0, ortho = 0.0, reducing = 0.0, tags = 0.0, multi = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& [s, mult] : cases) {
        const auto d = slocinski_decompose(s, default_power_horizon, p.tol);
        if (d.dimensions != s.ground_truth()) dims += 1.0;
        complete = detail::max_of(complete, d.completeness_residual);
        ortho = detail::max_of(ortho, d.orthogonality_residual);
        reducing = detail::max_of(reducing, d.reducing_residual);
        if (!classification_consistent(d)) tags += 1.0;
        const auto c = classify_multishift(s, default_power_horizon, p.tol);
        const bool expected = s.ground_truth().at((1u << s.n) - 1) == s.dim();
        if (c.is_multishift != expected || (expected && mult > 0 && c.multiplicity != mult)) multi += 1.0;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    r.add("wold.dimension_mismatches", dims, 0.0, ms);
    r.add("wold.completeness", complete, 1e-8);
    r.add("wold.orthogonality", ortho, 1e-8);
    r.add("wold.reducing", reducing, 1e-8);
    r.add("wold.classification_mismatches", tags, 0.0);
    r.add("wold.multishift_mismatches", multi, 0.0);
    return r;
}

// ---------------------------------------------------------------------------

inline VerificationReport dilate(const Params& p) {
    auto r = detail::start("dilation", p);
    DilationOptions opt;
    opt.truncation_cap = p.trunc;
    opt.tail_target = std::min(p.tol, 1e-9);
    opt.tol = std::max(p.tol, 1e-8);
    std::vector<std::vector<ComplexMatrix>> cases;
    if (p.input) {
        cases.push_back(detail::read_matrices(*p.input));
    } else {
        if (p.n == 0 || p.n > 3) throw PreconditionError("dilate: --n must be 1, 2 or 3");
        Rng rng = detail::stream(p, 4);
        for (int k = 0; k < 10; ++k) cases.push_back(random_pure_tuple(rng, p.n, p.n == 3 ? 250 : 600, opt.tail_target));
    }
    double iso = 0.0, inter = 0.0, semi = 0.0, comp = 0.0, star = 0.0, mini = 0.0, rank_gap = 0.0, honesty = 0.0, tail = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& ts : cases) {
        const auto d = dilation_isometry(ts, opt);
        tail = std::max(tail, d.tail_bound);
        iso = detail::max_of(iso, d.isometry_defect);
        honesty = std::max(honesty, d.isometry_defect - d.bounds.isometry - roundoff_allowance);
        for (std::size_t j = 0; j < d.n; ++j) {
            inter = detail::max_of(inter, d.intertwining[j]);
            comp = detail::max_of(comp, d.compression[j]);
            star = detail::max_of(star, d.star_invariance[j]);
            honesty = std::max(honesty, d.intertwining[j] - d.bounds.intertwining[j] - roundoff_allowance);
            honesty = std::max(honesty, d.compression[j] - d.bounds.compression[j] - roundoff_allowance);
        }
        for (const auto& c : verify_semigroup_dilation(d, ts, p.times)) {
            semi = detail::max_of(semi, c.residual);
            honesty = std::max(honesty, c.residual - c.bound - roundoff_allowance);
        }
        std::size_t max_power = 0;
        for (auto n : d.layout.degrees) max_power = std::max(max_power, n - 1);
        mini = detail::max_of(mini, minimality_defect(d, max_power).defect);
        const auto ranks = power_vs_time_span_ranks(d);
        rank_gap = std::max(rank_gap, std::abs(static_cast<double>(ranks.power_rank) - static_cast<double>(ranks.time_rank)));
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    r.add("dilation.isometry", iso, 1e-8, ms);
    r.add("dilation.intertwining", inter, 1e-7);
    r.add("dilation.semigroup_intertwining", semi, 1e-7);
    r.add("dilation.compression_recovery", comp, 1e-7);
    r.add("dilation.star_invariance", star, 1e-7);
    r.add("dilation.minimality", mini, 1e-7);
    r.add("dilation.power_time_rank_gap", rank_gap, 0.0);
    r.add("dilation.tail_honesty", std::max(0.0, honesty), 0.0);
    r.note("dilation.max_tail_bound", tail);
    return r;
}

// ---------------------------------------------------------------------------

inline VerificationReport tensor_q(const Params& p) {
    if (p.input) throw PreconditionError("tensor-q: --in is not supported; subspaces are generated");
    auto r = detail::start("tensor-q", p);
    const std::size_t n = std::clamp<std::size_t>(p.n, 2, 3);
    const std::vector<std::size_t> degrees(n, p.trunc);
    const BoxLayout lay{degrees, 1};
    auto monomials = [&](const std::vector<std::vector<std::size_t>>& ms) {
        ComplexMatrix f(lay.size(), ms.size());
        for (std::size_t c = 0; c < ms.size(); ++c) {
            std::size_t row = 0;
            for (std::size_t j = 0; j < n; ++j) row += ms[c][j] * lay.stride(j);
            f(row, c) = 1.0;
        }
        return SubspaceBasis(std::move(f));
    };
    auto factor_dims_gap = [](const TensorSubspaceReport& rep, const std::vector<std::size_t>& dims) {
        if (rep.factors.size() != dims.size()) return 1.0;
        for (std::size_t j = 0; j < dims.size(); ++j) {
            if (rep.factors[j].dim() != dims[j]) return 1.0;
        }
        return rep.factorization_residual;
    };

    r.measure("tensor.polynomial_product_factors", 1e-8, [&] {
        std::vector<std::vector<std::size_t>> ms;
        for (std::uint32_t bits = 0; bits < 4u; ++bits) {
            std::vector<std::size_t> m(n, 0);
            m[0] = bits & 1u;
            m[1] = (bits >> 1) & 1u;
            ms.push_back(m);
        }
        const auto rep = tensor_invariant_subspace_check(monomials(ms), degrees, p.tol);
        std::vector<std::size_t> dims(n, 1);
        dims[0] = dims[1] = 2;
        return rep.doubly_commuting ? factor_dims_gap(rep, dims) : 1.0;
    });
    r.measure("tensor.blaschke_product_factors", 1e-8, [&] {
        Rng rng = detail::stream(p, 5);
        std::vector<SubspaceBasis> fs;
        std::vector<std::size_t> dims;
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<Complex> zeros;
            for (int k = 0; k < 2; ++k) zeros.push_back(std::polar(uniform(rng, 0.0, 0.4), uniform(rng, 0.0, 2.0 * std::numbers::pi)));
            fs.push_back(blaschke_model_space(zeros, p.trunc).q);
            dims.push_back(2);
        }
        const auto rep = tensor_invariant_subspace_check(tensor_subspace(fs), degrees, p.tol);
        return rep.doubly_commuting ? factor_dims_gap(rep, dims) : 1.0;
    });
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::vector<std::size_t>> ms(3, std::vector<std::size_t>(n, 0));
    ms[1][0] = 1;
    ms[2][1] = 1;
    const auto rep = tensor_invariant_subspace_check(monomials(ms), degrees, p.tol);
    const double took = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    r.add_at_least("tensor.non_tensor_commutator", rep.doubly_commuting ? 0.0 : rep.double_commutation, 1e-2, took);
    return r;
}

// ---------------------------------------------------------------------------

inline VerificationReport verify_all(const Params& p) {
    if (p.input) throw PreconditionError("verify-all: --in is not supported");
    auto r = detail::start("verify-all", p);
    for (auto* suite : {&roundtrip, &shift, &commutant, &normal, &wold, &dilate, &tensor_q}) r.merge(suite(p));
    return r;
}

} // namespace opmodel::suites
