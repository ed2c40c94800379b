#pragma once

// Dictionary between contractive one-parameter semigroups and their cogenerators,
// realised exactly at finite dimension.
//
//   generator  A = (T + I)(T - I)^{-1}         (the Cayley map is an involution)
//   semigroup  T_t = phi_t(T) = exp(t A)
//   inverse    T = lim_{t->0+} (T_t - (1 - t)I)(T_t - (1 + t)I)^{-1}

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "opmodel/numerics.hpp"

namespace opmodel {

/// Threshold on min_singular(T - I) below which 1 counts as an eigenvalue.
inline constexpr double eigenvalue_one_tolerance = 1e-8;
/// Norm slack accepted for computed contractions.
inline constexpr double contraction_slack = 1e-8;

/// A square matrix of operator norm at most 1 + norm_slack.
class Contraction {
public:
    explicit Contraction(ComplexMatrix m, double norm_slack = contraction_slack)
        : matrix_(std::move(m)), norm_slack_(norm_slack) {
        if (!matrix_.is_square()) throw DimensionError("Contraction: matrix not square");
        norm_ = op_norm(matrix_);
        if (norm_ > 1.0 + norm_slack_) {
            throw PreconditionError("Contraction: operator norm " + std::to_string(norm_) +
                                    " exceeds 1 + slack");
        }
    }

    const ComplexMatrix& matrix() const noexcept { return matrix_; }
    double norm() const noexcept { return norm_; }
    double norm_slack() const noexcept { return norm_slack_; }
    std::size_t dim() const noexcept { return matrix_.rows(); }
    Contraction adjoint() const { return Contraction(matrix_.adjoint(), norm_slack_); }

private:
    ComplexMatrix matrix_;
    double norm_slack_;
    double norm_ = 0.0;
};

struct CogeneratorDiagnostics {
    bool is_cogenerator = false;
    double norm = 0.0;                 // op_norm(T)
    double min_singular_minus_one = 0.0;  // min_singular(T - I)
};

/// True iff T is a contraction without 1 in its point spectrum.
inline CogeneratorDiagnostics is_cogenerator(const ComplexMatrix& t,
                                             double eig_tol = eigenvalue_one_tolerance,
                                             double norm_slack = contraction_slack) {
    if (!t.is_square()) throw DimensionError("is_cogenerator: matrix not square");
    CogeneratorDiagnostics d;
    d.norm = op_norm(t);
    ComplexMatrix shifted = t;
    shifted.add_identity(-1.0);
    d.min_singular_minus_one = min_singular(shifted);
    d.is_cogenerator = d.norm <= 1.0 + norm_slack && d.min_singular_minus_one > eig_tol;
    return d;
}

/// The Moebius map X -> (X + I)(X - I)^{-1}; both factors are functions of X and commute.
inline ComplexMatrix cayley_map(const ComplexMatrix& x) {
    ComplexMatrix plus = x, minus = x;
    plus.add_identity(1.0);
    minus.add_identity(-1.0);
    return solve(minus, plus);
}

struct GeneratorResult {
    ComplexMatrix generator;
    /// Largest eigenvalue of (A + A*)/2; bounds the real parts of the spectrum of A.
    double max_dissipation = 0.0;
    bool dissipative = false;
};

inline GeneratorResult cayley_generator_with_diagnostics(const Contraction& t,
                                                         double eig_tol = eigenvalue_one_tolerance) {
    ComplexMatrix shifted = t.matrix();
    shifted.add_identity(-1.0);
    const double sigma = min_singular(shifted);
    if (sigma <= eig_tol) {
        throw NotCogeneratorError("cayley_generator: 1 is (numerically) an eigenvalue, min_singular(T - I) = " +
                                  std::to_string(sigma));
    }
    GeneratorResult r;
    r.generator = cayley_map(t.matrix());
    const ComplexMatrix re = (r.generator + r.generator.adjoint()) * Complex(0.5);
    r.max_dissipation = herm_eig(re, 1e-6).values.back();
    r.dissipative = r.max_dissipation <= 1e-8 * std::max(1.0, op_norm(r.generator));
    return r;
}

/// Generator A of the contractive semigroup whose cogenerator is T.
inline ComplexMatrix cayley_generator(const Contraction& t, double eig_tol = eigenvalue_one_tolerance) {
    return cayley_generator_with_diagnostics(t, eig_tol).generator;
}

/// T_t = phi_t(T) = exp(t A).
inline ComplexMatrix semigroup_at(const Contraction& t, double time) {
    if (time < 0.0) throw PreconditionError("semigroup_at: negative time");
    if (time == 0.0) return ComplexMatrix::identity(t.dim());
    return expm(cayley_generator(t) * Complex(time));
}

/// Time samples of a semigroup.  evaluate must be deterministic and side-effect free.
struct SemigroupSampler {
    std::function<ComplexMatrix(double)> evaluate;
    std::size_t dimension = 0;
    std::optional<ComplexMatrix> generator;
};

inline SemigroupSampler sampler_from_cogenerator(const Contraction& t) {
    ComplexMatrix a = cayley_generator(t);
    SemigroupSampler s;
    s.dimension = t.dim();
    s.generator = a;
    s.evaluate = [a = std::move(a)](double time) {
        if (time == 0.0) return ComplexMatrix::identity(a.rows());
        return expm(a * Complex(time));
    };
    return s;
}

/// Default grid on which the semigroup law is sampled.
inline const std::vector<double>& default_time_grid() {
    static const std::vector<double> grid = {0.1, 0.5, 1.0, 2.0};
    return grid;
}

struct SamplerCheck {
    double identity_at_zero = 0.0;   // ||S(0) - I||
    double semigroup_law = 0.0;      // max ||S(s+t) - S(s)S(t)|| over the grid pairs
    double max_norm_excess = 0.0;    // max(0, ||S(t)|| - 1)
};

inline SamplerCheck check_sampler(const SemigroupSampler& s,
                                  const std::vector<double>& grid = default_time_grid()) {
    SamplerCheck c;
    const ComplexMatrix id = ComplexMatrix::identity(s.dimension);
    c.identity_at_zero = op_norm(s.evaluate(0.0) - id);
    std::vector<ComplexMatrix> at;
    at.reserve(grid.size());
    for (double t : grid) {
        at.push_back(s.evaluate(t));
        c.max_norm_excess = std::max(c.max_norm_excess, op_norm(at.back()) - 1.0);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = i; j < grid.size(); ++j) {
            const ComplexMatrix joint = s.evaluate(grid[i] + grid[j]);
            c.semigroup_law = std::max(c.semigroup_law, op_norm(joint - at[i] * at[j]));
        }
    }
    return c;
}

struct CogeneratorRecoveryOptions {
    double base_step = 1e-2;
    /// Number of step sizes h, h/2, ..., h/2^(levels-1) in the Richardson table.
    std::size_t levels = 4;
    /// Successive extrapolated estimates must differ by less than this at the end.
    double convergence_tolerance = 1e-5;
};

/// Recovers the cogenerator from time samples: T = lim_{t->0+} (T_t - 1 + t)(T_t - 1 - t)^{-1},
/// accelerated by Richardson extrapolation in the step size.
inline Contraction cogenerator_of(const SemigroupSampler& s, const CogeneratorRecoveryOptions& opt = {}) {
    if (opt.levels < 1) throw PreconditionError("cogenerator_of: need at least one level");
    auto estimate = [&](double h) {
        ComplexMatrix th = s.evaluate(h);
        ComplexMatrix num = th, den = th;
        num.add_identity(-(1.0 - h));
        den.add_identity(-(1.0 + h));
        try {
            return solve(den, num);
        } catch (const RankDeficiencyError&) {
            throw PreconditionError("cogenerator_of: T_t - (1 + t)I singular at t = " + std::to_string(h));
        }
    };

    // table[k][j]: j-fold extrapolation using steps h/2^(k-j) .. h/2^k
    std::vector<std::vector<ComplexMatrix>> table(opt.levels);
    for (std::size_t k = 0; k < opt.levels; ++k) {
        table[k].push_back(estimate(opt.base_step / std::ldexp(1.0, static_cast<int>(k))));
        for (std::size_t j = 1; j <= k; ++j) {
            const double f = std::ldexp(1.0, static_cast<int>(j));
            table[k].push_back((table[k][j - 1] * Complex(f) - table[k - 1][j - 1]) * Complex(1.0 / (f - 1.0)));
        }
    }
    std::vector<double> diffs;
    for (std::size_t k = 1; k < opt.levels; ++k) {
        diffs.push_back(op_norm(table[k][k] - table[k - 1][k - 1]));
    }
    if (!diffs.empty()) {
        const double last = diffs.back();
        const bool growing = diffs.size() >= 2 && last > diffs[diffs.size() - 2] && last > 1e-10;
        if (last > opt.convergence_tolerance || growing) {
            throw ConvergenceError("cogenerator_of: Richardson estimates do not settle (last change " +
                                   std::to_string(last) + ")");
        }
    }
    return Contraction(table.back().back(), 1e-6);
}

/// ||(T*)^k|| for k = 1..horizon.
inline std::vector<double> purity_defect(const Contraction& t, std::size_t horizon) {
    if (horizon < 1) throw PreconditionError("purity_defect: horizon must be >= 1");
    std::vector<double> seq;
    seq.reserve(horizon);
    const ComplexMatrix ts = t.matrix().adjoint();
    ComplexMatrix power = ts;
    for (std::size_t k = 1; k <= horizon; ++k) {
        seq.push_back(op_norm(power));
        if (k < horizon) power = power * ts;
    }
    return seq;
}

inline constexpr double purity_threshold = 1e-6;

inline bool is_pure(const Contraction& t, std::size_t horizon = 200, double threshold = purity_threshold) {
    return purity_defect(t, horizon).back() < threshold;
}

} // namespace opmodel
