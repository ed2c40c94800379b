#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "opmodel/numerics/linalg.hpp"

namespace opmodel {

/// Seeded generator shared by every randomised builder.
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi_inclusive) {
    return std::uniform_int_distribution<std::size_t>(lo, hi_inclusive)(rng);
}

inline Complex gaussian_complex(Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    const double re = g(rng);
    const double im = g(rng);
    return {re, im};
}

inline ComplexMatrix ginibre(Rng& rng, std::size_t rows, std::size_t cols) {
    ComplexMatrix m(rows, cols);
    for (auto& z : m.data()) z = gaussian_complex(rng);
    return m;
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
inline ComplexMatrix random_unitary(Rng& rng, std::size_t n) {
    const Qr f = qr(ginibre(rng, n, n));
    ComplexMatrix q = f.Q;
    for (std::size_t j = 0; j < n; ++j) {
        const Complex d = f.R(j, j);
        const Complex phase = std::abs(d) == 0.0 ? Complex(1.0) : d / std::abs(d);
        for (std::size_t i = 0; i < n; ++i) q(i, j) *= phase;
    }
    return q;
}

/// Random matrix rescaled to operator norm exactly `norm`.
inline ComplexMatrix random_with_norm(Rng& rng, std::size_t n, double norm) {
    ComplexMatrix m = ginibre(rng, n, n);
    const double s = op_norm(m);
    return m * Complex(norm / s);
}

/// Unitary with eigenvalues e^{i a_k}, a_k drawn from [gap, 2 pi - gap] (so 1 is avoided).
inline ComplexMatrix random_unitary_avoiding_one(Rng& rng, std::size_t n, double gap = 0.3) {
    const ComplexMatrix w = random_unitary(rng, n);
    std::vector<Complex> d(n);
    for (auto& x : d) x = std::polar(1.0, uniform(rng, gap, 2.0 * M_PI - gap));
    return w * ComplexMatrix::diagonal(d) * w.adjoint();
}

} // namespace opmodel
