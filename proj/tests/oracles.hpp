#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace opmodel::testing {

/// Taylor coefficients of phi_t by the trapezoidal rule on |z| = r:
/// c_n = (K r^n)^{-1} sum_k phi_t(r w^k) w^{-nk}, w = exp(2 pi i / K).
inline std::vector<double> phi_coeffs_contour(double t, std::size_t n, double r = 0.9, std::size_t k_points = 8192) {
    std::vector<std::complex<double>> samples(k_points);
    for (std::size_t k = 0; k < k_points; ++k) {
        const auto z = std::polar(r, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(k_points));
        samples[k] = std::exp(t * (z + 1.0) / (z - 1.0));
    }
    std::vector<double> c(n);
    for (std::size_t m = 0; m < n; ++m) {
        std::complex<double> acc{};
        for (std::size_t k = 0; k < k_points; ++k) {
            const double th = -2.0 * std::numbers::pi * static_cast<double>((m * k) % k_points) /
                              static_cast<double>(k_points);
            acc += samples[k] * std::polar(1.0, th);
        }
        c[m] = (acc / static_cast<double>(k_points)).real() / std::pow(r, static_cast<double>(m));
    }
    return c;
}

struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Laguerre rule for the weight e^{-x} on [0, inf), by Newton's method
/// on L_n with the classical asymptotic starting guesses.
inline Quadrature gauss_laguerre(std::size_t n) {
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    const double dn = static_cast<double>(n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            z = 3.0 / (1.0 + 2.4 * dn);
        } else if (i == 1) {
            z += 15.0 / (1.0 + 2.5 * dn);
        } else {
            const double ai = static_cast<double>(i - 1);
            z += ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - q.nodes[i - 2]);
        }
        double p1 = 0.0, p2 = 0.0, pp = 0.0;
        int it = 0;
        for (; it < 200; ++it) {
            p1 = 1.0;
            p2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                const double dj = static_cast<double>(j);
                p1 = ((2.0 * dj + 1.0 - z) * p2 - dj * p3) / (dj + 1.0);
            }
            pp = dn * (p1 - p2) / z;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-14 * std::max(1.0, z)) break;
        }
        if (it == 200) throw std::runtime_error("gauss_laguerre: Newton did not converge");
        q.nodes[i] = z;
        q.weights[i] = -1.0 / (pp * dn * p2);
    }
    return q;
}

} // namespace opmodel::testing
