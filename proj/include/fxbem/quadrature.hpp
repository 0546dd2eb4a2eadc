#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fxbem {

// Gauss-Legendre nodes/weights on [0,1], by Newton iteration on P_n.
inline void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
    if (n < 1) throw std::invalid_argument("gauss_legendre_01: n >= 1 required");
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i]         = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i]         = 1.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

// Quadrature point on the unit simplex {a1,a2 >= 0, a1+a2 <= 1}.
struct TriPoint {
    double a1, a2, w;
};

// Duffy-collapsed tensor rule on the reference triangle; q^2 points,
// weights sum to 1/2 (the reference area).
inline std::vector<TriPoint> triangle_rule(int q) {
    std::vector<double> x, w;
    gauss_legendre_01(q, x, w);
    std::vector<TriPoint> pts;
    pts.reserve(q * q);
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) {
            const double xi = x[a], eta = x[b];
            pts.push_back({xi * (1.0 - eta), xi * eta, w[a] * w[b] * xi});
        }
    return pts;
}

enum class PairTopology { Separated, SharedVertex, SharedEdge, Coincident };

// Point pair on (unit simplex)^2; weights of each regularized rule sum to 1/4.
struct PairPoint {
    double a1, a2;  // first triangle
    double b1, b2;  // second triangle
    double w;
};

namespace detail {

// Sauter-Schwab relative-coordinate rules. Shared vertices must be permuted
// to the leading positions of both triangles before mapping the points.
inline std::vector<PairPoint> sauter_coincident(int q) {
    std::vector<double> x, w;
    gauss_legendre_01(q, x, w);
    std::vector<PairPoint> pts;
    pts.reserve(6 * q * q * q * q);
    for (int i0 = 0; i0 < q; ++i0)
        for (int i1 = 0; i1 < q; ++i1)
            for (int i2 = 0; i2 < q; ++i2)
                for (int i3 = 0; i3 < q; ++i3) {
                    const double xi = x[i0], e3 = x[i1], e2 = x[i2], e1 = x[i3];
                    const double lw = w[i0] * w[i1] * w[i2] * w[i3] * xi * xi * xi * e1 * e1 * e2;
                    const double u[6][4] = {
                        {xi, xi * (1 - e1 + e1 * e2), xi * (1 - e1 * e2 * e3), xi * (1 - e1)},
                        {xi * (1 - e1 * e2 * e3), xi * (1 - e1), xi, xi * (1 - e1 + e1 * e2)},
                        {xi, xi * e1 * (1 - e2 + e2 * e3), xi * (1 - e1 * e2), xi * e1 * (1 - e2)},
                        {xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi, xi * e1 * (1 - e2 + e2 * e3)},
                        {xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * (1 - e2)},
                        {xi, xi * e1 * (1 - e2), xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3)},
                    };
                    for (const auto& c : u)
                        pts.push_back({c[0] - c[1], c[1], c[2] - c[3], c[3], lw});
                }
    return pts;
}

inline std::vector<PairPoint> sauter_edge(int q) {
    std::vector<double> x, w;
    gauss_legendre_01(q, x, w);
    std::vector<PairPoint> pts;
    pts.reserve(5 * q * q * q * q);
    for (int i0 = 0; i0 < q; ++i0)
        for (int i1 = 0; i1 < q; ++i1)
            for (int i2 = 0; i2 < q; ++i2)
                for (int i3 = 0; i3 < q; ++i3) {
                    const double xi = x[i0], e3 = x[i1], e2 = x[i2], e1 = x[i3];
                    const double base = w[i0] * w[i1] * w[i2] * w[i3] * xi * xi * xi;
                    const double lw   = base * e1 * e1 * e2;
                    const double lw0  = base * e1 * e1;
                    const double u[5][5] = {
                        {xi, xi * e1 * e3, xi * (1 - e1 * e2), xi * e1 * (1 - e2), lw0},
                        {xi, xi * e1, xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), lw},
                        {xi * (1 - e1 * e2), xi * e1 * (1 - e2), xi, xi * e1 * e2 * e3, lw},
                        {xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), xi, xi * e1, lw},
                        {xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), xi, xi * e1 * e2, lw},
                    };
                    for (const auto& c : u)
                        pts.push_back({c[0] - c[1], c[1], c[2] - c[3], c[3], c[4]});
                }
    return pts;
}

inline std::vector<PairPoint> sauter_vertex(int q) {
    std::vector<double> x, w;
    gauss_legendre_01(q, x, w);
    std::vector<PairPoint> pts;
    pts.reserve(2 * q * q * q * q);
    for (int i0 = 0; i0 < q; ++i0)
        for (int i1 = 0; i1 < q; ++i1)
            for (int i2 = 0; i2 < q; ++i2)
                for (int i3 = 0; i3 < q; ++i3) {
                    const double xi = x[i0], e3 = x[i1], e2 = x[i2], e1 = x[i3];
                    const double lw = w[i0] * w[i1] * w[i2] * w[i3] * xi * xi * xi * e2;
                    const double u[2][4] = {
                        {xi, xi * e1, xi * e2, xi * e2 * e3},
                        {xi * e2, xi * e2 * e3, xi, xi * e1},
                    };
                    for (const auto& c : u)
                        pts.push_back({c[0] - c[1], c[1], c[2] - c[3], c[3], lw});
                }
    return pts;
}

} // namespace detail

// Rule bundle for one tensor order q. Immutable and shared between threads.
struct QuadratureRule {
    int order = 0;
    std::vector<TriPoint> triangle;          // separated pairs use triangle x triangle
    std::vector<PairPoint> coincident;
    std::vector<PairPoint> edge;
    std::vector<PairPoint> vertex;

    explicit QuadratureRule(int q)
        : order(q),
          triangle(triangle_rule(q)),
          coincident(detail::sauter_coincident(q)),
          edge(detail::sauter_edge(q)),
          vertex(detail::sauter_vertex(q)) {}

    static const QuadratureRule& get(int q) {
        static std::mutex mutex;
        static std::map<int, QuadratureRule> cache;
        std::lock_guard lock(mutex);
        auto it = cache.find(q);
        if (it == cache.end()) it = cache.emplace(q, QuadratureRule(q)).first;
        return it->second;
    }
};

} // namespace fxbem
