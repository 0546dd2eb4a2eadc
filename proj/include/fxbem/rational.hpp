#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace fxbem {

using Complex = std::complex<double>;

// Wavenumber sample grid S on [a,b] plus the held-out validation nodes S*.
// Default S: Chebyshev points of the open kind (all nodes strictly inside
// the interval); S*: equispaced interior points disjoint from S.
struct SampleGrid {
    double a = 0.0, b = 1.0;
    std::vector<double> nodes;
    std::vector<double> quad_weights;  // Gauss-Chebyshev weights for the L2 norm on [a,b]
    std::vector<double> heldout;

    static SampleGrid chebyshev(double a, double b, int n = 16, int n_heldout = 7) {
        if (!(a < b)) throw std::invalid_argument("SampleGrid: need a < b");
        if (n < 2) throw std::invalid_argument("SampleGrid: need >= 2 nodes");
        SampleGrid g;
        g.a = a;
        g.b = b;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        g.nodes.resize(n);
        g.quad_weights.resize(n);
        for (int i = 0; i < n; ++i) {
            const double x = std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * n));
            g.nodes[n - 1 - i]        = mid + half * x;
            g.quad_weights[n - 1 - i] = (M_PI / n) * std::sqrt(std::max(0.0, 1.0 - x * x)) * half;
        }
        g.heldout.resize(std::max(0, n_heldout));
        for (int j = 0; j < n_heldout; ++j) {
            double v = a + (j + 1) * (b - a) / (n_heldout + 1);
            while (std::find(g.nodes.begin(), g.nodes.end(), v) != g.nodes.end())
                v += (b - a) * 1e-9;
            g.heldout[j] = v;
        }
        return g;
    }

    int size() const { return static_cast<int>(nodes.size()); }

    // quadrature-weighted discrete L2 norm of values sampled on S
    double norm(std::span<const Complex> values) const {
        double s = 0.0;
        for (int i = 0; i < size(); ++i) s += quad_weights[i] * std::norm(values[i]);
        return std::sqrt(s);
    }

    int index_of(double kappa) const {
        for (int i = 0; i < size(); ++i)
            if (nodes[i] == kappa) return i;
        return -1;
    }
};

// Rational interpolant in barycentric form: support points z_m, values f_m,
// weights w_m; degree = #support - 1.
class BarycentricRational {
  public:
    BarycentricRational() = default;
    BarycentricRational(std::vector<double> support, std::vector<Complex> values,
                        std::vector<Complex> weights)
        : z_(std::move(support)), f_(std::move(values)), w_(std::move(weights)) {
        if (z_.size() != f_.size() || z_.size() != w_.size() || z_.empty())
            throw std::invalid_argument("BarycentricRational: inconsistent sizes");
    }

    int degree() const { return static_cast<int>(z_.size()) - 1; }
    const std::vector<double>& support_points() const { return z_; }
    const std::vector<Complex>& values() const { return f_; }
    const std::vector<Complex>& weights() const { return w_; }

    Complex operator()(double x) const {
        // support points return the stored value bitwise; no 0/0 case
        for (std::size_t j = 0; j < z_.size(); ++j)
            if (x == z_[j]) return f_[j];
        if (z_.size() == 1) return f_[0];
        Complex num(0.0, 0.0), den(0.0, 0.0);
        for (std::size_t j = 0; j < z_.size(); ++j) {
            const Complex t = w_[j] / (x - z_[j]);
            num += t * f_[j];
            den += t;
        }
        return num / den;
    }

  private:
    std::vector<double> z_;
    std::vector<Complex> f_;
    std::vector<Complex> w_;
};

// Greedy AAA fit on the sample set: support points are chosen at the maximal
// residual, least-squares weights come from the SVD of the Loewner matrix.
// Stops when max_{non-support} |f - r| <= tol * max|f| or at max_degree.
inline BarycentricRational aaa(std::span<const double> nodes, std::span<const Complex> values,
                               double tol, int max_degree,
                               std::vector<double>* error_history = nullptr) {
    const int M = static_cast<int>(nodes.size());
    if (M < 2) throw std::invalid_argument("aaa: need at least 2 samples");
    if (values.size() != nodes.size()) throw std::invalid_argument("aaa: size mismatch");
    for (const Complex& v : values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("aaa: non-finite sample value");

    double fmax = 0.0;
    Complex mean(0.0, 0.0);
    for (const Complex& v : values) {
        fmax = std::max(fmax, std::abs(v));
        mean += v;
    }
    mean /= static_cast<double>(M);
    if (fmax == 0.0)
        return BarycentricRational({nodes[0]}, {Complex(0.0, 0.0)}, {Complex(1.0, 0.0)});

    std::vector<int> remaining(M);
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<int> support;
    Eigen::VectorXcd R = Eigen::VectorXcd::Constant(M, mean);
    Eigen::MatrixXcd cauchy(M, 0);
    std::vector<Complex> weights;

    const int max_support = std::min(max_degree + 1, M - 1);
    while (static_cast<int>(support.size()) < max_support) {
        int pick = -1;
        double err = -1.0;
        for (int idx : remaining) {
            const double e = std::abs(values[idx] - R(idx));
            if (e > err) {
                err = e;
                pick = idx;
            }
        }
        if (err <= tol * fmax && !support.empty()) break;

        support.push_back(pick);
        remaining.erase(std::find(remaining.begin(), remaining.end(), pick));
        const int m = static_cast<int>(support.size());

        cauchy.conservativeResize(Eigen::NoChange, m);
        for (int i = 0; i < M; ++i)
            cauchy(i, m - 1) =
                i == pick ? Complex(0.0, 0.0) : Complex(1.0, 0.0) / (nodes[i] - nodes[pick]);

        // Loewner matrix over the non-support rows
        Eigen::MatrixXcd loewner(remaining.size(), m);
        for (std::size_t r = 0; r < remaining.size(); ++r) {
            const int i = remaining[r];
            for (int c = 0; c < m; ++c)
                loewner(r, c) = (values[i] - values[support[c]]) * cauchy(i, c);
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(loewner, Eigen::ComputeFullV);
        const Eigen::VectorXcd w = svd.matrixV().col(m - 1);
        weights.assign(w.data(), w.data() + m);

        // evaluate the fit at the non-support nodes
        double fit_err = 0.0;
        for (int i : remaining) {
            Complex num(0.0, 0.0), den(0.0, 0.0);
            for (int c = 0; c < m; ++c) {
                const Complex t = weights[c] * cauchy(i, c);
                num += t * values[support[c]];
                den += t;
            }
            R(i) = den == Complex(0.0, 0.0) ? mean : num / den;
            fit_err = std::max(fit_err, std::abs(values[i] - R(i)));
        }
        if (error_history) error_history->push_back(fit_err);
    }

    // one cleanup pass: drop support points whose weight vanished
    std::vector<double> z;
    std::vector<Complex> f, w;
    for (std::size_t c = 0; c < support.size(); ++c) {
        if (weights.empty() || weights[c] != Complex(0.0, 0.0)) {
            z.push_back(nodes[support[c]]);
            f.push_back(values[support[c]]);
            w.push_back(weights.empty() ? Complex(1.0, 0.0) : weights[c]);
        }
    }
    if (z.empty()) {
        z.push_back(nodes[support[0]]);
        f.push_back(values[support[0]]);
        w.push_back(Complex(1.0, 0.0));
    }
    return BarycentricRational(std::move(z), std::move(f), std::move(w));
}

struct Pole {
    Complex location;
    bool flagged = false;  // real part inside [a,b] and nearly real
};

// Poles of the barycentric denominator, i.e. the zeros of
// sum_j w_j / (z - z_j): computed as the eigenvalues of the companion matrix
// of the numerator polynomial in an affinely rescaled variable.
inline std::vector<Pole> poles(const BarycentricRational& r, double a, double b) {
    const auto& z = r.support_points();
    const auto& w = r.weights();
    const int m = static_cast<int>(z.size());
    std::vector<Pole> out;
    if (m < 2) return out;

    // rescale support to [-1,1] for conditioning
    const double lo = *std::min_element(z.begin(), z.end());
    const double hi = *std::max_element(z.begin(), z.end());
    const double mid = 0.5 * (lo + hi), half = hi > lo ? 0.5 * (hi - lo) : 1.0;
    std::vector<double> zs(m);
    for (int j = 0; j < m; ++j) zs[j] = (z[j] - mid) / half;

    // N(zeta) = sum_j w_j prod_{l != j} (zeta - zs_l), degree <= m-1
    std::vector<Complex> coeff(m, Complex(0.0, 0.0));
    for (int j = 0; j < m; ++j) {
        std::vector<Complex> p{Complex(1.0, 0.0)};
        for (int l = 0; l < m; ++l) {
            if (l == j) continue;
            std::vector<Complex> q(p.size() + 1, Complex(0.0, 0.0));
            for (std::size_t c = 0; c < p.size(); ++c) {
                q[c] -= p[c] * zs[l];
                q[c + 1] += p[c];
            }
            p = std::move(q);
        }
        for (std::size_t c = 0; c < p.size(); ++c) coeff[c] += w[j] * p[c];
    }

    double cmax = 0.0;
    for (const Complex& c : coeff) cmax = std::max(cmax, std::abs(c));
    int deg = m - 1;
    while (deg > 0 && std::abs(coeff[deg]) <= 1e-13 * cmax) --deg;
    if (deg < 1 || cmax == 0.0) return out;

    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -coeff[i] / coeff[deg];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(companion, false);

    for (int i = 0; i < deg; ++i) {
        Pole p;
        p.location = mid + half * eig.eigenvalues()(i);
        p.flagged = p.location.real() >= a && p.location.real() <= b &&
                    std::abs(p.location.imag()) < (b - a) * 1e-6;
        out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](const Pole& x, const Pole& y) {
        return x.location.real() < y.location.real() ||
               (x.location.real() == y.location.real() && x.location.imag() < y.location.imag());
    });
    return out;
}

} // namespace fxbem
