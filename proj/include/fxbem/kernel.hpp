#pragma once

#include "fxbem/geometry.hpp"
#include "fxbem/quadrature.hpp"

#include <atomic>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace fxbem {

using Complex = std::complex<double>;

enum class KernelKind { SLP, DLP };

inline KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "slp") return KernelKind::SLP;
    if (s == "dlp") return KernelKind::DLP;
    throw std::invalid_argument("unknown kernel kind: " + s);
}

inline const char* to_string(KernelKind k) { return k == KernelKind::SLP ? "slp" : "dlp"; }

// std::polar but valid for negative magnitudes
inline Complex unit_phase(double rho, double theta) {
    return {rho * std::cos(theta), rho * std::sin(theta)};
}

struct Wavenumber {
    double value;
    explicit Wavenumber(double kappa) : value(kappa) {
        if (!(kappa > 0.0) || !std::isfinite(kappa))
            throw std::invalid_argument("wavenumber must be finite and > 0");
    }
};

// Free-space Helmholtz Green's function exp(i kappa r) / (4 pi r).
inline Complex green(const Vec3& x, const Vec3& y, double kappa) {
    const double r = (x - y).norm();
    if (r == 0.0) throw std::domain_error("green: coincident points");
    return std::polar(1.0 / (4.0 * M_PI * r), kappa * r);
}

// Directional derivative of green(., y) at x along the unit normal nx:
// exp(i kappa r)/(4 pi r^2) * (i kappa r - 1) * (rhat . nx), rhat = (x-y)/r.
inline Complex green_dnx(const Vec3& x, const Vec3& y, double kappa, const Vec3& nx) {
    const Vec3 d   = x - y;
    const double r = d.norm();
    if (r == 0.0) throw std::domain_error("green_dnx: coincident points");
    const double proj = d.dot(nx) / r;
    const Complex osc = unit_phase(proj / (4.0 * M_PI * r * r), kappa * r);
    return osc * Complex(-1.0, kappa * r);
}

// Galerkin entries for piecewise-constant test/ansatz functions over panel
// pairs. Entries are double integrals of the kernel; the quadrature rule is
// selected automatically from the pair topology (shared vertices by index).
//
// Convention: entry(i,j) integrates x over panel j and y over panel i; for
// the DLP the normal derivative is taken at x, i.e. with panel j's normal.
class GalerkinEntry {
  public:
    GalerkinEntry(const TriangleMesh& mesh, std::span<const Panel> pans, KernelKind kind, int q)
        : mesh_(&mesh), panels_(pans), kind_(kind), rule_(&QuadratureRule::get(q)) {}

    KernelKind kind() const { return kind_; }
    int order() const { return rule_->order; }
    int size() const { return static_cast<int>(panels_.size()); }
    const Panel& panel(int i) const { return panels_[i]; }

    double center_distance(int i, int j) const {
        return (panels_[i].center - panels_[j].center).norm();
    }

    // H_ij(kappa) on the far field; exp(i kappa |xi_i - xi_j|)
    Complex phase(int i, int j, double kappa) const {
        return std::polar(1.0, kappa * center_distance(i, j));
    }

    PairTopology topology(int i, int j) const {
        if (i == j) return PairTopology::Coincident;
        const auto& ti = mesh_->triangles[panels_[i].index];
        const auto& tj = mesh_->triangles[panels_[j].index];
        int shared = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                if (ti[a] == tj[b]) { ++shared; break; }
        switch (shared) {
            case 0: return PairTopology::Separated;
            case 1: return PairTopology::SharedVertex;
            case 2: return PairTopology::SharedEdge;
            default: return PairTopology::Coincident;
        }
    }

    Complex entry(int i, int j, double kappa) const {
        Complex out;
        entry_trace(i, j, {&kappa, 1}, {&out, 1}, false);
        return out;
    }

    // Far-field extracted entry: entry * exp(-i kappa d_ij). The modulus is
    // preserved exactly because the phase is applied as a unit factor after
    // quadrature. Pass far=false for near-field pairs (H_ij = 1 there).
    Complex extracted_entry(int i, int j, double kappa, bool far = true) const {
        if (!far) return entry(i, j, kappa);
        Complex out;
        entry_trace(i, j, {&kappa, 1}, {&out, 1}, true);
        return out;
    }

    // Evaluate one pair for several wavenumbers; the quadrature geometry is
    // computed once and only the oscillatory factor varies with kappa.
    void entry_trace(int i, int j, std::span<const double> kappas, std::span<Complex> out,
                     bool extracted) const {
        thread_local std::vector<double> rs, cs;
        const std::size_t n = gather(i, j, rs, cs);
        kernel_evals_.fetch_add(n * kappas.size(), std::memory_order_relaxed);

        const double d = extracted ? center_distance(i, j) : 0.0;
        if (kind_ == KernelKind::SLP) {
            for (std::size_t m = 0; m < kappas.size(); ++m) {
                const double kappa = kappas[m];
                Complex acc(0.0, 0.0);
                for (std::size_t p = 0; p < n; ++p)
                    acc += unit_phase(cs[p], kappa * rs[p]);
                out[m] = extracted ? acc * std::polar(1.0, -kappa * d) : acc;
            }
        } else {
            for (std::size_t m = 0; m < kappas.size(); ++m) {
                const double kappa = kappas[m];
                Complex acc(0.0, 0.0);
                for (std::size_t p = 0; p < n; ++p)
                    acc += unit_phase(cs[p], kappa * rs[p]) * Complex(-1.0, kappa * rs[p]);
                out[m] = extracted ? acc * std::polar(1.0, -kappa * d) : acc;
            }
        }
    }

    std::uint64_t kernel_evals() const { return kernel_evals_.load(std::memory_order_relaxed); }
    void reset_kernel_evals() const { kernel_evals_.store(0, std::memory_order_relaxed); }

  private:
    // Collect kappa-independent quadrature data for the pair (i,j):
    // distances r_p and real coefficients c_p such that
    //   SLP: entry = sum_p polar(c_p, kappa r_p)
    //   DLP: entry = sum_p polar(c_p, kappa r_p) * (i kappa r_p - 1)
    std::size_t gather(int i, int j, std::vector<double>& rs, std::vector<double>& cs) const {
        const Panel& pi = panels_[i];
        const Panel& pj = panels_[j];
        const auto& ti = mesh_->triangles[pi.index];
        const auto& tj = mesh_->triangles[pj.index];
        const double jac = (2.0 * pi.area) * (2.0 * pj.area);
        const Vec3 nx = pj.normal;  // x lives on panel j

        const PairTopology topo = topology(i, j);
        if (topo == PairTopology::Separated) {
            const auto& tri = rule_->triangle;
            const std::size_t n = tri.size() * tri.size();
            rs.resize(n);
            cs.resize(n);
            // physical points per triangle computed once
            thread_local std::vector<Vec3> xs, ys;
            xs.resize(tri.size());
            ys.resize(tri.size());
            const Vec3 &xa = mesh_->vertices[tj[0]], &xb = mesh_->vertices[tj[1]],
                       &xc = mesh_->vertices[tj[2]];
            const Vec3 &ya = mesh_->vertices[ti[0]], &yb = mesh_->vertices[ti[1]],
                       &yc = mesh_->vertices[ti[2]];
            for (std::size_t p = 0; p < tri.size(); ++p) {
                xs[p] = xa + tri[p].a1 * (xb - xa) + tri[p].a2 * (xc - xa);
                ys[p] = ya + tri[p].a1 * (yb - ya) + tri[p].a2 * (yc - ya);
            }
            std::size_t q = 0;
            for (std::size_t a = 0; a < tri.size(); ++a)
                for (std::size_t b = 0; b < tri.size(); ++b, ++q)
                    fill_point(xs[a], ys[b], tri[a].w * tri[b].w * jac, nx, rs[q], cs[q]);
            return n;
        }

        // shared vertices permuted to leading positions of both triangles
        int permx[3], permy[3];
        match_vertices(tj, ti, permx, permy);
        const Vec3 x0 = mesh_->vertices[tj[permx[0]]], x1 = mesh_->vertices[tj[permx[1]]],
                   x2 = mesh_->vertices[tj[permx[2]]];
        const Vec3 y0 = mesh_->vertices[ti[permy[0]]], y1 = mesh_->vertices[ti[permy[1]]],
                   y2 = mesh_->vertices[ti[permy[2]]];

        const std::vector<PairPoint>* rule = nullptr;
        switch (topo) {
            case PairTopology::Coincident: rule = &rule_->coincident; break;
            case PairTopology::SharedEdge: rule = &rule_->edge; break;
            default: rule = &rule_->vertex; break;
        }
        const std::size_t n = rule->size();
        rs.resize(n);
        cs.resize(n);
        for (std::size_t p = 0; p < n; ++p) {
            const PairPoint& pp = (*rule)[p];
            const Vec3 x = x0 + pp.a1 * (x1 - x0) + pp.a2 * (x2 - x0);
            const Vec3 y = y0 + pp.b1 * (y1 - y0) + pp.b2 * (y2 - y0);
            fill_point(x, y, pp.w * jac, nx, rs[p], cs[p]);
        }
        return n;
    }

    void fill_point(const Vec3& x, const Vec3& y, double w, const Vec3& nx, double& r,
                    double& c) const {
        const Vec3 d = x - y;
        r = d.norm();
        if (kind_ == KernelKind::SLP) {
            c = w / (4.0 * M_PI * r);
        } else {
            c = r > 0.0 ? w * d.dot(nx) / (4.0 * M_PI * r * r * r) : 0.0;
        }
    }

    static void match_vertices(const std::array<int, 3>& ta, const std::array<int, 3>& tb,
                               int* perma, int* permb) {
        int shared = 0;
        bool useda[3] = {false, false, false}, usedb[3] = {false, false, false};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                if (!usedb[b] && ta[a] == tb[b]) {
                    perma[shared] = a;
                    permb[shared] = b;
                    useda[a] = usedb[b] = true;
                    ++shared;
                    break;
                }
        int ka = shared, kb = shared;
        for (int a = 0; a < 3; ++a)
            if (!useda[a]) perma[ka++] = a;
        for (int b = 0; b < 3; ++b)
            if (!usedb[b]) permb[kb++] = b;
    }

    const TriangleMesh* mesh_;
    std::span<const Panel> panels_;
    KernelKind kind_;
    const QuadratureRule* rule_;
    mutable std::atomic<std::uint64_t> kernel_evals_{0};
};

} // namespace fxbem
