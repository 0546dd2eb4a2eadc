#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <complex>
#include <concepts>
#include <cstdint>
#include <vector>

namespace fxbem {

using Complex = std::complex<double>;

// Entry generator over a t x s block: single rows and columns on demand.
template <class G>
concept BlockGenerator = requires(const G& g, int i, Complex* out) {
    { g.rows() } -> std::convertible_to<int>;
    { g.cols() } -> std::convertible_to<int>;
    g.row(i, out);  // out has length cols()
    g.col(i, out);  // out has length rows()
};

// Rank-k factorization block ~= X Y^T with the ACA pivot skeleton.
struct LowRankFactor {
    Eigen::MatrixXcd X;  // #t x k
    Eigen::MatrixXcd Y;  // #s x k
    std::vector<int> row_pivots, col_pivots;

    int rank() const { return static_cast<int>(X.cols()); }

    Eigen::MatrixXcd to_dense() const { return X * Y.transpose(); }

    std::size_t payload_bytes() const {
        return sizeof(Complex) * (X.size() + Y.size());
    }
};

// Instrumentation for the cost-lemma checks; counters, not enforced bounds.
struct AcaStats {
    std::int64_t entries_generated = 0;  // generator calls, in entries
    double arith_flops = 0.0;            // estimated non-generator arithmetic
    int rank = 0;
    bool rank_capped = false;
    std::vector<double> cross_norms;     // ||x_k|| ||y_k|| per accepted cross
};

namespace detail {

template <class Gen>
void residual_row(const Gen& gen, int i, const std::vector<Eigen::VectorXcd>& xs,
                  const std::vector<Eigen::VectorXcd>& ys, Eigen::VectorXcd& out,
                  AcaStats& stats) {
    out.resize(gen.cols());
    gen.row(i, out.data());
    stats.entries_generated += gen.cols();
    for (std::size_t m = 0; m < xs.size(); ++m) out -= xs[m](i) * ys[m];
    stats.arith_flops += 8.0 * static_cast<double>(xs.size()) * gen.cols();
}

template <class Gen>
void residual_col(const Gen& gen, int j, const std::vector<Eigen::VectorXcd>& xs,
                  const std::vector<Eigen::VectorXcd>& ys, Eigen::VectorXcd& out,
                  AcaStats& stats) {
    out.resize(gen.rows());
    gen.col(j, out.data());
    stats.entries_generated += gen.rows();
    for (std::size_t m = 0; m < xs.size(); ++m) out -= ys[m](j) * xs[m];
    stats.arith_flops += 8.0 * static_cast<double>(xs.size()) * gen.rows();
}

// lowest unused index at or after `from`, wrapping around
inline int next_unused(const std::vector<char>& used, int from) {
    const int n = static_cast<int>(used.size());
    for (int k = 0; k < n; ++k) {
        const int idx = (from + k) % n;
        if (!used[idx]) return idx;
    }
    return -1;
}

inline int argmax_abs(const Eigen::VectorXcd& v, const std::vector<char>& used) {
    int best = -1;
    double bestval = -1.0;
    for (int i = 0; i < v.size(); ++i) {
        if (used[i]) continue;
        const double a = std::abs(v(i));
        if (a > bestval) {  // ties keep the lowest index
            bestval = a;
            best = i;
        }
    }
    return best;
}

} // namespace detail

// ACA+ cross approximation. A reference cross (one residual row, one
// residual column) guides the pivot choice; it is rebuilt at the next unused
// index whenever one of its lines is consumed as a pivot. Stops when
// ||x_k|| ||y_k|| <= tol * ||x_0|| ||y_0|| or the rank cap is hit.
// Numerically zero blocks yield a rank-0 factor.
template <BlockGenerator Gen>
LowRankFactor aca_plus(const Gen& gen, double tol, int max_rank, AcaStats* stats_out = nullptr) {
    const int nt = gen.rows(), ns = gen.cols();
    AcaStats stats;
    LowRankFactor f;
    std::vector<Eigen::VectorXcd> xs, ys;
    std::vector<char> used_row(nt, 0), used_col(ns, 0);

    // reference cross starts at the middle of the block
    int ref_i = nt / 2, ref_j = ns / 2;
    Eigen::VectorXcd ref_row, ref_col;
    detail::residual_row(gen, ref_i, xs, ys, ref_row, stats);
    detail::residual_col(gen, ref_j, xs, ys, ref_col, stats);

    double first_cross = -1.0;
    const int cap = std::max(1, max_rank);
    int refresh_budget = 3;  // refreshes allowed while the reference reads zero

    while (static_cast<int>(xs.size()) < std::min(nt, ns)) {
        if (static_cast<int>(xs.size()) >= cap) {
            stats.rank_capped = true;
            break;
        }
        const int cand_i = detail::argmax_abs(ref_col, used_row);
        const int cand_j = detail::argmax_abs(ref_row, used_col);
        const double vi = cand_i >= 0 ? std::abs(ref_col(cand_i)) : 0.0;
        const double vj = cand_j >= 0 ? std::abs(ref_row(cand_j)) : 0.0;
        if (cand_i < 0 && cand_j < 0) break;

        if (std::max(vi, vj) == 0.0) {
            // an identically zero first cross means a numerically zero block;
            // mid-run the reference may just be blind, so rebuild it elsewhere
            if (xs.empty() || refresh_budget-- <= 0) break;
            const int ni = detail::next_unused(used_row, ref_i + 1);
            const int nj = detail::next_unused(used_col, ref_j + 1);
            if (ni < 0 || nj < 0) break;
            ref_i = ni;
            ref_j = nj;
            detail::residual_row(gen, ref_i, xs, ys, ref_row, stats);
            detail::residual_col(gen, ref_j, xs, ys, ref_col, stats);
            continue;
        }

        int i_k, j_k;
        Eigen::VectorXcd xk, yk;
        if (vi >= vj) {
            i_k = cand_i;
            detail::residual_row(gen, i_k, xs, ys, yk, stats);
            j_k = detail::argmax_abs(yk, used_col);
            if (j_k < 0) break;
            detail::residual_col(gen, j_k, xs, ys, xk, stats);
        } else {
            j_k = cand_j;
            detail::residual_col(gen, j_k, xs, ys, xk, stats);
            i_k = detail::argmax_abs(xk, used_row);
            if (i_k < 0) break;
            detail::residual_row(gen, i_k, xs, ys, yk, stats);
        }
        const Complex pivot = xk(i_k);
        if (pivot == Complex(0.0, 0.0)) break;  // residual exhausted
        xk /= pivot;
        stats.arith_flops += 8.0 * nt;

        const double cross = xk.norm() * yk.norm();
        stats.arith_flops += 4.0 * (nt + ns) + 10.0;
        // a cross already below tolerance would only add noise; the first
        // one is always kept (it defines the stopping scale)
        if (first_cross >= 0.0 && cross <= tol * first_cross) break;
        stats.cross_norms.push_back(cross);
        if (first_cross < 0.0) first_cross = cross;

        used_row[i_k] = 1;
        used_col[j_k] = 1;
        f.row_pivots.push_back(i_k);
        f.col_pivots.push_back(j_k);

        // keep the reference cross a residual of the enlarged approximation
        const bool ref_row_hit = (i_k == ref_i);
        const bool ref_col_hit = (j_k == ref_j);
        if (!ref_row_hit) ref_row -= xk(ref_i) * yk;
        if (!ref_col_hit) ref_col -= yk(ref_j) * xk;
        stats.arith_flops += 8.0 * (nt + ns);

        xs.push_back(std::move(xk));
        ys.push_back(std::move(yk));

        if (ref_row_hit) {
            ref_i = detail::next_unused(used_row, ref_i + 1);
            if (ref_i >= 0) detail::residual_row(gen, ref_i, xs, ys, ref_row, stats);
        }
        if (ref_col_hit) {
            ref_j = detail::next_unused(used_col, ref_j + 1);
            if (ref_j >= 0) detail::residual_col(gen, ref_j, xs, ys, ref_col, stats);
        }
        if (ref_i < 0 || ref_j < 0) break;
    }

    const int k = static_cast<int>(xs.size());
    f.X.resize(nt, k);
    f.Y.resize(ns, k);
    for (int m = 0; m < k; ++m) {
        f.X.col(m) = xs[m];
        f.Y.col(m) = ys[m];
    }
    stats.rank = k;
    if (stats_out) *stats_out = stats;
    return f;
}

// QR + SVD recompression: X Y^T = Qx (Rx Ry^T) Qy^T, truncated so that the
// discarded singular-value tail stays below eps * ||X Y^T||_F.
inline LowRankFactor recompress(const LowRankFactor& f, double eps) {
    const int k = f.rank();
    if (k == 0) return f;
    const int nt = static_cast<int>(f.X.rows());
    const int ns = static_cast<int>(f.Y.rows());
    const int kx = std::min(nt, k), ky = std::min(ns, k);

    Eigen::HouseholderQR<Eigen::MatrixXcd> qrx(f.X), qry(f.Y);
    Eigen::MatrixXcd Qx = qrx.householderQ() * Eigen::MatrixXcd::Identity(nt, kx);
    Eigen::MatrixXcd Qy = qry.householderQ() * Eigen::MatrixXcd::Identity(ns, ky);
    Eigen::MatrixXcd Rx = qrx.matrixQR().topRows(kx).triangularView<Eigen::Upper>();
    Eigen::MatrixXcd Ry = qry.matrixQR().topRows(ky).triangularView<Eigen::Upper>();

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Rx * Ry.transpose(),
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double total2 = 0.0;
    for (int i = 0; i < sv.size(); ++i) total2 += sv(i) * sv(i);
    const double budget = eps * eps * total2;
    int keep = static_cast<int>(sv.size());
    double tail2 = 0.0;
    while (keep > 0) {
        const double next = tail2 + sv(keep - 1) * sv(keep - 1);
        if (next > budget) break;
        tail2 = next;
        --keep;
    }

    LowRankFactor out;
    out.X = Qx * svd.matrixU().leftCols(keep) * sv.head(keep).asDiagonal();
    out.Y = Qy * svd.matrixV().leftCols(keep).conjugate();
    const int np = std::min<int>(keep, static_cast<int>(f.row_pivots.size()));
    out.row_pivots.assign(f.row_pivots.begin(), f.row_pivots.begin() + np);
    out.col_pivots.assign(f.col_pivots.begin(), f.col_pivots.begin() + np);
    return out;
}

} // namespace fxbem
