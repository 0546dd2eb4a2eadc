#pragma once

#include "fxbem/clustering.hpp"
#include "fxbem/kernel.hpp"
#include "fxbem/lowrank.hpp"
#include "fxbem/rational.hpp"
#include "fxbem/util.hpp"

#include <chrono>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace fxbem {

// Upper-triangular coefficient matrix with unit diagonal; column k holds the
// expansion of the k-th deflated term over the stored snapshots.
struct CoeffMatrix {
    Eigen::MatrixXcd C;

    CoeffMatrix() : C(0, 0) {}
    int dim() const { return static_cast<int>(C.rows()); }
};

// Grow the coefficient matrix by one term: the new column is -C_k f(kappa_{k+1})
// stacked over a unit diagonal entry.
inline CoeffMatrix coeff_update(const CoeffMatrix& Ck, std::span<const Complex> fvals) {
    const int k = Ck.dim();
    if (static_cast<int>(fvals.size()) != k)
        throw std::invalid_argument("coeff_update: dimension mismatch");
    CoeffMatrix out;
    out.C = Eigen::MatrixXcd::Zero(k + 1, k + 1);
    out.C.topLeftCorner(k, k) = Ck.C;
    if (k > 0) {
        Eigen::Map<const Eigen::VectorXcd> f(fvals.data(), k);
        out.C.col(k).head(k) = -Ck.C * f;
    }
    out.C(k, k) = Complex(1.0, 0.0);
    return out;
}

// One frequency snapshot: aca factorization of B-hat(kappa_k) plus the pivot
// skeleton used to restrict the next tensor pivot search.
struct Snapshot {
    Eigen::MatrixXcd X, Y;
    int kappa_index = -1;  // index into the sample grid
    std::vector<int> row_pivots, col_pivots;

    int rank() const { return static_cast<int>(X.cols()); }
};

// Normalized deflated frequency trace: values on the sample grid S plus the
// rational continuous extension. Both representations are kept in sync.
struct TensorTrace {
    std::vector<Complex> values;
    BarycentricRational rational;
};

// Per-block compact representation {C, {X_k,Y_k}, {f_k}}.
struct CompactBlockRep {
    int nt = 0, ns = 0;
    CoeffMatrix C;
    std::vector<Snapshot> snapshots;
    std::vector<TensorTrace> traces;
    bool rank_capped = false;      // tensor-rank cap was hit
    bool aca_capped = false;       // some snapshot hit the aca rank cap

    int tensor_rank() const { return static_cast<int>(snapshots.size()); }

    std::size_t payload_bytes() const {
        std::size_t bytes = sizeof(Complex) * static_cast<std::size_t>(C.C.size());
        for (const auto& s : snapshots) {
            bytes += sizeof(Complex) * (s.X.size() + s.Y.size());
            bytes += sizeof(int) * (s.row_pivots.size() + s.col_pivots.size());
        }
        for (const auto& t : traces) {
            bytes += sizeof(Complex) * t.values.size();
            bytes += (sizeof(double) + 2 * sizeof(Complex)) * t.rational.support_points().size();
        }
        return bytes;
    }
};

template <class G>
concept FrequencyBlockGenerator = requires(const G& g, int i, std::span<const double> ks,
                                           std::span<Complex> out, double kappa, Complex* p) {
    { g.rows() } -> std::convertible_to<int>;
    { g.cols() } -> std::convertible_to<int>;
    g.trace(i, i, ks, out);   // kappa-trace of one entry on the grid
    g.slice_row(i, kappa, p); // row of the kappa-slice
    g.slice_col(i, kappa, p); // column of the kappa-slice
};

namespace detail {

template <class G>
struct FrequencySliceGen {
    const G* gen;
    double kappa;
    int rows() const { return gen->rows(); }
    int cols() const { return gen->cols(); }
    void row(int i, Complex* out) const { gen->slice_row(i, kappa, out); }
    void col(int j, Complex* out) const { gen->slice_col(j, kappa, out); }
};

} // namespace detail

// Sampled Frobenius norm estimate: sqrt((#t #s / m) * ||M_{|E_m}||_F^2) with
// E_m drawn uniformly without replacement; m >= #t #s degrades to the exact
// norm.
template <class EntryFn>
double norm_estimate(EntryFn&& entry, int nt, int ns, std::int64_t m, std::mt19937_64& rng) {
    if (m < 1) throw std::invalid_argument("norm_estimate: m >= 1 required");
    const std::int64_t total = static_cast<std::int64_t>(nt) * ns;
    double sum2 = 0.0;
    if (m >= total) {
        for (int j = 0; j < ns; ++j)
            for (int i = 0; i < nt; ++i) sum2 += std::norm(entry(i, j));
        return std::sqrt(sum2);
    }
    // Floyd's sampling without replacement over the flattened index space
    std::unordered_set<std::int64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(m) * 2);
    for (std::int64_t t = total - m; t < total; ++t) {
        std::uniform_int_distribution<std::int64_t> pick(0, t);
        std::int64_t v = pick(rng);
        if (!chosen.insert(v).second) chosen.insert(t);
    }
    for (const std::int64_t idx : chosen) {
        const int i = static_cast<int>(idx % nt);
        const int j = static_cast<int>(idx / nt);
        sum2 += std::norm(entry(i, j));
    }
    return std::sqrt(static_cast<double>(total) / static_cast<double>(m) * sum2);
}

struct CompactBuildOptions {
    double tol = 1e-4;           // tensor stopping tolerance
    double aca_tol = 1e-5;       // inner aca tolerance
    double aaa_tol = 1e-5;       // inner AAA tolerance (tol * 1e-1 by default)
    int max_degree = 8;          // rational degree cap
    int max_tensor_rank = 64;
    // snapshots must reach whatever rank the slice needs: a truncated
    // snapshot poisons every later deflation, so no cap by default
    double max_rank_fraction = 1.0;
    std::uint64_t seed = 0;
    std::int64_t block_id = 0;   // salts the norm-sampling RNG
};

struct CompactBuildStats {
    int tensor_rank = 0;
    int max_snapshot_rank = 0;
    std::int64_t trace_evals = 0;  // cached kappa-traces generated
    double final_epsilon = 0.0;
};

// Linear-time AAA-ACA over one admissible block. The pivot search runs over
// the previous snapshot's aca-skeleton crossed with the sample grid; the
// deflated matrices M_k stay implicit through the coefficient matrix; the
// stopping estimate samples ||M_k||_F instead of forming it.
template <FrequencyBlockGenerator G>
CompactBlockRep build_block(const G& gen, const SampleGrid& grid, const CompactBuildOptions& opts,
                            CompactBuildStats* stats_out = nullptr) {
    const int nt = gen.rows(), ns = gen.cols();
    const int nS = grid.size();
    CompactBlockRep rep;
    rep.nt = nt;
    rep.ns = ns;
    CompactBuildStats stats;

    std::unordered_map<std::int64_t, std::vector<Complex>> trace_cache;
    auto trace_of = [&](int i, int j) -> const std::vector<Complex>& {
        const std::int64_t key = static_cast<std::int64_t>(i) * ns + j;
        auto it = trace_cache.find(key);
        if (it == trace_cache.end()) {
            std::vector<Complex> t(nS);
            gen.trace(i, j, grid.nodes, t);
            ++stats.trace_evals;
            it = trace_cache.emplace(key, std::move(t)).first;
        }
        return it->second;
    };

    // snapshot cross entries (X_nu Y_nu^T)_(i,j) for nu < k
    auto cross_entries = [&](int i, int j, Eigen::VectorXcd& xy) {
        const int k = rep.tensor_rank();
        xy.resize(k);
        for (int nu = 0; nu < k; ++nu)
            xy(nu) =
                (rep.snapshots[nu].X.row(i).array() * rep.snapshots[nu].Y.row(j).array()).sum();
    };

    // deflated residual trace r(kappa) = B-hat_ij(kappa) - sum_mu (M_mu)_ij f_mu(kappa)
    auto deflated_trace = [&](int i, int j, std::vector<Complex>& out) {
        const std::vector<Complex>& raw = trace_of(i, j);
        const int k = rep.tensor_rank();
        Eigen::VectorXcd xy;
        cross_entries(i, j, xy);
        Eigen::VectorXcd mvals(k);
        for (int mu = 0; mu < k; ++mu)
            mvals(mu) = rep.C.C.col(mu).head(mu + 1).cwiseProduct(xy.head(mu + 1)).sum();
        out.assign(raw.begin(), raw.end());
        for (int m = 0; m < nS; ++m)
            for (int mu = 0; mu < k; ++mu) out[m] -= mvals(mu) * rep.traces[mu].values[m];
    };

    double denom = -1.0;  // ||f_1|| * ||M_1||_F
    const int aca_cap = std::max(1, static_cast<int>(opts.max_rank_fraction * std::min(nt, ns)));

    while (rep.tensor_rank() < opts.max_tensor_rank) {
        const int k = rep.tensor_rank();

        // candidate set: aca-skeleton of the previous snapshot (middle row
        // and column before the first snapshot exists)
        std::vector<int> skel_rows, skel_cols;
        if (k == 0) {
            skel_rows = {nt / 2};
            skel_cols = {ns / 2};
        } else {
            skel_rows = rep.snapshots.back().row_pivots;
            skel_cols = rep.snapshots.back().col_pivots;
        }

        int bi = -1, bj = -1, bm = -1;
        double best = -1.0;
        std::vector<Complex> res;
        auto consider = [&](int i, int j) {
            deflated_trace(i, j, res);
            for (int m = 0; m < nS; ++m) {
                const double a = std::abs(res[m]);
                if (a > best) {
                    best = a;
                    bi = i;
                    bj = j;
                    bm = m;
                }
            }
        };
        for (int i : skel_rows)
            for (int j = 0; j < ns; ++j) consider(i, j);
        for (int j : skel_cols)
            for (int i = 0; i < nt; ++i) consider(i, j);

        if (best <= 0.0) break;  // family numerically exhausted on the skeleton

        // deflated, normalized trace for the new term; the pivot value is
        // pinned to exactly 1 (complex division may round half an ulp)
        std::vector<Complex> fvals;
        deflated_trace(bi, bj, fvals);
        const Complex pivot = fvals[bm];
        for (Complex& v : fvals) v /= pivot;
        fvals[bm] = Complex(1.0, 0.0);

        // frequency snapshot at the pivot node
        detail::FrequencySliceGen<G> slice{&gen, grid.nodes[bm]};
        AcaStats aca_stats;
        LowRankFactor f = aca_plus(slice, opts.aca_tol, aca_cap, &aca_stats);
        if (aca_stats.rank_capped) rep.aca_capped = true;
        if (f.rank() == 0) break;  // slice vanished; nothing left to add

        // coefficient recurrence needs the earlier traces at kappa_k
        std::vector<Complex> f_at_pivot(k);
        for (int mu = 0; mu < k; ++mu) f_at_pivot[mu] = rep.traces[mu].values[bm];
        rep.C = coeff_update(rep.C, f_at_pivot);

        Snapshot snap;
        snap.X = std::move(f.X);
        snap.Y = std::move(f.Y);
        snap.kappa_index = bm;
        snap.row_pivots = std::move(f.row_pivots);
        snap.col_pivots = std::move(f.col_pivots);
        rep.snapshots.push_back(std::move(snap));

        TensorTrace trace;
        trace.values = fvals;
        rep.traces.push_back(std::move(trace));

        // stopping estimate eps = ||f_k|| ||M_k||_{F,m} / (||f_1|| ||M_1||_F);
        // it measures the size of the k-th term, i.e. the residual left by
        // the first k-1 terms, so a below-tolerance term is dropped again
        const int kk = rep.tensor_rank() - 1;
        const double fnorm = grid.norm(fvals);
        auto mk_entry = [&](int i, int j) {
            Eigen::VectorXcd xy;
            cross_entries(i, j, xy);
            return rep.C.C.col(kk).cwiseProduct(xy).sum();
        };
        double mnorm = 0.0;
        if (kk == 0) {
            // exact ||X_1 Y_1^T||_F via the Gram trick
            const auto& s0 = rep.snapshots[0];
            const Eigen::MatrixXcd gx = s0.X.adjoint() * s0.X;
            const Eigen::MatrixXcd gy = s0.Y.adjoint() * s0.Y;
            mnorm = std::sqrt(std::abs((gx.array() * gy.array()).sum()));
            denom = fnorm * mnorm;
        } else {
            const std::int64_t m =
                static_cast<std::int64_t>(rep.snapshots[kk].rank()) * (nt + ns);
            std::mt19937_64 rng(opts.seed ^ (0x9e3779b97f4a7c15ull * (opts.block_id + 1)) ^
                                (0xbf58476d1ce4e5b9ull * (kk + 1)));
            mnorm = norm_estimate(mk_entry, nt, ns, std::max<std::int64_t>(m, 1), rng);
        }
        stats.final_epsilon = denom > 0.0 ? fnorm * mnorm / denom : 0.0;
        if (kk > 0 && stats.final_epsilon <= opts.tol) {
            rep.snapshots.pop_back();
            rep.traces.pop_back();
            rep.C.C.conservativeResize(kk, kk);
            break;
        }
        rep.traces.back().rational = aaa(grid.nodes, fvals, opts.aaa_tol, opts.max_degree);
        stats.max_snapshot_rank = std::max(stats.max_snapshot_rank, rep.snapshots.back().rank());
    }

    if (rep.tensor_rank() >= opts.max_tensor_rank) rep.rank_capped = true;
    stats.tensor_rank = rep.tensor_rank();
    if (stats_out) *stats_out = stats;
    return rep;
}

// m = C * [f_1(kappa), ..., f_RT(kappa)]^T; the per-kappa mixing coefficients
inline Eigen::VectorXcd coefficient_vector(const CompactBlockRep& rep, double kappa) {
    const int rt = rep.tensor_rank();
    Eigen::VectorXcd f(rt);
    for (int k = 0; k < rt; ++k) f(k) = rep.traces[k].rational(kappa);
    return rep.C.C * f;
}

inline Complex eval_entry_with(const CompactBlockRep& rep, const Eigen::VectorXcd& m, int i,
                               int j) {
    Complex val(0.0, 0.0);
    for (int k = 0; k < rep.tensor_rank(); ++k)
        val += m(k) *
               (rep.snapshots[k].X.row(i).array() * rep.snapshots[k].Y.row(j).array()).sum();
    return val;
}

inline Complex eval_entry(const CompactBlockRep& rep, const SampleGrid& grid, int i, int j,
                          double kappa, bool* extrapolated = nullptr) {
    if (extrapolated) *extrapolated = kappa < grid.a || kappa > grid.b;
    return eval_entry_with(rep, coefficient_vector(rep, kappa), i, j);
}

inline void eval_row_with(const CompactBlockRep& rep, const Eigen::VectorXcd& m, int i,
                          Complex* out) {
    Eigen::Map<Eigen::VectorXcd> o(out, rep.ns);
    o.setZero();
    for (int k = 0; k < rep.tensor_rank(); ++k)
        o.noalias() += m(k) * (rep.snapshots[k].Y * rep.snapshots[k].X.row(i).transpose());
}

inline void eval_col_with(const CompactBlockRep& rep, const Eigen::VectorXcd& m, int j,
                          Complex* out) {
    Eigen::Map<Eigen::VectorXcd> o(out, rep.nt);
    o.setZero();
    for (int k = 0; k < rep.tensor_rank(); ++k)
        o.noalias() += m(k) * (rep.snapshots[k].X * rep.snapshots[k].Y.row(j).transpose());
}

// --- whole-matrix compact representation ---------------------------------

struct CompactBlock {
    std::int64_t id = -1;  // position in the admissible-leaf enumeration
    int row_begin = 0, row_size = 0, col_begin = 0, col_size = 0;
    int level = 0;
    CompactBlockRep rep;
};

struct CompactHRep {
    KernelKind kind = KernelKind::SLP;
    SampleGrid grid;
    std::uint64_t mesh_fp = 0, tree_fp = 0;
    int nrows = 0, ncols = 0;
    std::vector<int> row_perm, col_perm;
    std::vector<CompactBlock> blocks;

    std::size_t payload_bytes() const {
        std::size_t bytes = 0;
        for (const auto& b : blocks) bytes += b.rep.payload_bytes();
        return bytes;
    }
};

inline std::uint64_t mesh_fingerprint(const TriangleMesh& mesh) {
    Fnv1a h;
    h.update_pod(mesh.num_vertices());
    h.update_pod(mesh.num_triangles());
    for (const auto& v : mesh.vertices) {
        h.update_pod(v.x());
        h.update_pod(v.y());
        h.update_pod(v.z());
    }
    for (const auto& t : mesh.triangles) h.update(t.data(), sizeof(int) * 3);
    return h.digest();
}

inline std::uint64_t tree_fingerprint(const BlockClusterTree& tree) {
    Fnv1a h;
    h.update_pod(tree.eta());
    h.update_pod(static_cast<int>(tree.variant()));
    h.update_pod(tree.row_tree().n_min());
    for (int id : tree.leaves()) {
        const BlockNode& b = tree.node(id);
        const ClusterNode& t = tree.row_cluster(b);
        const ClusterNode& s = tree.col_cluster(b);
        h.update_pod(t.begin);
        h.update_pod(t.size());
        h.update_pod(s.begin);
        h.update_pod(s.size());
        h.update_pod(b.status == BlockNode::Status::Admissible ? 1 : 0);
    }
    return h.digest();
}

namespace detail {

// quadrature-backed generator for one admissible block of B-hat
struct QuadratureFrequencyGen {
    const GalerkinEntry* eval;
    const ClusterTree* row_tree;
    const ClusterTree* col_tree;
    int row_begin, row_size, col_begin, col_size;

    int rows() const { return row_size; }
    int cols() const { return col_size; }
    void trace(int li, int lj, std::span<const double> ks, std::span<Complex> out) const {
        eval->entry_trace(row_tree->dof(row_begin + li), col_tree->dof(col_begin + lj), ks, out,
                          /*extracted=*/true);
    }
    void slice_row(int li, double kappa, Complex* out) const {
        const int i = row_tree->dof(row_begin + li);
        for (int lj = 0; lj < col_size; ++lj)
            out[lj] = eval->extracted_entry(i, col_tree->dof(col_begin + lj), kappa);
    }
    void slice_col(int lj, double kappa, Complex* out) const {
        const int j = col_tree->dof(col_begin + lj);
        for (int li = 0; li < row_size; ++li)
            out[li] = eval->extracted_entry(row_tree->dof(row_begin + li), j, kappa);
    }
};

} // namespace detail

struct CompactAssemblyOptions {
    CompactBuildOptions build;
    int q = 5;
    unsigned threads = 0;
    double subset_fraction = 1.0;  // build only the first fraction of admissible blocks
};

struct CompactBuildReport {
    double seconds = 0.0;
    std::uint64_t kernel_evals = 0;
    int blocks_total = 0;
    int blocks_rank_capped = 0;
    int max_tensor_rank = 0;
    double mean_tensor_rank = 0.0;
    std::size_t payload_bytes = 0;
};

// Build the compact representation of the extracted far field over all (or a
// leading fraction of) admissible blocks. Near-field blocks are excluded and
// reassembled per kappa by the reconstruction.
inline CompactHRep build_compact_hrep(const TriangleMesh& mesh, std::span<const Panel> pans,
                                      const BlockClusterTree& tree, KernelKind kind,
                                      const SampleGrid& grid,
                                      const CompactAssemblyOptions& opts,
                                      CompactBuildReport* report = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    CompactHRep rep;
    rep.kind = kind;
    rep.grid = grid;
    rep.mesh_fp = mesh_fingerprint(mesh);
    rep.tree_fp = tree_fingerprint(tree);
    rep.nrows = tree.row_tree().size();
    rep.ncols = tree.col_tree().size();
    rep.row_perm.assign(tree.row_tree().permutation().begin(),
                        tree.row_tree().permutation().end());
    rep.col_perm.assign(tree.col_tree().permutation().begin(),
                        tree.col_tree().permutation().end());

    GalerkinEntry eval(mesh, pans, kind, opts.q);
    eval.reset_kernel_evals();

    std::vector<int> admissible;
    for (int id : tree.leaves())
        if (tree.node(id).status == BlockNode::Status::Admissible) admissible.push_back(id);
    const int count = std::max(
        1, static_cast<int>(std::ceil(opts.subset_fraction * admissible.size())));
    admissible.resize(std::min<std::size_t>(admissible.size(), count));

    rep.blocks.resize(admissible.size());
    parallel_for(admissible.size(), opts.threads, [&](std::size_t n) {
        const BlockNode& b = tree.node(admissible[n]);
        const ClusterNode& t = tree.row_cluster(b);
        const ClusterNode& s = tree.col_cluster(b);
        CompactBlock& cb = rep.blocks[n];
        cb.id = static_cast<std::int64_t>(n);
        cb.row_begin = t.begin;
        cb.row_size = t.size();
        cb.col_begin = s.begin;
        cb.col_size = s.size();
        cb.level = b.level;
        detail::QuadratureFrequencyGen gen{&eval,     &tree.row_tree(), &tree.col_tree(),
                                           t.begin,   t.size(),         s.begin,
                                           s.size()};
        CompactBuildOptions bopts = opts.build;
        bopts.block_id = cb.id;
        cb.rep = build_block(gen, grid, bopts);
    });

    if (report) {
        report->seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report->kernel_evals = eval.kernel_evals();
        report->blocks_total = static_cast<int>(rep.blocks.size());
        double rsum = 0.0;
        for (const auto& b : rep.blocks) {
            report->blocks_rank_capped += b.rep.rank_capped ? 1 : 0;
            report->max_tensor_rank = std::max(report->max_tensor_rank, b.rep.tensor_rank());
            rsum += b.rep.tensor_rank();
        }
        report->mean_tensor_rank = rep.blocks.empty() ? 0.0 : rsum / rep.blocks.size();
        report->payload_bytes = rep.payload_bytes();
    }
    return rep;
}

// --- binary container ("CBR1") -------------------------------------------

inline void serialize(const CompactHRep& rep, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("CBR1", 4);
    io::write_pod<std::uint32_t>(out, 1);
    io::write_pod<std::uint8_t>(out, rep.kind == KernelKind::SLP ? 0 : 1);
    io::write_pod<std::uint8_t>(out, 0);
    io::write_pod<std::uint16_t>(out, 0);
    io::write_pod<std::uint64_t>(out, rep.mesh_fp);
    io::write_pod<std::uint64_t>(out, rep.tree_fp);
    io::write_pod<double>(out, rep.grid.a);
    io::write_pod<double>(out, rep.grid.b);
    io::write_pod<std::uint32_t>(out, rep.grid.size());
    io::write_array(out, rep.grid.nodes.data(), rep.grid.nodes.size());
    io::write_array(out, rep.grid.quad_weights.data(), rep.grid.quad_weights.size());
    io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(rep.grid.heldout.size()));
    io::write_array(out, rep.grid.heldout.data(), rep.grid.heldout.size());
    io::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(rep.nrows));
    io::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(rep.ncols));
    for (int p : rep.row_perm) io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p));
    for (int p : rep.col_perm) io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p));
    io::write_pod<std::uint64_t>(out, rep.blocks.size());
    for (const CompactBlock& b : rep.blocks) {
        io::write_pod<std::int64_t>(out, b.id);
        io::write_pod<std::uint32_t>(out, b.row_begin);
        io::write_pod<std::uint32_t>(out, b.row_size);
        io::write_pod<std::uint32_t>(out, b.col_begin);
        io::write_pod<std::uint32_t>(out, b.col_size);
        io::write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(b.level));
        io::write_pod<std::uint8_t>(out, b.rep.rank_capped ? 1 : 0);
        io::write_pod<std::uint8_t>(out, b.rep.aca_capped ? 1 : 0);
        const int rt = b.rep.tensor_rank();
        io::write_pod<std::uint32_t>(out, rt);
        // packed upper triangle of C, column-major
        for (int c = 0; c < rt; ++c)
            for (int r = 0; r <= c; ++r) io::write_pod<Complex>(out, b.rep.C.C(r, c));
        for (int k = 0; k < rt; ++k) {
            const Snapshot& s = b.rep.snapshots[k];
            io::write_pod<std::uint32_t>(out, s.kappa_index);
            io::write_pod<std::uint32_t>(out, s.rank());
            for (int p : s.row_pivots) io::write_pod<std::uint32_t>(out, p);
            for (int p : s.col_pivots) io::write_pod<std::uint32_t>(out, p);
            io::write_array(out, s.X.data(), s.X.size());
            io::write_array(out, s.Y.data(), s.Y.size());
            const TensorTrace& t = b.rep.traces[k];
            io::write_pod<std::uint32_t>(out,
                                         static_cast<std::uint32_t>(t.rational.support_points().size()));
            io::write_array(out, t.rational.support_points().data(),
                            t.rational.support_points().size());
            io::write_array(out, t.rational.values().data(), t.rational.values().size());
            io::write_array(out, t.rational.weights().data(), t.rational.weights().size());
            io::write_array(out, t.values.data(), t.values.size());
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

inline CompactHRep deserialize(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    io::expect_magic(in, "CBR1");
    const auto version = io::read_pod<std::uint32_t>(in);
    if (version != 1) throw IoError("unsupported compact container version");
    CompactHRep rep;
    rep.kind = io::read_pod<std::uint8_t>(in) == 0 ? KernelKind::SLP : KernelKind::DLP;
    io::read_pod<std::uint8_t>(in);
    io::read_pod<std::uint16_t>(in);
    rep.mesh_fp = io::read_pod<std::uint64_t>(in);
    rep.tree_fp = io::read_pod<std::uint64_t>(in);
    rep.grid.a = io::read_pod<double>(in);
    rep.grid.b = io::read_pod<double>(in);
    const auto nS = io::read_pod<std::uint32_t>(in);
    rep.grid.nodes.resize(nS);
    rep.grid.quad_weights.resize(nS);
    io::read_array(in, rep.grid.nodes.data(), nS);
    io::read_array(in, rep.grid.quad_weights.data(), nS);
    const auto nH = io::read_pod<std::uint32_t>(in);
    rep.grid.heldout.resize(nH);
    io::read_array(in, rep.grid.heldout.data(), nH);
    rep.nrows = static_cast<int>(io::read_pod<std::uint64_t>(in));
    rep.ncols = static_cast<int>(io::read_pod<std::uint64_t>(in));
    rep.row_perm.resize(rep.nrows);
    rep.col_perm.resize(rep.ncols);
    for (int& p : rep.row_perm) p = static_cast<int>(io::read_pod<std::uint32_t>(in));
    for (int& p : rep.col_perm) p = static_cast<int>(io::read_pod<std::uint32_t>(in));
    const auto nblocks = io::read_pod<std::uint64_t>(in);
    rep.blocks.resize(nblocks);
    for (CompactBlock& b : rep.blocks) {
        b.id = io::read_pod<std::int64_t>(in);
        b.row_begin = static_cast<int>(io::read_pod<std::uint32_t>(in));
        b.row_size = static_cast<int>(io::read_pod<std::uint32_t>(in));
        b.col_begin = static_cast<int>(io::read_pod<std::uint32_t>(in));
        b.col_size = static_cast<int>(io::read_pod<std::uint32_t>(in));
        b.level = io::read_pod<std::uint16_t>(in);
        b.rep.nt = b.row_size;
        b.rep.ns = b.col_size;
        b.rep.rank_capped = io::read_pod<std::uint8_t>(in) != 0;
        b.rep.aca_capped = io::read_pod<std::uint8_t>(in) != 0;
        const int rt = static_cast<int>(io::read_pod<std::uint32_t>(in));
        b.rep.C.C = Eigen::MatrixXcd::Zero(rt, rt);
        for (int c = 0; c < rt; ++c)
            for (int r = 0; r <= c; ++r) b.rep.C.C(r, c) = io::read_pod<Complex>(in);
        b.rep.snapshots.resize(rt);
        b.rep.traces.resize(rt);
        for (int k = 0; k < rt; ++k) {
            Snapshot& s = b.rep.snapshots[k];
            s.kappa_index = static_cast<int>(io::read_pod<std::uint32_t>(in));
            const int rank = static_cast<int>(io::read_pod<std::uint32_t>(in));
            s.row_pivots.resize(rank);
            s.col_pivots.resize(rank);
            for (int& p : s.row_pivots) p = static_cast<int>(io::read_pod<std::uint32_t>(in));
            for (int& p : s.col_pivots) p = static_cast<int>(io::read_pod<std::uint32_t>(in));
            s.X.resize(b.row_size, rank);
            s.Y.resize(b.col_size, rank);
            io::read_array(in, s.X.data(), s.X.size());
            io::read_array(in, s.Y.data(), s.Y.size());
            const auto nsup = io::read_pod<std::uint32_t>(in);
            std::vector<double> support(nsup);
            std::vector<Complex> values(nsup), weights(nsup);
            io::read_array(in, support.data(), nsup);
            io::read_array(in, values.data(), nsup);
            io::read_array(in, weights.data(), nsup);
            TensorTrace& t = b.rep.traces[k];
            t.rational = BarycentricRational(std::move(support), std::move(values),
                                             std::move(weights));
            t.values.resize(nS);
            io::read_array(in, t.values.data(), nS);
        }
    }
    return rep;
}

} // namespace fxbem
