#pragma once

#include "fxbem/compact.hpp"
#include "fxbem/hmatrix.hpp"

namespace fxbem {

namespace detail {

// entry generator reading the compact representation at a fixed kappa; the
// mixing vector m = C f(kappa) is computed once per reconstruction
struct CompactSliceGen {
    const CompactBlockRep* rep;
    const Eigen::VectorXcd* m;

    int rows() const { return rep->nt; }
    int cols() const { return rep->ns; }
    void row(int i, Complex* out) const { eval_row_with(*rep, *m, i, out); }
    void col(int j, Complex* out) const { eval_col_with(*rep, *m, j, out); }
};

} // namespace detail

struct BlockReconRecord {
    std::int64_t block_id = -1;
    int rank = 0;              // achieved rank R-bar
    std::int64_t entry_evals = 0;
    double arith_flops = 0.0;
    bool rank_capped = false;
};

struct ReconstructionReport {
    double kappa = 0.0;
    bool extrapolated = false;   // kappa outside [a,b]
    double farfield_seconds = 0.0;
    double nearfield_seconds = 0.0;
    double phase_seconds = 0.0;  // cost of enabling phase-on-read (bookkeeping only)
    std::vector<BlockReconRecord> blocks;
};

// Specialized ACA+ on the implicit kappa-slice of one block.
inline LowRankFactor reconstruct_block(const CompactBlockRep& rep, const SampleGrid& grid,
                                       double kappa, double tol, AcaStats* stats = nullptr,
                                       bool* extrapolated = nullptr) {
    if (extrapolated) *extrapolated = kappa < grid.a || kappa > grid.b;
    if (rep.tensor_rank() == 0) {
        LowRankFactor f;
        f.X.resize(rep.nt, 0);
        f.Y.resize(rep.ns, 0);
        if (stats) *stats = AcaStats{};
        return f;
    }
    const Eigen::VectorXcd m = coefficient_vector(rep, kappa);
    detail::CompactSliceGen gen{&rep, &m};
    const int cap = std::max(1, std::min(rep.nt, rep.ns) / 2);
    return aca_plus(gen, tol, cap, stats);
}

struct ReconstructOptions {
    double tol = 1e-5;
    bool with_nearfield = false;
    bool with_phase = true;
    int q = 5;            // quadrature order for the near field
    unsigned threads = 0;
};

// Rebuild a per-kappa extracted H-matrix (far field) from the compact
// representation. Phases are never multiplied into the low-rank factors;
// with_phase only arms phase application at entry-level reads.
inline HMatrix reconstruct_hmatrix(const CompactHRep& hrep, const TriangleMesh& mesh,
                                   std::span<const Panel> pans,
                                   std::shared_ptr<const BlockClusterTree> tree, double kappa,
                                   const ReconstructOptions& opts,
                                   ReconstructionReport* report = nullptr) {
    if (mesh_fingerprint(mesh) != hrep.mesh_fp)
        throw IoError("compact container does not match this mesh (fingerprint mismatch)");
    if (tree_fingerprint(*tree) != hrep.tree_fp)
        throw IoError("compact container does not match this block tree (fingerprint mismatch)");

    HMatrix hm;
    hm.set_meta(hrep.kind, kappa, /*extracted=*/true, hrep.nrows, hrep.ncols);
    hm.set_permutations(hrep.row_perm, hrep.col_perm);
    auto centers = std::make_shared<std::vector<Vec3>>();
    centers->reserve(pans.size());
    for (const Panel& p : pans) centers->push_back(p.center);
    hm.set_centers(std::move(centers));

    ReconstructionReport rec;
    rec.kappa = kappa;
    rec.extrapolated = kappa < hrep.grid.a || kappa > hrep.grid.b;

    // leaf table mirrors the block tree; compact blocks fill the far field
    const auto leaves = tree->leaves();
    auto& out_leaves = hm.mutable_leaves();
    out_leaves.resize(leaves.size());
    std::vector<int> admissible_pos;
    for (std::size_t n = 0; n < leaves.size(); ++n) {
        const BlockNode& b = tree->node(leaves[n]);
        const ClusterNode& t = tree->row_cluster(b);
        const ClusterNode& s = tree->col_cluster(b);
        HMatrix::Leaf& leaf = out_leaves[n];
        leaf.row_begin = t.begin;
        leaf.row_size = t.size();
        leaf.col_begin = s.begin;
        leaf.col_size = s.size();
        leaf.level = b.level;
        leaf.admissible = b.status == BlockNode::Status::Admissible;
        if (leaf.admissible) admissible_pos.push_back(static_cast<int>(n));
    }

    const std::size_t built = std::min(admissible_pos.size(), hrep.blocks.size());
    rec.blocks.resize(built);
    {
        const auto t0 = std::chrono::steady_clock::now();
        parallel_for(built, opts.threads, [&](std::size_t n) {
            const CompactBlock& cb = hrep.blocks[n];
            HMatrix::Leaf& leaf = out_leaves[admissible_pos[n]];
            AcaStats stats;
            LowRankFactor f = reconstruct_block(cb.rep, hrep.grid, kappa, opts.tol, &stats);
            BlockReconRecord& r = rec.blocks[n];
            r.block_id = cb.id;
            r.rank = f.rank();
            r.entry_evals = stats.entries_generated;
            r.arith_flops = stats.arith_flops;
            r.rank_capped = stats.rank_capped;
            leaf.lowrank = std::make_shared<LowRankFactor>(std::move(f));
        });
        rec.farfield_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    if (opts.with_nearfield) {
        const auto t0 = std::chrono::steady_clock::now();
        GalerkinEntry eval(mesh, pans, hrep.kind, opts.q);
        const ClusterTree& rt = tree->row_tree();
        const ClusterTree& ct = tree->col_tree();
        std::vector<std::size_t> dense_pos;
        for (std::size_t n = 0; n < out_leaves.size(); ++n)
            if (!out_leaves[n].admissible) dense_pos.push_back(n);
        parallel_for(dense_pos.size(), opts.threads, [&](std::size_t idx) {
            HMatrix::Leaf& leaf = out_leaves[dense_pos[idx]];
            auto block = std::make_shared<Eigen::MatrixXcd>(leaf.row_size, leaf.col_size);
            for (int lj = 0; lj < leaf.col_size; ++lj) {
                const int j = ct.dof(leaf.col_begin + lj);
                for (int li = 0; li < leaf.row_size; ++li)
                    (*block)(li, lj) = eval.entry(rt.dof(leaf.row_begin + li), j, kappa);
            }
            leaf.dense = std::move(block);
        });
        rec.nearfield_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    {
        const auto t0 = std::chrono::steady_clock::now();
        hm.set_phase_on_read(opts.with_phase);
        rec.phase_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    if (report) *report = rec;
    return hm;
}

} // namespace fxbem
