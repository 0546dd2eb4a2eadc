#pragma once

#include "fxbem/clustering.hpp"
#include "fxbem/kernel.hpp"
#include "fxbem/lowrank.hpp"
#include "fxbem/util.hpp"

#include <atomic>
#include <chrono>
#include <map>
#include <memory>

namespace fxbem {

struct AssemblyOptions {
    double aca_tol = 1e-5;
    double recompress_factor = 1e-2;  // recompression eps = factor * aca_tol
    int q = 5;
    double max_rank_fraction = 0.5;   // ACA cap; capped admissible blocks fall back to dense
    unsigned threads = 0;             // 0 = hardware concurrency
    bool extracted = false;
    bool farfield_only = false;       // skip near-field payloads (sweep statistics)
};

struct HMatrixStats {
    std::size_t payload_bytes = 0;
    std::size_t farfield_bytes = 0;
    std::size_t nearfield_bytes = 0;
    std::size_t index_bytes = 0;
    int num_leaves = 0;
    int num_admissible = 0;
    int num_dense_fallback = 0;
    double mean_far_rank = 0.0;
    int max_far_rank = 0;
    std::map<int, std::pair<int, int>> level_rank_histogram;  // level -> (count, max rank)
    double assembly_seconds = 0.0;
    std::uint64_t entry_generations = 0;  // Galerkin entries evaluated during assembly
};

namespace detail {

// entry generator over one admissible block, in permuted-local coordinates
struct QuadratureBlockGen {
    const GalerkinEntry* eval;
    const ClusterTree* row_tree;
    const ClusterTree* col_tree;
    int row_begin, row_size, col_begin, col_size;
    double kappa;
    bool extracted;

    int rows() const { return row_size; }
    int cols() const { return col_size; }
    void row(int li, Complex* out) const {
        const int i = row_tree->dof(row_begin + li);
        for (int lj = 0; lj < col_size; ++lj) {
            const int j = col_tree->dof(col_begin + lj);
            out[lj] = extracted ? eval->extracted_entry(i, j, kappa) : eval->entry(i, j, kappa);
        }
    }
    void col(int lj, Complex* out) const {
        const int j = col_tree->dof(col_begin + lj);
        for (int li = 0; li < row_size; ++li) {
            const int i = row_tree->dof(row_begin + li);
            out[li] = extracted ? eval->extracted_entry(i, j, kappa) : eval->entry(i, j, kappa);
        }
    }
};

} // namespace detail

// H-matrix over a block partition: dense near-field leaves, ACA-compressed
// far-field leaves. When `extracted` the far-field payloads approximate
// B-hat = conj(H) o B; near-field payloads always equal B's.
class HMatrix {
  public:
    struct Leaf {
        int row_begin = 0, row_size = 0, col_begin = 0, col_size = 0;
        int level = 0;
        bool admissible = false;
        bool dense_fallback = false;  // admissible block stored dense (rank cap)
        std::shared_ptr<const Eigen::MatrixXcd> dense;
        std::shared_ptr<const LowRankFactor> lowrank;
    };

    HMatrix() = default;

    static HMatrix assemble(const TriangleMesh& mesh, std::span<const Panel> pans,
                            std::shared_ptr<const BlockClusterTree> tree, KernelKind kind,
                            Wavenumber kappa, const AssemblyOptions& opts,
                            const HMatrix* share_nearfield = nullptr) {
        const auto t0 = std::chrono::steady_clock::now();
        HMatrix hm;
        hm.kind_ = kind;
        hm.kappa_ = kappa.value;
        hm.extracted_ = opts.extracted;
        hm.tree_ = tree;
        const ClusterTree& rt = tree->row_tree();
        const ClusterTree& ct = tree->col_tree();
        hm.nrows_ = rt.size();
        hm.ncols_ = ct.size();
        hm.row_perm_.assign(rt.permutation().begin(), rt.permutation().end());
        hm.col_perm_.assign(ct.permutation().begin(), ct.permutation().end());

        GalerkinEntry eval(mesh, pans, kind, opts.q);
        eval.reset_kernel_evals();

        const auto leaves = tree->leaves();
        hm.leaves_.resize(leaves.size());
        for (std::size_t n = 0; n < leaves.size(); ++n) {
            const BlockNode& b = tree->node(leaves[n]);
            const ClusterNode& t = tree->row_cluster(b);
            const ClusterNode& s = tree->col_cluster(b);
            Leaf& leaf = hm.leaves_[n];
            leaf.row_begin = t.begin;
            leaf.row_size = t.size();
            leaf.col_begin = s.begin;
            leaf.col_size = s.size();
            leaf.level = b.level;
            leaf.admissible = b.status == BlockNode::Status::Admissible;
        }

        // near-field payloads can be shared: H_ij = 1 there, so extracted and
        // plain assemblies coincide on dense leaves at equal kappa and kind
        const bool can_share = share_nearfield && share_nearfield->kind_ == kind &&
                               share_nearfield->kappa_ == kappa.value &&
                               share_nearfield->leaves_.size() == hm.leaves_.size();

        std::atomic<std::int64_t> entry_count{0};
        parallel_for(hm.leaves_.size(), opts.threads, [&](std::size_t n) {
            Leaf& leaf = hm.leaves_[n];
            if (!leaf.admissible) {
                if (opts.farfield_only) return;
                if (can_share && share_nearfield->leaves_[n].dense &&
                    !share_nearfield->leaves_[n].admissible) {
                    leaf.dense = share_nearfield->leaves_[n].dense;
                    return;
                }
                auto block = std::make_shared<Eigen::MatrixXcd>(leaf.row_size, leaf.col_size);
                for (int lj = 0; lj < leaf.col_size; ++lj) {
                    const int j = ct.dof(leaf.col_begin + lj);
                    for (int li = 0; li < leaf.row_size; ++li) {
                        const int i = rt.dof(leaf.row_begin + li);
                        (*block)(li, lj) = eval.entry(i, j, kappa.value);
                    }
                }
                entry_count += leaf.row_size * static_cast<std::int64_t>(leaf.col_size);
                leaf.dense = std::move(block);
                return;
            }
            detail::QuadratureBlockGen gen{&eval,         &rt,           &ct,
                                           leaf.row_begin, leaf.row_size, leaf.col_begin,
                                           leaf.col_size,  kappa.value,   opts.extracted};
            const int cap = std::max(
                1, static_cast<int>(opts.max_rank_fraction *
                                    std::min(leaf.row_size, leaf.col_size)));
            AcaStats stats;
            LowRankFactor f = aca_plus(gen, opts.aca_tol, cap, &stats);
            entry_count += stats.entries_generated;
            if (stats.rank_capped) {
                // fail-safe: a block this stubborn is cheaper stored dense
                auto block = std::make_shared<Eigen::MatrixXcd>(leaf.row_size, leaf.col_size);
                for (int lj = 0; lj < leaf.col_size; ++lj) {
                    Eigen::VectorXcd colv(leaf.row_size);
                    gen.col(lj, colv.data());
                    block->col(lj) = colv;
                }
                entry_count += leaf.row_size * static_cast<std::int64_t>(leaf.col_size);
                leaf.dense = std::move(block);
                leaf.dense_fallback = true;
                return;
            }
            const double eps = opts.recompress_factor * opts.aca_tol;
            leaf.lowrank = std::make_shared<LowRankFactor>(recompress(f, eps));
        });

        hm.assembly_seconds_ =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        hm.entry_generations_ = static_cast<std::uint64_t>(entry_count.load());
        hm.centers_ = std::make_shared<std::vector<Vec3>>();
        hm.centers_->reserve(pans.size());
        for (const Panel& p : pans) hm.centers_->push_back(p.center);
        return hm;
    }

    int rows() const { return nrows_; }
    int cols() const { return ncols_; }
    KernelKind kind() const { return kind_; }
    double kappa() const { return kappa_; }
    bool extracted() const { return extracted_; }
    bool phase_on_read() const { return phase_on_read_; }
    void set_phase_on_read(bool v) { phase_on_read_ = v; }
    const std::vector<Leaf>& leaves() const { return leaves_; }
    std::vector<Leaf>& mutable_leaves() { return leaves_; }
    std::span<const int> row_permutation() const { return row_perm_; }
    std::span<const int> col_permutation() const { return col_perm_; }
    int row_dof(int pos) const { return row_perm_[pos]; }
    int col_dof(int pos) const { return col_perm_[pos]; }
    double assembly_seconds() const { return assembly_seconds_; }
    void set_assembly_seconds(double s) { assembly_seconds_ = s; }
    std::uint64_t entry_generations() const { return entry_generations_; }
    void set_entry_generations(std::uint64_t n) { entry_generations_ = n; }
    void set_meta(KernelKind kind, double kappa, bool extracted, int nrows, int ncols) {
        kind_ = kind;
        kappa_ = kappa;
        extracted_ = extracted;
        nrows_ = nrows;
        ncols_ = ncols;
    }
    void set_permutations(std::vector<int> rowp, std::vector<int> colp) {
        row_perm_ = std::move(rowp);
        col_perm_ = std::move(colp);
    }
    void set_centers(std::shared_ptr<std::vector<Vec3>> c) { centers_ = std::move(c); }

    // y = A v, both in original DOF numbering; payload-level product
    // (phases are never folded into low-rank factors)
    Eigen::VectorXcd matvec(const Eigen::VectorXcd& v) const {
        if (v.size() != ncols_) throw std::invalid_argument("matvec: dimension mismatch");
        Eigen::VectorXcd vp(ncols_);
        for (int pos = 0; pos < ncols_; ++pos) vp(pos) = v(col_perm_[pos]);
        Eigen::VectorXcd yp = Eigen::VectorXcd::Zero(nrows_);
        for (const Leaf& leaf : leaves_) {
            const auto vseg = vp.segment(leaf.col_begin, leaf.col_size);
            auto yseg = yp.segment(leaf.row_begin, leaf.row_size);
            if (leaf.dense) {
                yseg.noalias() += (*leaf.dense) * vseg;
            } else if (leaf.lowrank && leaf.lowrank->rank() > 0) {
                yseg.noalias() += leaf.lowrank->X * (leaf.lowrank->Y.transpose() * vseg);
            }
        }
        Eigen::VectorXcd y(nrows_);
        for (int pos = 0; pos < nrows_; ++pos) y(row_perm_[pos]) = yp(pos);
        return y;
    }

    // stored approximation at original DOF indices (i,j); when phase-on-read
    // is enabled the far-field value is multiplied by exp(i kappa d_ij)
    Complex entry_at(int i, int j) const {
        for (const Leaf& leaf : leaves_) {
            const int li = find_local(row_perm_, leaf.row_begin, leaf.row_size, i);
            if (li < 0) continue;
            const int lj = find_local(col_perm_, leaf.col_begin, leaf.col_size, j);
            if (lj < 0) continue;
            return leaf_entry(leaf, li, lj);
        }
        throw std::out_of_range("entry_at: index outside the block partition");
    }

    Complex leaf_entry(const Leaf& leaf, int li, int lj) const {
        Complex val(0.0, 0.0);
        if (leaf.dense)
            val = (*leaf.dense)(li, lj);
        else if (leaf.lowrank && leaf.lowrank->rank() > 0)
            val = (leaf.lowrank->X.row(li).array() * leaf.lowrank->Y.row(lj).array()).sum();
        if (phase_on_read_ && extracted_ && leaf.admissible) {
            if (!centers_) throw std::logic_error("phase_on_read requires DOF centers");
            const int i = row_perm_[leaf.row_begin + li];
            const int j = col_perm_[leaf.col_begin + lj];
            const double d = ((*centers_)[i] - (*centers_)[j]).norm();
            val *= std::polar(1.0, kappa_ * d);
        }
        return val;
    }

    Eigen::MatrixXcd to_dense(bool force = false) const {
        if (!force && (nrows_ > 4096 || ncols_ > 4096))
            throw std::invalid_argument("to_dense: refused above 4096 DOFs (pass force)");
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(nrows_, ncols_);
        for (const Leaf& leaf : leaves_) {
            Eigen::MatrixXcd block;
            if (leaf.dense)
                block = *leaf.dense;
            else if (leaf.lowrank)
                block = leaf.lowrank->to_dense();
            else
                continue;
            for (int lj = 0; lj < leaf.col_size; ++lj)
                for (int li = 0; li < leaf.row_size; ++li)
                    out(row_perm_[leaf.row_begin + li], col_perm_[leaf.col_begin + lj]) =
                        phase_on_read_ ? leaf_entry(leaf, li, lj) : block(li, lj);
        }
        return out;
    }

    HMatrixStats stats() const {
        HMatrixStats s;
        s.num_leaves = static_cast<int>(leaves_.size());
        double rank_sum = 0.0;
        int far_count = 0;
        for (const Leaf& leaf : leaves_) {
            std::size_t bytes = 0;
            if (leaf.dense)
                bytes = sizeof(Complex) * static_cast<std::size_t>(leaf.dense->size());
            else if (leaf.lowrank)
                bytes = leaf.lowrank->payload_bytes();
            s.payload_bytes += bytes;
            if (leaf.admissible) {
                ++s.num_admissible;
                s.farfield_bytes += bytes;
                if (leaf.dense_fallback) ++s.num_dense_fallback;
                const int rank = leaf.lowrank ? leaf.lowrank->rank()
                                              : std::min(leaf.row_size, leaf.col_size);
                rank_sum += rank;
                ++far_count;
                s.max_far_rank = std::max(s.max_far_rank, rank);
                auto& h = s.level_rank_histogram[leaf.level];
                ++h.first;
                h.second = std::max(h.second, rank);
            } else {
                s.nearfield_bytes += bytes;
            }
        }
        s.mean_far_rank = far_count > 0 ? rank_sum / far_count : 0.0;
        s.index_bytes = leaves_.size() * sizeof(Leaf) +
                        (row_perm_.size() + col_perm_.size()) * sizeof(int);
        s.assembly_seconds = assembly_seconds_;
        s.entry_generations = entry_generations_;
        return s;
    }

    // --- binary container ------------------------------------------------

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + path);
        out.write("FXH1", 4);
        io::write_pod<std::uint32_t>(out, 1);  // version
        io::write_pod<std::uint8_t>(out, kind_ == KernelKind::SLP ? 0 : 1);
        io::write_pod<std::uint8_t>(out, extracted_ ? 1 : 0);
        io::write_pod<std::uint16_t>(out, 0);
        io::write_pod<double>(out, kappa_);
        io::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(nrows_));
        io::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(ncols_));
        io::write_pod<std::uint64_t>(out, leaves_.size());
        for (int p : row_perm_) io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p));
        for (int p : col_perm_) io::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p));
        for (const Leaf& leaf : leaves_) {
            io::write_pod<std::uint32_t>(out, leaf.row_begin);
            io::write_pod<std::uint32_t>(out, leaf.row_size);
            io::write_pod<std::uint32_t>(out, leaf.col_begin);
            io::write_pod<std::uint32_t>(out, leaf.col_size);
            io::write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(leaf.level));
            io::write_pod<std::uint8_t>(out, leaf.admissible ? 1 : 0);
            std::uint8_t type = leaf.dense ? 0 : 1;
            if (leaf.dense && leaf.dense_fallback) type = 2;
            io::write_pod<std::uint8_t>(out, type);
            if (leaf.dense) {
                io::write_array(out, leaf.dense->data(), leaf.dense->size());
            } else {
                const LowRankFactor& f = *leaf.lowrank;
                io::write_pod<std::uint32_t>(out, f.rank());
                io::write_array(out, f.X.data(), f.X.size());
                io::write_array(out, f.Y.data(), f.Y.size());
            }
        }
        if (!out) throw IoError("write failed: " + path);
    }

    static HMatrix load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open: " + path);
        io::expect_magic(in, "FXH1");
        const auto version = io::read_pod<std::uint32_t>(in);
        if (version != 1) throw IoError("unsupported container version");
        HMatrix hm;
        hm.kind_ = io::read_pod<std::uint8_t>(in) == 0 ? KernelKind::SLP : KernelKind::DLP;
        hm.extracted_ = io::read_pod<std::uint8_t>(in) != 0;
        io::read_pod<std::uint16_t>(in);
        hm.kappa_ = io::read_pod<double>(in);
        hm.nrows_ = static_cast<int>(io::read_pod<std::uint64_t>(in));
        hm.ncols_ = static_cast<int>(io::read_pod<std::uint64_t>(in));
        const auto nleaves = io::read_pod<std::uint64_t>(in);
        hm.row_perm_.resize(hm.nrows_);
        hm.col_perm_.resize(hm.ncols_);
        for (int& p : hm.row_perm_) p = static_cast<int>(io::read_pod<std::uint32_t>(in));
        for (int& p : hm.col_perm_) p = static_cast<int>(io::read_pod<std::uint32_t>(in));
        hm.leaves_.resize(nleaves);
        for (Leaf& leaf : hm.leaves_) {
            leaf.row_begin = static_cast<int>(io::read_pod<std::uint32_t>(in));
            leaf.row_size = static_cast<int>(io::read_pod<std::uint32_t>(in));
            leaf.col_begin = static_cast<int>(io::read_pod<std::uint32_t>(in));
            leaf.col_size = static_cast<int>(io::read_pod<std::uint32_t>(in));
            leaf.level = io::read_pod<std::uint16_t>(in);
            leaf.admissible = io::read_pod<std::uint8_t>(in) != 0;
            const auto type = io::read_pod<std::uint8_t>(in);
            if (type == 0 || type == 2) {
                auto block = std::make_shared<Eigen::MatrixXcd>(leaf.row_size, leaf.col_size);
                io::read_array(in, block->data(), block->size());
                leaf.dense = std::move(block);
                leaf.dense_fallback = type == 2;
            } else {
                const int rank = static_cast<int>(io::read_pod<std::uint32_t>(in));
                auto f = std::make_shared<LowRankFactor>();
                f->X.resize(leaf.row_size, rank);
                f->Y.resize(leaf.col_size, rank);
                io::read_array(in, f->X.data(), f->X.size());
                io::read_array(in, f->Y.data(), f->Y.size());
                leaf.lowrank = std::move(f);
            }
        }
        return hm;
    }

  private:
    static int find_local(const std::vector<int>& perm, int begin, int size, int dof) {
        for (int l = 0; l < size; ++l)
            if (perm[begin + l] == dof) return l;
        return -1;
    }

    KernelKind kind_ = KernelKind::SLP;
    double kappa_ = 0.0;
    bool extracted_ = false;
    bool phase_on_read_ = false;
    int nrows_ = 0, ncols_ = 0;
    std::vector<int> row_perm_, col_perm_;
    std::vector<Leaf> leaves_;
    std::shared_ptr<const BlockClusterTree> tree_;
    std::shared_ptr<std::vector<Vec3>> centers_;
    double assembly_seconds_ = 0.0;
    std::uint64_t entry_generations_ = 0;
};

// Dense Galerkin assembly, the oracle path for verification at desk scale.
// With extracted=true the far/near split is taken from the block partition,
// so the result matches what the extracted H-matrix approximates blockwise.
inline Eigen::MatrixXcd assemble_dense(const GalerkinEntry& eval, double kappa, bool extracted,
                                       const BlockClusterTree* tree = nullptr,
                                       bool force = false) {
    const int n = eval.size();
    if (!force && n > 4096)
        throw std::invalid_argument("assemble_dense: refused above 4096 DOFs (pass force)");
    Eigen::MatrixXcd out(n, n);
    if (!extracted) {
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) out(i, j) = eval.entry(i, j, kappa);
        return out;
    }
    if (!tree) throw std::invalid_argument("assemble_dense: extracted form needs a block tree");
    const ClusterTree& rt = tree->row_tree();
    const ClusterTree& ct = tree->col_tree();
    for (int id : tree->leaves()) {
        const BlockNode& b = tree->node(id);
        const ClusterNode& t = tree->row_cluster(b);
        const ClusterNode& s = tree->col_cluster(b);
        const bool far = b.status == BlockNode::Status::Admissible;
        for (int pj = s.begin; pj < s.end; ++pj) {
            const int j = ct.dof(pj);
            for (int pi = t.begin; pi < t.end; ++pi) {
                const int i = rt.dof(pi);
                out(i, j) = far ? eval.extracted_entry(i, j, kappa) : eval.entry(i, j, kappa);
            }
        }
    }
    return out;
}

} // namespace fxbem
