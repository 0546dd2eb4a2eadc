#include "fxbem/hmatrix.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fxbem;
namespace ft = fxbem::testing;

namespace {

struct Scene {
    TriangleMesh mesh;
    std::vector<Panel> pans;
    std::shared_ptr<const BlockClusterTree> tree;
};

Scene sphere_setup(int level, int n_min) {
    Scene s;
    s.mesh = gen_sphere(level);
    s.pans = panels(s.mesh);
    auto ct = std::make_shared<ClusterTree>(s.mesh, s.pans, n_min);
    s.tree = std::make_shared<BlockClusterTree>(ct, ct, 2.0, AdmissibilityVariant::Min);
    return s;
}

} // namespace

TEST(Assemble, AllDenseEqualsDenseAssembly) {
    Scene s = sphere_setup(1, 1000);  // n_min >= N: single dense leaf
    AssemblyOptions opts;
    opts.q = 3;
    const HMatrix hm = HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP,
                                         Wavenumber(2.0), opts);
    ASSERT_EQ(hm.leaves().size(), 1u);
    const GalerkinEntry eval(s.mesh, s.pans, KernelKind::SLP, 3);
    const Eigen::MatrixXcd dense = assemble_dense(eval, 2.0, false);
    EXPECT_EQ((hm.to_dense() - dense).norm(), 0.0);  // identical entry calls
}

TEST(Assemble, SphereMatchesDenseOracle) {
    Scene s = sphere_setup(2, 16);
    AssemblyOptions opts;
    opts.q = 3;
    opts.aca_tol = 1e-5;
    const double kappa = 8.0 / s.mesh.diameter();
    for (KernelKind kind : {KernelKind::SLP, KernelKind::DLP}) {
        const HMatrix hm =
            HMatrix::assemble(s.mesh, s.pans, s.tree, kind, Wavenumber(kappa), opts);
        const GalerkinEntry eval(s.mesh, s.pans, kind, 3);
        const Eigen::MatrixXcd dense = assemble_dense(eval, kappa, false);
        EXPECT_LE(ft::rel_fro_error(hm.to_dense(), dense), 1e-4);
    }
}

TEST(Assemble, ExtractedKeepsEntryModuli) {
    Scene s = sphere_setup(2, 16);
    AssemblyOptions opts;
    opts.q = 3;
    opts.aca_tol = 1e-6;
    const double kappa = 8.0 / s.mesh.diameter();
    AssemblyOptions exopts = opts;
    exopts.extracted = true;
    const HMatrix plain =
        HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(kappa), opts);
    const HMatrix ex =
        HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(kappa), exopts);

    std::mt19937 rng(19);
    for (std::size_t n = 0; n < plain.leaves().size(); ++n) {
        const auto& leaf = plain.leaves()[n];
        if (!leaf.admissible) continue;
        const double scale =
            leaf.lowrank ? std::sqrt(leaf.lowrank->X.norm() * leaf.lowrank->Y.norm()) : 1.0;
        std::uniform_int_distribution<int> pr(0, leaf.row_size - 1), pc(0, leaf.col_size - 1);
        for (int trial = 0; trial < 20; ++trial) {
            const int li = pr(rng), lj = pc(rng);
            const double a = std::abs(plain.leaf_entry(leaf, li, lj));
            const double b = std::abs(ex.leaf_entry(ex.leaves()[n], li, lj));
            EXPECT_LE(std::abs(a - b), 20.0 * opts.aca_tol * std::max({a, b, 1e-3 * scale}));
        }
    }
}

// sampled Hadamard identity: phase * B-hat matches B within the combined
// ACA tolerances on every far-field block
TEST(Assemble, HadamardReconstructionSampled) {
    Scene s = sphere_setup(2, 16);
    AssemblyOptions opts;
    opts.q = 3;
    opts.aca_tol = 1e-5;
    const double kappa = 10.0 / s.mesh.diameter();
    AssemblyOptions exopts = opts;
    exopts.extracted = true;
    const HMatrix plain =
        HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(kappa), opts);
    const HMatrix ex =
        HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(kappa), exopts);
    const GalerkinEntry eval(s.mesh, s.pans, KernelKind::SLP, 3);

    std::mt19937 rng(77);
    for (std::size_t n = 0; n < plain.leaves().size(); ++n) {
        const auto& lp = plain.leaves()[n];
        const auto& le = ex.leaves()[n];
        if (!lp.admissible) continue;
        const int m = 100;
        std::uniform_int_distribution<int> pr(0, lp.row_size - 1), pc(0, lp.col_size - 1);
        double diff2 = 0.0, ref2 = 0.0;
        for (int t = 0; t < m; ++t) {
            const int li = pr(rng), lj = pc(rng);
            const int i = plain.row_dof(lp.row_begin + li);
            const int j = plain.col_dof(lp.col_begin + lj);
            const Complex b = plain.leaf_entry(lp, li, lj);
            const Complex bh = ex.leaf_entry(le, li, lj);
            diff2 += std::norm(eval.phase(i, j, kappa) * bh - b);
            ref2 += std::norm(b);
        }
        EXPECT_LE(std::sqrt(diff2), 2.0 * (opts.aca_tol + opts.aca_tol) * std::sqrt(ref2) * 10.0 +
                                        1e-30)
            << "block " << n;
    }
}

TEST(Matvec, DenseAndLinearity) {
    Scene s = sphere_setup(1, 1000);
    AssemblyOptions opts;
    opts.q = 3;
    const HMatrix hm =
        HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(1.5), opts);
    const GalerkinEntry eval(s.mesh, s.pans, KernelKind::SLP, 3);
    const Eigen::MatrixXcd dense = assemble_dense(eval, 1.5, false);

    const int n = s.mesh.num_triangles();
    const Eigen::VectorXcd v = ft::random_complex(n, 1, 123).col(0);
    const Eigen::VectorXcd w = ft::random_complex(n, 1, 124).col(0);
    EXPECT_LE((hm.matvec(v) - dense * v).norm(), 1e-13 * (dense * v).norm());

    const Complex alpha(0.7, -0.4);
    const Eigen::VectorXcd lhs = hm.matvec(alpha * v + w);
    const Eigen::VectorXcd rhs = alpha * hm.matvec(v) + hm.matvec(w);
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(Matvec, UnitVectorExtractsColumn) {
    Scene s = sphere_setup(2, 16);
    AssemblyOptions opts;
    opts.q = 2;
    opts.aca_tol = 1e-6;
    const double kappa = 4.0 / s.mesh.diameter();
    const HMatrix hm =
        HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(kappa), opts);
    const GalerkinEntry eval(s.mesh, s.pans, KernelKind::SLP, 2);
    const Eigen::MatrixXcd dense = assemble_dense(eval, kappa, false);
    for (int j : {0, 100, 319}) {
        Eigen::VectorXcd ej = Eigen::VectorXcd::Zero(dense.cols());
        ej(j) = 1.0;
        EXPECT_LE((hm.matvec(ej) - dense.col(j)).norm(), 2.0 * opts.aca_tol * dense.norm());
    }
}

TEST(Matvec, DimensionMismatchThrows) {
    Scene s = sphere_setup(0, 1000);
    AssemblyOptions opts;
    opts.q = 2;
    const HMatrix hm =
        HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(1.0), opts);
    EXPECT_THROW(hm.matvec(Eigen::VectorXcd::Zero(7)), std::invalid_argument);
}

TEST(Stats, SingleDenseLeaf) {
    Scene s = sphere_setup(1, 1000);
    AssemblyOptions opts;
    opts.q = 2;
    const HMatrix hm =
        HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(1.0), opts);
    const auto st = hm.stats();
    const std::size_t n = s.mesh.num_triangles();
    EXPECT_EQ(st.payload_bytes, 16 * n * n);
    EXPECT_EQ(st.nearfield_bytes, 16 * n * n);
    EXPECT_EQ(st.farfield_bytes, 0u);
    EXPECT_GT(st.index_bytes, 0u);
}

TEST(Stats, LowRankLeafFormula) {
    // two well-separated groups of panels: the two cross blocks compress
    std::vector<Vec3> pts;
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 64; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    for (int i = 0; i < 64; ++i) pts.emplace_back(20.0 + u(rng), u(rng), u(rng));
    TriangleMesh mesh;
    const double h = 1e-5;
    for (const auto& c : pts) {
        const int base = mesh.num_vertices();
        mesh.vertices.push_back(c);
        mesh.vertices.push_back(c + Vec3(h, 0, 0));
        mesh.vertices.push_back(c + Vec3(0, h, 0));
        mesh.triangles.push_back({base, base + 1, base + 2});
    }
    const auto ps = panels(mesh);
    auto ct = std::make_shared<ClusterTree>(mesh, ps, 64);
    auto tree = std::make_shared<BlockClusterTree>(ct, ct, 2.0, AdmissibilityVariant::Min);
    AssemblyOptions opts;
    opts.q = 2;
    opts.aca_tol = 1e-8;
    const HMatrix hm =
        HMatrix::assemble(mesh, ps, tree, KernelKind::SLP, Wavenumber(0.05), opts);
    std::size_t expect_far = 0;
    int far_leaves = 0;
    for (const auto& leaf : hm.leaves()) {
        if (!leaf.admissible) continue;
        ASSERT_TRUE(leaf.lowrank != nullptr);
        expect_far += 16u * leaf.lowrank->rank() * (leaf.row_size + leaf.col_size);
        ++far_leaves;
    }
    EXPECT_EQ(far_leaves, 2);
    EXPECT_EQ(hm.stats().farfield_bytes, expect_far);
}

TEST(Stats, ExtractedMemoryFlatterOverKappaSweep) {
    Scene s = sphere_setup(3, 64);
    AssemblyOptions opts;
    opts.q = 2;
    opts.aca_tol = 1e-4;
    opts.farfield_only = true;
    std::vector<double> plain_mem, ex_mem;
    for (double kd : {5.0, 10.0, 20.0, 40.0}) {
        const double kappa = kd / s.mesh.diameter();
        AssemblyOptions po = opts;
        const HMatrix hp =
            HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(kappa), po);
        AssemblyOptions eo = opts;
        eo.extracted = true;
        const HMatrix he =
            HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(kappa), eo);
        plain_mem.push_back(static_cast<double>(hp.stats().farfield_bytes));
        ex_mem.push_back(static_cast<double>(he.stats().farfield_bytes));
    }
    ASSERT_GT(*std::min_element(plain_mem.begin(), plain_mem.end()), 0.0);
    const double plain_ratio = *std::max_element(plain_mem.begin(), plain_mem.end()) /
                               *std::min_element(plain_mem.begin(), plain_mem.end());
    const double ex_ratio = *std::max_element(ex_mem.begin(), ex_mem.end()) /
                            *std::min_element(ex_mem.begin(), ex_mem.end());
    EXPECT_LT(ex_ratio, plain_ratio);
}

// empirical stand-in for the weak kappa-dependence of extracted ranks:
// fixed admissible block, kappa doubled twice with kappa*h < 1/2
TEST(Assemble, ExtractedRankGrowsSlowerOnFixedBlock) {
    Scene s = sphere_setup(5, 32);
    const GalerkinEntry slp(s.mesh, s.pans, KernelKind::SLP, 2);
    // largest admissible leaf
    const BlockClusterTree& tree = *s.tree;
    int best = -1;
    std::int64_t best_size = 0;
    for (int id : tree.leaves()) {
        const BlockNode& b = tree.node(id);
        if (b.status != BlockNode::Status::Admissible) continue;
        const std::int64_t sz = static_cast<std::int64_t>(tree.row_cluster(b).size()) *
                                tree.col_cluster(b).size();
        if (sz > best_size) {
            best_size = sz;
            best = id;
        }
    }
    ASSERT_GE(best, 0);
    const BlockNode& b = tree.node(best);
    const ClusterNode& t = tree.row_cluster(b);
    const ClusterNode& c = tree.col_cluster(b);

    double h = 0.0;
    for (const auto& p : s.pans) h = std::max(h, p.diameter);
    const double kappa_top = 0.49 / h;

    std::vector<int> plain_rank, ex_rank;
    for (double kappa : {kappa_top / 4.0, kappa_top / 2.0, kappa_top}) {
        for (bool extracted : {false, true}) {
            detail::QuadratureBlockGen gen{&slp,     &tree.row_tree(), &tree.col_tree(),
                                           t.begin,  t.size(),         c.begin,
                                           c.size(), kappa,            extracted};
            AcaStats stats;
            const LowRankFactor f = aca_plus(gen, 1e-5, t.size(), &stats);
            const LowRankFactor r = recompress(f, 1e-7);
            (extracted ? ex_rank : plain_rank).push_back(r.rank());
        }
    }
    // extracted ranks grow by at most 1.5x per doubling
    EXPECT_LE(ex_rank[1], std::ceil(1.5 * ex_rank[0]));
    EXPECT_LE(ex_rank[2], std::ceil(1.5 * ex_rank[1]));
    // the non-extracted total growth exceeds 1.5x the extracted growth
    const double plain_growth = static_cast<double>(plain_rank[2]) / plain_rank[0];
    const double ex_growth = static_cast<double>(ex_rank[2]) / ex_rank[0];
    EXPECT_GE(plain_growth, 1.5 * ex_growth);
}

TEST(Container, RoundTripBitwise) {
    Scene s = sphere_setup(1, 16);
    AssemblyOptions opts;
    opts.q = 2;
    opts.extracted = true;
    const double kappa = 6.0 / s.mesh.diameter();
    const HMatrix hm =
        HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::DLP, Wavenumber(kappa), opts);
    const auto path = (ft::temp_dir() / "hmat.bin").string();
    hm.save(path);
    const HMatrix back = HMatrix::load(path);
    EXPECT_EQ(back.rows(), hm.rows());
    EXPECT_EQ(back.cols(), hm.cols());
    EXPECT_EQ(back.kind(), hm.kind());
    EXPECT_EQ(back.kappa(), hm.kappa());
    EXPECT_EQ(back.extracted(), hm.extracted());
    ASSERT_EQ(back.leaves().size(), hm.leaves().size());
    for (std::size_t n = 0; n < hm.leaves().size(); ++n) {
        const auto& a = hm.leaves()[n];
        const auto& b = back.leaves()[n];
        EXPECT_EQ(a.admissible, b.admissible);
        if (a.dense) {
            ASSERT_TRUE(b.dense != nullptr);
            EXPECT_EQ((*a.dense - *b.dense).norm(), 0.0);
        } else {
            ASSERT_TRUE(b.lowrank != nullptr);
            EXPECT_EQ((a.lowrank->X - b.lowrank->X).norm(), 0.0);
            EXPECT_EQ((a.lowrank->Y - b.lowrank->Y).norm(), 0.0);
        }
    }
    // matvec agrees bitwise
    const Eigen::VectorXcd v = ft::random_complex(hm.cols(), 1, 5).col(0);
    EXPECT_EQ((hm.matvec(v) - back.matvec(v)).norm(), 0.0);
}

TEST(Container, BadMagicRejected) {
    const auto path = ft::write_text("bad_container.bin", "NOPE....");
    EXPECT_THROW(HMatrix::load(path), IoError);
}

TEST(ToDense, GuardAbove4096) {
    HMatrix hm;
    hm.set_meta(KernelKind::SLP, 1.0, false, 5000, 5000);
    EXPECT_THROW(hm.to_dense(), std::invalid_argument);
}

TEST(Assemble, NearFieldSharedBetweenExtractedAndPlain) {
    Scene s = sphere_setup(1, 8);
    AssemblyOptions opts;
    opts.q = 2;
    const double kappa = 3.0;
    const HMatrix plain =
        HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP, Wavenumber(kappa), opts);
    AssemblyOptions eo = opts;
    eo.extracted = true;
    const HMatrix ex = HMatrix::assemble(s.mesh, s.pans, s.tree, KernelKind::SLP,
                                         Wavenumber(kappa), eo, &plain);
    for (std::size_t n = 0; n < plain.leaves().size(); ++n) {
        if (plain.leaves()[n].admissible) continue;
        EXPECT_EQ(plain.leaves()[n].dense.get(), ex.leaves()[n].dense.get())
            << "near-field payload not shared";
    }
}
