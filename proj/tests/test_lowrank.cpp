#include "fxbem/lowrank.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <set>

using namespace fxbem;
namespace ft = fxbem::testing;

TEST(AcaPlus, ExactRankOne) {
    const Eigen::MatrixXcd M =
        ft::random_complex(80, 1, 11) * ft::random_complex(1, 60, 12);
    AcaStats stats;
    const LowRankFactor f = aca_plus(ft::DenseGen{M}, 1e-10, 40, &stats);
    EXPECT_EQ(f.rank(), 1);
    EXPECT_LE(ft::rel_fro_error(f.to_dense(), M), 1e-13);
    EXPECT_EQ(stats.rank, 1);
}

TEST(AcaPlus, ZeroMatrixGivesRankZero) {
    const Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(30, 20);
    AcaStats stats;
    const LowRankFactor f = aca_plus(ft::DenseGen{M}, 1e-10, 15, &stats);
    EXPECT_EQ(f.rank(), 0);
    // one reference cross: a row and a column
    EXPECT_EQ(stats.entries_generated, 30 + 20);
}

TEST(AcaPlus, RandomRankFiveMatchesSvdOracle) {
    const Eigen::MatrixXcd M = ft::random_rank_k(200, 150, 5, 77);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    int svd_rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-10 * svd.singularValues()(0)) ++svd_rank;
    ASSERT_EQ(svd_rank, 5);

    AcaStats stats;
    const LowRankFactor f = aca_plus(ft::DenseGen{M}, 1e-12, 75, &stats);
    EXPECT_EQ(f.rank(), 5);
    EXPECT_LE(ft::rel_fro_error(f.to_dense(), M), 1e-10);
}

TEST(AcaPlus, PivotsHaveNoRepeats) {
    const Eigen::MatrixXcd M = ft::random_rank_k(60, 50, 8, 3);
    const LowRankFactor f = aca_plus(ft::DenseGen{M}, 1e-13, 30);
    std::set<int> rp(f.row_pivots.begin(), f.row_pivots.end());
    std::set<int> cp(f.col_pivots.begin(), f.col_pivots.end());
    EXPECT_EQ(rp.size(), f.row_pivots.size());
    EXPECT_EQ(cp.size(), f.col_pivots.size());
    EXPECT_EQ(static_cast<int>(f.row_pivots.size()), f.rank());
}

// cross approximation interpolates the generated pivot rows and columns
TEST(AcaPlus, InterpolationProperty) {
    const Eigen::MatrixXcd M = ft::random_rank_k(70, 90, 6, 21) +
                               1e-8 * ft::random_complex(70, 90, 22);
    const LowRankFactor f = aca_plus(ft::DenseGen{M}, 1e-4, 35);
    const Eigen::MatrixXcd R = M - f.to_dense();
    const double scale = M.norm();
    for (int m = 0; m < f.rank(); ++m) {
        EXPECT_LE(R.row(f.row_pivots[m]).norm(), 1e-12 * scale);
        EXPECT_LE(R.col(f.col_pivots[m]).norm(), 1e-12 * scale);
    }
}

TEST(AcaPlus, MonotoneResidueOnExponentialDecay) {
    // fixture family with exponentially decaying singular values
    const int n = 80;
    Eigen::MatrixXcd U = ft::random_complex(n, n, 31);
    Eigen::MatrixXcd V = ft::random_complex(n, n, 32);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qu(U), qv(V);
    const Eigen::MatrixXcd Qu = qu.householderQ() * Eigen::MatrixXcd::Identity(n, 12);
    const Eigen::MatrixXcd Qv = qv.householderQ() * Eigen::MatrixXcd::Identity(n, 12);
    Eigen::VectorXd sv(12);
    for (int i = 0; i < 12; ++i) sv(i) = std::pow(4.0, -i);
    const Eigen::MatrixXcd M = Qu * sv.asDiagonal() * Qv.adjoint();

    AcaStats stats;
    aca_plus(ft::DenseGen{M}, 1e-6, 40, &stats);
    ASSERT_GE(stats.cross_norms.size(), 3u);
    const auto& h = stats.cross_norms;
    EXPECT_LE(h[h.size() - 1], h[h.size() - 2] * (1.0 + 1e-12));
    EXPECT_LE(h[h.size() - 2], h[h.size() - 3] * (1.0 + 1e-12));
}

TEST(AcaPlus, FlopCounterWithinLemmaBound) {
    struct Case {
        int n, m, k;
        unsigned seed;
    };
    for (const Case c : {Case{200, 150, 5, 77}, Case{64, 48, 3, 5}, Case{120, 120, 8, 9}}) {
        const Eigen::MatrixXcd M = ft::random_rank_k(c.n, c.m, c.k, c.seed);
        AcaStats stats;
        const LowRankFactor f = aca_plus(ft::DenseGen{M}, 1e-12, 60, &stats);
        const int R = f.rank();
        // generation bound: 2R(#t+#s) cross entries; the +2 covers the
        // initial reference cross and the rejected trailing cross
        EXPECT_LE(stats.entries_generated, 2LL * (R + 2) * (c.n + c.m));
        // cost-lemma shape at quadrature-scale entry cost q^4 * C_b
        const double c_entry = 625.0 * 55.0;
        const double total = stats.entries_generated * c_entry + stats.arith_flops;
        EXPECT_LE(total, 2.0 * (R + 2) * (c.n + c.m) * (c_entry + 3.0 * (R + 2)));
    }
}

TEST(AcaPlus, RankOneGenerationBudget) {
    const Eigen::MatrixXcd M = ft::random_complex(100, 1, 1) * ft::random_complex(1, 90, 2);
    AcaStats stats;
    aca_plus(ft::DenseGen{M}, 1e-10, 50, &stats);
    // one cross + reference: well under 2(1+1)(#t+#s)
    EXPECT_LE(stats.entries_generated, 4 * (100 + 90));
}

TEST(Recompress, KeepsWellSeparatedSpectrum) {
    const int n = 40;
    Eigen::MatrixXcd U = ft::random_complex(n, 2, 51), V = ft::random_complex(n, 2, 52);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qu(U), qv(V);
    LowRankFactor f;
    f.X = qu.householderQ() * Eigen::MatrixXcd::Identity(n, 2);
    f.Y = (qv.householderQ() * Eigen::MatrixXcd::Identity(n, 2)).conjugate();
    f.X.col(0) *= 1.0;
    f.X.col(1) *= 0.5;
    f.row_pivots = {0, 1};
    f.col_pivots = {0, 1};
    const LowRankFactor g = recompress(f, 1e-8);
    EXPECT_EQ(g.rank(), 2);
    EXPECT_LE(ft::rel_fro_error(g.to_dense(), f.to_dense()), 1e-13);
}

TEST(Recompress, DropsTinySingularValue) {
    const int n = 50;
    Eigen::MatrixXcd U = ft::random_complex(n, 3, 61), V = ft::random_complex(n, 3, 62);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qu(U), qv(V);
    Eigen::MatrixXcd Qu = qu.householderQ() * Eigen::MatrixXcd::Identity(n, 3);
    Eigen::MatrixXcd Qv = qv.householderQ() * Eigen::MatrixXcd::Identity(n, 3);
    Eigen::Vector3d sv(1.0, 0.5, 1e-12);
    LowRankFactor f;
    f.X = Qu * sv.asDiagonal();
    f.Y = Qv.conjugate();
    f.row_pivots = {0, 1, 2};
    f.col_pivots = {0, 1, 2};
    const LowRankFactor g = recompress(f, 1e-8);
    EXPECT_EQ(g.rank(), 2);
}

TEST(Recompress, ErrorBoundAndIdempotence) {
    for (unsigned seed : {1u, 2u, 3u}) {
        LowRankFactor f;
        f.X = ft::random_complex(60, 10, seed);
        f.Y = ft::random_complex(45, 10, seed + 100);
        for (int i = 0; i < 10; ++i) {
            f.row_pivots.push_back(i);
            f.col_pivots.push_back(i);
        }
        const Eigen::MatrixXcd dense = f.to_dense();
        const double eps = 1e-3;
        const LowRankFactor g = recompress(f, eps);
        EXPECT_LE((g.to_dense() - dense).norm(), eps * dense.norm() + 1e-12);
        const LowRankFactor h = recompress(g, eps);
        EXPECT_EQ(h.rank(), g.rank());
        EXPECT_LE((h.to_dense() - g.to_dense()).norm(), 1e-14 * dense.norm() + 1e-14);
    }
}

TEST(Recompress, RankZeroPassthrough) {
    LowRankFactor f;
    f.X.resize(10, 0);
    f.Y.resize(8, 0);
    EXPECT_EQ(recompress(f, 1e-6).rank(), 0);
}
