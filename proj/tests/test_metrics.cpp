#include "fxbem/metrics.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <functional>

using namespace fxbem;
namespace ft = fxbem::testing;

namespace {

struct TensorGen {
    std::vector<Eigen::MatrixXcd> G;
    std::vector<std::function<Complex(double)>> h;
    int rows() const { return static_cast<int>(G[0].rows()); }
    int cols() const { return static_cast<int>(G[0].cols()); }
    Complex entry(int i, int j, double kappa) const {
        Complex v(0.0, 0.0);
        for (std::size_t k = 0; k < G.size(); ++k) v += G[k](i, j) * h[k](kappa);
        return v;
    }
    void trace(int i, int j, std::span<const double> ks, std::span<Complex> out) const {
        for (std::size_t m = 0; m < ks.size(); ++m) out[m] = entry(i, j, ks[m]);
    }
    void slice_row(int i, double kappa, Complex* out) const {
        for (int j = 0; j < cols(); ++j) out[j] = entry(i, j, kappa);
    }
    void slice_col(int j, double kappa, Complex* out) const {
        for (int i = 0; i < rows(); ++i) out[i] = entry(i, j, kappa);
    }
};

// a one-block CompactHRep over a synthetic family
struct Fixture {
    TensorGen gen;
    CompactHRep rep;
};

Fixture make_fixture(unsigned seed) {
    Fixture f;
    f.gen.G = {ft::random_rank_k(20, 16, 2, seed), ft::random_rank_k(20, 16, 2, seed + 1)};
    f.gen.h = {[](double k) { return Complex(1.0, 0.0) / Complex(k + 1.0, 0.0); },
               [](double k) { return Complex(1.0, 0.0) / Complex(k * k + 0.4, -0.2); }};
    f.rep.kind = KernelKind::SLP;
    f.rep.grid = SampleGrid::chebyshev(1.0, 3.0, 16, 7);
    f.rep.nrows = 20;
    f.rep.ncols = 16;
    f.rep.row_perm.resize(20);
    f.rep.col_perm.resize(16);
    for (int i = 0; i < 20; ++i) f.rep.row_perm[i] = i;
    for (int j = 0; j < 16; ++j) f.rep.col_perm[j] = j;
    CompactBlock block;
    block.id = 0;
    block.row_begin = 0;
    block.row_size = 20;
    block.col_begin = 0;
    block.col_size = 16;
    CompactBuildOptions opts;
    opts.tol = 1e-7;
    opts.aca_tol = 1e-10;
    opts.aaa_tol = 1e-12;
    block.rep = build_block(f.gen, f.rep.grid, opts);
    f.rep.blocks.push_back(std::move(block));
    return f;
}

} // namespace

TEST(Metrics, ExactRepresentationGivesZero) {
    Fixture f = make_fixture(11);
    // oracle IS the representation
    BlockEntryOracle oracle = [&](const CompactBlock& cb, int i, int j, double kappa) {
        return eval_entry(cb.rep, f.rep.grid, i, j, kappa);
    };
    ErrorOptions opts;
    const ErrorReport report = compute_errors(f.rep, oracle, f.rep.grid.heldout, opts);
    EXPECT_EQ(report.err_f, 0.0);
    EXPECT_EQ(report.err_inf, 0.0);
    EXPECT_EQ(report.kappas.size(), 7u);
    EXPECT_EQ(report.block_ids.size(), 1u);
}

TEST(Metrics, UniformScalingGivesAnalyticRatio) {
    Fixture f = make_fixture(23);
    const double delta = 1e-3;
    // representation = oracle / (1 + delta), i.e. oracle = rep * (1 + delta)
    BlockEntryOracle oracle = [&](const CompactBlock& cb, int i, int j, double kappa) {
        return eval_entry(cb.rep, f.rep.grid, i, j, kappa) * (1.0 + delta);
    };
    ErrorOptions opts;
    const ErrorReport report = compute_errors(f.rep, oracle, f.rep.grid.heldout, opts);
    const double expected = delta / (1.0 + delta);
    EXPECT_NEAR(report.err_f, expected, 0.10 * expected);
    EXPECT_NEAR(report.err_inf, expected, 1e-12);  // exact for the max-norm ratio
}

TEST(Metrics, GlobalPhaseInvariance) {
    Fixture f = make_fixture(31);
    const Complex phase = std::polar(1.0, 0.83);
    BlockEntryOracle plain = [&](const CompactBlock& cb, int i, int j, double kappa) {
        return f.gen.entry(i, j, kappa);
    };
    BlockEntryOracle rotated = [&](const CompactBlock& cb, int i, int j, double kappa) {
        return phase * f.gen.entry(i, j, kappa);
    };
    // rotate the representation by the same constant phase
    Fixture g = make_fixture(31);
    for (auto& block : g.rep.blocks)
        for (auto& s : block.rep.snapshots) s.X *= phase;
    ErrorOptions opts;
    const ErrorReport a = compute_errors(f.rep, plain, f.rep.grid.heldout, opts);
    const ErrorReport b = compute_errors(g.rep, rotated, g.rep.grid.heldout, opts);
    EXPECT_NEAR(a.err_f, b.err_f, 1e-12 + 1e-6 * a.err_f);
    EXPECT_NEAR(a.err_inf, b.err_inf, 1e-12 + 1e-6 * a.err_inf);
}

TEST(Metrics, VarianceShrinksWithSampleCount) {
    Fixture f = make_fixture(41);
    // imperfect oracle so the sampled error is nonzero
    BlockEntryOracle oracle = [&](const CompactBlock& cb, int i, int j, double kappa) {
        return f.gen.entry(i, j, kappa) * (1.0 + 1e-3 * std::sin(i * 0.7 + j * 1.3));
    };
    std::vector<double> variances;
    for (const std::int64_t m : {8LL, 64LL, 320LL}) {
        std::vector<double> errs;
        for (unsigned seed = 0; seed < 24; ++seed) {
            ErrorOptions opts;
            opts.samples_override = m;
            opts.seed = seed;
            errs.push_back(compute_errors(f.rep, oracle, f.rep.grid.heldout, opts).err_f);
        }
        double mean = 0.0;
        for (double e : errs) mean += e;
        mean /= errs.size();
        double var = 0.0;
        for (double e : errs) var += (e - mean) * (e - mean);
        variances.push_back(var / errs.size());
    }
    EXPECT_LE(variances[2], variances[0] + 1e-18);
    EXPECT_LE(variances[1], variances[0] * 1.5 + 1e-18);  // 3-point monotone trend
}

TEST(Metrics, EmptyInputsRejected) {
    Fixture f = make_fixture(51);
    BlockEntryOracle oracle = [&](const CompactBlock&, int, int, double) {
        return Complex(0.0, 0.0);
    };
    ErrorOptions opts;
    EXPECT_THROW(compute_errors(f.rep, oracle, std::span<const double>(), opts),
                 std::invalid_argument);
    CompactHRep empty;
    EXPECT_THROW(compute_errors(empty, oracle, f.rep.grid.heldout, opts),
                 std::invalid_argument);
}

TEST(Metrics, JsonReportSchema) {
    Fixture f = make_fixture(61);
    BlockEntryOracle oracle = [&](const CompactBlock& cb, int i, int j, double kappa) {
        return f.gen.entry(i, j, kappa);
    };
    ErrorOptions opts;
    const ErrorReport report = compute_errors(f.rep, oracle, f.rep.grid.heldout, opts);
    nlohmann::json j{{"kernel", to_string(f.rep.kind)},
                     {"extracted", true},
                     {"interval", {f.rep.grid.a, f.rep.grid.b}},
                     {"nodes", f.rep.grid.nodes},
                     {"tol", 1e-4},
                     {"err_f", report.err_f},
                     {"err_inf", report.err_inf},
                     {"blocks", nlohmann::json::array()}};
    for (const auto& c : report.blocks)
        j["blocks"].push_back({{"id", c.block_id}, {"diff2", c.diff2}, {"ref2", c.ref2}});
    for (const char* key : {"kernel", "extracted", "interval", "nodes", "tol", "err_f",
                            "err_inf", "blocks"})
        EXPECT_TRUE(j.contains(key)) << key;
}
