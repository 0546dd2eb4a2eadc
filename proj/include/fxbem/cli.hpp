#pragma once

#include "fxbem/hmatrix.hpp"
#include "fxbem/metrics.hpp"
#include "fxbem/reconstruct.hpp"
#include "fxbem/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fxbem::cli {

using nlohmann::json;

struct RunConfig {
    std::string mesh_path;  // OFF file; empty means the generated sphere
    int sphere_level = 3;
    std::string kernel = "slp";
    double kappa_dimless = 8.0;       // single-kappa commands (kappa * diam)
    double range_a = 10.0, range_b = 100.0;
    double eta = 2.0;
    std::string adm = "min";
    int q = 5;
    double aca_tol = 1e-5;
    double tensor_tol = 1e-4;
    double aaa_tol = 0.0;             // 0: tensor_tol / 10
    double recompress_factor = 1e-2;
    int nodes = 16;
    int heldout = 7;
    int max_degree = 8;
    int n_min = 32;
    unsigned threads = 0;
    std::uint64_t seed = 0;
    double subset_fraction = 1.0;
    bool extracted = false;
    bool farfield_only = false;
    bool with_nearfield = false;
    bool with_phase = true;
    bool skip_errors = false;
    int timing_reps = 5;
    std::string out;        // JSON report path (stdout if empty)
    std::string csv;        // CSV output for sweeps
    std::string save;       // binary container output
    std::string container;  // binary container input
    std::string sweep;      // comma-separated dimensionless kappas
    std::string nlogn_levels;  // comma-separated sphere levels
    double kappa_h = 0.8;

    json to_json() const {
        return json{{"mesh", mesh_path},
                    {"sphere_level", sphere_level},
                    {"kernel", kernel},
                    {"kappa_dimless", kappa_dimless},
                    {"range", {range_a, range_b}},
                    {"eta", eta},
                    {"adm", adm},
                    {"q", q},
                    {"aca_tol", aca_tol},
                    {"tensor_tol", tensor_tol},
                    {"aaa_tol", effective_aaa_tol()},
                    {"recompress_factor", recompress_factor},
                    {"nodes", nodes},
                    {"heldout", heldout},
                    {"max_degree", max_degree},
                    {"n_min", n_min},
                    {"threads", threads},
                    {"seed", seed},
                    {"subset_fraction", subset_fraction},
                    {"extracted", extracted},
                    {"farfield_only", farfield_only},
                    {"with_nearfield", with_nearfield},
                    {"with_phase", with_phase},
                    {"timing_reps", timing_reps},
                    {"kappa_h", kappa_h}};
    }

    double effective_aaa_tol() const { return aaa_tol > 0.0 ? aaa_tol : tensor_tol * 0.1; }

    void validate() const {
        if (sphere_level < 0) throw std::invalid_argument("sphere level must be >= 0");
        if (kernel != "slp" && kernel != "dlp") throw std::invalid_argument("kernel: slp|dlp");
        if (adm != "min" && adm != "max") throw std::invalid_argument("adm: min|max");
        if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
        if (q < 1 || q > 16) throw std::invalid_argument("q out of range [1,16]");
        if (!(aca_tol > 0.0 && aca_tol < 1.0)) throw std::invalid_argument("aca-tol in (0,1)");
        if (!(tensor_tol > 0.0 && tensor_tol < 1.0))
            throw std::invalid_argument("tensor-tol in (0,1)");
        if (nodes < 2) throw std::invalid_argument("nodes must be >= 2");
        if (max_degree < 0) throw std::invalid_argument("max-degree must be >= 0");
        if (n_min < 1) throw std::invalid_argument("n-min must be >= 1");
        if (!(range_a < range_b)) throw std::invalid_argument("range requires a < b");
        if (subset_fraction <= 0.0 || subset_fraction > 1.0)
            throw std::invalid_argument("subset-fraction in (0,1]");
        if (timing_reps < 1) throw std::invalid_argument("reps must be >= 1");
    }
};

struct Problem {
    TriangleMesh mesh;
    std::vector<Panel> pans;
    std::shared_ptr<ClusterTree> cluster_tree;
    std::shared_ptr<BlockClusterTree> tree;
    double diam = 0.0;
};

inline Problem setup_problem(const RunConfig& cfg) {
    Problem p;
    p.mesh = cfg.mesh_path.empty() ? gen_sphere(cfg.sphere_level) : load_off(cfg.mesh_path);
    p.mesh.validate();
    p.pans = panels(p.mesh);
    p.cluster_tree = std::make_shared<ClusterTree>(p.mesh, p.pans, cfg.n_min);
    p.tree = std::make_shared<BlockClusterTree>(p.cluster_tree, p.cluster_tree, cfg.eta,
                                                admissibility_variant_from_string(cfg.adm));
    p.diam = p.mesh.diameter();
    return p;
}

namespace detail {

inline void emit(const json& report, const std::string& path, std::ostream& console) {
    if (path.empty()) {
        console << report.dump(2) << "\n";
    } else {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write report: " + path);
        out << report.dump(2) << "\n";
    }
}

inline json with_provenance(json j, const RunConfig& cfg) {
    j["config"] = cfg.to_json();
    j["version"] = version_string;
    return j;
}

inline json stats_json(const HMatrixStats& st) {
    json hist = json::array();
    for (const auto& [level, entry] : st.level_rank_histogram)
        hist.push_back({{"level", level}, {"blocks", entry.first}, {"max_rank", entry.second}});
    return json{{"payload_bytes", st.payload_bytes},
                {"farfield_bytes", st.farfield_bytes},
                {"nearfield_bytes", st.nearfield_bytes},
                {"index_bytes", st.index_bytes},
                {"num_leaves", st.num_leaves},
                {"num_admissible", st.num_admissible},
                {"num_dense_fallback", st.num_dense_fallback},
                {"mean_far_rank", st.mean_far_rank},
                {"max_far_rank", st.max_far_rank},
                {"level_rank_histogram", hist},
                {"assembly_seconds", st.assembly_seconds},
                {"entry_generations", st.entry_generations}};
}

inline AssemblyOptions assembly_options(const RunConfig& cfg) {
    AssemblyOptions o;
    o.aca_tol = cfg.aca_tol;
    o.recompress_factor = cfg.recompress_factor;
    o.q = cfg.q;
    o.threads = cfg.threads;
    o.extracted = cfg.extracted;
    o.farfield_only = cfg.farfield_only;
    return o;
}

inline std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

template <class F>
double median_of(int reps, F&& run, double* mean = nullptr) {
    std::vector<double> times;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        run();
        times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(times.begin(), times.end());
    if (mean) {
        double s = 0.0;
        for (double t : times) s += t;
        *mean = s / times.size();
    }
    return times[times.size() / 2];
}

} // namespace detail

inline int cmd_assemble(const RunConfig& cfg, std::ostream& console = std::cout) {
    cfg.validate();
    Problem p = setup_problem(cfg);
    const KernelKind kind = kernel_kind_from_string(cfg.kernel);
    const AssemblyOptions opts = detail::assembly_options(cfg);

    if (!cfg.nlogn_levels.empty()) {
        // N-sweep at fixed kappa*h: extracted far-field construction
        const std::string csv_path = cfg.csv.empty() ? "nlogn.csv" : cfg.csv;
        std::ofstream csv(csv_path);
        csv << "# " << version_string << "\n# config: " << cfg.to_json().dump() << "\n";
        csv << "n,memory_bytes,seconds,mean_rank,max_rank\n";
        for (double level_d : detail::parse_list(cfg.nlogn_levels)) {
            const int level = static_cast<int>(level_d);
            RunConfig lc = cfg;
            lc.sphere_level = level;
            lc.mesh_path.clear();
            Problem lp = setup_problem(lc);
            double h = 0.0;
            for (const auto& pan : lp.pans) h = std::max(h, pan.diameter);
            const double kappa = cfg.kappa_h / h;
            AssemblyOptions lo = opts;
            lo.extracted = true;
            lo.farfield_only = true;
            const HMatrix hm = HMatrix::assemble(lp.mesh, lp.pans, lp.tree, kind,
                                                 Wavenumber(kappa), lo);
            const auto st = hm.stats();
            csv << lp.mesh.num_triangles() << ',' << st.farfield_bytes << ','
                << st.assembly_seconds << ',' << st.mean_far_rank << ',' << st.max_far_rank
                << "\n";
        }
        json report{{"command", "assemble"}, {"mode", "nlogn_sweep"}, {"csv", csv_path}};
        detail::emit(detail::with_provenance(report, cfg), cfg.out, console);
        return 0;
    }

    if (!cfg.sweep.empty()) {
        const std::string csv_path = cfg.csv.empty() ? "sweep.csv" : cfg.csv;
        std::ofstream csv(csv_path);
        csv << "# " << version_string << "\n# config: " << cfg.to_json().dump() << "\n";
        csv << "kappa_dimless,memory_bytes,seconds,mean_rank,max_rank\n";
        for (double kd : detail::parse_list(cfg.sweep)) {
            const HMatrix hm = HMatrix::assemble(p.mesh, p.pans, p.tree, kind,
                                                 Wavenumber(kd / p.diam), opts);
            const auto st = hm.stats();
            csv << kd << ',' << (cfg.farfield_only ? st.farfield_bytes : st.payload_bytes)
                << ',' << st.assembly_seconds << ',' << st.mean_far_rank << ','
                << st.max_far_rank << "\n";
        }
        json report{{"command", "assemble"}, {"mode", "kappa_sweep"}, {"csv", csv_path}};
        detail::emit(detail::with_provenance(report, cfg), cfg.out, console);
        return 0;
    }

    const double kappa = cfg.kappa_dimless / p.diam;
    const HMatrix hm = HMatrix::assemble(p.mesh, p.pans, p.tree, kind, Wavenumber(kappa), opts);
    if (!cfg.save.empty()) hm.save(cfg.save);
    json report{{"command", "assemble"},
                {"n", p.mesh.num_triangles()},
                {"kappa", kappa},
                {"kappa_dimless", cfg.kappa_dimless},
                {"diameter", p.diam},
                {"stats", detail::stats_json(hm.stats())}};
    detail::emit(detail::with_provenance(report, cfg), cfg.out, console);
    return 0;
}

inline int cmd_compact(const RunConfig& cfg, std::ostream& console = std::cout) {
    cfg.validate();
    Problem p = setup_problem(cfg);
    const KernelKind kind = kernel_kind_from_string(cfg.kernel);
    const SampleGrid grid = SampleGrid::chebyshev(cfg.range_a / p.diam, cfg.range_b / p.diam,
                                                  cfg.nodes, cfg.heldout);
    CompactAssemblyOptions opts;
    opts.build.tol = cfg.tensor_tol;
    opts.build.aca_tol = cfg.aca_tol;
    opts.build.aaa_tol = cfg.effective_aaa_tol();
    opts.build.max_degree = cfg.max_degree;
    opts.build.seed = cfg.seed;
    opts.q = cfg.q;
    opts.threads = cfg.threads;
    opts.subset_fraction = cfg.subset_fraction;

    CompactBuildReport build_report;
    const CompactHRep rep =
        build_compact_hrep(p.mesh, p.pans, *p.tree, kind, grid, opts, &build_report);
    if (!cfg.save.empty()) serialize(rep, cfg.save);

    json report{{"command", "compact"},
                {"n", p.mesh.num_triangles()},
                {"interval", {grid.a, grid.b}},
                {"interval_dimless", {cfg.range_a, cfg.range_b}},
                {"blocks", build_report.blocks_total},
                {"blocks_rank_capped", build_report.blocks_rank_capped},
                {"max_tensor_rank", build_report.max_tensor_rank},
                {"mean_tensor_rank", build_report.mean_tensor_rank},
                {"memory_bytes", build_report.payload_bytes},
                {"build_seconds", build_report.seconds},
                {"kernel_evals", build_report.kernel_evals},
                {"container", cfg.save}};

    if (!cfg.skip_errors) {
        GalerkinEntry eval(p.mesh, p.pans, kind, cfg.q);
        ErrorOptions eopts;
        eopts.seed = cfg.seed;
        eopts.threads = cfg.threads;
        const ErrorReport errs =
            compute_errors(rep, quadrature_oracle(eval, rep), grid.heldout, eopts);
        report["err_f"] = errs.err_f;
        report["err_inf"] = errs.err_inf;
        report["heldout_kappas"] = errs.kappas;
    }
    detail::emit(detail::with_provenance(report, cfg), cfg.out, console);
    return 0;
}

inline int cmd_reconstruct(const RunConfig& cfg, std::ostream& console = std::cout) {
    cfg.validate();
    if (cfg.container.empty()) throw std::invalid_argument("reconstruct needs --container");
    Problem p = setup_problem(cfg);
    const CompactHRep rep = deserialize(cfg.container);
    const double kappa_dimless =
        cfg.kappa_dimless > 0.0 ? cfg.kappa_dimless : 0.9 * cfg.range_b;
    if (!(kappa_dimless > 0.0)) throw std::invalid_argument("reconstruct: kappa must be > 0");
    const double kappa = kappa_dimless / p.diam;

    ReconstructOptions ropts;
    ropts.tol = cfg.aca_tol;
    ropts.with_nearfield = cfg.with_nearfield;
    ropts.with_phase = cfg.with_phase;
    ropts.q = cfg.q;
    ropts.threads = cfg.threads;

    ReconstructionReport rec;
    HMatrix hm;
    double mean_r = 0.0;
    const double time_r = detail::median_of(
        cfg.timing_reps,
        [&] { hm = reconstruct_hmatrix(rep, p.mesh, p.pans, p.tree, kappa, ropts, &rec); },
        &mean_r);

    // the same far-field blocks assembled directly, extracted and plain
    AssemblyOptions aopts = detail::assembly_options(cfg);
    aopts.farfield_only = true;
    aopts.extracted = true;
    double mean_e = 0.0;
    const double time_e = detail::median_of(
        cfg.timing_reps,
        [&] {
            HMatrix::assemble(p.mesh, p.pans, p.tree, rep.kind, Wavenumber(kappa), aopts);
        },
        &mean_e);
    aopts.extracted = false;
    double mean_o = 0.0;
    const double time_o = detail::median_of(
        cfg.timing_reps,
        [&] {
            HMatrix::assemble(p.mesh, p.pans, p.tree, rep.kind, Wavenumber(kappa), aopts);
        },
        &mean_o);

    if (!cfg.save.empty()) hm.save(cfg.save);

    std::int64_t entry_evals = 0;
    int max_rank = 0;
    double mean_rank = 0.0;
    for (const auto& b : rec.blocks) {
        entry_evals += b.entry_evals;
        max_rank = std::max(max_rank, b.rank);
        mean_rank += b.rank;
    }
    if (!rec.blocks.empty()) mean_rank /= static_cast<double>(rec.blocks.size());

    json report{{"command", "reconstruct"},
                {"kappa", kappa},
                {"kappa_dimless", kappa_dimless},
                {"extrapolated", rec.extrapolated},
                {"time_r_median", time_r},
                {"time_r_mean", mean_r},
                {"time_e_median", time_e},
                {"time_e_mean", mean_e},
                {"time_o_median", time_o},
                {"time_o_mean", mean_o},
                {"speedup_vs_extracted", time_e / time_r},
                {"speedup_vs_plain", time_o / time_r},
                {"farfield_seconds", rec.farfield_seconds},
                {"nearfield_seconds", rec.nearfield_seconds},
                {"phase_seconds", rec.phase_seconds},
                {"blocks", rec.blocks.size()},
                {"entry_evals", entry_evals},
                {"mean_rank", mean_rank},
                {"max_rank", max_rank},
                {"stats", detail::stats_json(hm.stats())}};
    detail::emit(detail::with_provenance(report, cfg), cfg.out, console);
    return 0;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& console = std::cout) {
    cfg.validate();
    Problem p = setup_problem(cfg);
    if (p.mesh.num_triangles() > 4096)
        throw std::invalid_argument("verify: dense oracle limited to 4096 DOFs");
    const KernelKind kind = kernel_kind_from_string(cfg.kernel);
    const double kappa = cfg.kappa_dimless / p.diam;
    const GalerkinEntry eval(p.mesh, p.pans, kind, cfg.q);

    int failures = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail_msg) {
        console << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail_msg << "\n";
        if (!ok) ++failures;
    };

    // H-matrix vs dense oracle
    const Eigen::MatrixXcd dense = assemble_dense(eval, kappa, false);
    {
        const HMatrix hm = HMatrix::assemble(p.mesh, p.pans, p.tree, kind, Wavenumber(kappa),
                                             detail::assembly_options(cfg));
        const double err = (hm.to_dense() - dense).norm() / dense.norm();
        std::ostringstream msg;
        msg << "relative error " << err << " (budget " << 10.0 * cfg.aca_tol << ")";
        check("dense_oracle", err <= 10.0 * cfg.aca_tol, msg.str());
    }

    // Hadamard identity on far-field blocks
    {
        AssemblyOptions eo = detail::assembly_options(cfg);
        eo.extracted = true;
        const HMatrix ex =
            HMatrix::assemble(p.mesh, p.pans, p.tree, kind, Wavenumber(kappa), eo);
        const Eigen::MatrixXcd dense_ex = assemble_dense(eval, kappa, true, p.tree.get());
        double worst = 0.0;
        std::mt19937 rng(cfg.seed + 1);
        for (const auto& leaf : ex.leaves()) {
            if (!leaf.admissible) continue;
            std::uniform_int_distribution<int> pr(0, leaf.row_size - 1),
                pc(0, leaf.col_size - 1);
            double diff2 = 0.0, ref2 = 0.0;
            for (int t = 0; t < 100; ++t) {
                const int li = pr(rng), lj = pc(rng);
                const int i = ex.row_dof(leaf.row_begin + li);
                const int j = ex.col_dof(leaf.col_begin + lj);
                const Complex bh = ex.leaf_entry(leaf, li, lj);
                diff2 += std::norm(eval.phase(i, j, kappa) * bh - dense(i, j));
                ref2 += std::norm(dense(i, j));
            }
            if (ref2 > 0.0) worst = std::max(worst, std::sqrt(diff2 / ref2));
        }
        std::ostringstream msg;
        msg << "worst sampled block error " << worst;
        check("hadamard_identity", worst <= 20.0 * 2.0 * (cfg.aca_tol + cfg.aca_tol), msg.str());
    }

    // compact representation on held-out wavenumbers
    {
        const SampleGrid grid = SampleGrid::chebyshev(cfg.range_a / p.diam,
                                                      cfg.range_b / p.diam, cfg.nodes,
                                                      cfg.heldout);
        CompactAssemblyOptions copts;
        copts.build.tol = cfg.tensor_tol;
        copts.build.aca_tol = cfg.aca_tol;
        copts.build.aaa_tol = cfg.effective_aaa_tol();
        copts.build.max_degree = cfg.max_degree;
        copts.build.seed = cfg.seed;
        copts.q = cfg.q;
        copts.threads = cfg.threads;
        const CompactHRep rep =
            build_compact_hrep(p.mesh, p.pans, *p.tree, kind, grid, copts);
        if (rep.blocks.empty()) {
            check("compact_heldout", false, "no admissible blocks in the partition");
        } else {
            ErrorOptions eopts;
            eopts.seed = cfg.seed;
            const ErrorReport errs =
                compute_errors(rep, quadrature_oracle(eval, rep), grid.heldout, eopts);
            std::ostringstream msg;
            msg << "Err_F " << errs.err_f << " Err_inf " << errs.err_inf;
            check("compact_heldout",
                  errs.err_f <= 5.0 * cfg.tensor_tol && errs.err_inf <= 10.0 * cfg.tensor_tol,
                  msg.str());
        }
    }

    // achieved dense error decreases with the ACA tolerance
    {
        std::vector<double> errors;
        for (double tol : {1e-3, 1e-4, 1e-5, 1e-6}) {
            AssemblyOptions o = detail::assembly_options(cfg);
            o.aca_tol = tol;
            const HMatrix hm =
                HMatrix::assemble(p.mesh, p.pans, p.tree, kind, Wavenumber(kappa), o);
            errors.push_back((hm.to_dense() - dense).norm() / dense.norm());
        }
        bool monotone = true;
        for (std::size_t i = 1; i < errors.size(); ++i)
            if (errors[i] > errors[i - 1]) monotone = false;
        std::ostringstream msg;
        for (double e : errors) msg << e << " ";
        check("tolerance_sweep_monotone", monotone, msg.str());
    }

    // container fingerprint check when one is supplied
    if (!cfg.container.empty()) {
        bool ok = false;
        std::string msg;
        try {
            const CompactHRep rep = deserialize(cfg.container);
            ok = rep.mesh_fp == mesh_fingerprint(p.mesh) &&
                 rep.tree_fp == tree_fingerprint(*p.tree);
            msg = ok ? "fingerprints match" : "fingerprint mismatch against this mesh/tree";
        } catch (const std::exception& err) {
            msg = err.what();
        }
        check("container_fingerprint", ok, msg);
    }

    console << (failures == 0 ? "verify: all checks passed\n"
                              : "verify: " + std::to_string(failures) + " check(s) failed\n");
    return failures == 0 ? 0 : 1;
}

inline int run(std::vector<std::string> args, std::ostream& console = std::cout) {
    CLI::App app{"Helmholtz BEM H-matrices with frequency extraction and a compact "
                 "rational-in-kappa representation"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    RunConfig cfg;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--mesh", cfg.mesh_path, "ASCII OFF mesh file");
        cmd->add_option("--sphere-level", cfg.sphere_level, "icosphere subdivision level");
        cmd->add_option("--kernel", cfg.kernel, "slp|dlp");
        cmd->add_option("--eta", cfg.eta, "admissibility separation parameter");
        cmd->add_option("--adm", cfg.adm, "admissibility variant: min|max");
        cmd->add_option("--q", cfg.q, "quadrature order");
        cmd->add_option("--aca-tol", cfg.aca_tol, "ACA+ stopping tolerance");
        cmd->add_option("--recompress-factor", cfg.recompress_factor,
                        "recompression eps = factor * aca-tol");
        cmd->add_option("--n-min", cfg.n_min, "cluster leaf size");
        cmd->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
        cmd->add_option("--seed", cfg.seed, "RNG seed for sampled estimators");
        cmd->add_option("--out", cfg.out, "JSON report path (stdout if omitted)");
    };

    auto* assemble = app.add_subcommand("assemble", "assemble an H-matrix (plain or extracted)");
    add_common(assemble);
    assemble->add_option("--kappa", cfg.kappa_dimless, "dimensionless wavenumber kappa*diam");
    assemble->add_flag("--extracted", cfg.extracted, "assemble the extracted operator B-hat");
    assemble->add_flag("--farfield-only", cfg.farfield_only, "skip near-field payloads");
    assemble->add_option("--save", cfg.save, "write the H-matrix container");
    assemble->add_option("--sweep", cfg.sweep, "comma list of dimensionless kappas -> CSV");
    assemble->add_option("--nlogn-levels", cfg.nlogn_levels,
                         "comma list of sphere levels for the N log N sweep");
    assemble->add_option("--kappa-h", cfg.kappa_h, "fixed kappa*h for the N sweep");
    assemble->add_option("--csv", cfg.csv, "CSV output path for sweeps");

    auto* compact = app.add_subcommand("compact", "build the compact frequency representation");
    add_common(compact);
    std::vector<double> range_opt;
    compact->add_option("--range", range_opt, "dimensionless wavenumber range a b")
        ->expected(2);
    compact->add_option("--tensor-tol", cfg.tensor_tol, "tensor stopping tolerance");
    compact->add_option("--aaa-tol", cfg.aaa_tol, "inner AAA tolerance (default tensor-tol/10)");
    compact->add_option("--nodes", cfg.nodes, "number of Chebyshev sample nodes");
    compact->add_option("--heldout", cfg.heldout, "number of held-out validation nodes");
    compact->add_option("--max-degree", cfg.max_degree, "maximal rational degree");
    compact->add_option("--subset-fraction", cfg.subset_fraction,
                        "build only this fraction of admissible blocks");
    compact->add_option("--save", cfg.save, "compact container output path");
    compact->add_flag("--skip-errors", cfg.skip_errors, "skip the held-out error estimate");

    auto* reconstruct = app.add_subcommand("reconstruct",
                                           "rebuild a per-kappa H-matrix from a container");
    add_common(reconstruct);
    reconstruct->add_option("--container", cfg.container, "compact container input")->required();
    reconstruct->add_option("--kappa", cfg.kappa_dimless,
                            "dimensionless wavenumber (default 0.9*b)");
    reconstruct->add_option("--range", range_opt, "dimensionless range used for the default kappa")
        ->expected(2);
    reconstruct->add_flag("--with-nearfield", cfg.with_nearfield,
                          "assemble near-field blocks by quadrature");
    reconstruct->add_flag("--no-phase", [&cfg](std::int64_t) { cfg.with_phase = false; },
                          "leave phase application off");
    reconstruct->add_option("--reps", cfg.timing_reps, "timing repetitions (median reported)");
    reconstruct->add_option("--save", cfg.save, "write the reconstructed H-matrix container");

    auto* verify = app.add_subcommand("verify", "dense-oracle verification suite (<= 4096 DOFs)");
    add_common(verify);
    verify->add_option("--kappa", cfg.kappa_dimless, "dimensionless wavenumber");
    verify->add_option("--range", range_opt, "dimensionless range for the compact check")
        ->expected(2);
    verify->add_option("--tensor-tol", cfg.tensor_tol, "tensor stopping tolerance");
    verify->add_option("--nodes", cfg.nodes, "number of Chebyshev sample nodes");
    verify->add_option("--heldout", cfg.heldout, "number of held-out validation nodes");
    verify->add_option("--max-degree", cfg.max_degree, "maximal rational degree");
    verify->add_option("--container", cfg.container, "container to fingerprint-check");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (range_opt.size() == 2) {
        cfg.range_a = range_opt[0];
        cfg.range_b = range_opt[1];
    }
    if (reconstruct->parsed() && reconstruct->count("--kappa") == 0)
        cfg.kappa_dimless = 0.0;  // cmd_reconstruct defaults to 0.9 * range_b

    try {
        if (assemble->parsed()) return cmd_assemble(cfg, console);
        if (compact->parsed()) return cmd_compact(cfg, console);
        if (reconstruct->parsed()) return cmd_reconstruct(cfg, console);
        if (verify->parsed()) return cmd_verify(cfg, console);
    } catch (const std::exception& err) {
        console << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

} // namespace fxbem::cli
