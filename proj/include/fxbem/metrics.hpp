#pragma once

#include "fxbem/compact.hpp"

#include <functional>

namespace fxbem {

struct BlockErrorContribution {
    std::int64_t block_id = -1;
    double diff2 = 0.0;    // sampled squared Frobenius error, scaled to the block
    double ref2 = 0.0;     // sampled squared Frobenius norm of the oracle
    double diff_max = 0.0; // max sampled |rep - oracle|
    double ref_max = 0.0;  // max sampled |oracle|
};

struct ErrorReport {
    double err_f = 0.0;
    double err_inf = 0.0;
    std::vector<double> kappas;           // held-out wavenumbers used
    std::vector<std::int64_t> block_ids;  // subset A
    std::vector<BlockErrorContribution> blocks;  // aggregated over kappas
};

// oracle(block, local i, local j, kappa) -> the reference B-hat entry
using BlockEntryOracle =
    std::function<Complex(const CompactBlock&, int, int, double)>;

struct ErrorOptions {
    double subset_fraction = 1.0;  // leading fraction of blocks forming A
    std::int64_t samples_override = 0;  // 0: m = R_k (#t + #s) per block
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

// Sampled relative errors over held-out wavenumbers:
//   Err_F^2 = sum_kappa ||rep - oracle||_{F,A}^2 / sum_kappa ||oracle||_{F,A}^2
//   Err_inf = max_kappa ||rep - oracle||_{max,A} / max_kappa ||oracle||_{max,A}
// with the blockwise sampled norms of the norm estimator.
inline ErrorReport compute_errors(const CompactHRep& rep, const BlockEntryOracle& oracle,
                                  std::span<const double> heldout, const ErrorOptions& opts) {
    if (rep.blocks.empty()) throw std::invalid_argument("compute_errors: empty block subset");
    if (heldout.empty()) throw std::invalid_argument("compute_errors: empty held-out set");

    const int nA = std::max(
        1, static_cast<int>(std::ceil(opts.subset_fraction * rep.blocks.size())));
    const std::size_t count = std::min<std::size_t>(rep.blocks.size(), nA);

    ErrorReport out;
    out.kappas.assign(heldout.begin(), heldout.end());
    out.blocks.resize(count);

    parallel_for(count, opts.threads, [&](std::size_t n) {
        const CompactBlock& cb = rep.blocks[n];
        const int nt = cb.row_size, ns = cb.col_size;
        int max_rank = 1;
        for (const auto& s : cb.rep.snapshots) max_rank = std::max(max_rank, s.rank());
        const std::int64_t m = opts.samples_override > 0
                                   ? opts.samples_override
                                   : static_cast<std::int64_t>(max_rank) * (nt + ns);
        const std::int64_t total = static_cast<std::int64_t>(nt) * ns;
        const std::int64_t mm = std::min(m, total);
        const double scale = static_cast<double>(total) / static_cast<double>(mm);

        BlockErrorContribution contrib;
        contrib.block_id = cb.id;
        for (const double kappa : heldout) {
            const Eigen::VectorXcd mix = coefficient_vector(cb.rep, kappa);
            std::mt19937_64 rng(opts.seed ^ (0x9e3779b97f4a7c15ull * (cb.id + 1)) ^
                                std::bit_cast<std::uint64_t>(kappa));
            // one sample set per (block, kappa), shared by numerator and
            // denominator
            std::unordered_set<std::int64_t> chosen;
            if (mm >= total) {
                for (std::int64_t idx = 0; idx < total; ++idx) chosen.insert(idx);
            } else {
                for (std::int64_t t = total - mm; t < total; ++t) {
                    std::uniform_int_distribution<std::int64_t> pick(0, t);
                    const std::int64_t v = pick(rng);
                    if (!chosen.insert(v).second) chosen.insert(t);
                }
            }
            for (const std::int64_t idx : chosen) {
                const int i = static_cast<int>(idx % nt);
                const int j = static_cast<int>(idx / nt);
                const Complex approx = eval_entry_with(cb.rep, mix, i, j);
                const Complex exact = oracle(cb, i, j, kappa);
                contrib.diff2 += scale * std::norm(approx - exact);
                contrib.ref2 += scale * std::norm(exact);
                contrib.diff_max = std::max(contrib.diff_max, std::abs(approx - exact));
                contrib.ref_max = std::max(contrib.ref_max, std::abs(exact));
            }
        }
        out.blocks[n] = contrib;
    });

    double num2 = 0.0, den2 = 0.0, num_max = 0.0, den_max = 0.0;
    for (const auto& c : out.blocks) {
        out.block_ids.push_back(c.block_id);
        num2 += c.diff2;
        den2 += c.ref2;
        num_max = std::max(num_max, c.diff_max);
        den_max = std::max(den_max, c.ref_max);
    }
    out.err_f = den2 > 0.0 ? std::sqrt(num2 / den2) : 0.0;
    out.err_inf = den_max > 0.0 ? num_max / den_max : 0.0;
    return out;
}

// quadrature-backed oracle for the extracted far field
inline BlockEntryOracle quadrature_oracle(const GalerkinEntry& eval, const CompactHRep& rep) {
    return [&eval, &rep](const CompactBlock& cb, int li, int lj, double kappa) {
        const int i = rep.row_perm[cb.row_begin + li];
        const int j = rep.col_perm[cb.col_begin + lj];
        return eval.extracted_entry(i, j, kappa);
    };
}

} // namespace fxbem
