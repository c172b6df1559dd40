#pragma once

#include <string>
#include <vector>

#include "sts/spectral.hpp"

namespace sts {

struct SpectralRequest {
    bool vectors = false;
    bool check_convergence = false;
    /// every eigenvalue is required (traces, pairing); refuse partial mode
    bool need_full = false;
    /// blocks up to this size are solved densely
    std::size_t dense_limit = 3000;
    Tolerances tol;
    LowSpectrumOptions low;
};

/// Spectrum of one model at truncation N with its convergence verdict and classification.
struct SpectralRun {
    std::string mode;  ///< "dense" or "partial"
    int truncation = 0;
    Spectrum values;
    std::vector<EigenSystem> systems;          ///< dense mode with vectors only
    std::vector<std::vector<char>> converged;  ///< empty unless checked
    std::vector<std::vector<char>> checked;    ///< which eigenvalues took part in the check
    std::string convergence_method = "none";
    double scale = 1.0;
    Classification cls;
};

inline std::size_t max_block_size(const BasisLayout& l)
{
    std::size_t m = 0;
    for (int k = 0; k <= l.dimension(); ++k) m = std::max(m, l.size(k));
    return m;
}

inline SpectralRun run_spectrum(const BlockBuilder& build, const BasisLayout& layout, const SpectralRequest& req)
{
    req.tol.validate();
    SpectralRun run;
    const int N = layout.truncation();
    run.truncation = N;
    const bool dense = max_block_size(layout) <= req.dense_limit;
    if (dense) {
        run.mode = "dense";
        const SeoBlocks h = build(N);
        EigenOptions opt;
        opt.vectors = req.vectors;
        run.systems = eigensolve_all(h, opt);
        run.values = values_of(run.systems);
        if (!req.vectors) run.systems.clear();
    } else {
        require(!req.need_full, ErrorKind::config,
                "a full spectrum is needed but blocks of size " + std::to_string(max_block_size(layout)) +
                    " exceed the dense limit " + std::to_string(req.dense_limit) + "; lower the truncation");
        require(!req.vectors, ErrorKind::config,
                "eigenvectors are needed but the truncation is too large for a dense solve");
        require(N - req.low.coarse_offset >= 1, ErrorKind::config, "truncation too small for partial mode");
        run.mode = "partial";
        run.values = low_spectrum(build, N, req.low);
    }
    run.scale = std::max(1.0, spectral_radius(run.values));

    if (req.check_convergence) {
        const BasisLayout fine = layout.with_truncation(N + 2);
        if (max_block_size(fine) <= req.dense_limit) {
            run.convergence_method = "dense re-solve at N+2";
            const Spectrum refined = spectrum_of(build(N + 2));
            for (std::size_t k = 0; k < run.values.size(); ++k) {
                run.converged.push_back(convergence_flags(run.values[k], refined[k], req.tol.tol_converge));
                run.checked.emplace_back(static_cast<std::size_t>(run.values[k].size()), 1);
            }
        } else {
            // only the ground eigenvalue (and its mirror) is refined; the rest stays unchecked
            run.convergence_method = "ground refinement at N+2";
            const GroundState g = ground_state(run.values, req.tol.tol_zero * run.scale);
            const SeoBlocks h2 = build(N + 2);
            const cd refined = nearest_eigenvalue(h2[g.degree], g.value);
            for (std::size_t k = 0; k < run.values.size(); ++k) {
                run.converged.emplace_back(static_cast<std::size_t>(run.values[k].size()), 0);
                run.checked.emplace_back(static_cast<std::size_t>(run.values[k].size()), 0);
            }
            const DenseVector& v = run.values[static_cast<std::size_t>(g.degree)];
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                const bool same = i == g.index;
                const bool mirror = std::abs(v[i] - std::conj(g.value)) <= 1e-12 * run.scale &&
                                    is_real_operator(h2[g.degree]);
                if (!same && !mirror) continue;
                const cd target = same ? refined : std::conj(refined);
                run.checked[static_cast<std::size_t>(g.degree)][static_cast<std::size_t>(i)] = 1;
                run.converged[static_cast<std::size_t>(g.degree)][static_cast<std::size_t>(i)] =
                    relative_gap(v[i], target) <= req.tol.tol_converge;
            }
        }
    }
    run.cls = classify(run.values, run.converged, run.scale, req.tol);
    return run;
}

}  // namespace sts
