#pragma once

#include "pmvc/common.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace pmvc {

/// Partial multi-view dataset. Views are N x d_v matrices; cells of
/// unavailable rows hold a quiet NaN sentinel. mask(i, v) == 1 iff sample i
/// exists in view v.
struct MultiViewDataset {
    std::vector<Matrix> views;
    MaskMatrix mask;
    std::optional<std::vector<int>> labels;
    int num_clusters = 0;
    // Complete matrices kept by the synthetic generator, used only for
    // imputation scoring.
    std::vector<Matrix> ground_truth_views;

    int num_samples() const { return views.empty() ? 0 : static_cast<int>(views[0].rows()); }
    int num_views() const { return static_cast<int>(views.size()); }
    int dim(int v) const { return static_cast<int>(views[v].cols()); }
    bool available(int i, int v) const { return mask(i, v) == 1; }
    bool has_labels() const { return labels.has_value(); }
    bool has_ground_truth() const { return !ground_truth_views.empty(); }

    /// Throws std::runtime_error on any structural invariant violation.
    void validate() const;
};

struct MaskSpec {
    enum class Regime { PerViewRemoval, TwoViewPaired };
    Regime regime = Regime::PerViewRemoval;
    double p = 0.0;  // percentage in [0, 100]
    std::uint64_t seed = 0;
};

MaskSpec::Regime parse_mask_regime(const std::string& name);
std::string mask_regime_name(MaskSpec::Regime regime);

/// N x V binary availability matrix, deterministic in (n, v, spec).
/// PerViewRemoval zeroes exactly round(n*p/100) entries per view with every
/// row keeping at least one 1; TwoViewPaired (v == 2 only) makes exactly
/// round(n*p/100) rows fully paired and the rest single-view.
MaskMatrix generate_mask(int n, int v, const MaskSpec& spec);

/// Gaussian blobs with shared cluster membership across views, masked per
/// `spec`. Complete matrices are retained in ground_truth_views.
MultiViewDataset generate_synthetic(int n, int v, int c, const std::vector<int>& dims,
                                    double separation, const MaskSpec& spec);

/// Per-feature min-max scaling to [0,1] using statistics over available rows
/// only; constant columns map to 0; missing cells stay NaN. Ground-truth
/// views, when present, are rescaled with the same statistics so imputation
/// errors are measured in the same units.
MultiViewDataset normalize(const MultiViewDataset& dataset);

/// Directory format: meta.txt (key=value), view_{v}.csv, mask.csv, optional
/// labels.csv and gt_view_{v}.csv. Missing cells are the literal token NaN.
MultiViewDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const MultiViewDataset& dataset, const std::filesystem::path& dir);

}  // namespace pmvc
