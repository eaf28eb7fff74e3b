#pragma once

#include "pmvc/dataio.hpp"

#include <optional>
#include <vector>

namespace pmvc::eval {

struct KMeansResult {
    std::vector<int> labels;
    Matrix centers;  // C x d
    double inertia = 0;
};

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` runs by
/// (inertia, restart index). Deterministic given the seed.
KMeansResult kmeans_full(const Matrix& points, int c, std::uint64_t seed, int restarts = 10);
std::vector<int> kmeans(const Matrix& points, int c, std::uint64_t seed, int restarts = 10);

/// Clustering accuracy under the optimal one-to-one cluster-to-class
/// assignment (Hungarian algorithm on the confusion matrix).
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

/// Normalized mutual information with geometric-mean normalization.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);

/// Adjusted Rand index.
double ari(const std::vector<int>& pred, const std::vector<int>& truth);

/// Per-view RMSE over missing cells between `imputed[v]` (full N x d_v
/// matrices) and the ground-truth views, divided by the ground-truth value
/// range of the view. Views without missing cells report no value.
std::vector<std::optional<double>> nrmse(const MultiViewDataset& dataset,
                                         const std::vector<Matrix>& imputed);

/// Column-mean imputation baseline: every missing cell becomes the mean of
/// its feature column over available rows.
std::vector<Matrix> mean_impute(const MultiViewDataset& dataset);

/// Exact minimum-cost assignment on a square cost matrix; returns the column
/// assigned to each row.
std::vector<int> hungarian(const Matrix& cost);

}  // namespace pmvc::eval
