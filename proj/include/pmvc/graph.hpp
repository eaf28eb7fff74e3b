#pragma once

#include "pmvc/dataio.hpp"

#include <cstdint>
#include <vector>

namespace pmvc {

/// Per-view, per-sample ordered nearest-neighbour lists. Entries for samples
/// available in a view are native k-NN results; entries for missing samples
/// are transferred from the views where the sample exists.
struct RelationGraph {
    enum class Origin : std::uint8_t { Native, Transferred };

    int K = 0;
    std::vector<std::vector<std::vector<int>>> neighbors;  // [view][sample] -> ordered ids
    std::vector<std::vector<Origin>> origin;               // [view][sample]

    int num_views() const { return static_cast<int>(neighbors.size()); }
    int num_samples() const { return neighbors.empty() ? 0 : static_cast<int>(neighbors[0].size()); }
};

/// K nearest available samples to row i by Euclidean distance, ascending,
/// ties broken by lower index. Returns fewer when fewer are available.
std::vector<int> knn_available(const Matrix& x, const std::vector<std::uint8_t>& avail, int i, int k);

/// Neighbour list for sample i missing in view v, built by transferring the
/// native lists of the views where i exists: drop neighbours unavailable in
/// v, merge source lists by interleaving rank positions, dedupe keeping the
/// first occurrence, truncate to K. Falls back to the nearest available
/// sample in a source view's extended list when the merge comes up empty.
std::vector<int> transfer_graph(const RelationGraph& graphs, const MultiViewDataset& dataset,
                                int v, int i);

/// Native lists for available samples, transferred lists for missing ones.
RelationGraph build_initial_graphs(const MultiViewDataset& dataset, int k);

/// k-NN over representation rows; every sample participates in every view.
RelationGraph build_learned_graphs(const std::vector<Matrix>& z, int k);

/// Fraction of (sample, neighbour) edges whose endpoints carry different
/// labels, over all views.
double graph_error(const RelationGraph& graph, const std::vector<int>& labels);

/// CSV dump, one row per edge: view,sample,rank,neighbor,origin.
void dump_graph_csv(const RelationGraph& graph, const std::filesystem::path& file);

}  // namespace pmvc
