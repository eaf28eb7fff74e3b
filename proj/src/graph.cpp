#include "pmvc/graph.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace pmvc {

namespace {

// Full ascending (distance, index) order of available samples around row i.
// k < 0 returns the complete ordering.
std::vector<int> knn_ordered(const Matrix& x, const std::vector<std::uint8_t>& avail, int i, int k) {
    const int n = static_cast<int>(x.rows());
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n);
    for (int j = 0; j < n; ++j) {
        if (j == i || !avail[j]) continue;
        cand.emplace_back((x.row(j) - x.row(i)).squaredNorm(), j);
    }
    const int take = k < 0 ? static_cast<int>(cand.size())
                           : std::min<int>(k, static_cast<int>(cand.size()));
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
    std::vector<int> out(take);
    for (int t = 0; t < take; ++t) out[t] = cand[t].second;
    return out;
}

std::vector<std::uint8_t> avail_column(const MultiViewDataset& ds, int v) {
    std::vector<std::uint8_t> a(ds.num_samples());
    for (int i = 0; i < ds.num_samples(); ++i) a[i] = ds.mask(i, v) == 1 ? 1 : 0;
    return a;
}

}  // namespace

std::vector<int> knn_available(const Matrix& x, const std::vector<std::uint8_t>& avail, int i,
                               int k) {
    if (i < 0 || i >= static_cast<int>(x.rows())) throw std::runtime_error("knn: index out of range");
    if (!avail[i]) throw std::runtime_error("knn: sample not available in this view");
    if (k < 1) throw std::runtime_error("knn: K must be >= 1");
    return knn_ordered(x, avail, i, k);
}

std::vector<int> transfer_graph(const RelationGraph& graphs, const MultiViewDataset& dataset,
                                int v, int i) {
    if (dataset.available(i, v))
        throw std::runtime_error("transfer_graph: sample is available in target view");
    std::vector<int> sources;
    for (int w = 0; w < dataset.num_views(); ++w)
        if (w != v && dataset.available(i, w)) sources.push_back(w);
    if (sources.empty()) throw std::runtime_error("transfer_graph: sample available nowhere");

    // Filter each source list down to neighbours that exist in view v.
    std::vector<std::vector<int>> filtered;
    for (int w : sources) {
        std::vector<int> f;
        for (int j : graphs.neighbors[w][i])
            if (dataset.available(j, v)) f.push_back(j);
        filtered.push_back(std::move(f));
    }

    std::vector<int> merged;
    std::vector<char> seen(dataset.num_samples(), 0);
    std::size_t max_len = 0;
    for (const auto& f : filtered) max_len = std::max(max_len, f.size());
    for (std::size_t rank = 0; rank < max_len && static_cast<int>(merged.size()) < graphs.K; ++rank) {
        for (const auto& f : filtered) {
            if (rank >= f.size()) continue;
            const int j = f[rank];
            if (!seen[j]) {
                seen[j] = 1;
                merged.push_back(j);
                if (static_cast<int>(merged.size()) == graphs.K) break;
            }
        }
    }
    if (!merged.empty()) return merged;

    // Every transferred neighbour was missing in v: walk each source view's
    // full neighbour ordering until one survives the availability filter.
    const auto target_avail = avail_column(dataset, v);
    for (int w : sources) {
        const auto source_avail = avail_column(dataset, w);
        for (int j : knn_ordered(dataset.views[w], source_avail, i, -1))
            if (target_avail[j]) return {j};
    }
    throw std::runtime_error("transfer_graph: no sample available in target view");
}

RelationGraph build_initial_graphs(const MultiViewDataset& dataset, int k) {
    if (k < 1) throw std::runtime_error("graph K must be >= 1");
    const int n = dataset.num_samples();
    const int v = dataset.num_views();
    RelationGraph g;
    g.K = k;
    g.neighbors.assign(v, std::vector<std::vector<int>>(n));
    g.origin.assign(v, std::vector<RelationGraph::Origin>(n, RelationGraph::Origin::Native));

    for (int w = 0; w < v; ++w) {
        const auto avail = avail_column(dataset, w);
        int avail_count = 0;
        for (auto a : avail) avail_count += a;
        if (avail_count < 2)
            throw std::runtime_error("view " + std::to_string(w) +
                                     " has fewer than 2 available samples");
        for (int i = 0; i < n; ++i)
            if (avail[i]) g.neighbors[w][i] = knn_ordered(dataset.views[w], avail, i, k);
    }
    for (int w = 0; w < v; ++w) {
        for (int i = 0; i < n; ++i) {
            if (dataset.available(i, w)) continue;
            g.neighbors[w][i] = transfer_graph(g, dataset, w, i);
            g.origin[w][i] = RelationGraph::Origin::Transferred;
        }
    }
    return g;
}

RelationGraph build_learned_graphs(const std::vector<Matrix>& z, int k) {
    if (k < 1) throw std::runtime_error("graph K must be >= 1");
    if (z.empty()) throw std::runtime_error("no representations");
    const int n = static_cast<int>(z[0].rows());
    RelationGraph g;
    g.K = k;
    g.neighbors.assign(z.size(), std::vector<std::vector<int>>(n));
    g.origin.assign(z.size(), std::vector<RelationGraph::Origin>(n, RelationGraph::Origin::Native));
    const std::vector<std::uint8_t> all(n, 1);
    for (std::size_t w = 0; w < z.size(); ++w) {
        if (!z[w].allFinite()) throw std::runtime_error("non-finite representation values");
        if (z[w].rows() != n) throw std::runtime_error("representation row count mismatch");
        for (int i = 0; i < n; ++i) g.neighbors[w][i] = knn_ordered(z[w], all, i, k);
    }
    return g;
}

double graph_error(const RelationGraph& graph, const std::vector<int>& labels) {
    if (labels.empty()) throw std::runtime_error("graph_error requires labels");
    long edges = 0;
    long wrong = 0;
    for (int w = 0; w < graph.num_views(); ++w) {
        for (int i = 0; i < graph.num_samples(); ++i) {
            for (int j : graph.neighbors[w][i]) {
                ++edges;
                if (labels[i] != labels[j]) ++wrong;
            }
        }
    }
    return edges == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(edges);
}

void dump_graph_csv(const RelationGraph& graph, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << "view,sample,rank,neighbor,origin\n";
    for (int w = 0; w < graph.num_views(); ++w) {
        for (int i = 0; i < graph.num_samples(); ++i) {
            const auto& nb = graph.neighbors[w][i];
            for (std::size_t r = 0; r < nb.size(); ++r)
                out << w << ',' << i << ',' << r << ',' << nb[r] << ','
                    << (graph.origin[w][i] == RelationGraph::Origin::Native ? "native"
                                                                            : "transferred")
                    << '\n';
        }
    }
}

}  // namespace pmvc
