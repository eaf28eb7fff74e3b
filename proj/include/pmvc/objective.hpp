#pragma once

#include "pmvc/losses.hpp"
#include "pmvc/network.hpp"

#include <vector>

namespace pmvc {

/// Joint loss over one mini-batch: reconstruction against the initial graph
/// plus graph-contrastive and cross-view consistency terms over the current
/// relation graph. Neighbour representations are produced by a fresh forward
/// pass inside the same step, so gradients flow through them.
class BatchObjective {
public:
    struct Breakdown {
        double rec = 0;
        double wgc = 0;
        double cgc = 0;
        double total = 0;
    };

    /// `inputs[v]` are the N x d_v effective encoder inputs (features or
    /// surrogates). `initial` drives reconstruction targets; `contrastive`
    /// (P in stage one, Q in stage two) drives WGC/CGC neighbour slots.
    BatchObjective(const MultiViewDataset& dataset, const std::vector<Matrix>& inputs,
                   const RelationGraph& initial, const RelationGraph& contrastive,
                   std::vector<int> members, const LossWeights& weights, WgcDenominator wgc_mode,
                   bool wgc_include_missing);

    /// Loss value; accumulates parameter gradients when `grads` is non-null.
    Breakdown evaluate(const AutoencoderParams& params, ParamGrads* grads) const;

    int batch_size() const { return static_cast<int>(members_.size()); }
    long padded_slots() const { return padded_slots_; }

private:
    const MultiViewDataset& dataset_;
    const std::vector<Matrix>& inputs_;
    const RelationGraph& initial_;
    std::vector<int> members_;
    LossWeights weights_;
    WgcDenominator wgc_mode_;
    int k_ = 0;

    std::vector<int> active_ids_;               // sorted unique members + slot ids
    std::vector<int> pos_of_id_;                // sample id -> row in the active set
    std::vector<std::vector<int>> slots_;       // [view] -> M*K sample ids, cycled to K
    std::vector<std::vector<int>> wgc_active_;  // [view] -> anchor positions
    long padded_slots_ = 0;
};

}  // namespace pmvc
