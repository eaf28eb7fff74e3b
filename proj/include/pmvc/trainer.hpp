#pragma once

#include "pmvc/losses.hpp"
#include "pmvc/network.hpp"
#include "pmvc/objective.hpp"

#include <filesystem>
#include <vector>

namespace pmvc {

struct TrainConfig {
    double alpha = 0.2;
    double beta = 0.2;
    int k = 5;
    int max_epochs = 2000;
    int stage2_start = 300;  // > max_epochs disables stage two
    double learning_rate = 0.01;
    int batch_size = 128;
    int q_rebuild_interval = 10;
    std::uint64_t seed = 0;

    bool enable_rec = true;
    bool enable_wgc = true;
    bool enable_cgc = true;
    WgcDenominator wgc_denominator = WgcDenominator::Literal;
    bool wgc_include_missing = true;

    std::vector<int> hidden = {256, 64};
    bool sigmoid_output = true;

    bool finetune = true;
    int finetune_epochs = 100;
    double finetune_lr = 0.001;

    bool early_stop = false;
    double tolerance = 1e-6;  // loss-plateau threshold over a 50-epoch window

    int checkpoint_interval = 0;  // epochs; 0 writes none
    std::filesystem::path checkpoint_dir;

    LossWeights weights() const {
        return LossWeights{alpha, beta, enable_rec, enable_wgc, enable_cgc};
    }
    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double rec = 0;
    double wgc = 0;
    double cgc = 0;
    double total = 0;
    double graph_error = std::numeric_limits<double>::quiet_NaN();
    bool used_q = false;
};

/// First-order Adam moments over the flattened parameters.
struct AdamState {
    Vector m;
    Vector v;
    long t = 0;
};

struct TrainState {
    ArchitectureSpec arch;
    AutoencoderParams params;
    AdamState opt;
    RelationGraph p;
    RelationGraph q;  // empty until stage two produces it
    bool has_q = false;
    std::vector<Matrix> inputs;  // effective encoder inputs per view
    int epoch = 0;
    std::vector<EpochStats> history;
    std::vector<double> finetune_history;
    long padded_slots = 0;
    long zero_norm_events = 0;
};

/// Adam update with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias
/// correction. Moments are lazily initialized to zero.
void optimizer_step(AutoencoderParams& params, const ParamGrads& grads, AdamState& state,
                    double learning_rate);

/// Two-stage training of the joint objective: epochs before stage2_start use
/// the initial graph for the contrastive terms, later epochs use graphs
/// rebuilt from the learned representations. Reconstruction always targets
/// the initial graph. Deterministic given (dataset, config).
TrainState train(const MultiViewDataset& dataset, const TrainConfig& config);

/// Common representation: element-wise sum of per-view representations.
Matrix fuse_representations(const std::vector<Matrix>& z);

/// Encode every sample in every view using the state's effective inputs.
std::vector<Matrix> full_representations(const AutoencoderParams& params,
                                         const std::vector<Matrix>& inputs);

/// Full autoencoder outputs per view (imputations for missing rows).
std::vector<Matrix> reconstruct_all(const AutoencoderParams& params,
                                    const std::vector<Matrix>& inputs);

/// Deep-embedded-clustering style fine-tune: Student-t soft assignments
/// against k-means-initialized centroids, sharpened targets refreshed every
/// epoch, KL(P||Q) minimized over network parameters and centroids.
TrainState fine_tune_kl(TrainState state, const MultiViewDataset& dataset,
                        const TrainConfig& config);

void write_history_csv(const std::vector<EpochStats>& history, const std::filesystem::path& file);

}  // namespace pmvc
