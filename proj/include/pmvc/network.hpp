#pragma once

#include "pmvc/dataio.hpp"
#include "pmvc/graph.hpp"

#include <filesystem>
#include <vector>

namespace pmvc {

enum class Activation : int { Linear = 0, Relu = 1, Sigmoid = 2 };

/// View-specific MLP autoencoder shapes. Encoder runs input -> hidden... ->
/// latent (linear); decoder mirrors the hidden widths in reverse and ends in
/// sigmoid when `sigmoid_output` (the default for min-max scaled data).
struct ArchitectureSpec {
    std::vector<int> input_dims;  // one per view
    std::vector<int> hidden = {256, 64};
    int latent_dim = 0;  // equals the cluster count
    bool sigmoid_output = true;

    int num_views() const { return static_cast<int>(input_dims.size()); }
    /// Layer widths of the encoder for view v: d_v, hidden..., latent.
    std::vector<int> encoder_widths(int v) const;
    /// Layer widths of the decoder for view v: latent, reversed hidden..., d_v.
    std::vector<int> decoder_widths(int v) const;
    void validate() const;
};

struct LayerParams {
    Matrix w;  // out x in
    Vector b;  // out
};

struct ViewAutoencoder {
    std::vector<LayerParams> encoder;
    std::vector<LayerParams> decoder;
};

struct AutoencoderParams {
    std::vector<ViewAutoencoder> views;
    bool sigmoid_output = true;  // decoder output activation, copied from the spec

    std::size_t parameter_count() const;
    /// Canonical flattening across views/layers; used by the optimizer and
    /// finite-difference checks.
    Vector flatten() const;
    void unflatten(const Vector& flat);
};

/// Glorot-uniform weights, zero biases; deterministic in the seed.
AutoencoderParams init_params(const ArchitectureSpec& spec, std::uint64_t seed);

/// Encoder input for sample i missing in view v: element-wise mean of its
/// transferred-graph neighbours' feature rows.
Vector surrogate_input(const MultiViewDataset& dataset, const RelationGraph& p, int v, int i);

/// N x d_v matrix of encoder inputs for view v: the feature row where the
/// sample is available, its surrogate otherwise.
Matrix effective_inputs(const MultiViewDataset& dataset, const RelationGraph& p, int v);

/// Layer activations recorded by a forward pass, consumed by backward.
struct ForwardCache {
    Matrix input;                     // rows = samples
    std::vector<Matrix> activations;  // post-activation per layer
    std::vector<Activation> acts;
};

Matrix encode(const AutoencoderParams& params, int v, const Matrix& x, ForwardCache* cache = nullptr);
Matrix decode(const AutoencoderParams& params, int v, const Matrix& z, ForwardCache* cache = nullptr);
Vector encode(const AutoencoderParams& params, int v, const Vector& x);
Vector decode(const AutoencoderParams& params, int v, const Vector& z);

/// Gradient accumulator shaped like AutoencoderParams.
struct ParamGrads {
    std::vector<ViewAutoencoder> views;

    static ParamGrads zeros_like(const AutoencoderParams& params);
    Vector flatten() const;
};

/// Backpropagate d(loss)/d(output) through view v's encoder or decoder,
/// accumulating parameter gradients; returns d(loss)/d(input).
Matrix encoder_backward(const AutoencoderParams& params, int v, const ForwardCache& cache,
                        const Matrix& dout, ParamGrads& grads);
Matrix decoder_backward(const AutoencoderParams& params, int v, const ForwardCache& cache,
                        const Matrix& dout, ParamGrads& grads);

/// Binary checkpoint holding the architecture and all parameters.
void save_checkpoint(const ArchitectureSpec& spec, const AutoencoderParams& params,
                     const std::filesystem::path& file);
void load_checkpoint(const std::filesystem::path& file, ArchitectureSpec& spec,
                     AutoencoderParams& params);

}  // namespace pmvc
