#include "pmvc/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pmvc {

namespace {

constexpr char kCheckpointMagic[8] = {'P', 'M', 'V', 'C', '-', 'A', 'E', '1'};

Matrix apply_activation(Matrix s, Activation act) {
    switch (act) {
        case Activation::Linear:
            return s;
        case Activation::Relu:
            return s.cwiseMax(0.0);
        case Activation::Sigmoid:
            return s.unaryExpr([](double x) {
                if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
                const double e = std::exp(x);
                return e / (1.0 + e);
            });
    }
    throw std::runtime_error("unknown activation");
}

// Derivative w.r.t. pre-activation, expressed through the post-activation.
Matrix activation_grad(const Matrix& a, Activation act) {
    switch (act) {
        case Activation::Linear:
            return Matrix::Ones(a.rows(), a.cols());
        case Activation::Relu:
            return (a.array() > 0.0).cast<double>().matrix();
        case Activation::Sigmoid:
            return (a.array() * (1.0 - a.array())).matrix();
    }
    throw std::runtime_error("unknown activation");
}

std::vector<Activation> encoder_acts(std::size_t layers) {
    std::vector<Activation> acts(layers, Activation::Relu);
    acts.back() = Activation::Linear;
    return acts;
}

std::vector<Activation> decoder_acts(std::size_t layers, bool sigmoid_output) {
    std::vector<Activation> acts(layers, Activation::Relu);
    acts.back() = sigmoid_output ? Activation::Sigmoid : Activation::Linear;
    return acts;
}

Matrix stack_forward(const std::vector<LayerParams>& layers, const std::vector<Activation>& acts,
                     const Matrix& x, ForwardCache* cache) {
    if (x.cols() != layers.front().w.cols()) throw std::runtime_error("input dimension mismatch");
    if (cache) {
        cache->input = x;
        cache->activations.clear();
        cache->acts = acts;
    }
    Matrix a = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix s = a * layers[l].w.transpose();
        s.rowwise() += layers[l].b.transpose();
        a = apply_activation(std::move(s), acts[l]);
        if (cache) cache->activations.push_back(a);
    }
    return a;
}

Matrix stack_backward(const std::vector<LayerParams>& layers, const ForwardCache& cache,
                      const Matrix& dout, std::vector<LayerParams>& grads) {
    Matrix da = dout;
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
        const Matrix ds = da.cwiseProduct(activation_grad(cache.activations[l], cache.acts[l]));
        const Matrix& in = l == 0 ? cache.input : cache.activations[l - 1];
        grads[l].w.noalias() += ds.transpose() * in;
        grads[l].b.noalias() += ds.colwise().sum().transpose();
        da = ds * layers[l].w;
    }
    return da;
}

std::vector<LayerParams> zero_layers(const std::vector<LayerParams>& like) {
    std::vector<LayerParams> out(like.size());
    for (std::size_t l = 0; l < like.size(); ++l) {
        out[l].w = Matrix::Zero(like[l].w.rows(), like[l].w.cols());
        out[l].b = Vector::Zero(like[l].b.size());
    }
    return out;
}

template <typename Fn>
void for_each_tensor(const std::vector<ViewAutoencoder>& views, Fn&& fn) {
    for (const auto& view : views) {
        for (const auto& layer : view.encoder) {
            fn(layer.w);
            fn(layer.b);
        }
        for (const auto& layer : view.decoder) {
            fn(layer.w);
            fn(layer.b);
        }
    }
}

template <typename Fn>
void for_each_tensor_mut(std::vector<ViewAutoencoder>& views, Fn&& fn) {
    for (auto& view : views) {
        for (auto& layer : view.encoder) {
            fn(layer.w);
            fn(layer.b);
        }
        for (auto& layer : view.decoder) {
            fn(layer.w);
            fn(layer.b);
        }
    }
}

Vector flatten_views(const std::vector<ViewAutoencoder>& views) {
    std::size_t total = 0;
    for_each_tensor(views, [&](const auto& t) { total += t.size(); });
    Vector flat(total);
    std::size_t at = 0;
    for_each_tensor(views, [&](const auto& t) {
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c) flat[at++] = t(r, c);
    });
    return flat;
}

}  // namespace

std::vector<int> ArchitectureSpec::encoder_widths(int v) const {
    std::vector<int> w{input_dims.at(v)};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(latent_dim);
    return w;
}

std::vector<int> ArchitectureSpec::decoder_widths(int v) const {
    std::vector<int> w{latent_dim};
    w.insert(w.end(), hidden.rbegin(), hidden.rend());
    w.push_back(input_dims.at(v));
    return w;
}

void ArchitectureSpec::validate() const {
    if (input_dims.empty()) throw std::runtime_error("architecture has no views");
    if (latent_dim < 1) throw std::runtime_error("latent dimension must be >= 1");
    for (int d : input_dims)
        if (d < 1) throw std::runtime_error("input dimension must be >= 1");
    for (int h : hidden)
        if (h < 1) throw std::runtime_error("hidden width must be >= 1");
}

std::size_t AutoencoderParams::parameter_count() const {
    std::size_t total = 0;
    for_each_tensor(views, [&](const auto& t) { total += t.size(); });
    return total;
}

Vector AutoencoderParams::flatten() const { return flatten_views(views); }

void AutoencoderParams::unflatten(const Vector& flat) {
    if (static_cast<std::size_t>(flat.size()) != parameter_count())
        throw std::runtime_error("flat parameter size mismatch");
    std::size_t at = 0;
    for_each_tensor_mut(views, [&](auto& t) {
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = flat[at++];
    });
}

AutoencoderParams init_params(const ArchitectureSpec& spec, std::uint64_t seed) {
    spec.validate();
    auto rng = make_rng(derive_seed(seed, 31));
    auto glorot = [&](int out, int in) {
        const double limit = std::sqrt(6.0 / (in + out));
        std::uniform_real_distribution<double> u(-limit, limit);
        LayerParams layer;
        layer.w = Matrix::NullaryExpr(out, in, [&]() { return u(rng); });
        layer.b = Vector::Zero(out);
        return layer;
    };
    AutoencoderParams params;
    params.sigmoid_output = spec.sigmoid_output;
    for (int v = 0; v < spec.num_views(); ++v) {
        ViewAutoencoder ae;
        const auto enc = spec.encoder_widths(v);
        for (std::size_t l = 0; l + 1 < enc.size(); ++l) ae.encoder.push_back(glorot(enc[l + 1], enc[l]));
        const auto dec = spec.decoder_widths(v);
        for (std::size_t l = 0; l + 1 < dec.size(); ++l) ae.decoder.push_back(glorot(dec[l + 1], dec[l]));
        params.views.push_back(std::move(ae));
    }
    return params;
}

Vector surrogate_input(const MultiViewDataset& dataset, const RelationGraph& p, int v, int i) {
    if (dataset.available(i, v))
        throw std::runtime_error("surrogate_input: sample is available in this view");
    const auto& nb = p.neighbors[v][i];
    if (nb.empty()) throw std::runtime_error("surrogate_input: empty transferred graph");
    Vector mean = Vector::Zero(dataset.dim(v));
    for (int j : nb) mean += dataset.views[v].row(j).transpose();
    return mean / static_cast<double>(nb.size());
}

Matrix effective_inputs(const MultiViewDataset& dataset, const RelationGraph& p, int v) {
    Matrix x = dataset.views[v];
    for (int i = 0; i < dataset.num_samples(); ++i)
        if (!dataset.available(i, v)) x.row(i) = surrogate_input(dataset, p, v, i).transpose();
    if (!x.allFinite()) throw std::runtime_error("effective inputs contain non-finite values");
    return x;
}

Matrix encode(const AutoencoderParams& params, int v, const Matrix& x, ForwardCache* cache) {
    const auto& layers = params.views.at(v).encoder;
    return stack_forward(layers, encoder_acts(layers.size()), x, cache);
}

Matrix decode(const AutoencoderParams& params, int v, const Matrix& z, ForwardCache* cache) {
    const auto& layers = params.views.at(v).decoder;
    return stack_forward(layers, decoder_acts(layers.size(), params.sigmoid_output), z, cache);
}

Vector encode(const AutoencoderParams& params, int v, const Vector& x) {
    return encode(params, v, Matrix(x.transpose())).row(0).transpose();
}

Vector decode(const AutoencoderParams& params, int v, const Vector& z) {
    return decode(params, v, Matrix(z.transpose())).row(0).transpose();
}

ParamGrads ParamGrads::zeros_like(const AutoencoderParams& params) {
    ParamGrads g;
    for (const auto& view : params.views) {
        ViewAutoencoder zv;
        zv.encoder = zero_layers(view.encoder);
        zv.decoder = zero_layers(view.decoder);
        g.views.push_back(std::move(zv));
    }
    return g;
}

Vector ParamGrads::flatten() const { return flatten_views(views); }

Matrix encoder_backward(const AutoencoderParams& params, int v, const ForwardCache& cache,
                        const Matrix& dout, ParamGrads& grads) {
    return stack_backward(params.views.at(v).encoder, cache, dout, grads.views.at(v).encoder);
}

Matrix decoder_backward(const AutoencoderParams& params, int v, const ForwardCache& cache,
                        const Matrix& dout, ParamGrads& grads) {
    return stack_backward(params.views.at(v).decoder, cache, dout, grads.views.at(v).decoder);
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("truncated checkpoint");
    return v;
}

}  // namespace

void save_checkpoint(const ArchitectureSpec& spec, const AutoencoderParams& params,
                     const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(spec.num_views()));
    for (int d : spec.input_dims) write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(spec.hidden.size()));
    for (int h : spec.hidden) write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(h));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(spec.latent_dim));
    write_pod<std::uint8_t>(out, spec.sigmoid_output ? 1 : 0);
    const Vector flat = params.flatten();
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(flat.size()));
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!out) throw std::runtime_error("checkpoint write failed");
}

void load_checkpoint(const std::filesystem::path& file, ArchitectureSpec& spec,
                     AutoencoderParams& params) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("not a checkpoint file: " + file.string());
    spec = ArchitectureSpec{};
    const auto v = read_pod<std::uint32_t>(in);
    spec.input_dims.resize(v);
    for (auto& d : spec.input_dims) d = static_cast<int>(read_pod<std::uint32_t>(in));
    spec.hidden.resize(read_pod<std::uint32_t>(in));
    for (auto& h : spec.hidden) h = static_cast<int>(read_pod<std::uint32_t>(in));
    spec.latent_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    spec.sigmoid_output = read_pod<std::uint8_t>(in) != 0;
    spec.validate();
    params = init_params(spec, 0);
    const auto count = read_pod<std::uint64_t>(in);
    if (count != params.parameter_count()) throw std::runtime_error("checkpoint size mismatch");
    Vector flat(static_cast<Eigen::Index>(count));
    in.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint");
    params.unflatten(flat);
}

}  // namespace pmvc
