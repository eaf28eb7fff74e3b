#include "pmvc/trainer.hpp"

#include "pmvc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace pmvc {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::vector<std::vector<int>> make_batches(int n, int batch_size, std::mt19937_64& rng) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<int>> batches;
    for (int at = 0; at < n; at += batch_size) {
        const int len = std::min(batch_size, n - at);
        batches.emplace_back(order.begin() + at, order.begin() + at + len);
    }
    // A trailing single-sample batch cannot form contrastive pairs; merge it
    // into the previous one.
    if (batches.size() > 1 && batches.back().size() < 2) {
        batches[batches.size() - 2].push_back(batches.back()[0]);
        batches.pop_back();
    }
    return batches;
}

}  // namespace

void TrainConfig::validate() const {
    if (alpha < 0 || beta < 0) throw std::runtime_error("alpha/beta must be nonnegative");
    if (k < 1) throw std::runtime_error("K must be >= 1");
    if (max_epochs < 0) throw std::runtime_error("max_epochs must be >= 0");
    if (stage2_start < 1) throw std::runtime_error("stage2_start must be >= 1");
    if (learning_rate <= 0) throw std::runtime_error("learning rate must be positive");
    if (batch_size < 2) throw std::runtime_error("batch size must be >= 2");
    if (q_rebuild_interval < 1) throw std::runtime_error("q_rebuild_interval must be >= 1");
    if (finetune_epochs < 0) throw std::runtime_error("finetune_epochs must be >= 0");
    if (finetune_lr <= 0) throw std::runtime_error("finetune learning rate must be positive");
}

void optimizer_step(AutoencoderParams& params, const ParamGrads& grads, AdamState& state,
                    double learning_rate) {
    Vector theta = params.flatten();
    const Vector g = grads.flatten();
    if (g.size() != theta.size()) throw std::runtime_error("gradient size mismatch");
    if (state.t == 0) {
        state.m = Vector::Zero(theta.size());
        state.v = Vector::Zero(theta.size());
    }
    ++state.t;
    state.m = kAdamBeta1 * state.m + (1.0 - kAdamBeta1) * g;
    state.v = kAdamBeta2 * state.v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(kAdamBeta1, state.t);
    const double c2 = 1.0 - std::pow(kAdamBeta2, state.t);
    theta -= (learning_rate / c1) *
             state.m.cwiseQuotient(((state.v / c2).cwiseSqrt().array() + kAdamEps).matrix());
    params.unflatten(theta);
}

Matrix fuse_representations(const std::vector<Matrix>& z) {
    if (z.empty()) throw std::runtime_error("no representations to fuse");
    Matrix sum = z[0];
    for (std::size_t v = 1; v < z.size(); ++v) {
        if (z[v].rows() != sum.rows() || z[v].cols() != sum.cols())
            throw std::runtime_error("representation shape mismatch");
        sum += z[v];
    }
    return sum;
}

std::vector<Matrix> full_representations(const AutoencoderParams& params,
                                         const std::vector<Matrix>& inputs) {
    std::vector<Matrix> z;
    for (std::size_t v = 0; v < inputs.size(); ++v)
        z.push_back(encode(params, static_cast<int>(v), inputs[v]));
    return z;
}

std::vector<Matrix> reconstruct_all(const AutoencoderParams& params,
                                    const std::vector<Matrix>& inputs) {
    std::vector<Matrix> xhat;
    for (std::size_t v = 0; v < inputs.size(); ++v) {
        const int w = static_cast<int>(v);
        xhat.push_back(decode(params, w, encode(params, w, inputs[v])));
    }
    return xhat;
}

TrainState train(const MultiViewDataset& dataset, const TrainConfig& config) {
    dataset.validate();
    config.validate();

    TrainState state;
    state.arch.input_dims.resize(dataset.num_views());
    for (int v = 0; v < dataset.num_views(); ++v) state.arch.input_dims[v] = dataset.dim(v);
    state.arch.hidden = config.hidden;
    state.arch.latent_dim = dataset.num_clusters;
    state.arch.sigmoid_output = config.sigmoid_output;
    state.params = init_params(state.arch, derive_seed(config.seed, 41));

    state.p = build_initial_graphs(dataset, config.k);
    for (int v = 0; v < dataset.num_views(); ++v)
        state.inputs.push_back(effective_inputs(dataset, state.p, v));

    const LossWeights weights = config.weights();
    losses::reset_zero_norm_count();

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const bool use_q = epoch >= config.stage2_start;
        if (use_q) {
            const bool due = !state.has_q ||
                             (epoch - config.stage2_start) % config.q_rebuild_interval == 0;
            if (due) {
                state.q = build_learned_graphs(full_representations(state.params, state.inputs),
                                               config.k);
                state.has_q = true;
            }
        }
        const RelationGraph& contrastive = use_q ? state.q : state.p;

        auto rng = make_rng(derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(epoch)));
        EpochStats stats;
        stats.epoch = epoch;
        stats.used_q = use_q;
        double weight_sum = 0;
        double rec = 0, wgc = 0, cgc = 0, total = 0;
        for (const auto& batch : make_batches(dataset.num_samples(), config.batch_size, rng)) {
            BatchObjective obj(dataset, state.inputs, state.p, contrastive, batch, weights,
                               config.wgc_denominator, config.wgc_include_missing);
            ParamGrads grads = ParamGrads::zeros_like(state.params);
            BatchObjective::Breakdown bd;
            try {
                bd = obj.evaluate(state.params, &grads);
            } catch (const std::exception& e) {
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                         ": " + e.what());
            }
            optimizer_step(state.params, grads, state.opt, config.learning_rate);
            const double w = static_cast<double>(batch.size());
            rec += w * bd.rec;
            wgc += w * bd.wgc;
            cgc += w * bd.cgc;
            total += w * bd.total;
            weight_sum += w;
            state.padded_slots += obj.padded_slots();
        }
        stats.rec = rec / weight_sum;
        stats.wgc = wgc / weight_sum;
        stats.cgc = cgc / weight_sum;
        stats.total = total / weight_sum;
        if (dataset.has_labels()) stats.graph_error = graph_error(contrastive, *dataset.labels);
        state.history.push_back(stats);
        state.epoch = epoch;

        if (config.checkpoint_interval > 0 && epoch % config.checkpoint_interval == 0) {
            std::filesystem::create_directories(config.checkpoint_dir);
            save_checkpoint(state.arch, state.params,
                            config.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".ckpt"));
        }
        if (config.early_stop && epoch > 50) {
            const double before = state.history[epoch - 51].total;
            const double now = stats.total;
            if (before - now < config.tolerance) break;
        }
    }
    state.zero_norm_events = losses::zero_norm_count();
    return state;
}

namespace {

// Student-t (df = 1) soft assignment of rows of zstar to centroids.
Matrix soft_assign(const Matrix& zstar, const Matrix& centroids) {
    const int n = static_cast<int>(zstar.rows());
    const int c = static_cast<int>(centroids.rows());
    Matrix q(n, c);
    for (int i = 0; i < n; ++i) {
        double sum = 0;
        for (int a = 0; a < c; ++a) {
            const double d = 1.0 + (zstar.row(i) - centroids.row(a)).squaredNorm();
            q(i, a) = 1.0 / d;
            sum += q(i, a);
        }
        q.row(i) /= sum;
    }
    return q;
}

// Sharpened target: p_ic proportional to q_ic^2 / sum_i q_ic.
Matrix target_distribution(const Matrix& q) {
    const Vector freq = q.colwise().sum();
    Matrix p = q.array().square().matrix();
    for (int a = 0; a < p.cols(); ++a) p.col(a) /= freq[a];
    for (int i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
    return p;
}

}  // namespace

TrainState fine_tune_kl(TrainState state, const MultiViewDataset& dataset,
                        const TrainConfig& config) {
    config.validate();
    const int n = dataset.num_samples();
    const int vcount = dataset.num_views();
    const int c = dataset.num_clusters;

    Matrix zstar = fuse_representations(full_representations(state.params, state.inputs));
    Matrix centroids =
        eval::kmeans_full(zstar, c, derive_seed(config.seed, 61), /*restarts=*/10).centers;

    AdamState param_opt, centroid_opt;
    for (int epoch = 1; epoch <= config.finetune_epochs; ++epoch) {
        zstar = fuse_representations(full_representations(state.params, state.inputs));
        const Matrix p = target_distribution(soft_assign(zstar, centroids));

        auto rng = make_rng(derive_seed(config.seed, 5000 + static_cast<std::uint64_t>(epoch)));
        double epoch_loss = 0;
        double weight_sum = 0;
        for (const auto& batch : make_batches(n, config.batch_size, rng)) {
            const int m = static_cast<int>(batch.size());
            std::vector<ForwardCache> caches(vcount);
            Matrix zb = Matrix::Zero(m, c);
            std::vector<Matrix> xb(vcount);
            for (int v = 0; v < vcount; ++v) {
                xb[v].resize(m, state.inputs[v].cols());
                for (int i = 0; i < m; ++i) xb[v].row(i) = state.inputs[v].row(batch[i]);
                zb += encode(state.params, v, xb[v], &caches[v]);
            }
            const Matrix qb = soft_assign(zb, centroids);
            double loss = 0;
            Matrix dz = Matrix::Zero(m, c);
            Matrix dmu = Matrix::Zero(c, zb.cols());
            for (int i = 0; i < m; ++i) {
                for (int a = 0; a < c; ++a) {
                    const double pia = p(batch[i], a);
                    if (pia > 0) loss += pia * std::log(pia / qb(i, a));
                    const double d = 1.0 + (zb.row(i) - centroids.row(a)).squaredNorm();
                    const Eigen::RowVectorXd diff = zb.row(i) - centroids.row(a);
                    const double w = 2.0 * (pia - qb(i, a)) / d / m;
                    dz.row(i) += w * diff;
                    dmu.row(a) -= w * diff;
                }
            }
            loss /= m;
            if (!std::isfinite(loss))
                throw std::runtime_error("fine-tune diverged at epoch " + std::to_string(epoch));
            ParamGrads grads = ParamGrads::zeros_like(state.params);
            for (int v = 0; v < vcount; ++v)
                encoder_backward(state.params, v, caches[v], dz, grads);
            optimizer_step(state.params, grads, param_opt, config.finetune_lr);

            // Centroids share the Adam recipe through a one-tensor wrapper.
            if (centroid_opt.t == 0) {
                centroid_opt.m = Vector::Zero(c * zb.cols());
                centroid_opt.v = Vector::Zero(c * zb.cols());
            }
            ++centroid_opt.t;
            Eigen::Map<Vector> g(dmu.data(), dmu.size());
            centroid_opt.m = kAdamBeta1 * centroid_opt.m + (1.0 - kAdamBeta1) * g;
            centroid_opt.v =
                kAdamBeta2 * centroid_opt.v + (1.0 - kAdamBeta2) * g.cwiseProduct(g).eval();
            const double c1 = 1.0 - std::pow(kAdamBeta1, centroid_opt.t);
            const double c2 = 1.0 - std::pow(kAdamBeta2, centroid_opt.t);
            Eigen::Map<Vector> mu(centroids.data(), centroids.size());
            mu -= (config.finetune_lr / c1) *
                  centroid_opt.m.cwiseQuotient(
                      ((centroid_opt.v / c2).cwiseSqrt().array() + kAdamEps).matrix());

            epoch_loss += loss * m;
            weight_sum += m;
        }
        state.finetune_history.push_back(epoch_loss / weight_sum);
    }
    return state;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << "epoch,rec,wgc,cgc,total,graph_error\n";
    for (const auto& h : history)
        out << h.epoch << ',' << format_double(h.rec) << ',' << format_double(h.wgc) << ','
            << format_double(h.cgc) << ',' << format_double(h.total) << ','
            << format_double(h.graph_error) << '\n';
    return;
}

}  // namespace pmvc
