#include "pmvc/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pmvc {

namespace {

// d s(u, w) / du and /dw for s = cosine(u, w), scaled by g and accumulated
// into the rows ru, rw of dz. Zero-norm pairs carry zero gradient, matching
// the value convention.
void cosine_backward(const Matrix& z, int ru, int rw, double g, Matrix& dz) {
    const Vector u = z.row(ru).transpose();
    const Vector w = z.row(rw).transpose();
    const double nu = u.norm();
    const double nw = w.norm();
    if (nu == 0.0 || nw == 0.0) return;
    const double s = u.dot(w) / (nu * nw);
    dz.row(ru) += (g * (w / (nu * nw) - s * u / (nu * nu))).transpose();
    dz.row(rw) += (g * (u / (nu * nw) - s * w / (nw * nw))).transpose();
}

}  // namespace

BatchObjective::BatchObjective(const MultiViewDataset& dataset, const std::vector<Matrix>& inputs,
                               const RelationGraph& initial, const RelationGraph& contrastive,
                               std::vector<int> members, const LossWeights& weights,
                               WgcDenominator wgc_mode, bool wgc_include_missing)
    : dataset_(dataset),
      inputs_(inputs),
      initial_(initial),
      members_(std::move(members)),
      weights_(weights),
      wgc_mode_(wgc_mode),
      k_(contrastive.K) {
    if (members_.size() < 2) throw std::runtime_error("batch size must be >= 2");
    const int m = static_cast<int>(members_.size());
    const int v = dataset_.num_views();

    slots_.assign(v, std::vector<int>(static_cast<std::size_t>(m) * k_));
    for (int w = 0; w < v; ++w) {
        for (int i = 0; i < m; ++i) {
            const auto& list = contrastive.neighbors[w][members_[i]];
            if (list.empty())
                throw std::runtime_error("sample " + std::to_string(members_[i]) +
                                         " has no neighbours in view " + std::to_string(w));
            if (static_cast<int>(list.size()) < k_) ++padded_slots_;
            for (int kk = 0; kk < k_; ++kk)
                slots_[w][static_cast<std::size_t>(i) * k_ + kk] = list[kk % list.size()];
        }
    }

    std::vector<char> in_active(dataset_.num_samples(), 0);
    for (int id : members_) in_active[id] = 1;
    for (const auto& s : slots_)
        for (int id : s) in_active[id] = 1;
    pos_of_id_.assign(dataset_.num_samples(), -1);
    for (int id = 0; id < dataset_.num_samples(); ++id) {
        if (in_active[id]) {
            pos_of_id_[id] = static_cast<int>(active_ids_.size());
            active_ids_.push_back(id);
        }
    }

    wgc_active_.assign(v, {});
    for (int w = 0; w < v; ++w)
        for (int i = 0; i < m; ++i)
            if (wgc_include_missing || dataset_.available(members_[i], w))
                wgc_active_[w].push_back(i);
}

BatchObjective::Breakdown BatchObjective::evaluate(const AutoencoderParams& params,
                                                   ParamGrads* grads) const {
    const int m = static_cast<int>(members_.size());
    const int v = dataset_.num_views();
    const int a = static_cast<int>(active_ids_.size());

    // Forward pass over the active set per view, then decode batch members.
    std::vector<ForwardCache> enc_cache(v), dec_cache(v);
    std::vector<Matrix> za(v), zm(v), xhat(v);
    for (int w = 0; w < v; ++w) {
        Matrix x(a, inputs_[w].cols());
        for (int r = 0; r < a; ++r) x.row(r) = inputs_[w].row(active_ids_[r]);
        za[w] = encode(params, w, x, grads ? &enc_cache[w] : nullptr);
        zm[w].resize(m, za[w].cols());
        for (int i = 0; i < m; ++i) zm[w].row(i) = za[w].row(pos_of_id_[members_[i]]);
        xhat[w] = decode(params, w, zm[w], grads ? &dec_cache[w] : nullptr);
    }

    losses::ContrastiveBatch batch;
    batch.m = m;
    batch.k = k_;
    batch.v = v;
    batch.member_repr = zm;
    batch.active = wgc_active_;
    batch.slot_repr.assign(v, std::vector<Matrix>(v));
    for (int w = 0; w < v; ++w) {
        for (int j = 0; j < v; ++j) {
            Matrix& s = batch.slot_repr[w][j];
            s.resize(m * k_, za[j].cols());
            for (int r = 0; r < m * k_; ++r) s.row(r) = za[j].row(pos_of_id_[slots_[w][r]]);
        }
    }

    Breakdown out;
    out.rec = losses::rec_loss_total(xhat, members_, dataset_, initial_);
    out.wgc = losses::wgc_loss_total(batch, wgc_mode_);
    out.cgc = losses::cgc_loss_total(batch);
    out.total = losses::total_loss(out.rec, out.wgc, out.cgc, weights_);
    if (!std::isfinite(out.total)) throw std::runtime_error("non-finite batch loss");
    if (!grads) return out;

    std::vector<Matrix> dza(v), dxhat(v);
    for (int w = 0; w < v; ++w) {
        dza[w] = Matrix::Zero(a, za[w].cols());
        dxhat[w] = Matrix::Zero(m, xhat[w].cols());
    }

    if (weights_.enable_rec) {
        const double scale = 2.0 / (static_cast<double>(m) * v);
        for (int w = 0; w < v; ++w) {
            for (int i = 0; i < m; ++i) {
                const int id = members_[i];
                if (dataset_.available(id, w)) {
                    dxhat[w].row(i) += scale * (xhat[w].row(i) - dataset_.views[w].row(id));
                } else {
                    const auto& nb = initial_.neighbors[w][id];
                    Vector mean = Vector::Zero(xhat[w].cols());
                    for (int j : nb) mean += dataset_.views[w].row(j).transpose();
                    mean /= static_cast<double>(nb.size());
                    dxhat[w].row(i) += scale * (xhat[w].row(i) - mean.transpose());
                }
            }
        }
    }

    if (weights_.enable_wgc) {
        for (int w = 0; w < v; ++w) {
            const auto& positions = wgc_active_[w];
            if (positions.size() < 2) continue;
            // d total / d Lw_i for this view.
            const double wi = weights_.alpha / (static_cast<double>(positions.size()) * v);
            for (int i : positions) {
                const int zi_row = pos_of_id_[members_[i]];
                for (int kk = 0; kk < k_; ++kk) {
                    // Terms of the denominator in fixed order; entry pairs
                    // mirror losses::wgc_loss_sample.
                    std::vector<std::pair<int, double>> rows_and_sims;
                    const Vector zi = za[w].row(zi_row).transpose();
                    for (int mm : positions) {
                        if (!(wgc_mode_ == WgcDenominator::ExcludeSelf && mm == i)) {
                            const int r = pos_of_id_[members_[mm]];
                            rows_and_sims.emplace_back(
                                r, losses::cosine_sim(zi, za[w].row(r).transpose()));
                        }
                        const int rn = pos_of_id_[slots_[w][static_cast<std::size_t>(mm) * k_ + kk]];
                        rows_and_sims.emplace_back(
                            rn, losses::cosine_sim(zi, za[w].row(rn).transpose()));
                    }
                    double hi = rows_and_sims.front().second;
                    for (const auto& [r, s] : rows_and_sims) hi = std::max(hi, s);
                    double denom = 0;
                    for (const auto& [r, s] : rows_and_sims) denom += std::exp(s - hi);
                    // Positive term: -(1/K) * s(z_i, z_{i^k}).
                    const int pos_row = pos_of_id_[slots_[w][static_cast<std::size_t>(i) * k_ + kk]];
                    cosine_backward(za[w], zi_row, pos_row, -wi / k_, dza[w]);
                    // log-denominator term: +(1/K) * softmax-weighted sims.
                    for (const auto& [r, s] : rows_and_sims) {
                        const double soft = std::exp(s - hi) / denom;
                        cosine_backward(za[w], zi_row, r, wi / k_ * soft, dza[w]);
                    }
                }
            }
        }
    }

    if (weights_.enable_cgc) {
        const double scale = weights_.beta / (static_cast<double>(m) * v * k_);
        for (int w = 0; w < v; ++w) {
            for (int r = 0; r < m * k_; ++r) {
                const int row = pos_of_id_[slots_[w][r]];
                for (int j = 0; j < v; ++j) {
                    if (j == w) continue;
                    const Eigen::RowVectorXd diff = za[w].row(row) - za[j].row(row);
                    dza[w].row(row) += 2.0 * scale * diff;
                    dza[j].row(row) -= 2.0 * scale * diff;
                }
            }
        }
    }

    for (int w = 0; w < v; ++w) {
        const Matrix dzm = decoder_backward(params, w, dec_cache[w], dxhat[w], *grads);
        for (int i = 0; i < m; ++i) dza[w].row(pos_of_id_[members_[i]]) += dzm.row(i);
        encoder_backward(params, w, enc_cache[w], dza[w], *grads);
    }
    return out;
}

}  // namespace pmvc
