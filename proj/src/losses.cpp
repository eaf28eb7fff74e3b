#include "pmvc/losses.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace pmvc::losses {

namespace {

std::atomic<long> g_zero_norm_count{0};

double log_sum_exp(const std::vector<double>& terms) {
    double hi = terms.front();
    for (double t : terms) hi = std::max(hi, t);
    double acc = 0;
    for (double t : terms) acc += std::exp(t - hi);
    return hi + std::log(acc);
}

}  // namespace

double cosine_sim(const Vector& a, const Vector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        g_zero_norm_count.fetch_add(1, std::memory_order_relaxed);
        return 0.0;
    }
    return a.dot(b) / (na * nb);
}

long zero_norm_count() { return g_zero_norm_count.load(std::memory_order_relaxed); }
void reset_zero_norm_count() { g_zero_norm_count.store(0, std::memory_order_relaxed); }

double rec_loss_sample(const Vector& xhat, const MultiViewDataset& dataset,
                       const RelationGraph& p, int i, int v) {
    if (!xhat.allFinite()) throw std::runtime_error("non-finite reconstruction");
    if (dataset.available(i, v))
        return (xhat - dataset.views[v].row(i).transpose()).squaredNorm();
    const auto& nb = p.neighbors[v][i];
    if (nb.empty()) throw std::runtime_error("rec loss: empty transferred graph");
    double acc = 0;
    for (int j : nb) acc += (xhat - dataset.views[v].row(j).transpose()).squaredNorm();
    return acc / static_cast<double>(nb.size());
}

double rec_loss_total(const std::vector<Matrix>& xhat, const std::vector<int>& members,
                      const MultiViewDataset& dataset, const RelationGraph& p) {
    if (members.empty()) throw std::runtime_error("rec loss: empty scope");
    const int v = dataset.num_views();
    double acc = 0;
    for (int w = 0; w < v; ++w)
        for (std::size_t m = 0; m < members.size(); ++m)
            acc += rec_loss_sample(xhat[w].row(static_cast<int>(m)).transpose(), dataset, p,
                                   members[m], w);
    return acc / (static_cast<double>(members.size()) * v);
}

double wgc_loss_sample(const Matrix& zm, const Matrix& znbr, const std::vector<int>& positions,
                       int i, int k, WgcDenominator mode) {
    if (positions.size() < 2) throw std::runtime_error("wgc: batch size must be >= 2");
    if (k < 1) throw std::runtime_error("wgc: K must be >= 1");
    const Vector zi = zm.row(i).transpose();
    double acc = 0;
    for (int kk = 0; kk < k; ++kk) {
        const double pos = cosine_sim(zi, znbr.row(i * k + kk).transpose());
        std::vector<double> terms;
        terms.reserve(2 * positions.size());
        for (int m : positions) {
            if (!(mode == WgcDenominator::ExcludeSelf && m == i))
                terms.push_back(cosine_sim(zi, zm.row(m).transpose()));
            terms.push_back(cosine_sim(zi, znbr.row(m * k + kk).transpose()));
        }
        acc += pos - log_sum_exp(terms);
    }
    return -acc / static_cast<double>(k);
}

double wgc_loss_total(const ContrastiveBatch& batch, WgcDenominator mode) {
    double acc = 0;
    for (int v = 0; v < batch.v; ++v) {
        const auto& positions = batch.active[v];
        if (static_cast<int>(positions.size()) < 2) continue;
        double view_acc = 0;
        for (int i : positions)
            view_acc += wgc_loss_sample(batch.member_repr[v], batch.slot_repr[v][v], positions, i,
                                        batch.k, mode);
        acc += view_acc / static_cast<double>(positions.size());
    }
    return acc / static_cast<double>(batch.v);
}

double cgc_loss_sample(const ContrastiveBatch& batch, int v, int i) {
    double acc = 0;
    for (int j = 0; j < batch.v; ++j) {
        if (j == v) continue;
        for (int kk = 0; kk < batch.k; ++kk) {
            const int row = i * batch.k + kk;
            acc += (batch.slot_repr[v][v].row(row) - batch.slot_repr[v][j].row(row)).squaredNorm();
        }
    }
    return acc / static_cast<double>(batch.k);
}

double cgc_loss_total(const ContrastiveBatch& batch) {
    double acc = 0;
    for (int v = 0; v < batch.v; ++v)
        for (int i = 0; i < batch.m; ++i) acc += cgc_loss_sample(batch, v, i);
    return acc / (static_cast<double>(batch.m) * batch.v);
}

double total_loss(double rec, double wgc, double cgc, const LossWeights& weights) {
    double total = 0;
    if (weights.enable_rec) total += rec;
    if (weights.enable_wgc) total += weights.alpha * wgc;
    if (weights.enable_cgc) total += weights.beta * cgc;
    return total;
}

}  // namespace pmvc::losses
