// Naive reference implementations used as independent oracles by the unit
// and acceptance suites. Everything here is deliberately scalar-loop code
// kept free of the library's vectorized paths.
#pragma once

#include "pmvc/dataio.hpp"
#include "pmvc/losses.hpp"
#include "pmvc/network.hpp"
#include "pmvc/objective.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracles {

using pmvc::Matrix;
using pmvc::Vector;

// Exhaustive k-NN: sort every other available sample by (squared distance,
// index) and take the first k.
inline std::vector<int> naive_knn(const Matrix& x, const std::vector<std::uint8_t>& avail, int i,
                                  int k) {
    std::vector<std::pair<double, int>> all;
    for (int j = 0; j < x.rows(); ++j) {
        if (j == i || !avail[j]) continue;
        double d2 = 0;
        for (int c = 0; c < x.cols(); ++c) {
            const double d = x(i, c) - x(j, c);
            d2 += d * d;
        }
        all.emplace_back(d2, j);
    }
    std::sort(all.begin(), all.end());
    std::vector<int> out;
    for (int t = 0; t < std::min<int>(k, static_cast<int>(all.size())); ++t)
        out.push_back(all[t].second);
    return out;
}

// Transfer by the written rule: filter each source list by target
// availability, interleave ranks, dedupe, truncate.
inline std::vector<int> naive_transfer(const pmvc::RelationGraph& g,
                                       const pmvc::MultiViewDataset& ds, int v, int i) {
    std::vector<std::vector<int>> filtered;
    for (int w = 0; w < ds.num_views(); ++w) {
        if (w == v || !ds.available(i, w)) continue;
        std::vector<int> f;
        for (int j : g.neighbors[w][i])
            if (ds.available(j, v)) f.push_back(j);
        filtered.push_back(f);
    }
    std::vector<int> merged;
    std::size_t longest = 0;
    for (const auto& f : filtered) longest = std::max(longest, f.size());
    for (std::size_t r = 0; r < longest; ++r)
        for (const auto& f : filtered)
            if (r < f.size() && std::find(merged.begin(), merged.end(), f[r]) == merged.end() &&
                static_cast<int>(merged.size()) < g.K)
                merged.push_back(f[r]);
    return merged;
}

inline double naive_cosine(const Vector& a, const Vector& b) {
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double naive_rec_sample(const Vector& xhat, const pmvc::MultiViewDataset& ds,
                               const pmvc::RelationGraph& p, int i, int v) {
    auto sq = [&](const Vector& a, int row) {
        double s = 0;
        for (int j = 0; j < a.size(); ++j) {
            const double d = a[j] - ds.views[v](row, j);
            s += d * d;
        }
        return s;
    };
    if (ds.available(i, v)) return sq(xhat, i);
    double acc = 0;
    for (int j : p.neighbors[v][i]) acc += sq(xhat, j);
    return acc / static_cast<double>(p.neighbors[v][i].size());
}

inline double naive_rec_total(const std::vector<Matrix>& xhat, const std::vector<int>& members,
                              const pmvc::MultiViewDataset& ds, const pmvc::RelationGraph& p) {
    double acc = 0;
    for (int v = 0; v < ds.num_views(); ++v)
        for (std::size_t m = 0; m < members.size(); ++m)
            acc += naive_rec_sample(xhat[v].row(static_cast<int>(m)).transpose(), ds, p,
                                    members[m], v);
    return acc / (static_cast<double>(members.size()) * ds.num_views());
}

// Literal Eq-style contrastive loss: raw exponentials, no stabilization.
inline double naive_wgc_sample(const Matrix& zm, const Matrix& znbr,
                               const std::vector<int>& positions, int i, int k,
                               pmvc::WgcDenominator mode) {
    double acc = 0;
    for (int kk = 0; kk < k; ++kk) {
        const double pos =
            naive_cosine(zm.row(i).transpose(), znbr.row(i * k + kk).transpose());
        double denom = 0;
        for (int m : positions) {
            if (!(mode == pmvc::WgcDenominator::ExcludeSelf && m == i))
                denom += std::exp(naive_cosine(zm.row(i).transpose(), zm.row(m).transpose()));
            denom += std::exp(
                naive_cosine(zm.row(i).transpose(), znbr.row(m * k + kk).transpose()));
        }
        acc += std::log(std::exp(pos) / denom);
    }
    return -acc / static_cast<double>(k);
}

inline double naive_wgc_total(const pmvc::losses::ContrastiveBatch& b, pmvc::WgcDenominator mode) {
    double acc = 0;
    for (int v = 0; v < b.v; ++v) {
        const auto& positions = b.active[v];
        if (positions.size() < 2) continue;
        double view_acc = 0;
        for (int i : positions)
            view_acc += naive_wgc_sample(b.member_repr[v], b.slot_repr[v][v], positions, i, b.k, mode);
        acc += view_acc / static_cast<double>(positions.size());
    }
    return acc / static_cast<double>(b.v);
}

inline double naive_cgc_sample(const pmvc::losses::ContrastiveBatch& b, int v, int i) {
    double acc = 0;
    for (int j = 0; j < b.v; ++j) {
        if (j == v) continue;
        for (int kk = 0; kk < b.k; ++kk) {
            const int row = i * b.k + kk;
            for (int c = 0; c < b.slot_repr[v][v].cols(); ++c) {
                const double d = b.slot_repr[v][v](row, c) - b.slot_repr[v][j](row, c);
                acc += d * d;
            }
        }
    }
    return acc / static_cast<double>(b.k);
}

inline double naive_cgc_total(const pmvc::losses::ContrastiveBatch& b) {
    double acc = 0;
    for (int v = 0; v < b.v; ++v)
        for (int i = 0; i < b.m; ++i) acc += naive_cgc_sample(b, v, i);
    return acc / (static_cast<double>(b.m) * b.v);
}

// Scalar-loop MLP forward used to cross-check the vectorized encode/decode.
inline Vector naive_mlp_forward(const std::vector<pmvc::LayerParams>& layers,
                                const std::vector<pmvc::Activation>& acts, const Vector& x) {
    Vector a = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Vector s(layers[l].w.rows());
        for (int r = 0; r < layers[l].w.rows(); ++r) {
            double acc = layers[l].b[r];
            for (int c = 0; c < layers[l].w.cols(); ++c) acc += layers[l].w(r, c) * a[c];
            s[r] = acc;
        }
        for (int r = 0; r < s.size(); ++r) {
            switch (acts[l]) {
                case pmvc::Activation::Linear:
                    break;
                case pmvc::Activation::Relu:
                    s[r] = std::max(0.0, s[r]);
                    break;
                case pmvc::Activation::Sigmoid:
                    s[r] = 1.0 / (1.0 + std::exp(-s[r]));
                    break;
            }
        }
        a = s;
    }
    return a;
}

// Central finite differences of the batch objective's total loss.
inline Vector fd_gradient(const pmvc::BatchObjective& obj, const pmvc::AutoencoderParams& params,
                          double eps) {
    pmvc::AutoencoderParams work = params;
    Vector theta = params.flatten();
    Vector grad(theta.size());
    for (Eigen::Index t = 0; t < theta.size(); ++t) {
        Vector bumped = theta;
        bumped[t] = theta[t] + eps;
        work.unflatten(bumped);
        const double up = obj.evaluate(work, nullptr).total;
        bumped[t] = theta[t] - eps;
        work.unflatten(bumped);
        const double down = obj.evaluate(work, nullptr).total;
        grad[t] = (up - down) / (2 * eps);
    }
    return grad;
}

inline double rel_grad_error(const Vector& analytic, const Vector& fd) {
    const double denom = analytic.norm() + fd.norm();
    if (denom < 1e-12) return 0.0;
    return (analytic - fd).norm() / denom;
}

}  // namespace oracles
