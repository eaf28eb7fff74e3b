#pragma once

#include "pmvc/dataio.hpp"
#include "pmvc/graph.hpp"

#include <vector>

namespace pmvc {

/// Trade-off weights and ablation switches for the joint objective
/// total = rec + alpha * wgc + beta * cgc. A disabled term contributes
/// exactly zero to the value and the gradient.
struct LossWeights {
    double alpha = 0.2;
    double beta = 0.2;
    bool enable_rec = true;
    bool enable_wgc = true;
    bool enable_cgc = true;
};

/// Denominator convention for the within-view contrastive loss. Literal
/// keeps every batch term including m == i; ExcludeSelf drops the anchor's
/// own self-similarity term (its neighbour term, the positive, stays).
enum class WgcDenominator { Literal, ExcludeSelf };

namespace losses {

/// Cosine similarity in [-1, 1]; zero-norm inputs yield 0 and bump a
/// diagnostics counter.
double cosine_sim(const Vector& a, const Vector& b);
long zero_norm_count();
void reset_zero_norm_count();

/// Squared-error reconstruction for one (sample, view): against the sample's
/// own features when available, else averaged against its transferred-graph
/// neighbours.
double rec_loss_sample(const Vector& xhat, const MultiViewDataset& dataset,
                       const RelationGraph& p, int i, int v);

/// Mean of rec_loss_sample over members x views; xhat[v] holds one
/// reconstruction row per member.
double rec_loss_total(const std::vector<Matrix>& xhat, const std::vector<int>& members,
                      const MultiViewDataset& dataset, const RelationGraph& p);

/// Representations gathered for one mini-batch. member_repr[v] is M x C;
/// slot_repr[v][j] is (M*K) x C, row m*K + k holding the representation in
/// view j of the k-th graph neighbour (in view v's graph) of member m.
/// active[v] lists the member positions participating as WGC anchors and
/// denominators in view v (all positions by default).
struct ContrastiveBatch {
    int m = 0;
    int k = 0;
    int v = 0;
    std::vector<Matrix> member_repr;
    std::vector<std::vector<Matrix>> slot_repr;
    std::vector<std::vector<int>> active;
};

/// Within-view graph contrastive loss for anchor position i given member
/// representations zm (M x C) and neighbour slots znbr ((M*K) x C).
/// `positions` are the batch positions forming the denominator.
double wgc_loss_sample(const Matrix& zm, const Matrix& znbr, const std::vector<int>& positions,
                       int i, int k, WgcDenominator mode);
double wgc_loss_total(const ContrastiveBatch& batch, WgcDenominator mode);

/// Cross-view graph consistency for (member position i, source view v):
/// the source view's neighbour slots evaluated in every other view.
double cgc_loss_sample(const ContrastiveBatch& batch, int v, int i);
double cgc_loss_total(const ContrastiveBatch& batch);

double total_loss(double rec, double wgc, double cgc, const LossWeights& weights);

}  // namespace losses
}  // namespace pmvc
