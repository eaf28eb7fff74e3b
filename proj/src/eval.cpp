#include "pmvc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pmvc::eval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix kmeanspp_seed(const Matrix& points, int c, std::mt19937_64& rng) {
    const int n = static_cast<int>(points.rows());
    Matrix centers(c, points.cols());
    std::vector<char> taken(n, 0);
    std::uniform_int_distribution<int> first(0, n - 1);
    int idx = first(rng);
    centers.row(0) = points.row(idx);
    taken[idx] = 1;
    Vector d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int t = 1; t < c; ++t) {
        const double total = d2.sum();
        int pick = -1;
        if (total > 0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double x = u(rng);
            for (int i = 0; i < n; ++i) {
                x -= d2[i];
                if (x <= 0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) pick = n - 1;
        } else {
            // All remaining points coincide with a chosen center; fall back
            // to a uniform pick among untaken indices.
            std::vector<int> rest;
            for (int i = 0; i < n; ++i)
                if (!taken[i]) rest.push_back(i);
            if (rest.empty()) rest.push_back(0);
            std::uniform_int_distribution<std::size_t> u(0, rest.size() - 1);
            pick = rest[u(rng)];
        }
        centers.row(t) = points.row(pick);
        taken[pick] = 1;
        d2 = d2.cwiseMin((points.rowwise() - centers.row(t)).rowwise().squaredNorm());
    }
    return centers;
}

void assign_points(const Matrix& points, const Matrix& centers, std::vector<int>& labels,
                   Vector& dist2) {
    const int n = static_cast<int>(points.rows());
    const int c = static_cast<int>(centers.rows());
    for (int i = 0; i < n; ++i) {
        double best = kInf;
        int arg = 0;
        for (int a = 0; a < c; ++a) {
            const double d = (points.row(i) - centers.row(a)).squaredNorm();
            if (d < best) {
                best = d;
                arg = a;
            }
        }
        labels[i] = arg;
        dist2[i] = best;
    }
}

KMeansResult lloyd(const Matrix& points, int c, std::mt19937_64& rng) {
    const int n = static_cast<int>(points.rows());
    Matrix centers = kmeanspp_seed(points, c, rng);
    std::vector<int> labels(n, -1), prev;
    Vector dist2(n);
    for (int iter = 0; iter < 100; ++iter) {
        assign_points(points, centers, labels, dist2);
        // Re-seed empty clusters at the farthest point from its center.
        std::vector<int> count(c, 0);
        for (int y : labels) ++count[y];
        bool reseeded = false;
        for (int a = 0; a < c; ++a) {
            if (count[a] != 0) continue;
            int far = 0;
            for (int i = 1; i < n; ++i)
                if (dist2[i] > dist2[far]) far = i;
            centers.row(a) = points.row(far);
            --count[labels[far]];
            labels[far] = a;
            ++count[a];
            dist2[far] = 0;
            reseeded = true;
        }
        if (!reseeded && labels == prev) break;
        prev = labels;
        Matrix sums = Matrix::Zero(c, points.cols());
        for (int i = 0; i < n; ++i) sums.row(labels[i]) += points.row(i);
        for (int a = 0; a < c; ++a)
            if (count[a] > 0) centers.row(a) = sums.row(a) / count[a];
    }
    assign_points(points, centers, labels, dist2);
    KMeansResult out;
    out.labels = std::move(labels);
    out.centers = std::move(centers);
    out.inertia = dist2.sum();
    return out;
}

void check_partition_args(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw std::runtime_error("label vectors must be nonempty and equal length");
}

Matrix confusion(const std::vector<int>& pred, const std::vector<int>& truth, int& r, int& t) {
    r = *std::max_element(pred.begin(), pred.end()) + 1;
    t = *std::max_element(truth.begin(), truth.end()) + 1;
    Matrix m = Matrix::Zero(std::max(r, t), std::max(r, t));
    for (std::size_t i = 0; i < pred.size(); ++i) m(pred[i], truth[i]) += 1.0;
    return m;
}

bool partitions_equal(const std::vector<int>& pred, const std::vector<int>& truth) {
    int r = 0, t = 0;
    const Matrix m = confusion(pred, truth, r, t);
    for (int i = 0; i < m.rows(); ++i) {
        int nz_row = 0, nz_col = 0;
        for (int j = 0; j < m.cols(); ++j) {
            if (m(i, j) > 0) ++nz_row;
            if (m(j, i) > 0) ++nz_col;
        }
        if (nz_row > 1 || nz_col > 1) return false;
    }
    return true;
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

KMeansResult kmeans_full(const Matrix& points, int c, std::uint64_t seed, int restarts) {
    if (c < 1) throw std::runtime_error("kmeans: C must be >= 1");
    if (points.rows() < c) throw std::runtime_error("kmeans: need N >= C");
    if (restarts < 1) throw std::runtime_error("kmeans: restarts must be >= 1");
    KMeansResult best;
    for (int r = 0; r < restarts; ++r) {
        auto rng = make_rng(derive_seed(seed, 51 + static_cast<std::uint64_t>(r)));
        KMeansResult cur = lloyd(points, c, rng);
        if (r == 0 || cur.inertia < best.inertia) best = std::move(cur);
    }
    return best;
}

std::vector<int> kmeans(const Matrix& points, int c, std::uint64_t seed, int restarts) {
    return kmeans_full(points, c, seed, restarts).labels;
}

std::vector<int> hungarian(const Matrix& cost) {
    if (cost.rows() != cost.cols()) throw std::runtime_error("hungarian: matrix must be square");
    const int n = static_cast<int>(cost.rows());
    std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1, 0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    check_partition_args(pred, truth);
    int r = 0, t = 0;
    const Matrix counts = confusion(pred, truth, r, t);
    const std::vector<int> assign = hungarian(-counts);
    double hit = 0;
    for (int i = 0; i < counts.rows(); ++i) hit += counts(i, assign[i]);
    return hit / static_cast<double>(pred.size());
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
    check_partition_args(pred, truth);
    int r = 0, t = 0;
    const Matrix counts = confusion(pred, truth, r, t);
    const double n = static_cast<double>(pred.size());
    const Vector a = counts.rowwise().sum();
    const Vector b = counts.colwise().sum();
    auto entropy = [&](const Vector& c) {
        double h = 0;
        for (double x : c)
            if (x > 0) h -= (x / n) * std::log(x / n);
        return h;
    };
    const double hp = entropy(a);
    const double ht = entropy(b);
    if (hp == 0.0 && ht == 0.0) return 1.0;
    if (hp == 0.0 || ht == 0.0) return 0.0;
    double mi = 0;
    for (int i = 0; i < counts.rows(); ++i)
        for (int j = 0; j < counts.cols(); ++j)
            if (counts(i, j) > 0)
                mi += (counts(i, j) / n) * std::log(counts(i, j) * n / (a[i] * b[j]));
    return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
    check_partition_args(pred, truth);
    int r = 0, t = 0;
    const Matrix counts = confusion(pred, truth, r, t);
    double sum_ij = 0, sum_a = 0, sum_b = 0;
    for (int i = 0; i < counts.rows(); ++i)
        for (int j = 0; j < counts.cols(); ++j) sum_ij += comb2(counts(i, j));
    const Vector a = counts.rowwise().sum();
    const Vector b = counts.colwise().sum();
    for (double x : a) sum_a += comb2(x);
    for (double x : b) sum_b += comb2(x);
    const double pairs = comb2(static_cast<double>(pred.size()));
    const double expected = sum_a * sum_b / pairs;
    const double maximum = 0.5 * (sum_a + sum_b);
    if (maximum == expected) return partitions_equal(pred, truth) ? 1.0 : 0.0;
    return (sum_ij - expected) / (maximum - expected);
}

std::vector<std::optional<double>> nrmse(const MultiViewDataset& dataset,
                                         const std::vector<Matrix>& imputed) {
    if (!dataset.has_ground_truth())
        throw std::runtime_error("nrmse requires ground-truth views");
    if (imputed.size() != dataset.ground_truth_views.size())
        throw std::runtime_error("nrmse: imputed view count mismatch");
    std::vector<std::optional<double>> out;
    for (int v = 0; v < dataset.num_views(); ++v) {
        const Matrix& gt = dataset.ground_truth_views[v];
        double acc = 0;
        long cells = 0;
        for (int i = 0; i < dataset.num_samples(); ++i) {
            if (dataset.available(i, v)) continue;
            for (int j = 0; j < dataset.dim(v); ++j) {
                const double d = imputed[v](i, j) - gt(i, j);
                acc += d * d;
                ++cells;
            }
        }
        if (cells == 0) {
            out.push_back(std::nullopt);
            continue;
        }
        const double rmse = std::sqrt(acc / static_cast<double>(cells));
        const double range = gt.maxCoeff() - gt.minCoeff();
        out.push_back(range > 0 ? rmse / range : rmse);
    }
    return out;
}

std::vector<Matrix> mean_impute(const MultiViewDataset& dataset) {
    std::vector<Matrix> out;
    for (int v = 0; v < dataset.num_views(); ++v) {
        Matrix filled = dataset.views[v];
        for (int j = 0; j < dataset.dim(v); ++j) {
            double sum = 0;
            long count = 0;
            for (int i = 0; i < dataset.num_samples(); ++i) {
                if (!dataset.available(i, v)) continue;
                sum += dataset.views[v](i, j);
                ++count;
            }
            const double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
            for (int i = 0; i < dataset.num_samples(); ++i)
                if (!dataset.available(i, v)) filled(i, j) = mean;
        }
        out.push_back(std::move(filled));
    }
    return out;
}

}  // namespace pmvc::eval
