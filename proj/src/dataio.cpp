#include "pmvc/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pmvc {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_number(const std::string& field, const std::string& where) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
        throw std::runtime_error("non-numeric cell '" + field + "' at " + where);
    return v;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split_fields(line));
    }
    return rows;
}

// Sample k distinct indices from [0, n) via partial Fisher-Yates.
std::vector<int> sample_without_replacement(int n, int k, std::mt19937_64& rng) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

MaskMatrix mask_per_view_removal(int n, int v, double p, std::uint64_t seed) {
    const long z = round_half_away(n * p / 100.0);
    if (z > n || static_cast<long>(v) * z > static_cast<long>(n) * (v - 1))
        throw std::runtime_error("per-view removal infeasible: p=" + std::to_string(p) +
                                 " with N=" + std::to_string(n) + " V=" + std::to_string(v));
    auto rng = make_rng(derive_seed(seed, 11));
    MaskMatrix mask = MaskMatrix::Ones(n, v);
    for (int w = 0; w < v; ++w)
        for (int i : sample_without_replacement(n, static_cast<int>(z), rng)) mask(i, w) = 0;

    // Repair all-zero rows while keeping column sums exact: give such a row
    // a 1 in some view and take that view's 1 from a row that can spare it.
    std::vector<int> row_sum(n);
    for (int i = 0; i < n; ++i) row_sum[i] = mask.row(i).sum();
    for (int i = 0; i < n; ++i) {
        if (row_sum[i] != 0) continue;
        std::vector<std::pair<int, int>> donors;  // (row, view)
        for (int r = 0; r < n; ++r) {
            if (row_sum[r] < 2) continue;
            for (int w = 0; w < v; ++w)
                if (mask(r, w) == 1) donors.emplace_back(r, w);
        }
        if (donors.empty()) throw std::runtime_error("per-view removal infeasible after repair");
        std::uniform_int_distribution<std::size_t> pick(0, donors.size() - 1);
        auto [r, w] = donors[pick(rng)];
        mask(r, w) = 0;
        mask(i, w) = 1;
        --row_sum[r];
        ++row_sum[i];
    }
    return mask;
}

MaskMatrix mask_two_view_paired(int n, double p, std::uint64_t seed) {
    const long paired = round_half_away(n * p / 100.0);
    if (paired > n) throw std::runtime_error("paired count exceeds N");
    auto rng = make_rng(derive_seed(seed, 12));
    MaskMatrix mask = MaskMatrix::Zero(n, 2);
    std::vector<char> is_paired(n, 0);
    for (int i : sample_without_replacement(n, static_cast<int>(paired), rng)) is_paired[i] = 1;
    std::uniform_int_distribution<int> coin(0, 1);
    for (int i = 0; i < n; ++i) {
        if (is_paired[i]) {
            mask(i, 0) = mask(i, 1) = 1;
        } else {
            mask(i, coin(rng)) = 1;
        }
    }
    return mask;
}

}  // namespace

void MultiViewDataset::validate() const {
    if (views.empty()) throw std::runtime_error("dataset has no views");
    if (num_clusters < 1) throw std::runtime_error("num_clusters must be >= 1");
    const int n = num_samples();
    const int v = num_views();
    if (n < 1) throw std::runtime_error("dataset has no samples");
    for (int w = 0; w < v; ++w)
        if (views[w].rows() != n)
            throw std::runtime_error("view " + std::to_string(w) + " row count mismatch");
    if (mask.rows() != n || mask.cols() != v) throw std::runtime_error("mask shape mismatch");
    for (int i = 0; i < n; ++i) {
        int ones = 0;
        for (int w = 0; w < v; ++w) {
            if (mask(i, w) != 0 && mask(i, w) != 1) throw std::runtime_error("mask cell not 0/1");
            ones += mask(i, w);
        }
        if (ones == 0)
            throw std::runtime_error("sample " + std::to_string(i) + " missing in all views");
    }
    for (int w = 0; w < v; ++w) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < views[w].cols(); ++j) {
                const double x = views[w](i, j);
                if (mask(i, w) == 1 && !std::isfinite(x))
                    throw std::runtime_error("non-finite value in available row");
                if (mask(i, w) == 0 && !std::isnan(x))
                    throw std::runtime_error("missing row holds a non-marker value");
            }
        }
    }
    if (labels) {
        if (static_cast<int>(labels->size()) != n) throw std::runtime_error("labels length mismatch");
        for (int y : *labels)
            if (y < 0 || y >= num_clusters) throw std::runtime_error("label out of [0, C)");
    }
    if (!ground_truth_views.empty()) {
        if (static_cast<int>(ground_truth_views.size()) != v)
            throw std::runtime_error("ground truth view count mismatch");
        for (int w = 0; w < v; ++w)
            if (ground_truth_views[w].rows() != n || ground_truth_views[w].cols() != views[w].cols())
                throw std::runtime_error("ground truth shape mismatch");
    }
}

MaskSpec::Regime parse_mask_regime(const std::string& name) {
    if (name == "per-view-removal") return MaskSpec::Regime::PerViewRemoval;
    if (name == "two-view-paired") return MaskSpec::Regime::TwoViewPaired;
    throw std::runtime_error("unknown mask regime '" + name + "'");
}

std::string mask_regime_name(MaskSpec::Regime regime) {
    return regime == MaskSpec::Regime::PerViewRemoval ? "per-view-removal" : "two-view-paired";
}

MaskMatrix generate_mask(int n, int v, const MaskSpec& spec) {
    if (n < 2) throw std::runtime_error("generate_mask requires N >= 2");
    if (spec.p < 0 || spec.p > 100) throw std::runtime_error("p outside [0, 100]");
    if (spec.regime == MaskSpec::Regime::TwoViewPaired) {
        if (v != 2) throw std::runtime_error("two-view-paired regime requires V = 2");
        return mask_two_view_paired(n, spec.p, spec.seed);
    }
    if (v < 1) throw std::runtime_error("generate_mask requires V >= 1");
    return mask_per_view_removal(n, v, spec.p, spec.seed);
}

MultiViewDataset generate_synthetic(int n, int v, int c, const std::vector<int>& dims,
                                    double separation, const MaskSpec& spec) {
    if (c < 1 || v < 1) throw std::runtime_error("need C >= 1 and V >= 1");
    if (n < c * v) throw std::runtime_error("need N >= C*V");
    if (static_cast<int>(dims.size()) != v) throw std::runtime_error("dims size must equal V");
    for (int d : dims)
        if (d < 2) throw std::runtime_error("feature dims must be >= 2");
    if (separation <= 0) throw std::runtime_error("separation must be positive");

    MultiViewDataset ds;
    ds.num_clusters = c;

    // Balanced cluster memberships, shared across views.
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i % c;
    auto label_rng = make_rng(derive_seed(spec.seed, 21));
    std::shuffle(labels.begin(), labels.end(), label_rng);
    ds.labels = labels;

    auto center_rng = make_rng(derive_seed(spec.seed, 22));
    auto noise_rng = make_rng(derive_seed(spec.seed, 23));
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int w = 0; w < v; ++w) {
        const int d = dims[w];
        // Centers drawn so that typical pairwise distance sits a little above
        // `separation`; rejected sets widen the scale gradually.
        const double base_sigma = 1.25 * separation / std::sqrt(2.0 * d);
        Matrix centers(c, d);
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            const double sigma = base_sigma * (1.0 + 0.5 * (attempt / 100));
            for (int a = 0; a < c; ++a)
                for (int j = 0; j < d; ++j) centers(a, j) = sigma * gauss(center_rng);
            ok = true;
            for (int a = 0; a < c && ok; ++a)
                for (int b = a + 1; b < c && ok; ++b)
                    if ((centers.row(a) - centers.row(b)).norm() < separation) ok = false;
        }
        if (!ok) throw std::runtime_error("could not place cluster centers at requested separation");

        Matrix full(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) full(i, j) = centers(labels[i], j) + gauss(noise_rng);
        ds.ground_truth_views.push_back(full);
    }

    ds.mask = generate_mask(n, v, spec);
    for (int w = 0; w < v; ++w) {
        Matrix view = ds.ground_truth_views[w];
        for (int i = 0; i < n; ++i)
            if (ds.mask(i, w) == 0) view.row(i).setConstant(kMissing);
        ds.views.push_back(std::move(view));
    }
    ds.validate();
    return ds;
}

MultiViewDataset normalize(const MultiViewDataset& dataset) {
    dataset.validate();
    MultiViewDataset out = dataset;
    for (int w = 0; w < out.num_views(); ++w) {
        const int n = out.num_samples();
        const int d = out.dim(w);
        for (int j = 0; j < d; ++j) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            int avail = 0;
            for (int i = 0; i < n; ++i) {
                if (!dataset.available(i, w)) continue;
                lo = std::min(lo, dataset.views[w](i, j));
                hi = std::max(hi, dataset.views[w](i, j));
                ++avail;
            }
            if (avail == 0)
                throw std::runtime_error("view " + std::to_string(w) + " has no available samples");
            const double range = hi - lo;
            auto scale = [&](double x) { return range > 0 ? (x - lo) / range : 0.0; };
            for (int i = 0; i < n; ++i)
                if (dataset.available(i, w)) out.views[w](i, j) = scale(dataset.views[w](i, j));
            if (out.has_ground_truth())
                for (int i = 0; i < n; ++i)
                    out.ground_truth_views[w](i, j) = scale(dataset.ground_truth_views[w](i, j));
        }
    }
    return out;
}

namespace {

void write_matrix_csv(const std::filesystem::path& file, const Matrix& m,
                      const MaskMatrix* mask, int view) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    for (int i = 0; i < m.rows(); ++i) {
        const bool missing = mask && (*mask)(i, view) == 0;
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << (missing ? std::string("NaN") : format_double(m(i, j)));
        }
        out << '\n';
    }
}

std::map<std::string, std::string> read_meta(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("missing meta file " + file.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad meta line: " + line);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

Matrix parse_view(const std::vector<std::vector<std::string>>& rows, int n, int d,
                  const MaskMatrix& mask, int view) {
    if (static_cast<int>(rows.size()) != n)
        throw std::runtime_error("view_" + std::to_string(view) + ".csv row count mismatch");
    Matrix m(n, d);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != d)
            throw std::runtime_error("view_" + std::to_string(view) + ".csv column count mismatch");
        for (int j = 0; j < d; ++j) {
            if (mask(i, view) == 0) {
                // Mask is authoritative; cells of unavailable rows are
                // expected to hold the NaN token and are stored as missing.
                m(i, j) = kMissing;
            } else {
                m(i, j) = parse_number(rows[i][j], "view_" + std::to_string(view) + ".csv row " +
                                                       std::to_string(i));
            }
        }
    }
    return m;
}

}  // namespace

MultiViewDataset load_dataset(const std::filesystem::path& dir) {
    auto meta = read_meta(dir / "meta.txt");
    auto need = [&](const std::string& key) {
        auto it = meta.find(key);
        if (it == meta.end()) throw std::runtime_error("meta.txt missing key '" + key + "'");
        return it->second;
    };
    const int n = std::stoi(need("N"));
    const int v = std::stoi(need("V"));
    const int c = std::stoi(need("C"));
    std::vector<int> dims;
    for (const auto& f : split_fields(need("dims"))) dims.push_back(std::stoi(f));
    if (static_cast<int>(dims.size()) != v) throw std::runtime_error("meta dims count != V");

    auto mask_rows = read_csv(dir / "mask.csv");
    if (static_cast<int>(mask_rows.size()) != n) throw std::runtime_error("mask.csv row count mismatch");
    MaskMatrix mask(n, v);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(mask_rows[i].size()) != v)
            throw std::runtime_error("mask.csv column count mismatch");
        for (int w = 0; w < v; ++w) {
            const int bit = static_cast<int>(parse_number(mask_rows[i][w], "mask.csv"));
            if (bit != 0 && bit != 1) throw std::runtime_error("mask cell not 0/1");
            mask(i, w) = bit;
        }
    }

    MultiViewDataset ds;
    ds.mask = mask;
    ds.num_clusters = c;
    for (int w = 0; w < v; ++w) {
        auto rows = read_csv(dir / ("view_" + std::to_string(w) + ".csv"));
        ds.views.push_back(parse_view(rows, n, dims[w], mask, w));
    }

    if (std::filesystem::exists(dir / "labels.csv")) {
        auto rows = read_csv(dir / "labels.csv");
        if (static_cast<int>(rows.size()) != n) throw std::runtime_error("labels.csv row count mismatch");
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(parse_number(rows[i].at(0), "labels.csv"));
        ds.labels = labels;
    }

    int gt_count = 0;
    for (int w = 0; w < v; ++w)
        if (std::filesystem::exists(dir / ("gt_view_" + std::to_string(w) + ".csv"))) ++gt_count;
    if (gt_count == v) {
        for (int w = 0; w < v; ++w) {
            auto rows = read_csv(dir / ("gt_view_" + std::to_string(w) + ".csv"));
            if (static_cast<int>(rows.size()) != n)
                throw std::runtime_error("gt_view row count mismatch");
            Matrix m(n, dims[w]);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < dims[w]; ++j) m(i, j) = parse_number(rows[i].at(j), "gt_view");
            ds.ground_truth_views.push_back(std::move(m));
        }
    } else if (gt_count != 0) {
        throw std::runtime_error("ground truth files present for only some views");
    }

    ds.validate();
    return ds;
}

void save_dataset(const MultiViewDataset& dataset, const std::filesystem::path& dir) {
    dataset.validate();
    std::filesystem::create_directories(dir);
    {
        std::ofstream meta(dir / "meta.txt");
        meta << "N=" << dataset.num_samples() << "\nV=" << dataset.num_views()
             << "\nC=" << dataset.num_clusters << "\ndims=";
        for (int w = 0; w < dataset.num_views(); ++w) meta << (w ? "," : "") << dataset.dim(w);
        meta << "\n";
    }
    {
        std::ofstream out(dir / "mask.csv");
        for (int i = 0; i < dataset.num_samples(); ++i) {
            for (int w = 0; w < dataset.num_views(); ++w) out << (w ? "," : "") << dataset.mask(i, w);
            out << '\n';
        }
    }
    for (int w = 0; w < dataset.num_views(); ++w)
        write_matrix_csv(dir / ("view_" + std::to_string(w) + ".csv"), dataset.views[w],
                         &dataset.mask, w);
    if (dataset.labels) {
        std::ofstream out(dir / "labels.csv");
        for (int y : *dataset.labels) out << y << '\n';
    }
    for (std::size_t w = 0; w < dataset.ground_truth_views.size(); ++w)
        write_matrix_csv(dir / ("gt_view_" + std::to_string(w) + ".csv"),
                         dataset.ground_truth_views[w], nullptr, 0);
}

}  // namespace pmvc
