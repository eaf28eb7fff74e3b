#include "pmvc/experiment.hpp"

#include "pmvc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pmvc {

namespace {

struct MetricsRow {
    int point = 0;
    int repeat = 0;
    std::uint64_t seed = 0;
    std::string status = "ok";
    std::vector<std::pair<std::string, std::string>> axes;
    std::vector<std::pair<std::string, double>> metrics;
};

void apply_enabled_terms(TrainConfig& tc, const std::string& spec) {
    tc.enable_rec = tc.enable_wgc = tc.enable_cgc = false;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, '+')) {
        if (tok == "rec")
            tc.enable_rec = true;
        else if (tok == "wgc")
            tc.enable_wgc = true;
        else if (tok == "cgc")
            tc.enable_cgc = true;
        else
            throw std::runtime_error("unknown loss term '" + tok + "' in train.enabled_terms");
    }
}

}  // namespace

TrainConfig train_config_from(const Config& cfg, std::uint64_t default_seed) {
    TrainConfig tc;
    tc.alpha = cfg.get_double("train.alpha", tc.alpha);
    tc.beta = cfg.get_double("train.beta", tc.beta);
    tc.k = cfg.get_int("train.k", tc.k);
    tc.max_epochs = cfg.get_int("train.max_epochs", tc.max_epochs);
    tc.stage2_start = cfg.get_int("train.stage2_start", tc.stage2_start);
    tc.learning_rate = cfg.get_double("train.learning_rate", tc.learning_rate);
    tc.batch_size = cfg.get_int("train.batch_size", tc.batch_size);
    tc.q_rebuild_interval = cfg.get_int("train.q_rebuild_interval", tc.q_rebuild_interval);
    tc.seed = cfg.get_uint64("train.seed", default_seed);
    tc.enable_rec = !cfg.get_bool("train.disable_rec", false);
    tc.enable_wgc = !cfg.get_bool("train.disable_wgc", false);
    tc.enable_cgc = !cfg.get_bool("train.disable_cgc", false);
    if (cfg.has("train.enabled_terms"))
        apply_enabled_terms(tc, cfg.get_string("train.enabled_terms", ""));
    const std::string mode = cfg.get_string("train.wgc_denominator", "literal");
    if (mode == "literal")
        tc.wgc_denominator = WgcDenominator::Literal;
    else if (mode == "exclude_self")
        tc.wgc_denominator = WgcDenominator::ExcludeSelf;
    else
        throw std::runtime_error("train.wgc_denominator must be literal or exclude_self");
    tc.wgc_include_missing = cfg.get_bool("train.wgc_include_missing", tc.wgc_include_missing);
    tc.hidden = cfg.get_int_list("train.hidden", tc.hidden);
    tc.sigmoid_output = cfg.get_bool("train.sigmoid_output", tc.sigmoid_output);
    tc.finetune = cfg.get_bool("train.finetune", tc.finetune);
    tc.finetune_epochs = cfg.get_int("train.finetune_epochs", tc.finetune_epochs);
    tc.finetune_lr = cfg.get_double("train.finetune_lr", tc.finetune_lr);
    tc.early_stop = cfg.get_bool("train.early_stop", tc.early_stop);
    tc.tolerance = cfg.get_double("train.tolerance", tc.tolerance);
    tc.checkpoint_interval = cfg.get_int("train.checkpoint_interval", tc.checkpoint_interval);
    return tc;
}

MultiViewDataset dataset_from(const Config& cfg, std::uint64_t default_data_seed) {
    if (cfg.has("data.path")) return load_dataset(cfg.get_string("data.path", ""));
    const int n = cfg.get_int("data.n", 300);
    const int v = cfg.get_int("data.v", 2);
    const int c = cfg.get_int("data.c", 3);
    std::vector<int> dims = cfg.get_int_list("data.dims", std::vector<int>(v, 10));
    const double separation = cfg.get_double("data.separation", 6.0);
    MaskSpec spec;
    spec.regime = parse_mask_regime(
        cfg.get_string("mask.regime", v == 2 ? "two-view-paired" : "per-view-removal"));
    spec.p = cfg.get_double("mask.p", 30.0);
    spec.seed = cfg.get_uint64("data.seed", default_data_seed);
    return generate_synthetic(n, v, c, dims, separation, spec);
}

std::vector<std::pair<std::string, double>> run_pipeline(const MultiViewDataset& raw,
                                                         const Config& cfg,
                                                         std::uint64_t run_seed,
                                                         const std::filesystem::path& out_dir) {
    const MultiViewDataset ds = normalize(raw);
    TrainConfig tc = train_config_from(cfg, derive_seed(run_seed, 2));
    if (!out_dir.empty() && tc.checkpoint_interval > 0 && tc.checkpoint_dir.empty())
        tc.checkpoint_dir = out_dir / "checkpoints";

    TrainState state = train(ds, tc);
    if (tc.finetune && tc.finetune_epochs > 0 && tc.max_epochs > 0)
        state = fine_tune_kl(std::move(state), ds, tc);

    const std::vector<Matrix> z = full_representations(state.params, state.inputs);
    const Matrix zstar = fuse_representations(z);
    const std::uint64_t kmeans_seed = cfg.get_uint64("eval.kmeans_seed", derive_seed(run_seed, 3));
    const int restarts = cfg.get_int("eval.restarts", 10);
    const std::vector<int> pred =
        eval::kmeans(zstar, ds.num_clusters, kmeans_seed, restarts);

    std::vector<std::pair<std::string, double>> metrics;
    if (ds.has_labels()) {
        metrics.emplace_back("acc", eval::accuracy(pred, *ds.labels));
        metrics.emplace_back("nmi", eval::nmi(pred, *ds.labels));
        metrics.emplace_back("ari", eval::ari(pred, *ds.labels));
    }
    if (ds.has_ground_truth()) {
        const auto model_err = eval::nrmse(ds, reconstruct_all(state.params, state.inputs));
        const auto base_err = eval::nrmse(ds, eval::mean_impute(ds));
        for (std::size_t v = 0; v < model_err.size(); ++v) {
            if (!model_err[v]) continue;
            metrics.emplace_back("nrmse_" + std::to_string(v), *model_err[v]);
            metrics.emplace_back("nrmse_baseline_" + std::to_string(v), *base_err[v]);
        }
    }
    if (!state.history.empty()) {
        const EpochStats& last = state.history.back();
        metrics.emplace_back("loss_rec", last.rec);
        metrics.emplace_back("loss_wgc", last.wgc);
        metrics.emplace_back("loss_cgc", last.cgc);
        metrics.emplace_back("loss_total", last.total);
    }
    if (ds.has_labels()) {
        metrics.emplace_back("graph_error_initial", graph_error(state.p, *ds.labels));
        metrics.emplace_back("graph_error_final",
                             graph_error(state.has_q ? state.q : state.p, *ds.labels));
    }

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_history_csv(state.history, out_dir / "history.csv");
        save_checkpoint(state.arch, state.params, out_dir / "final.ckpt");
        std::ofstream txt(out_dir / "metrics.txt");
        for (const auto& [k, v] : metrics) txt << k << '=' << format_double(v) << '\n';
        std::ofstream lab(out_dir / "labels_pred.csv");
        for (int y : pred) lab << y << '\n';
    }
    return metrics;
}

namespace {

struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

std::vector<SweepAxis> sweep_axes(const Config& cfg) {
    std::vector<SweepAxis> axes;
    for (const auto& key : cfg.keys_with_prefix("sweep.")) {
        SweepAxis axis;
        axis.key = key.substr(6);
        axis.values = split_list(cfg.get_string(key, ""));
        if (axis.values.empty())
            throw std::runtime_error("sweep axis '" + key + "' has no values");
        axes.push_back(std::move(axis));
    }
    return axes;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

int run_experiment(const Config& cfg, const std::filesystem::path& out_dir, bool expand_sweeps,
                   int jobs) {
    const std::uint64_t root_seed = cfg.get_uint64("seed", 0);
    const int repeats = cfg.get_int("repeats", 1);
    if (repeats < 1) throw std::runtime_error("repeats must be >= 1");

    std::vector<SweepAxis> axes = expand_sweeps ? sweep_axes(cfg) : std::vector<SweepAxis>{};
    long points = 1;
    for (const auto& a : axes) points *= static_cast<long>(a.values.size());

    struct Job {
        int point;
        int repeat;
        Config cfg;
        std::vector<std::pair<std::string, std::string>> axis_values;
    };
    std::vector<Job> jobs_list;
    for (long p = 0; p < points; ++p) {
        Config point_cfg = cfg;
        std::vector<std::pair<std::string, std::string>> axis_values;
        long rest = p;
        for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
            const auto& axis = *it;
            const std::string& value = axis.values[rest % axis.values.size()];
            rest /= static_cast<long>(axis.values.size());
            point_cfg.set(axis.key, value);
            axis_values.emplace_back(axis.key, value);
        }
        std::reverse(axis_values.begin(), axis_values.end());
        for (int r = 0; r < repeats; ++r)
            jobs_list.push_back({static_cast<int>(p), r, point_cfg, axis_values});
    }

    std::filesystem::create_directories(out_dir);
    const bool single = points == 1 && repeats == 1;
    std::vector<MetricsRow> rows(jobs_list.size());

    auto execute = [&](std::size_t idx) {
        const Job& job = jobs_list[idx];
        MetricsRow row;
        row.point = job.point;
        row.repeat = job.repeat;
        row.axes = job.axis_values;
        const std::uint64_t derived =
            derive_seed(derive_seed(root_seed, 7000 + static_cast<std::uint64_t>(job.point)),
                        static_cast<std::uint64_t>(job.repeat));
        const std::uint64_t run_seed = job.cfg.get_uint64("train.seed", derived);
        row.seed = run_seed;
        const std::filesystem::path run_dir =
            single ? out_dir
                   : out_dir / ("point_" + std::to_string(job.point)) /
                         ("rep_" + std::to_string(job.repeat));
        try {
            const MultiViewDataset raw = dataset_from(job.cfg, derive_seed(run_seed, 1));
            row.metrics = run_pipeline(raw, job.cfg, run_seed, run_dir);
        } catch (const std::exception& e) {
            row.status = std::string("failed: ") + e.what();
        }
        rows[idx] = std::move(row);
    };

    if (jobs <= 1 || jobs_list.size() <= 1) {
        for (std::size_t i = 0; i < jobs_list.size(); ++i) execute(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (std::size_t i = next.fetch_add(1); i < jobs_list.size(); i = next.fetch_add(1))
                execute(i);
        };
        std::vector<std::thread> pool;
        const int nthreads = std::min<int>(jobs, static_cast<int>(jobs_list.size()));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Union of metric keys in first-seen order.
    std::vector<std::string> metric_keys;
    for (const auto& row : rows)
        for (const auto& [k, v] : row.metrics)
            if (std::find(metric_keys.begin(), metric_keys.end(), k) == metric_keys.end())
                metric_keys.push_back(k);
    std::vector<std::string> axis_keys;
    for (const auto& a : axes) axis_keys.push_back(a.key);

    {
        std::ofstream out(out_dir / "metrics.csv");
        out << "point,repeat,seed,status";
        for (const auto& k : axis_keys) out << ',' << csv_escape(k);
        for (const auto& k : metric_keys) out << ',' << k;
        out << '\n';
        for (const auto& row : rows) {
            out << row.point << ',' << row.repeat << ',' << row.seed << ','
                << csv_escape(row.status);
            for (const auto& k : axis_keys) {
                auto it = std::find_if(row.axes.begin(), row.axes.end(),
                                       [&](const auto& kv) { return kv.first == k; });
                out << ',' << (it == row.axes.end() ? "" : csv_escape(it->second));
            }
            for (const auto& k : metric_keys) {
                auto it = std::find_if(row.metrics.begin(), row.metrics.end(),
                                       [&](const auto& kv) { return kv.first == k; });
                out << ',' << (it == row.metrics.end() ? "" : format_double(it->second));
            }
            out << '\n';
        }
    }

    bool any_failed = false;
    {
        std::ofstream out(out_dir / "aggregate.csv");
        out << "point";
        for (const auto& k : axis_keys) out << ',' << csv_escape(k);
        out << ",runs_ok";
        for (const auto& k : metric_keys) out << ',' << k << "_mean," << k << "_std";
        out << '\n';
        for (long p = 0; p < points; ++p) {
            out << p;
            const MetricsRow* first = nullptr;
            for (const auto& row : rows)
                if (row.point == p) {
                    first = &row;
                    break;
                }
            for (const auto& k : axis_keys) {
                auto it = std::find_if(first->axes.begin(), first->axes.end(),
                                       [&](const auto& kv) { return kv.first == k; });
                out << ',' << (it == first->axes.end() ? "" : csv_escape(it->second));
            }
            long ok = 0;
            for (const auto& row : rows)
                if (row.point == p && row.status == "ok") ++ok;
            for (const auto& row : rows)
                if (row.point == p && row.status != "ok") any_failed = true;
            out << ',' << ok;
            for (const auto& k : metric_keys) {
                std::vector<double> vals;
                for (const auto& row : rows) {
                    if (row.point != p || row.status != "ok") continue;
                    auto it = std::find_if(row.metrics.begin(), row.metrics.end(),
                                           [&](const auto& kv) { return kv.first == k; });
                    if (it != row.metrics.end()) vals.push_back(it->second);
                }
                if (vals.empty()) {
                    out << ",,";
                    continue;
                }
                double mean = 0;
                for (double x : vals) mean += x;
                mean /= static_cast<double>(vals.size());
                double var = 0;
                for (double x : vals) var += (x - mean) * (x - mean);
                const double sd =
                    vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
                out << ',' << format_double(mean) << ',' << format_double(sd);
            }
            out << '\n';
        }
    }
    return any_failed ? 1 : 0;
}

}  // namespace pmvc
