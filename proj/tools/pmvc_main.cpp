#include "pmvc/config.hpp"
#include "pmvc/eval.hpp"
#include "pmvc/experiment.hpp"
#include "pmvc/graph.hpp"
#include "pmvc/network.hpp"
#include "pmvc/trainer.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace pmvc;

struct Overrides {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int repeats = 0;
    double alpha = 0, beta = 0, p = 0;
    int k = 0, stage2_start = 0, max_epochs = 0, jobs = 1;
    bool alpha_set = false, beta_set = false, p_set = false, k_set = false;
    bool stage2_set = false, epochs_set = false;
    bool disable_rec = false, disable_wgc = false, disable_cgc = false;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "key=value config file");
    cmd->add_option("--out", o.out_dir, "output directory")->required();
    cmd->add_option("--seed", o.seed, "root seed")->each([&](const std::string&) { o.seed_set = true; });
    cmd->add_option("--repeats", o.repeats, "repeats per sweep point");
    cmd->add_option("--alpha", o.alpha)->each([&](const std::string&) { o.alpha_set = true; });
    cmd->add_option("--beta", o.beta)->each([&](const std::string&) { o.beta_set = true; });
    cmd->add_option("--k", o.k, "neighbour count")->each([&](const std::string&) { o.k_set = true; });
    cmd->add_option("--p", o.p, "mask percentage")->each([&](const std::string&) { o.p_set = true; });
    cmd->add_option("--stage2-start", o.stage2_start)
        ->each([&](const std::string&) { o.stage2_set = true; });
    cmd->add_option("--max-epochs", o.max_epochs)
        ->each([&](const std::string&) { o.epochs_set = true; });
    cmd->add_option("--jobs", o.jobs, "parallel runs");
    cmd->add_flag("--disable-rec", o.disable_rec, "drop the reconstruction term");
    cmd->add_flag("--disable-wgc", o.disable_wgc, "drop the within-view contrastive term");
    cmd->add_flag("--disable-cgc", o.disable_cgc, "drop the cross-view consistency term");
}

Config build_config(const Overrides& o) {
    Config cfg = o.config_path.empty() ? Config() : Config::from_file(o.config_path);
    if (o.seed_set) cfg.set("seed", std::to_string(o.seed));
    if (o.repeats > 0) cfg.set("repeats", std::to_string(o.repeats));
    if (o.alpha_set) cfg.set("train.alpha", format_double(o.alpha));
    if (o.beta_set) cfg.set("train.beta", format_double(o.beta));
    if (o.k_set) cfg.set("train.k", std::to_string(o.k));
    if (o.p_set) cfg.set("mask.p", format_double(o.p));
    if (o.stage2_set) cfg.set("train.stage2_start", std::to_string(o.stage2_start));
    if (o.epochs_set) cfg.set("train.max_epochs", std::to_string(o.max_epochs));
    if (o.disable_rec) cfg.set("train.disable_rec", "true");
    if (o.disable_wgc) cfg.set("train.disable_wgc", "true");
    if (o.disable_cgc) cfg.set("train.disable_cgc", "true");
    return cfg;
}

int cmd_gen_data(const std::string& out, int n, int v, int c, const std::string& dims,
                 double separation, const std::string& regime, double p, std::uint64_t seed) {
    std::vector<int> dim_list;
    for (const auto& f : split_list(dims)) dim_list.push_back(std::stoi(f));
    if (dim_list.empty()) dim_list.assign(v, 10);
    MaskSpec spec;
    spec.regime = parse_mask_regime(regime.empty() ? (v == 2 ? "two-view-paired" : "per-view-removal")
                                                   : regime);
    spec.p = p;
    spec.seed = seed;
    const MultiViewDataset ds = generate_synthetic(n, v, c, dim_list, separation, spec);
    save_dataset(ds, out);
    std::cout << "wrote dataset: N=" << ds.num_samples() << " V=" << ds.num_views()
              << " C=" << ds.num_clusters << " -> " << out << "\n";
    return 0;
}

int cmd_evaluate(const std::string& data, const std::string& checkpoint, const std::string& out,
                 std::uint64_t seed, bool kmeans_seed_set, std::uint64_t kmeans_seed, int k,
                 int restarts) {
    const MultiViewDataset ds = normalize(load_dataset(data));
    ArchitectureSpec arch;
    AutoencoderParams params;
    load_checkpoint(checkpoint, arch, params);
    for (int v = 0; v < ds.num_views(); ++v)
        if (arch.input_dims.at(v) != ds.dim(v))
            throw std::runtime_error("checkpoint dims do not match dataset");

    const RelationGraph p = build_initial_graphs(ds, k);
    std::vector<Matrix> inputs;
    for (int v = 0; v < ds.num_views(); ++v) inputs.push_back(effective_inputs(ds, p, v));
    const Matrix zstar = fuse_representations(full_representations(params, inputs));
    const std::uint64_t ks = kmeans_seed_set ? kmeans_seed : derive_seed(seed, 3);
    const std::vector<int> pred = eval::kmeans(zstar, ds.num_clusters, ks, restarts);

    std::vector<std::pair<std::string, double>> metrics;
    if (ds.has_labels()) {
        metrics.emplace_back("acc", eval::accuracy(pred, *ds.labels));
        metrics.emplace_back("nmi", eval::nmi(pred, *ds.labels));
        metrics.emplace_back("ari", eval::ari(pred, *ds.labels));
    }
    if (ds.has_ground_truth()) {
        const auto model_err = eval::nrmse(ds, reconstruct_all(params, inputs));
        const auto base_err = eval::nrmse(ds, eval::mean_impute(ds));
        for (std::size_t v = 0; v < model_err.size(); ++v) {
            if (!model_err[v]) continue;
            metrics.emplace_back("nrmse_" + std::to_string(v), *model_err[v]);
            metrics.emplace_back("nrmse_baseline_" + std::to_string(v), *base_err[v]);
        }
    }
    std::filesystem::create_directories(out);
    std::ofstream txt(std::filesystem::path(out) / "metrics.txt");
    for (const auto& [key, val] : metrics) {
        txt << key << '=' << format_double(val) << '\n';
        std::cout << key << '=' << format_double(val) << '\n';
    }
    std::ofstream lab(std::filesystem::path(out) / "labels_pred.csv");
    for (int y : pred) lab << y << '\n';
    return 0;
}

int cmd_dump_repr(const std::string& data, const std::string& checkpoint, const std::string& out,
                  int k) {
    const MultiViewDataset ds = normalize(load_dataset(data));
    ArchitectureSpec arch;
    AutoencoderParams params;
    load_checkpoint(checkpoint, arch, params);
    const RelationGraph p = build_initial_graphs(ds, k);
    std::vector<Matrix> inputs;
    for (int v = 0; v < ds.num_views(); ++v) inputs.push_back(effective_inputs(ds, p, v));
    const Matrix zstar = fuse_representations(full_representations(params, inputs));
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    for (int j = 0; j < zstar.cols(); ++j) f << 'z' << j << ',';
    f << "label\n";
    for (int i = 0; i < zstar.rows(); ++i) {
        for (int j = 0; j < zstar.cols(); ++j) f << format_double(zstar(i, j)) << ',';
        f << (ds.has_labels() ? (*ds.labels)[i] : -1) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"partial multi-view clustering via graph-contrastive autoencoders"};
    app.require_subcommand(1);

    // gen-data
    std::string gd_out, gd_dims, gd_regime;
    int gd_n = 300, gd_v = 2, gd_c = 3;
    double gd_sep = 6.0, gd_p = 30.0;
    std::uint64_t gd_seed = 0;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset directory");
    gen->add_option("--out", gd_out)->required();
    gen->add_option("--n", gd_n);
    gen->add_option("--v", gd_v);
    gen->add_option("--c", gd_c);
    gen->add_option("--dims", gd_dims, "comma list, one per view");
    gen->add_option("--separation", gd_sep);
    gen->add_option("--regime", gd_regime, "per-view-removal | two-view-paired");
    gen->add_option("--p", gd_p);
    gen->add_option("--seed", gd_seed);

    // run / sweep
    Overrides run_o, sweep_o;
    auto* run = app.add_subcommand("run", "single experiment from a config");
    add_override_flags(run, run_o);
    auto* sweep = app.add_subcommand("sweep", "expand sweep.* axes and run the grid");
    add_override_flags(sweep, sweep_o);

    // train
    Overrides tr_o;
    std::string tr_data;
    auto* tr = app.add_subcommand("train", "train on a dataset directory and evaluate");
    tr->add_option("--data", tr_data)->required();
    add_override_flags(tr, tr_o);

    // evaluate
    std::string ev_data, ev_ckpt, ev_out;
    std::uint64_t ev_seed = 0, ev_kseed = 0;
    bool ev_kseed_set = false;
    int ev_k = 5, ev_restarts = 10;
    auto* ev = app.add_subcommand("evaluate", "cluster and score a saved checkpoint");
    ev->add_option("--data", ev_data)->required();
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--out", ev_out)->required();
    ev->add_option("--seed", ev_seed);
    ev->add_option("--kmeans-seed", ev_kseed)->each([&](const std::string&) { ev_kseed_set = true; });
    ev->add_option("--k", ev_k);
    ev->add_option("--restarts", ev_restarts);

    // dump-graphs
    std::string dg_data, dg_out;
    int dg_k = 5;
    auto* dg = app.add_subcommand("dump-graphs", "write the initial relation graphs as CSV");
    dg->add_option("--data", dg_data)->required();
    dg->add_option("--out", dg_out)->required();
    dg->add_option("--k", dg_k);

    // dump-repr
    std::string dr_data, dr_ckpt, dr_out;
    int dr_k = 5;
    auto* dr = app.add_subcommand("dump-repr", "write fused representations with labels as CSV");
    dr->add_option("--data", dr_data)->required();
    dr->add_option("--checkpoint", dr_ckpt)->required();
    dr->add_option("--out", dr_out)->required();
    dr->add_option("--k", dr_k);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen_data(gd_out, gd_n, gd_v, gd_c, gd_dims, gd_sep, gd_regime, gd_p, gd_seed);
        if (run->parsed())
            return run_experiment(build_config(run_o), run_o.out_dir, /*expand_sweeps=*/false,
                                  run_o.jobs);
        if (sweep->parsed())
            return run_experiment(build_config(sweep_o), sweep_o.out_dir, /*expand_sweeps=*/true,
                                  sweep_o.jobs);
        if (tr->parsed()) {
            Config cfg = build_config(tr_o);
            cfg.set("data.path", tr_data);
            if (tr_o.seed_set) cfg.set("train.seed", std::to_string(tr_o.seed));
            return run_experiment(cfg, tr_o.out_dir, /*expand_sweeps=*/false, 1);
        }
        if (ev->parsed())
            return cmd_evaluate(ev_data, ev_ckpt, ev_out, ev_seed, ev_kseed_set, ev_kseed, ev_k,
                                ev_restarts);
        if (dg->parsed()) {
            const MultiViewDataset ds = normalize(load_dataset(dg_data));
            dump_graph_csv(build_initial_graphs(ds, dg_k), dg_out);
            return 0;
        }
        if (dr->parsed()) return cmd_dump_repr(dr_data, dr_ckpt, dr_out, dr_k);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
