#pragma once

#include "pmvc/config.hpp"
#include "pmvc/dataio.hpp"
#include "pmvc/trainer.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace pmvc {

/// Trainer settings read from `train.*` keys; `default_seed` applies when
/// train.seed is absent.
TrainConfig train_config_from(const Config& cfg, std::uint64_t default_seed);

/// Dataset named by the config: `data.path` loads a directory, otherwise
/// synthetic blobs are generated from `data.*` and `mask.*` keys with
/// `default_data_seed` when data.seed is absent. Returned unnormalized.
MultiViewDataset dataset_from(const Config& cfg, std::uint64_t default_data_seed);

/// One full train-and-evaluate pass; writes history.csv, final.ckpt,
/// metrics.txt and labels_pred.csv into out_dir (unless empty). Returns the
/// ordered metric columns.
std::vector<std::pair<std::string, double>> run_pipeline(const MultiViewDataset& raw,
                                                         const Config& cfg,
                                                         std::uint64_t run_seed,
                                                         const std::filesystem::path& out_dir);

/// Experiment driver: expands `sweep.*` axes into a Cartesian grid (when
/// `expand_sweeps`), runs every point x repeat, writes metrics.csv and
/// aggregate.csv under out_dir. Returns a process exit status (nonzero when
/// any run failed). `jobs` bounds concurrent runs.
int run_experiment(const Config& cfg, const std::filesystem::path& out_dir, bool expand_sweeps,
                   int jobs = 1);

}  // namespace pmvc
