#pragma once

// Configuration files, the (strategy, seed) run matrix and all file output.
//
// Layout under the output directory:
//   manifest.json
//   summary.csv                       (after summarize)
//   <strategy>/seed_<s>/metrics.csv
//   <strategy>/seed_<s>/scores_round_<t>.csv
//   <strategy>/seed_<s>/embeddings_round_<t>.csv
//   <strategy>/seed_<s>/FAILED         (only when the run threw)

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "samosa/alcore.hpp"

namespace samosa {

inline constexpr std::string_view kToolVersion = "samosa_lab 0.1.0";

inline constexpr std::string_view kMetricsHeader =
    "strategy,seed,round,accuracy,precision,recall,n_labeled,n_invalid,n_valid_queries,loss_sgd,loss_sam,loss_test";

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message) : std::runtime_error(message), key_(std::move(key)) {}
  /// Offending key, empty for file-level problems.
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Flat JSON object; missing keys keep their defaults, unknown keys are
/// rejected. The result is validated.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Every key with its current value. parse_config_text(write_config(c)) == c
/// whenever c.train.sgd.lr == c.train.schedule.initial_lr (both map to `lr`).
std::string write_config(const ExperimentConfig& cfg);

/// "n" means seeds 1..n, "a..b" an inclusive range, "a,b,c" an explicit list.
std::vector<std::uint64_t> parse_seeds(std::string_view text);

/// Writes to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string metrics_csv(std::string_view strategy, std::uint64_t seed, const std::vector<RoundMetrics>& rounds);
std::string scores_csv(const std::vector<ScoreRow>& rows);
/// id,true_class,subclass,is_known,split,e_1..e_m under model f.
std::string embeddings_csv(const Dataset& data, const PoolState& state, const ModelParams& f);

struct RunManifest {
  ExperimentConfig config;
  std::vector<QuerySpec> strategies;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir;
  std::string version{kToolVersion};
};

std::filesystem::path cell_dir(const RunManifest& m, const QuerySpec& s, std::uint64_t seed);

/// Runs every (strategy, seed) cell. Returns 0 when all succeed, 1 otherwise.
/// Failed cells keep their partial outputs next to a FAILED marker.
int run_matrix(const RunManifest& manifest, std::ostream& log);

struct SummaryRow {
  std::string strategy;
  std::size_t runs = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample std, 0 for a single run
  double avg_rank = 0.0;      // over seeds, 1 = best, ties share the mean rank
};

/// Final-round accuracies per (strategy, seed) for the completed cells.
struct FinalAccuracy {
  std::string strategy;
  std::uint64_t seed;
  double accuracy;
};

std::vector<SummaryRow> summarize_accuracies(const std::vector<FinalAccuracy>& finals);

/// Reads every completed metrics.csv under `out_dir`, writes summary.csv and
/// returns its rows. Throws std::runtime_error when nothing completed.
std::vector<SummaryRow> summarize(const std::filesystem::path& out_dir);

/// pool.csv (id,true_class,subclass,is_known,split,signal_patch) and
/// patches.txt (id followed by the P*d patch values, row-major).
void export_pool(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Entry point behind tools/samosa_lab. Exit codes: 0 ok, 1 run failure,
/// 2 config or usage error.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace samosa
