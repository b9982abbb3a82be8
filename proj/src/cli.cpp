#include "samosa/cli.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace samosa {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Field {
  std::string_view key;
  std::function<Json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const Json&)> set;
};

std::size_t as_count(const Json& v, std::string_view key) {
  if (!v.is_number_unsigned()) throw ConfigError(std::string(key), fmt::format("{} must be a non-negative integer", key));
  return v.get<std::size_t>();
}

int as_int(const Json& v, std::string_view key) {
  if (!v.is_number_integer()) throw ConfigError(std::string(key), fmt::format("{} must be an integer", key));
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(std::string(key), fmt::format("{} is out of range", key));
  }
  return static_cast<int>(x);
}

double as_real(const Json& v, std::string_view key) {
  if (!v.is_number()) throw ConfigError(std::string(key), fmt::format("{} must be a number", key));
  return v.get<double>();
}

template <typename T>
Field count_field(std::string_view key, T ExperimentConfig::*outer, std::size_t T::*member) {
  return {key, [=](const ExperimentConfig& c) { return Json((c.*outer).*member); },
          [=](ExperimentConfig& c, const Json& v) { (c.*outer).*member = as_count(v, key); }};
}

template <typename T>
Field real_field(std::string_view key, T ExperimentConfig::*outer, double T::*member) {
  return {key, [=](const ExperimentConfig& c) { return Json((c.*outer).*member); },
          [=](ExperimentConfig& c, const Json& v) { (c.*outer).*member = as_real(v, key); }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      count_field("num_known", &C::gen, &GenConfig::num_known),
      count_field("num_unknown", &C::gen, &GenConfig::num_unknown),
      count_field("per_class", &C::gen, &GenConfig::per_class),
      real_field("atypical_fraction", &C::gen, &GenConfig::atypical_fraction),
      count_field("patches", &C::gen, &GenConfig::patches),
      count_field("dim", &C::gen, &GenConfig::dim),
      real_field("sigma_p", &C::gen, &GenConfig::sigma_p),
      real_field("alpha", &C::gen, &GenConfig::alpha),
      real_field("beta", &C::gen, &GenConfig::beta),
      real_field("mu_norm", &C::gen, &GenConfig::mu_norm),
      {"mismatch_ratio", [](const C& c) { return Json(c.mismatch_ratio); },
       [](C& c, const Json& v) { c.mismatch_ratio = as_real(v, "mismatch_ratio"); }},
      {"init_labeled_frac", [](const C& c) { return Json(c.init_labeled_frac); },
       [](C& c, const Json& v) { c.init_labeled_frac = as_real(v, "init_labeled_frac"); }},
      {"test_frac", [](const C& c) { return Json(c.test_frac); },
       [](C& c, const Json& v) { c.test_frac = as_real(v, "test_frac"); }},
      real_field("flip_prob", &C::oracle, &OracleConfig::flip_prob),
      {"epochs", [](const C& c) { return Json(c.train.epochs); },
       [](C& c, const Json& v) { c.train.epochs = as_int(v, "epochs"); }},
      {"batch_size", [](const C& c) { return Json(c.train.batch_size); },
       [](C& c, const Json& v) { c.train.batch_size = as_int(v, "batch_size"); }},
      {"lr", [](const C& c) { return Json(c.train.schedule.initial_lr); },
       [](C& c, const Json& v) { c.train.schedule.initial_lr = c.train.sgd.lr = as_real(v, "lr"); }},
      {"lr_step", [](const C& c) { return Json(c.train.schedule.step_size); },
       [](C& c, const Json& v) { c.train.schedule.step_size = as_int(v, "lr_step"); }},
      {"lr_gamma", [](const C& c) { return Json(c.train.schedule.gamma); },
       [](C& c, const Json& v) { c.train.schedule.gamma = as_real(v, "lr_gamma"); }},
      {"momentum", [](const C& c) { return Json(c.train.sgd.momentum); },
       [](C& c, const Json& v) { c.train.sgd.momentum = as_real(v, "momentum"); }},
      {"weight_decay", [](const C& c) { return Json(c.train.sgd.weight_decay); },
       [](C& c, const Json& v) { c.train.sgd.weight_decay = as_real(v, "weight_decay"); }},
      {"rho", [](const C& c) { return Json(c.train.sam.rho); },
       [](C& c, const Json& v) { c.train.sam.rho = as_real(v, "rho"); }},
      {"width", [](const C& c) { return Json(c.width); }, [](C& c, const Json& v) { c.width = as_count(v, "width"); }},
      {"init_sigma", [](const C& c) { return Json(c.init_sigma); },
       [](C& c, const Json& v) { c.init_sigma = as_real(v, "init_sigma"); }},
      {"rounds", [](const C& c) { return Json(c.rounds); }, [](C& c, const Json& v) { c.rounds = as_int(v, "rounds"); }},
      {"budget", [](const C& c) { return Json(c.budget); },
       [](C& c, const Json& v) { c.budget = as_count(v, "budget"); }},
      {"strategy", [](const C& c) { return Json(c.strategy.name()); },
       [](C& c, const Json& v) {
         if (!v.is_string()) throw ConfigError("strategy", "strategy must be a string");
         try {
           c.strategy = QuerySpec::parse(v.get<std::string>());
         } catch (const std::invalid_argument& e) {
           throw ConfigError("strategy", e.what());
         }
       }},
      {"seed", [](const C& c) { return Json(c.seed); },
       [](C& c, const Json& v) { c.seed = static_cast<std::uint64_t>(as_count(v, "seed")); }},
  };
  return table;
}

std::string leading_key(std::string_view message) {
  const auto end = message.find(' ');
  return std::string(message.substr(0, end));
}

void validate_as_config(const ExperimentConfig& cfg) {
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(leading_key(e.what()), e.what());
  }
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("seeds", fmt::format("invalid seed value '{}'", s));
  }
  return v;
}

std::string num(double x) { return fmt::format("{}", x); }

std::vector<std::string_view> split_names(const Dataset& data, const PoolState& st) {
  std::vector<std::string_view> split(data.size(), "none");
  for (const auto& l : st.labeled) split[l.id] = "labeled";
  for (auto id : st.unlabeled) split[id] = "unlabeled";
  for (auto id : st.invalid) split[id] = "invalid";
  for (auto id : st.test) split[id] = "test";
  return split;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

void run_cell(const RunManifest& m, const QuerySpec& strategy, std::uint64_t seed) {
  ExperimentConfig cfg = m.config;
  cfg.strategy = strategy;
  cfg.seed = seed;
  const fs::path dir = cell_dir(m, strategy, seed);
  fs::create_directories(dir);
  fs::remove(dir / "FAILED");
  try {
    const auto observer = [&](const Dataset& data, const PoolState& st, const RoundOutcome& o) {
      const int t = o.metrics.round;
      write_atomic(dir / fmt::format("scores_round_{}.csv", t), scores_csv(o.scores));
      write_atomic(dir / fmt::format("embeddings_round_{}.csv", t), embeddings_csv(data, st, o.models.f_test));
    };
    const ExperimentResult res = run_experiment(cfg, observer);
    write_atomic(dir / "metrics.csv", metrics_csv(strategy.name(), seed, res.rounds));
  } catch (const std::exception& e) {
    write_atomic(dir / "FAILED", std::string(e.what()) + "\n");
    throw;
  }
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ConfigError("", fmt::format("malformed config: {}", e.what()));
  }
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw ConfigError(key, fmt::format("unknown config key '{}'", key));
    it->set(cfg, value);
  }
  validate_as_config(cfg);
  return cfg;
}

ExperimentConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", fmt::format("cannot open config file {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string write_config(const ExperimentConfig& cfg) {
  Json doc = Json::object();
  for (const auto& f : fields()) doc[std::string(f.key)] = f.get(cfg);
  return doc.dump(2) + "\n";
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  if (text.find(',') != std::string_view::npos) {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = std::min(text.find(',', start), text.size());
      const auto tok = text.substr(start, end - start);
      if (!tok.empty()) seeds.push_back(parse_u64(tok));
      start = end + 1;
    }
  } else if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const auto lo = parse_u64(text.substr(0, dots));
    const auto hi = parse_u64(text.substr(dots + 2));
    if (hi < lo) throw ConfigError("seeds", "seed range is empty");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  } else {
    const auto n = parse_u64(text);
    for (std::uint64_t s = 1; s <= n; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("seeds", "no seeds given");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ConfigError("seeds", "duplicate seed");
  return seeds;
}

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string metrics_csv(std::string_view strategy, std::uint64_t seed, const std::vector<RoundMetrics>& rounds) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "{}\n", kMetricsHeader);
  for (const auto& r : rounds) {
    fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{},{},{},{},{},{},{}\n", strategy, seed, r.round,
                   num(r.accuracy), num(r.precision), num(r.recall), r.n_labeled, r.n_invalid, r.n_valid_queries,
                   num(r.loss_sgd), num(r.loss_sam), num(r.loss_test));
  }
  return fmt::to_string(buf);
}

std::string scores_csv(const std::vector<ScoreRow>& rows) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "id,score,accepted,selected\n");
  for (const auto& r : rows) {
    fmt::format_to(std::back_inserter(buf), "{},{},{},{}\n", r.id, num(r.score), int(r.accepted), int(r.selected));
  }
  return fmt::to_string(buf);
}

std::string embeddings_csv(const Dataset& data, const PoolState& state, const ModelParams& f) {
  const auto split = split_names(data, state);
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "id,true_class,subclass,is_known,split");
  for (std::size_t j = 1; j <= f.width(); ++j) fmt::format_to(out, ",e_{}", j);
  fmt::format_to(out, "\n");
  for (const auto& ex : data.examples) {
    fmt::format_to(out, "{},{},{},{},{}", ex.id, ex.true_class, to_string(ex.subclass), int(ex.is_known), split[ex.id]);
    const Vec64 e = embed(f, ex.x);
    for (double v : e.view()) fmt::format_to(out, ",{}", v);
    fmt::format_to(out, "\n");
  }
  return fmt::to_string(buf);
}

fs::path cell_dir(const RunManifest& m, const QuerySpec& s, std::uint64_t seed) {
  return m.out_dir / s.name() / fmt::format("seed_{}", seed);
}

int run_matrix(const RunManifest& manifest, std::ostream& log) {
  fs::create_directories(manifest.out_dir);
  {
    Json doc = Json::object();
    doc["version"] = manifest.version;
    doc["config"] = Json::parse(write_config(manifest.config));
    Json names = Json::array();
    for (const auto& s : manifest.strategies) names.push_back(s.name());
    doc["strategies"] = names;
    doc["seeds"] = manifest.seeds;
    doc["out_dir"] = manifest.out_dir.string();
    write_atomic(manifest.out_dir / "manifest.json", doc.dump(2) + "\n");
  }

  struct Cell {
    QuerySpec strategy;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& s : manifest.strategies) {
    for (auto seed : manifest.seeds) cells.push_back({s, seed});
  }
  std::vector<int> failed(cells.size(), 0);
  // Nested parallelism is off by default, so kernels inside a cell run serially
  // while cells occupy the threads. Results do not depend on the thread count.
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cells.size()); ++i) {
    const Cell& c = cells[static_cast<std::size_t>(i)];
    std::string line;
    try {
      run_cell(manifest, c.strategy, c.seed);
      line = fmt::format("done {} seed {}\n", c.strategy.name(), c.seed);
    } catch (const std::exception& e) {
      failed[static_cast<std::size_t>(i)] = 1;
      line = fmt::format("FAILED {} seed {}: {}\n", c.strategy.name(), c.seed, e.what());
    }
#pragma omp critical(samosa_log)
    log << line << std::flush;
  }
  return std::any_of(failed.begin(), failed.end(), [](int f) { return f != 0; }) ? 1 : 0;
}

std::vector<SummaryRow> summarize_accuracies(const std::vector<FinalAccuracy>& finals) {
  if (finals.empty()) throw std::runtime_error("summarize: no completed runs");
  std::map<std::string, std::vector<double>> by_strategy;
  std::map<std::uint64_t, std::vector<std::pair<std::string, double>>> by_seed;
  for (const auto& f : finals) {
    by_strategy[f.strategy].push_back(f.accuracy);
    by_seed[f.seed].emplace_back(f.strategy, f.accuracy);
  }
  std::map<std::string, std::vector<double>> ranks;
  for (auto& [seed, entries] : by_seed) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::size_t i = 0;
    while (i < entries.size()) {
      std::size_t j = i;
      while (j < entries.size() && entries[j].second == entries[i].second) ++j;
      const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
      for (std::size_t k = i; k < j; ++k) ranks[entries[k].first].push_back(mean_rank);
      i = j;
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& [name, acc] : by_strategy) {
    SummaryRow r;
    r.strategy = name;
    r.runs = acc.size();
    double sum = 0.0;
    for (double a : acc) sum += a;
    r.mean_accuracy = sum / static_cast<double>(acc.size());
    if (acc.size() > 1) {
      double ss = 0.0;
      for (double a : acc) ss += (a - r.mean_accuracy) * (a - r.mean_accuracy);
      r.std_accuracy = std::sqrt(ss / static_cast<double>(acc.size() - 1));
    }
    const auto& rk = ranks[name];
    double rsum = 0.0;
    for (double x : rk) rsum += x;
    r.avg_rank = rsum / static_cast<double>(rk.size());
    rows.push_back(r);
  }
  return rows;
}

std::vector<SummaryRow> summarize(const fs::path& out_dir) {
  if (!fs::is_directory(out_dir)) throw std::runtime_error("summarize: not a directory: " + out_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "metrics.csv" &&
        !fs::exists(entry.path().parent_path() / "FAILED")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<FinalAccuracy> finals;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line, last;
    std::getline(in, line);
    if (line != kMetricsHeader) throw std::runtime_error("unexpected metrics header in " + file.string());
    while (std::getline(in, line)) {
      if (!line.empty()) last = line;
    }
    if (last.empty()) continue;
    const auto cells = split_csv_line(last);
    if (cells.size() != 12) throw std::runtime_error("malformed metrics row in " + file.string());
    finals.push_back({cells[0], parse_u64(cells[1]), std::stod(cells[3])});
  }
  auto rows = summarize_accuracies(finals);
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "strategy,runs,mean_accuracy,std_accuracy,avg_rank\n");
  for (const auto& r : rows) {
    fmt::format_to(std::back_inserter(buf), "{},{},{},{},{}\n", r.strategy, r.runs, num(r.mean_accuracy),
                   num(r.std_accuracy), num(r.avg_rank));
  }
  write_atomic(out_dir / "summary.csv", fmt::to_string(buf));
  return rows;
}

void export_pool(const ExperimentConfig& cfg, const fs::path& dir) {
  const OpenSetPool pool = build_experiment_pool(cfg);
  fs::create_directories(dir);
  const auto split = split_names(pool.data, pool.state);
  fmt::memory_buffer csv;
  fmt::format_to(std::back_inserter(csv), "id,true_class,subclass,is_known,split,signal_patch\n");
  fmt::memory_buffer patches;
  for (const auto& ex : pool.data.examples) {
    fmt::format_to(std::back_inserter(csv), "{},{},{},{},{},{}\n", ex.id, ex.true_class, to_string(ex.subclass),
                   int(ex.is_known), split[ex.id], ex.signal_patch);
    fmt::format_to(std::back_inserter(patches), "{}", ex.id);
    for (double v : ex.x.matrix().flat()) fmt::format_to(std::back_inserter(patches), " {}", v);
    fmt::format_to(std::back_inserter(patches), "\n");
  }
  write_atomic(dir / "pool.csv", fmt::to_string(csv));
  write_atomic(dir / "patches.txt", fmt::to_string(patches));
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open-set active learning lab on synthetic patch data"};
  app.require_subcommand(1);

  std::string config_path, strategies_arg, seeds_arg = "1", out_dir;
  std::optional<int> rounds;
  std::optional<std::size_t> budget;
  std::optional<double> mismatch;
  auto* run = app.add_subcommand("run", "Run the (strategy, seed) matrix");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--strategy", strategies_arg, "Comma-separated strategy names");
  run->add_option("--seeds", seeds_arg, "n (1..n), a..b, or a,b,c");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--rounds", rounds);
  run->add_option("--budget", budget);
  run->add_option("--mismatch", mismatch);

  std::string summary_dir;
  auto* summ = app.add_subcommand("summarize", "Aggregate final accuracies into summary.csv");
  summ->add_option("dir", summary_dir)->required();

  std::string export_config, export_out;
  auto* exp = app.add_subcommand("export-pool", "Write the generated pool to pool.csv and patches.txt");
  exp->add_option("--config", export_config, "JSON config file");
  exp->add_option("--out", export_out, "Output directory")->required();

  app.add_subcommand("defaults", "Print the default config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  ExperimentConfig cfg;
  RunManifest manifest;
  try {
    if (*run) {
      if (!config_path.empty()) cfg = parse_config(config_path);
      if (rounds) cfg.rounds = *rounds;
      if (budget) cfg.budget = *budget;
      if (mismatch) cfg.mismatch_ratio = *mismatch;
      validate_as_config(cfg);
      manifest.config = cfg;
      manifest.out_dir = out_dir;
      manifest.seeds = parse_seeds(seeds_arg);
      if (strategies_arg.empty()) {
        manifest.strategies.push_back(cfg.strategy);
      } else {
        for (const auto& name : split_csv_line(strategies_arg)) {
          try {
            manifest.strategies.push_back(QuerySpec::parse(name));
          } catch (const std::invalid_argument& e) {
            throw ConfigError("strategy", e.what());
          }
        }
      }
    } else if (*exp) {
      if (!export_config.empty()) cfg = parse_config(export_config);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*run) return run_matrix(manifest, err);
    if (*summ) {
      for (const auto& r : summarize(summary_dir)) {
        out << fmt::format("{:<12} runs={} acc={:.4f} +- {:.4f} rank={:.2f}\n", r.strategy, r.runs, r.mean_accuracy,
                           r.std_accuracy, r.avg_rank);
      }
      return 0;
    }
    if (*exp) {
      export_pool(cfg, export_out);
      return 0;
    }
    out << write_config(cfg);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace samosa
