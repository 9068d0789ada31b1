#include "adgnn/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "adgnn/checkpoint.hpp"
#include "adgnn/data.hpp"
#include "adgnn/diffusion.hpp"
#include "adgnn/energy.hpp"
#include "adgnn/model.hpp"

namespace adgnn {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Flat key = value configuration with flag overrides. Flags use the key
// name (--learning_rate 0.01 or --learning_rate=0.01); precedence is
// flags > config file > defaults. Unknown keys are rejected by name.
// ---------------------------------------------------------------------------

class Options {
 public:
  void add_real(const std::string& key, double* target, const std::string& help) {
    entries_.push_back({key, Kind::real, target, help});
  }
  void add_index(const std::string& key, Index* target, const std::string& help) {
    entries_.push_back({key, Kind::integer, target, help});
  }
  void add_u64(const std::string& key, std::uint64_t* target, const std::string& help) {
    entries_.push_back({key, Kind::unsigned64, target, help});
  }
  void add_bool(const std::string& key, bool* target, const std::string& help) {
    entries_.push_back({key, Kind::boolean, target, help});
  }
  void add_string(const std::string& key, std::string* target, const std::string& help) {
    entries_.push_back({key, Kind::text, target, help});
  }

  void apply_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#') continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      Entry* entry = find(key);
      if (entry == nullptr)
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": unknown key '" + key + "'");
      set_value(*entry, value, "config key '" + key + "'");
    }
  }

  void apply_flags(const std::vector<std::string>& args) {
    std::size_t i = 0;
    while (i < args.size()) {
      std::string arg = args[i];
      if (arg.rfind("--", 0) != 0)
        throw ConfigError("unexpected argument '" + arg + "'");
      arg = arg.substr(2);
      std::string value;
      bool has_value = false;
      const std::size_t eq = arg.find('=');
      if (eq != std::string::npos) {
        value = arg.substr(eq + 1);
        arg = arg.substr(0, eq);
        has_value = true;
      }
      Entry* entry = find(arg);
      if (entry == nullptr) throw ConfigError("unknown flag '--" + arg + "'");
      if (!has_value) {
        if (entry->kind == Kind::boolean) {
          value = "true";
        } else {
          if (i + 1 >= args.size())
            throw ConfigError("flag '--" + arg + "' expects a value");
          value = args[++i];
        }
      }
      set_value(*entry, value, "flag '--" + arg + "'");
      ++i;
    }
  }

  std::string echo() const {
    std::ostringstream out;
    for (const auto& e : entries_) out << e.key << " = " << value_string(e) << "\n";
    return out.str();
  }

  void print_help(std::ostream& out) const {
    for (const auto& e : entries_) {
      out << "  --" << e.key;
      out << "  (" << value_string(e) << ")  " << e.help << "\n";
    }
  }

 private:
  enum class Kind { real, integer, unsigned64, boolean, text };
  struct Entry {
    std::string key;
    Kind kind;
    void* target;
    std::string help;
  };

  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    return s.substr(a, b - a);
  }

  Entry* find(const std::string& key) {
    for (auto& e : entries_)
      if (e.key == key) return &e;
    return nullptr;
  }

  static void set_value(Entry& entry, const std::string& value,
                        const std::string& context) {
    switch (entry.kind) {
      case Kind::real: {
        char* end = nullptr;
        const double v = std::strtod(value.c_str(), &end);
        if (end == value.c_str() || *end != '\0')
          throw ConfigError(context + ": cannot parse real '" + value + "'");
        *static_cast<double*>(entry.target) = v;
        break;
      }
      case Kind::integer: {
        Index v = 0;
        const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || p != value.data() + value.size())
          throw ConfigError(context + ": cannot parse integer '" + value + "'");
        *static_cast<Index*>(entry.target) = v;
        break;
      }
      case Kind::unsigned64: {
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || p != value.data() + value.size())
          throw ConfigError(context + ": cannot parse unsigned integer '" + value + "'");
        *static_cast<std::uint64_t*>(entry.target) = v;
        break;
      }
      case Kind::boolean: {
        if (value == "true" || value == "1")
          *static_cast<bool*>(entry.target) = true;
        else if (value == "false" || value == "0")
          *static_cast<bool*>(entry.target) = false;
        else
          throw ConfigError(context + ": cannot parse boolean '" + value + "'");
        break;
      }
      case Kind::text:
        *static_cast<std::string*>(entry.target) = value;
        break;
    }
  }

  static std::string value_string(const Entry& e) {
    switch (e.kind) {
      case Kind::real:
        return format_real(*static_cast<const double*>(e.target));
      case Kind::integer:
        return std::to_string(*static_cast<const Index*>(e.target));
      case Kind::unsigned64:
        return std::to_string(*static_cast<const std::uint64_t*>(e.target));
      case Kind::boolean:
        return *static_cast<const bool*>(e.target) ? "true" : "false";
      case Kind::text:
        return *static_cast<const std::string*>(e.target);
    }
    return {};
  }

  std::vector<Entry> entries_;
};

// Pulls --config / --help out of the raw arguments; everything else is
// parsed against the registry after the file is applied.
struct ParsedArgs {
  std::vector<std::string> flags;
  std::string config_file;
  bool help = false;
};

ParsedArgs presplit_args(int argc, char** argv, int first) {
  ParsedArgs parsed;
  for (int i = first; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--help" || arg == "-h") {
      parsed.help = true;
    } else if (arg == "--config") {
      if (i + 1 >= argc) throw ConfigError("--config expects a file path");
      parsed.config_file = argv[++i];
    } else if (arg.rfind("--config=", 0) == 0) {
      parsed.config_file = arg.substr(9);
    } else {
      parsed.flags.push_back(arg);
    }
  }
  return parsed;
}

void resolve(Options& options, const ParsedArgs& parsed) {
  if (!parsed.config_file.empty()) options.apply_file(parsed.config_file);
  options.apply_flags(parsed.flags);
}

void echo_config(const Options& options, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "config_resolved.cfg");
  out << options.echo();
}

// ---------------------------------------------------------------------------
// Shared option groups
// ---------------------------------------------------------------------------

struct DiffusionOpts {
  DiffusionParams dp;
  std::string laplacian_mode = "paper";
  Index dense_threshold = kDefaultDenseThreshold;

  void register_options(Options& o) {
    o.add_real("alpha", &dp.alpha, "ego source weight");
    o.add_real("beta", &dp.beta, "boundary (LoG) source weight");
    o.add_real("gamma", &dp.gamma, "anomaly (Laplacian) source weight");
    o.add_real("delta", &dp.delta, "propagation weight");
    o.add_index("K", &dp.K, "active-diffusion steps for local embeddings");
    o.add_real("tau", &dp.tau, "passive-baseline step size");
    o.add_index("T", &dp.T, "Neumann series truncation");
    o.add_string("laplacian_mode", &laplacian_mode, "paper | identity");
    o.add_index("dense_threshold", &dense_threshold,
                "max node count for the dense factorization");
  }

  LaplacianMode mode() const { return parse_laplacian_mode(laplacian_mode); }
};

struct SplitOpts {
  double train_frac = 0.48;
  double valid_frac = 0.32;
  double test_frac = 0.20;
  bool per_class = true;
  std::uint64_t split_seed = 0;
  bool resample_splits = false;

  void register_options(Options& o) {
    o.add_real("train_frac", &train_frac, "training fraction per class");
    o.add_real("valid_frac", &valid_frac, "validation fraction per class");
    o.add_real("test_frac", &test_frac, "test fraction per class");
    o.add_bool("per_class", &per_class, "stratify the split by class");
    o.add_u64("split_seed", &split_seed, "split shuffling seed");
    o.add_bool("resample_splits", &resample_splits,
               "draw a fresh split for every training run");
  }

  SplitSpec spec(std::uint64_t seed_offset = 0) const {
    SplitSpec s;
    s.train_frac = train_frac;
    s.valid_frac = valid_frac;
    s.test_frac = test_frac;
    s.per_class = per_class;
    s.seed = split_seed + seed_offset;
    return s;
  }
};

bool has_any_mask(const Dataset& ds) {
  auto any = [](const Mask& m) {
    return std::any_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; });
  };
  return any(ds.train_mask) || any(ds.valid_mask) || any(ds.test_mask);
}

void write_matrix_csv(const Matrix& m, const fs::path& path) {
  std::ofstream out(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_real(m(i, j));
    }
    out << "\n";
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainRunSummary {
  std::uint64_t seed;
  Index best_epoch;
  double train_acc, valid_acc, test_acc;
};

template <class T>
TrainRunSummary run_training(const Dataset& ds, const OperatorBundle& bundle,
                             const DiffusionParams& dp, const TrainConfig& cfg,
                             const SplitSpec& split, bool split_from_file,
                             LaplacianMode mode, const fs::path& checkpoint_path) {
  const Mat<T> features = ds.features.cast<T>();
  auto result = train<T>(features, ds.labels, ds.meta.num_classes, ds.train_mask,
                         ds.valid_mask, bundle, dp, cfg);
  const double train_acc = evaluate<T>(features, ds.labels, ds.train_mask, bundle,
                                       result.params, dp, cfg);
  const double valid_acc = evaluate<T>(features, ds.labels, ds.valid_mask, bundle,
                                       result.params, dp, cfg);
  const double test_acc = evaluate<T>(features, ds.labels, ds.test_mask, bundle,
                                      result.params, dp, cfg);

  Checkpoint ckpt;
  ckpt.cfg = cfg;
  ckpt.dp = dp;
  ckpt.split = split;
  ckpt.split_from_file = split_from_file;
  ckpt.mode = mode;
  if constexpr (std::is_same_v<T, double>) {
    ckpt.params = result.params;
  } else {
    ModelParams<double> widened;
    auto src = result.params.all_tensors();
    auto dst = widened.all_tensors();
    for (std::size_t i = 0; i < src.size(); ++i)
      *dst[i].second = src[i].second->template cast<double>();
    ckpt.params = std::move(widened);
  }
  save_checkpoint(ckpt, checkpoint_path);
  return {cfg.seed, result.best_epoch, train_acc, valid_acc, test_acc};
}

int cmd_train(const ParsedArgs& parsed) {
  std::string dataset_dir, out_dir = "out";
  DiffusionOpts diff;
  SplitOpts split;
  TrainConfig cfg;
  std::string head = "hadamard", precision = "f64", global_mode = "neumann";
  Index n_seeds = 5;

  Options o;
  o.add_string("dataset", &dataset_dir, "canonical dataset directory");
  o.add_string("out", &out_dir, "output directory");
  diff.register_options(o);
  split.register_options(o);
  o.add_index("hidden_dim", &cfg.hidden_dim, "ego embedding width d'");
  o.add_real("learning_rate", &cfg.learning_rate, "optimizer step size");
  o.add_real("weight_decay", &cfg.weight_decay, "decoupled weight decay");
  o.add_index("max_epochs", &cfg.max_epochs, "epoch budget");
  o.add_index("patience", &cfg.patience, "early-stopping patience (0 disables)");
  o.add_real("dropout", &cfg.dropout, "dropout on the ego embeddings");
  o.add_string("head", &head, "hadamard | mlp");
  o.add_u64("seed", &cfg.seed, "base initialization seed");
  o.add_index("n_seeds", &n_seeds, "number of training runs");
  o.add_string("precision", &precision, "f32 | f64 training tensors");
  o.add_string("global_mode", &global_mode,
               "dense | neumann global embeddings during training");
  if (parsed.help) {
    std::cout << "adgnn train: train and evaluate over several seeds\n";
    o.print_help(std::cout);
    return 0;
  }
  resolve(o, parsed);
  if (dataset_dir.empty()) throw ConfigError("train: --dataset is required");
  if (n_seeds < 1) throw ConfigError("train: n_seeds must be positive");
  cfg.head = parse_head(head);
  cfg.precision = parse_precision(precision);
  cfg.global_mode = parse_global_mode(global_mode);
  cfg.validate();
  diff.dp.validate();

  Dataset ds = load_dataset(dataset_dir);
  const bool file_split = has_any_mask(ds) && !split.resample_splits;

  if (cfg.global_mode == GlobalMode::dense && ds.num_nodes() > diff.dense_threshold)
    throw ConfigError(
        "train: global_mode=dense needs num_nodes <= dense_threshold; "
        "use global_mode=neumann");
  const Index lu_threshold =
      cfg.global_mode == GlobalMode::dense ? diff.dense_threshold : -1;
  const OperatorBundle bundle =
      precompute_operators(ds.graph, diff.dp, diff.mode(), lu_threshold);

  echo_config(o, out_dir);
  std::vector<TrainRunSummary> runs;
  for (Index s = 0; s < n_seeds; ++s) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(s);
    SplitSpec run_split = split.spec(split.resample_splits ? s : 0);
    Dataset run_ds = ds;
    if (!file_split) run_ds = make_split(std::move(run_ds), run_split);
    const fs::path ckpt_path =
        fs::path(out_dir) / ("checkpoint_seed" + std::to_string(run_cfg.seed) + ".json");
    TrainRunSummary summary =
        cfg.precision == Precision::f64
            ? run_training<double>(run_ds, bundle, diff.dp, run_cfg, run_split,
                                   file_split, diff.mode(), ckpt_path)
            : run_training<float>(run_ds, bundle, diff.dp, run_cfg, run_split,
                                  file_split, diff.mode(), ckpt_path);
    std::cout << "seed " << summary.seed << ": best_epoch=" << summary.best_epoch
              << " train=" << format_real(summary.train_acc)
              << " valid=" << format_real(summary.valid_acc)
              << " test=" << format_real(summary.test_acc) << "\n";
    runs.push_back(summary);
  }

  {
    std::ofstream metrics(fs::path(out_dir) / "metrics.csv");
    metrics << "seed,best_epoch,train_accuracy,valid_accuracy,test_accuracy\n";
    for (const auto& r : runs)
      metrics << r.seed << "," << r.best_epoch << "," << format_real(r.train_acc)
              << "," << format_real(r.valid_acc) << "," << format_real(r.test_acc)
              << "\n";
  }
  std::vector<double> train_accs, valid_accs, test_accs;
  for (const auto& r : runs) {
    train_accs.push_back(r.train_acc);
    valid_accs.push_back(r.valid_acc);
    test_accs.push_back(r.test_acc);
  }
  json summary = {
      {"n_seeds", n_seeds},
      {"train_accuracy", {{"mean", mean_of(train_accs)}, {"std", std_of(train_accs)}}},
      {"valid_accuracy", {{"mean", mean_of(valid_accs)}, {"std", std_of(valid_accs)}}},
      {"test_accuracy", {{"mean", mean_of(test_accs)}, {"std", std_of(test_accs)}}}};
  {
    std::ofstream out(fs::path(out_dir) / "summary.json");
    out << summary.dump(2) << "\n";
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

template <class T>
json eval_masks(const Dataset& ds, const OperatorBundle& bundle, const Checkpoint& ckpt) {
  const Mat<T> features = ds.features.cast<T>();
  ModelParams<T> params;
  {
    ModelParams<double> stored = ckpt.params;
    auto src = stored.all_tensors();
    auto dst = params.all_tensors();
    for (std::size_t i = 0; i < src.size(); ++i)
      *dst[i].second = src[i].second->template cast<T>();
  }
  json out;
  out["train_accuracy"] = evaluate<T>(features, ds.labels, ds.train_mask, bundle,
                                      params, ckpt.dp, ckpt.cfg);
  out["valid_accuracy"] = evaluate<T>(features, ds.labels, ds.valid_mask, bundle,
                                      params, ckpt.dp, ckpt.cfg);
  out["test_accuracy"] = evaluate<T>(features, ds.labels, ds.test_mask, bundle,
                                     params, ckpt.dp, ckpt.cfg);
  return out;
}

int cmd_eval(const ParsedArgs& parsed) {
  std::string dataset_dir, checkpoint_path;
  Index dense_threshold = kDefaultDenseThreshold;
  Options o;
  o.add_string("dataset", &dataset_dir, "canonical dataset directory");
  o.add_string("checkpoint", &checkpoint_path, "checkpoint JSON file");
  o.add_index("dense_threshold", &dense_threshold,
              "max node count for the dense factorization");
  if (parsed.help) {
    std::cout << "adgnn eval: report accuracy per mask for a checkpoint\n";
    o.print_help(std::cout);
    return 0;
  }
  resolve(o, parsed);
  if (dataset_dir.empty() || checkpoint_path.empty())
    throw ConfigError("eval: --dataset and --checkpoint are required");

  Dataset ds = load_dataset(dataset_dir);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  validate_checkpoint(ckpt, ds);
  if (ckpt.split_from_file) {
    if (!has_any_mask(ds))
      throw DataError("eval: checkpoint was trained on splits.json but the dataset has none");
  } else {
    ds = make_split(std::move(ds), ckpt.split);
  }
  const Index lu_threshold =
      ckpt.cfg.global_mode == GlobalMode::dense ? dense_threshold : -1;
  const OperatorBundle bundle =
      precompute_operators(ds.graph, ckpt.dp, ckpt.mode, lu_threshold);
  const json out = ckpt.cfg.precision == Precision::f64
                       ? eval_masks<double>(ds, bundle, ckpt)
                       : eval_masks<float>(ds, bundle, ckpt);
  std::cout << out.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// diffuse
// ---------------------------------------------------------------------------

int cmd_diffuse(const ParsedArgs& parsed) {
  std::string dataset_dir, out_dir = "out", mode = "global-dense";
  DiffusionOpts diff;
  Options o;
  o.add_string("dataset", &dataset_dir, "canonical dataset directory");
  o.add_string("out", &out_dir, "output directory");
  o.add_string("mode", &mode, "local | global-dense | global-neumann");
  diff.register_options(o);
  if (parsed.help) {
    std::cout << "adgnn diffuse: write diffusion embeddings of the raw features\n";
    o.print_help(std::cout);
    return 0;
  }
  resolve(o, parsed);
  if (dataset_dir.empty()) throw ConfigError("diffuse: --dataset is required");
  diff.dp.validate();
  if (mode != "local" && mode != "global-dense" && mode != "global-neumann")
    throw ConfigError("diffuse: unknown mode '" + mode +
                      "' (expected local, global-dense, global-neumann)");

  Dataset ds = load_dataset(dataset_dir);
  if (mode == "global-dense" && ds.num_nodes() > diff.dense_threshold)
    throw ConfigError("diffuse: num_nodes " + std::to_string(ds.num_nodes()) +
                      " exceeds dense_threshold " + std::to_string(diff.dense_threshold) +
                      "; use mode=global-neumann");
  const Index lu_threshold = mode == "global-dense" ? diff.dense_threshold : -1;
  const OperatorBundle bundle =
      precompute_operators(ds.graph, diff.dp, diff.mode(), lu_threshold);

  Matrix embeddings;
  if (mode == "local")
    embeddings = diffuse_local(ds.features, bundle, diff.dp);
  else if (mode == "global-dense")
    embeddings = diffuse_global_dense(ds.features, bundle, diff.dp);
  else
    embeddings = diffuse_global_neumann(ds.features, bundle, diff.dp);

  echo_config(o, out_dir);
  write_matrix_csv(embeddings, fs::path(out_dir) / "embeddings.csv");
  json sidecar = {{"mode", mode},
                  {"alpha", diff.dp.alpha},
                  {"beta", diff.dp.beta},
                  {"gamma", diff.dp.gamma},
                  {"delta", diff.dp.delta},
                  {"K", diff.dp.K},
                  {"T", diff.dp.T},
                  {"laplacian_mode", diff.laplacian_mode}};
  if (mode == "global-neumann") {
    const double bound = neumann_error_bound(diff.dp.delta, diff.dp.T);
    sidecar["neumann_error_bound"] = bound;
    if (bound > 1e-6)
      std::cerr << "warning: Neumann truncation bound " << format_real(bound)
                << " exceeds 1e-06; increase T\n";
  }
  {
    std::ofstream out(fs::path(out_dir) / "embeddings.json");
    out << sidecar.dump(2) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// energy-check
// ---------------------------------------------------------------------------

int cmd_energy_check(const ParsedArgs& parsed) {
  std::string dataset_dir;
  DiffusionOpts diff;
  diff.laplacian_mode = "identity";  // the recovery identity needs L = I - A
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double eta = std::numeric_limits<double>::quiet_NaN();
  Options o;
  o.add_string("dataset", &dataset_dir, "canonical dataset directory");
  diff.register_options(o);
  o.add_real("energy_lambda", &lambda, "override lambda (default: alpha/delta)");
  o.add_real("energy_epsilon", &epsilon, "override epsilon (default: beta/delta)");
  o.add_real("energy_eta", &eta, "override eta (default: gamma/delta)");
  if (parsed.help) {
    std::cout << "adgnn energy-check: verify the energy minimizer recovers the "
                 "closed-form diffusion limit\n";
    o.print_help(std::cout);
    return 0;
  }
  resolve(o, parsed);
  if (dataset_dir.empty()) throw ConfigError("energy-check: --dataset is required");
  diff.dp.validate();
  if (diff.mode() != LaplacianMode::identity_degree)
    throw ConfigError("energy-check: requires laplacian_mode=identity");

  Dataset ds = load_dataset(dataset_dir);
  if (ds.num_nodes() > diff.dense_threshold)
    throw ConfigError("energy-check: num_nodes " + std::to_string(ds.num_nodes()) +
                      " exceeds dense_threshold " +
                      std::to_string(diff.dense_threshold));
  const OperatorBundle bundle =
      precompute_operators(ds.graph, diff.dp, LaplacianMode::identity_degree,
                           diff.dense_threshold);

  EnergyParams ep = params_from_diffusion(diff.dp);
  const bool mapped = std::isnan(lambda) && std::isnan(epsilon) && std::isnan(eta);
  if (!std::isnan(lambda)) ep.lambda = lambda;
  if (!std::isnan(epsilon)) ep.epsilon = epsilon;
  if (!std::isnan(eta)) ep.eta = eta;
  ep.validate();

  const Matrix h_star = diffuse_global_dense(ds.features, bundle, diff.dp);
  const Matrix h_hat = energy_minimizer(ds.features, bundle, ep);
  const double denom = frobenius_norm(h_star);
  const double residual = frobenius_diff(h_hat, h_star) / (denom > 0.0 ? denom : 1.0);
  const double grad_norm = frobenius_norm(energy_gradient(h_hat, ds.features, bundle, ep));

  constexpr double kResidualThreshold = 1e-8;
  constexpr double kGradientThreshold = 1e-6;
  const bool pass = residual <= kResidualThreshold && grad_norm <= kGradientThreshold;
  json out = {{"recovery_residual", residual},
              {"gradient_norm", grad_norm},
              {"residual_threshold", kResidualThreshold},
              {"gradient_threshold", kGradientThreshold},
              {"params_mapped_from_diffusion", mapped},
              {"pass", pass}};
  std::cout << out.dump() << "\n";
  if (!pass) throw NumericError("energy-check failed");
  return 0;
}

// ---------------------------------------------------------------------------
// oversmooth-bench
// ---------------------------------------------------------------------------

int cmd_oversmooth_bench(const ParsedArgs& parsed) {
  std::string dataset_dir, out_dir = "out";
  Index k_max = 200;
  DiffusionOpts diff;
  Options o;
  o.add_string("dataset", &dataset_dir, "canonical dataset directory");
  o.add_string("out", &out_dir, "output directory");
  o.add_index("k_max", &k_max, "diffusion steps to trace");
  diff.register_options(o);
  if (parsed.help) {
    std::cout << "adgnn oversmooth-bench: trace passive vs active diffusion\n";
    o.print_help(std::cout);
    return 0;
  }
  resolve(o, parsed);
  if (dataset_dir.empty()) throw ConfigError("oversmooth-bench: --dataset is required");
  if (k_max < 0) throw ConfigError("oversmooth-bench: k_max must be nonnegative");
  diff.dp.validate();

  Dataset ds = load_dataset(dataset_dir);
  const OperatorBundle bundle =
      precompute_operators(ds.graph, diff.dp, diff.mode(), diff.dense_threshold);
  const SparseOperator passive_op = row_normalize(bundle.adj);
  const Matrix source = source_term(ds.features, bundle, diff.dp);
  const Matrix h_star = bundle.has_dense_solver()
                            ? diffuse_global_dense(ds.features, bundle, diff.dp)
                            : diffuse_global_neumann(ds.features, bundle, diff.dp);

  echo_config(o, out_dir);
  std::ofstream csv(fs::path(out_dir) / "oversmooth.csv");
  csv << "k,dirichlet_energy_passive,dirichlet_energy_active,"
         "min_pairwise_distance_passive,min_pairwise_distance_active\n";
  Matrix passive = ds.features;
  Matrix active = ds.features;
  for (Index k = 0; k <= k_max; ++k) {
    csv << k << "," << format_real(dirichlet_energy(passive, bundle)) << ","
        << format_real(dirichlet_energy(active, bundle)) << ","
        << format_real(min_pairwise_distance(passive)) << ","
        << format_real(min_pairwise_distance(active)) << "\n";
    if (k == k_max) break;
    passive = passive_step(passive, passive_op, diff.dp.tau);
    active = active_step(active, source, bundle.adj, diff.dp.delta);
  }
  json sidecar = {{"k_max", k_max},
                  {"h_star_dirichlet_energy", dirichlet_energy(h_star, bundle)},
                  {"h_star_min_pairwise_distance", min_pairwise_distance(h_star)}};
  {
    std::ofstream out(fs::path(out_dir) / "oversmooth.json");
    out << sidecar.dump(2) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gen-synth
// ---------------------------------------------------------------------------

int cmd_gen_synth(const ParsedArgs& parsed) {
  std::string out_dir = "synth";
  Index n_nodes = 300, n_classes = 3, feature_dim = 16;
  double homophily = 0.7, feature_signal = 1.0;
  std::uint64_t seed = 0;
  Options o;
  o.add_string("out", &out_dir, "dataset directory to write");
  o.add_index("n_nodes", &n_nodes, "node count");
  o.add_index("n_classes", &n_classes, "class count");
  o.add_real("homophily", &homophily, "edge homophily target in [0, 1]");
  o.add_index("feature_dim", &feature_dim, "feature dimension");
  o.add_real("feature_signal", &feature_signal, "class-mean separation scale");
  o.add_u64("seed", &seed, "generator seed");
  if (parsed.help) {
    std::cout << "adgnn gen-synth: write a synthetic block-model dataset\n";
    o.print_help(std::cout);
    return 0;
  }
  resolve(o, parsed);

  Dataset ds;
  try {
    ds = gen_synthetic(n_nodes, n_classes, homophily, feature_dim, feature_signal, seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("gen-synth: ") + e.what());
  }
  save_dataset(ds, out_dir);
  echo_config(o, out_dir);
  json out = {{"n_nodes", ds.num_nodes()},
              {"n_edges", static_cast<Index>(ds.graph.edges.size())},
              {"realized_homophily", ds.meta.homophily}};
  std::cout << out.dump() << "\n";
  return 0;
}

void print_usage(std::ostream& out) {
  out << "usage: adgnn <command> [--config file] [--key value ...]\n"
         "commands:\n"
         "  train            train over several seeds, write metrics and checkpoints\n"
         "  eval             report accuracy per mask for a checkpoint\n"
         "  diffuse          write local / global diffusion embeddings\n"
         "  energy-check     verify the energy-minimizer recovery identity\n"
         "  oversmooth-bench trace passive vs active diffusion statistics\n"
         "  gen-synth        generate a synthetic block-model dataset\n"
         "run 'adgnn <command> --help' for the command's keys\n";
}

}  // namespace

int run_cli(int argc, char** argv) {
  try {
    if (argc < 2) {
      print_usage(std::cerr);
      return 1;
    }
    const std::string command = argv[1];
    if (command == "--help" || command == "-h" || command == "help") {
      print_usage(std::cout);
      return 0;
    }
    const ParsedArgs parsed = presplit_args(argc, argv, 2);
    if (command == "train") return cmd_train(parsed);
    if (command == "eval") return cmd_eval(parsed);
    if (command == "diffuse") return cmd_diffuse(parsed);
    if (command == "energy-check") return cmd_energy_check(parsed);
    if (command == "oversmooth-bench") return cmd_oversmooth_bench(parsed);
    if (command == "gen-synth") return cmd_gen_synth(parsed);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace adgnn
