#include "rssiloc/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rssiloc/errors.hpp"
#include "rssiloc/eval.hpp"
#include "rssiloc/models.hpp"
#include "rssiloc/netsim.hpp"
#include "rssiloc/pipeline.hpp"

namespace rssiloc {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kSaltEnv = 0x656E7600;
constexpr uint64_t kSaltGt = 0x67740000;
constexpr uint64_t kSaltAcq = 0x61637100;

Arena arena_from_config(const Config& cfg) {
  const double room_w = cfg.num("room_w");
  const double room_d = cfg.num("room_d");
  Vec2 wap{room_w / 2.0, room_d / 2.0};
  if (cfg.str("wap_x") != "auto") wap.x = cfg.num("wap_x");
  if (cfg.str("wap_y") != "auto") wap.y = cfg.num("wap_y");
  return make_arena(room_w, room_d, cfg.num("inner_w"), cfg.num("inner_d"),
                    wap);
}

ChannelParams channel_from_config(const Config& cfg, uint64_t seed) {
  ChannelParams p;
  p.p0_dbm = cfg.num("p0_dbm");
  p.d0_m = cfg.num("d0_m");
  p.gamma = cfg.num("gamma");
  p.sigma_db = cfg.num("sigma_db");
  p.rho = cfg.num("rho");
  p.rician_k = cfg.num("rician_k");
  p.seed = seed;
  validate(p);
  return p;
}

PipelineConfig pipeline_from_config(const Config& cfg) {
  PipelineConfig pc;
  pc.bins.d_min_m = cfg.num("d_min_m");
  pc.bins.n_bins = static_cast<int>(cfg.integer("n_bins"));
  pc.bins.l_bin_m = cfg.num("l_bin_m");
  pc.median_window = static_cast<int>(cfg.integer("median_window"));
  pc.filter_rssi = cfg.boolean("filter_rssi");
  pc.filter_truth = cfg.boolean("filter_truth");
  pc.window = static_cast<int>(cfg.integer("window_w"));
  pc.stride = static_cast<int>(cfg.integer("window_stride"));
  pc.split_train = cfg.num("split_train");
  pc.split_val = cfg.num("split_val");
  validate(pc);
  return pc;
}

Hyperparams hyperparams_from_config(const Config& cfg) {
  Hyperparams hp;
  hp.batch_size = static_cast<int>(cfg.integer("batch_size"));
  hp.iterations = static_cast<int>(cfg.integer("iterations"));
  hp.lr = cfg.num("lr");
  hp.max_grad_norm = cfg.num("max_grad_norm");
  const std::string clip = cfg.str("clip_mode");
  if (clip == "global") hp.clip_elementwise = false;
  else if (clip == "element") hp.clip_elementwise = true;
  else throw ConfigError("clip_mode must be 'global' or 'element'");
  const double lambda = cfg.num("dropout_keep");
  hp.dropout_keep = cfg.boolean("dropout_is_keep_prob") ? lambda : 1.0 - lambda;
  hp.lstm_units = cfg.int_list("lstm_units");
  hp.eval_every = static_cast<int>(cfg.integer("eval_every"));
  hp.seed = cfg.u64("seed");
  validate(hp);
  return hp;
}

PreprocessResult load_cache_for(const Config& cfg) {
  const fs::path cache = fs::path(cfg.str("data_dir")) / "tensors.bin";
  if (!fs::exists(cache))
    throw IoError("tensor cache not found: " + cache.string() +
                  " (run the preprocess command first)");
  return load_cache(cache);
}

}  // namespace

void cmd_simulate(const Config& cfg, std::ostream& out) {
  const Arena arena = arena_from_config(cfg);
  const auto kind = parse_trajectory_kind(cfg.str("trajectory"));
  TrajectoryOptions opt;
  opt.max_speed_mps = cfg.num("max_speed_mps");
  opt.cruise_speed_mps = cfg.num("traj_speed_mps");
  opt.period_s = cfg.num("traj_period_s");
  opt.wap_clearance_m = cfg.num("wap_clearance_m");
  const double duration_s = cfg.num("duration_s");
  const double loss_prob = cfg.num("loss_prob");
  const double noise_mm = cfg.num("gt_noise_mm");
  const int environments = static_cast<int>(cfg.integer("environments"));
  if (environments < 1) throw ConfigError("environments must be >= 1");
  const uint64_t master_seed = cfg.u64("seed");
  const fs::path out_dir = cfg.str("out_dir");

  for (int env = 0; env < environments; ++env) {
    const uint64_t env_seed =
        derive_seed(master_seed, kSaltEnv, static_cast<uint64_t>(env));
    const Trajectory traj =
        make_trajectory(arena, kind, duration_s, opt, env_seed);
    const GroundTruth truth = sample_ground_truth(
        arena, traj, noise_mm, derive_seed(env_seed, kSaltGt));
    std::array<ChannelParams, kNodeCount> params;
    params.fill(channel_from_config(cfg, env_seed));
    Dataset ds = run_acquisition(arena, traj, truth, params, loss_prob,
                                 derive_seed(env_seed, kSaltAcq));
    ds.meta.trajectory = cfg.str("trajectory");
    ds.meta.gt_noise_mm = noise_mm;
    ds.meta.env_index = env;
    const fs::path dir = out_dir / ("env" + std::to_string(env));
    write_dataset(ds, dir);

    const size_t ticks = truth.samples.size();
    if (loss_prob == 0.0) {
      out << dir.string() << ": " << ticks << " records/node ("
          << ds.records.size() << " total)\n";
    } else {
      const double rate = static_cast<double>(ds.records.size()) /
                          (static_cast<double>(ticks) * kNodeCount);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.1f%%", rate * 100.0);
      out << dir.string() << ": " << ds.records.size()
          << " records (delivery " << buf << ")\n";
    }
  }
}

void cmd_preprocess(const Config& cfg, std::ostream& out) {
  const fs::path data_dir = cfg.str("data_dir");
  const Dataset ds = load_dataset(data_dir);
  const PipelineConfig pc = pipeline_from_config(cfg);
  const PreprocessResult result = preprocess(ds, pc);
  save_cache(result, data_dir / "tensors.bin");
  write_preprocess_meta(result, data_dir / "preprocess.meta");
  out << data_dir.string() << ": windows train/val/test = " << result.train.count
      << "/" << result.val.count << "/" << result.test.count << " (W="
      << pc.window << ", N=" << kNodeCount << ")\n";
}

void cmd_train(const Config& cfg, std::ostream& out) {
  const fs::path data_dir = cfg.str("data_dir");
  const PreprocessResult cache = load_cache_for(cfg);
  const Hyperparams hp = hyperparams_from_config(cfg);
  const ModelKind kind = parse_model_kind(cfg.str("arch"));
  Model model = build_model(kind, cache.cfg.bins.n_bins, cache.cfg.window,
                            kNodeCount, hp);
  const TrainResult result = train(model, cache.train, cache.val, hp);
  const fs::path model_dir = data_dir / to_string(kind);
  std::error_code ec;
  fs::create_directories(model_dir, ec);
  if (ec) throw IoError("cannot create directory " + model_dir.string());
  write_trace_csv(result, model_dir / "trace.csv");
  save_model(model, model_dir / "checkpoint.bin");
  const double final_val =
      result.trace.empty() ? 0.0 : result.trace.back().val_accuracy;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%%", final_val * 100.0);
  out << to_string(kind) << ": trained " << hp.iterations
      << " iterations, final validation accuracy " << buf << "\n"
      << "checkpoint: " << (model_dir / "checkpoint.bin").string() << "\n";
}

void cmd_eval(const Config& cfg, std::ostream& out) {
  const fs::path data_dir = cfg.str("data_dir");
  const PreprocessResult cache = load_cache_for(cfg);
  const Hyperparams hp = hyperparams_from_config(cfg);
  fs::path ck_path = cfg.str("checkpoint");
  if (ck_path.empty())
    ck_path = data_dir / cfg.str("arch") / "checkpoint.bin";
  if (!fs::exists(ck_path))
    throw IoError("checkpoint not found: " + ck_path.string() +
                  " (run the train command first)");
  Model model = load_model(ck_path, hp);
  if (cache.test.count == 0) throw ConfigError("eval: empty test split");

  const Predictions pred =
      predict(model, cache.test, cache.cfg.bins, hp.batch_size);
  const MetricsReport model_report =
      compute_metrics(cache.test.labels, pred.bins, cache.cfg.bins);

  // Path-loss inversion baseline on the same test windows: invert the target
  // node's (filtered) RSSI at the window's last tick, clamp into the bin
  // range, and score with the same metrics.
  const BinningSpec& bins = cache.cfg.bins;
  const double top =
      bins.d_min_m + bins.n_bins * bins.l_bin_m - 1e-9 * bins.l_bin_m;
  std::vector<int> baseline_bins;
  baseline_bins.reserve(cache.test.count);
  double baseline_abs_err = 0.0;
  for (size_t i = 0; i < cache.test.count; ++i) {
    const double d =
        baseline_pathloss_distance(cache.test.target_rssi[i], cache.channel);
    baseline_abs_err += std::abs(d - cache.test.truth_d[i]);
    baseline_bins.push_back(
        bin_index(std::clamp(d, bins.d_min_m, top), bins));
  }
  baseline_abs_err /= static_cast<double>(cache.test.count);
  const MetricsReport baseline_report =
      compute_metrics(cache.test.labels, baseline_bins, bins);

  const std::string name =
      data_dir.filename().string() + "/" + to_string(model.kind);
  std::vector<std::pair<std::string, MetricsReport>> rows = {
      {name, model_report}, {"baseline", baseline_report}};
  out << format_metrics_table(rows);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", baseline_abs_err * 100.0);
  out << "baseline mean |d_est - d_true|: " << buf << " cm\n";

  const fs::path model_dir = ck_path.parent_path();
  write_metrics_csv(rows, model_dir / "metrics.csv");
  write_confusion_csv(model_report, model_dir / "confusion.csv");
}

void cmd_compare(const Config& cfg, std::ostream& out) {
  const fs::path data_dir = cfg.str("data_dir");
  const PreprocessResult cache = load_cache_for(cfg);
  const Hyperparams hp = hyperparams_from_config(cfg);

  constexpr ModelKind kinds[] = {ModelKind::kFcn, ModelKind::kCnn,
                                 ModelKind::kLstm};
  std::vector<TrainResult> results;
  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (const ModelKind kind : kinds) {
    Model model = build_model(kind, cache.cfg.bins.n_bins, cache.cfg.window,
                              kNodeCount, hp);
    results.push_back(train(model, cache.train, cache.val, hp));
    const Predictions pred =
        predict(model, cache.test, cache.cfg.bins, hp.batch_size);
    rows.emplace_back(to_string(kind), compute_metrics(cache.test.labels,
                                                       pred.bins,
                                                       cache.cfg.bins));
    out << to_string(kind) << ": final validation accuracy "
        << (results.back().trace.empty()
                ? 0.0
                : results.back().trace.back().val_accuracy * 100.0)
        << "%\n";
  }

  // Shared iteration axis: all three train with the same eval grid.
  const fs::path compare_csv = data_dir / "compare.csv";
  std::ofstream os(compare_csv, std::ios::binary);
  if (!os) throw IoError("cannot write " + compare_csv.string());
  os << "iteration,fcn,cnn,lstm\n";
  char buf[128];
  for (size_t i = 0; i < results[0].trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f\n",
                  results[0].trace[i].iteration,
                  results[0].trace[i].val_accuracy,
                  results[1].trace[i].val_accuracy,
                  results[2].trace[i].val_accuracy);
    os << buf;
  }
  out << format_metrics_table(rows);
  out << "traces: " << compare_csv.string() << "\n";
}

namespace {

const struct {
  const char* name;
  unsigned mask;
  void (*fn)(const Config&, std::ostream&);
  const char* blurb;
} kCommands[] = {
    {"simulate", kCmdSimulate, cmd_simulate,
     "synthesize dataset directories (records/truth/meta)"},
    {"preprocess", kCmdPreprocess, cmd_preprocess,
     "filter, normalize and window a dataset into tensors.bin"},
    {"train", kCmdTrain, cmd_train,
     "train one architecture on the tensor cache"},
    {"eval", kCmdEval, cmd_eval,
     "score a checkpoint on the test split (plus the path-loss baseline)"},
    {"compare", kCmdCompare, cmd_compare,
     "train fcn, cnn and lstm on the same tensors and tabulate"},
};

void print_usage(std::ostream& os) {
  os << "usage: rssiloc <command> [--config FILE] [--key VALUE ...]\n\n"
        "commands:\n";
  for (const auto& c : kCommands)
    os << "  " << c.name << std::string(12 - std::string(c.name).size(), ' ')
       << c.blurb << "\n";
  os << "\n'rssiloc <command> --help' lists the config keys the command"
        " reads.\n";
}

void print_command_help(std::ostream& os, const char* name, unsigned mask) {
  os << "usage: rssiloc " << name << " [--config FILE] [--key VALUE ...]\n\n"
     << "config keys (default in parentheses):\n";
  for (const auto& spec : Config::schema()) {
    if (!(spec.cmds & mask)) continue;
    os << "  --" << spec.key << " (" << (spec.def[0] ? spec.def : "none")
       << ")\n      " << spec.desc << "\n";
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  try {
    if (argc < 2) {
      print_usage(err);
      return 2;
    }
    const std::string command = argv[1];
    if (command == "--help" || command == "-h" || command == "help") {
      print_usage(out);
      return 0;
    }
    const auto* cmd = [&]() -> decltype(&kCommands[0]) {
      for (const auto& c : kCommands)
        if (command == c.name) return &c;
      return nullptr;
    }();
    if (!cmd) throw ConfigError("unknown command: " + command);

    // Precedence: defaults < config file < --key overrides. The file is
    // loaded first no matter where --config appears on the line.
    Config cfg;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string config_file;
    bool want_help = false;
    for (int i = 2; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--help" || arg == "-h") {
        want_help = true;
        continue;
      }
      if (!arg.starts_with("--"))
        throw ConfigError("unexpected argument: " + arg);
      const std::string key = arg.substr(2);
      if (i + 1 >= argc)
        throw ConfigError("missing value for --" + key);
      const std::string value = argv[++i];
      if (key == "config") config_file = value;
      else overrides.emplace_back(key, value);
    }
    if (want_help) {
      print_command_help(out, cmd->name, cmd->mask);
      return 0;
    }
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& [key, value] : overrides) cfg.set(key, value);

    cmd->fn(cfg, out);
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::domain_error& e) {
    err << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace rssiloc
