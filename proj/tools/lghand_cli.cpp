// Command-line workflows: synth-data, train, eval, ablate, predict, plot.
//
// Exit codes: 0 success, 1 usage error, 2 unwritable output path,
// 3 parse/data error, 4 non-finite training loss, 5 checkpoint mismatch.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lghand/ablation.hpp"
#include "lghand/checkpoint.hpp"
#include "lghand/dataio.hpp"
#include "lghand/metrics.hpp"
#include "lghand/svg_plot.hpp"
#include "lghand/synthetic.hpp"
#include "lghand/topology.hpp"
#include "lghand/train.hpp"

namespace fs = std::filesystem;
using namespace lghand;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitUnwritable = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitCheckpoint = 5;

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw IoError("cannot create output directory " + out_dir);
  // Probe writability up front so we fail before doing any work.
  fs::path probe = fs::path(out_dir) / ".write_probe";
  std::ofstream f(probe);
  if (!f) throw IoError("output directory " + out_dir + " is not writable");
  f.close();
  fs::remove(probe, ec);
}

HandTopology topology_for(const TrainConfig& cfg) {
  return cfg.topology_file.empty() ? build_topology()
                                   : load_topology(cfg.topology_file);
}

std::vector<WindowSample> windows_for(
    const std::vector<SkeletonSequence>& seqs, const CameraModel& cam, int T,
    double noise_std, uint64_t seed) {
  std::vector<WindowSample> samples;
  for (const auto& seq : seqs) {
    auto w = make_windows(project_to_2d(seq, cam), seq, T, noise_std, seed);
    if (w.empty())
      std::cerr << "warning: sequence " << seq.subject << "/" << seq.action
                << "/" << seq.sequence_number << " shorter than the window ("
                << seq.size() << " < " << T << "), skipped\n";
    samples.insert(samples.end(), w.begin(), w.end());
  }
  return samples;
}

void write_report_plots(const MetricsReport& report,
                        const std::string& out_dir) {
  write_line_chart_svg((fs::path(out_dir) / "pck_curve.svg").string(),
                       "Correct 3D hand poses vs threshold", "threshold (mm)",
                       "fraction correct", report.pck);
  std::vector<std::pair<std::string, double>> type_bars, finger_bars;
  for (int i = 0; i < 5; ++i) {
    type_bars.emplace_back(kJointTypeNames[i], report.per_joint_type[i]);
    finger_bars.emplace_back(kFingerNames[i], report.per_finger[i]);
  }
  write_bar_chart_svg((fs::path(out_dir) / "mpjpe_joint_types.svg").string(),
                      "MPJPE by joint type", "MPJPE (mm)", type_bars);
  write_bar_chart_svg((fs::path(out_dir) / "mpjpe_fingers.svg").string(),
                      "MPJPE by finger", "MPJPE (mm)", finger_bars);
}

// --- subcommands ----------------------------------------------------------

int cmd_synth_data(int count, int frames, uint64_t seed,
                   const std::string& out_dir) {
  ensure_out_dir(out_dir);
  SyntheticDataset data = generate_synthetic(count, frames, seed);
  save_camera(data.camera, (fs::path(out_dir) / "camera.json").string());

  std::cout << "manifest:\n  camera.json\n";
  for (const auto& seq : data.sequences) {
    fs::path dir = fs::path(out_dir) / seq.subject / seq.action /
                   std::to_string(seq.sequence_number);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string());
    fs::path file = dir / "skeleton.txt";
    write_skeleton_file(seq, file.string());
    std::cout << "  " << fs::relative(file, out_dir).string() << " ("
              << seq.size() << " frames)\n";
  }
  std::cout << "wrote " << data.sequences.size() << " sequences to "
            << out_dir << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& data_root,
              const std::string& out_dir, const std::string& split,
              const std::string& resume) {
  TrainConfig cfg = load_train_config(config_path);
  ensure_out_dir(out_dir);

  std::vector<SkeletonSequence> sequences = load_dataset(data_root);
  CameraModel cam =
      load_camera((fs::path(data_root) / "camera.json").string());

  std::vector<SkeletonSequence> selected;
  if (split == "train")
    selected = split_train_eval(sequences).first;
  else if (split == "all")
    selected = sequences;
  else
    throw ValidationError("train: --split must be 'train' or 'all'");
  if (selected.empty()) throw ValidationError("train: selected split is empty");

  std::vector<WindowSample> samples = windows_for(
      selected, cam, cfg.net.window_frames, cfg.noise_std, cfg.seed);
  if (samples.empty()) throw ValidationError("train: no training windows");

  HandTopology topo = topology_for(cfg);
  std::unique_ptr<LocalToGlobalNet> net;
  OutputNorm norm;
  int start_epoch = 1;
  std::unique_ptr<AdamOptimizer> opt;

  if (!resume.empty()) {
    Checkpoint ck = load_checkpoint(resume);
    net = std::move(ck.net);
    norm = ck.norm;
    start_epoch = ck.epochs_trained + 1;
    opt = std::make_unique<AdamOptimizer>(net->parameters(), cfg.adam_beta1,
                                          cfg.adam_beta2, cfg.adam_eps);
    if (ck.has_optimizer_state) restore_optimizer_state(resume, *opt);
    std::cout << "resuming from " << resume << " at epoch " << start_epoch
              << "\n";
  } else {
    net = std::make_unique<LocalToGlobalNet>(topo, cfg.net, cfg.seed);
    opt = std::make_unique<AdamOptimizer>(net->parameters(), cfg.adam_beta1,
                                          cfg.adam_beta2, cfg.adam_eps);
  }

  save_train_config(cfg, (fs::path(out_dir) / "config.json").string());

  std::ofstream log((fs::path(out_dir) / "train_log.tsv").string(),
                    resume.empty() ? std::ios::out : std::ios::app);
  if (!log) throw IoError("train: cannot write train_log.tsv");
  if (resume.empty()) log << epoch_log_header() << "\n";

  if (resume.empty()) norm = compute_output_norm_uvz(samples, cam);
  TrainResult result = train(
      *net, samples, cfg, opt.get(), start_epoch,
      [&](const EpochStats& s) {
        log << format_epoch_log(s) << "\n";
        log.flush();
        std::cout << format_epoch_log(s) << "\n";
        return true;
      },
      &norm);

  int epochs_done = start_epoch - 1 + cfg.epochs;
  save_checkpoint((fs::path(out_dir) / "checkpoint.json").string(), *net,
                  result.norm, epochs_done, opt.get());
  std::cout << "checkpoint written to " << out_dir << "/checkpoint.json\n";
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_root,
             const std::string& out_dir, const std::string& split) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  ensure_out_dir(out_dir);

  std::vector<SkeletonSequence> sequences = load_dataset(data_root);
  CameraModel cam =
      load_camera((fs::path(data_root) / "camera.json").string());

  std::vector<SkeletonSequence> selected;
  if (split == "eval")
    selected = split_train_eval(sequences).second;
  else if (split == "all")
    selected = sequences;
  else
    throw ValidationError("eval: --split must be 'eval' or 'all'");
  if (selected.empty())
    throw ValidationError("eval: selected split is empty (no sequence #3?)");

  std::vector<WindowSample> samples = windows_for(
      selected, cam, ck.net->config().window_frames, 0.0, 2024);
  if (samples.empty()) throw ValidationError("eval: no evaluation windows");

  MetricsReport report = evaluate(*ck.net, samples, ck.norm);
  save_metrics(report, (fs::path(out_dir) / "metrics.json").string());

  std::ofstream pck((fs::path(out_dir) / "pck.tsv").string());
  if (!pck) throw IoError("eval: cannot write pck.tsv");
  pck << "threshold_mm\tfraction\n";
  pck.precision(10);
  for (auto [thr, frac] : report.pck) pck << thr << '\t' << frac << "\n";
  pck.close();

  write_report_plots(report, out_dir);

  std::cout.precision(6);
  std::cout << "overall MPJPE (mm): " << report.overall_mpjpe << "\n";
  for (const auto& [action, m] : report.per_action)
    std::cout << "  " << action << ": " << m.mpjpe << " (" << m.samples
              << " windows)\n";
  std::cout << "report written to " << out_dir << "\n";
  return kExitOk;
}

int cmd_ablate(const std::string& config_path, const std::string& grid_path,
               const std::string& out_dir, const std::string& data_root) {
  TrainConfig cfg = load_train_config(config_path);
  std::vector<GridEntry> grid = load_grid(grid_path);
  ensure_out_dir(out_dir);

  std::vector<SkeletonSequence> sequences;
  CameraModel cam;
  if (!data_root.empty()) {
    sequences = load_dataset(data_root);
    cam = load_camera((fs::path(data_root) / "camera.json").string());
  } else {
    SyntheticDataset data = generate_synthetic(8, 24, cfg.seed);
    sequences = std::move(data.sequences);
    cam = data.camera;
  }
  auto [train_seqs, eval_seqs] = split_train_eval(sequences);
  HandTopology topo = topology_for(cfg);

  std::vector<AblationRow> rows =
      ablation_run(cfg, grid, train_seqs, eval_seqs, cam, topo);

  std::ofstream table((fs::path(out_dir) / "ablation.tsv").string());
  if (!table) throw IoError("ablate: cannot write ablation.tsv");
  table << ablation_table_header() << "\n";
  std::cout << ablation_table_header() << "\n";
  for (const auto& row : rows) {
    table << format_ablation_row(row) << "\n";
    std::cout << format_ablation_row(row) << "\n";
  }
  return kExitOk;
}

int cmd_predict(const std::string& checkpoint_path,
                const std::string& input_path, const std::string& out_path) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  const int T = ck.net->config().window_frames;

  Skeleton2dSequence input = parse_skeleton_2d_file(input_path);
  if (static_cast<int>(input.frames.size()) < T)
    throw ValidationError("predict: input has fewer frames than the window (" +
                          std::to_string(input.frames.size()) + " < " +
                          std::to_string(T) + ")");

  SkeletonSequence out;
  const int n = HandTopology::kNumJoints;
  const size_t half = static_cast<size_t>(T / 2);
  for (size_t center = half; center + half < input.frames.size(); ++center) {
    WindowSample s;
    s.input.resize(T * n, 2);
    for (int t = 0; t < T; ++t)
      s.input.middleRows(t * n, n) = input.frames[center - half + t];
    normalize_window(s.input, s.norm_mean, s.norm_scale);
    Matrix y = ck.net->forward_batch(s.input, 1);
    Coords3 pred = denormalize_prediction(ck.norm, s, y);
    out.frame_indices.push_back(input.frame_indices[center]);
    out.frames.push_back(pred);
  }
  write_skeleton_file(out, out_path);
  std::cout << "wrote " << out.frames.size() << " predicted frames to "
            << out_path << "\n";
  return kExitOk;
}

int cmd_plot(const std::string& metrics_path, const std::string& out_dir) {
  MetricsReport report = load_metrics(metrics_path);
  ensure_out_dir(out_dir);
  write_report_plots(report, out_dir);
  std::cout << "plots written to " << out_dir << "\n";
  return kExitOk;
}

int run(const std::function<int()>& body) {
  try {
    return body();
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const CheckpointMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnwritable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LG-Hand: 3D hand pose lifting from 2D joint sequences"};
  app.require_subcommand(1);

  auto* synth =
      app.add_subcommand("synth-data", "Generate synthetic hand sequences");
  int count = 10, frames = 60;
  uint64_t seed = 7;
  std::string out_dir;
  synth->add_option("--count", count, "Number of sequences");
  synth->add_option("--frames", frames, "Frames per sequence");
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--out", out_dir, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  std::string config_path, data_root, train_split = "all", resume;
  train_cmd->add_option("--config", config_path, "Training config JSON")
      ->required();
  train_cmd->add_option("--data", data_root, "Dataset root")->required();
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  train_cmd->add_option("--split", train_split,
                        "Sequence split: 'train' (drop #3) or 'all'");
  train_cmd->add_option("--resume", resume, "Checkpoint to resume from");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string checkpoint_path, eval_split = "eval";
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON")
      ->required();
  eval_cmd->add_option("--data", data_root, "Dataset root")->required();
  eval_cmd->add_option("--out", out_dir, "Output directory")->required();
  eval_cmd->add_option("--split", eval_split,
                       "Sequence split: 'eval' (only #3) or 'all'");

  auto* ablate_cmd = app.add_subcommand("ablate", "Run an ablation grid");
  std::string grid_path, ablate_data;
  ablate_cmd->add_option("--config", config_path, "Base config JSON")
      ->required();
  ablate_cmd->add_option("--grid", grid_path, "Grid JSON")->required();
  ablate_cmd->add_option("--out", out_dir, "Output directory")->required();
  ablate_cmd->add_option("--data", ablate_data,
                         "Dataset root (default: internal synthetic set)");

  auto* predict_cmd =
      app.add_subcommand("predict", "Lift a 2D skeleton file to 3D");
  std::string input_path, out_path;
  predict_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON")
      ->required();
  predict_cmd->add_option("--input", input_path, "2D skeleton file")
      ->required();
  predict_cmd->add_option("--out", out_path, "Output skeleton file")
      ->required();

  auto* plot_cmd =
      app.add_subcommand("plot", "Re-render plots from a metrics file");
  std::string metrics_path;
  plot_cmd->add_option("--metrics", metrics_path, "metrics.json path")
      ->required();
  plot_cmd->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (synth->parsed())
    return run([&] { return cmd_synth_data(count, frames, seed, out_dir); });
  if (train_cmd->parsed())
    return run([&] {
      return cmd_train(config_path, data_root, out_dir, train_split, resume);
    });
  if (eval_cmd->parsed())
    return run([&] {
      return cmd_eval(checkpoint_path, data_root, out_dir, eval_split);
    });
  if (ablate_cmd->parsed())
    return run(
        [&] { return cmd_ablate(config_path, grid_path, out_dir, ablate_data); });
  if (predict_cmd->parsed())
    return run(
        [&] { return cmd_predict(checkpoint_path, input_path, out_path); });
  if (plot_cmd->parsed())
    return run([&] { return cmd_plot(metrics_path, out_dir); });
  return kExitUsage;
}
