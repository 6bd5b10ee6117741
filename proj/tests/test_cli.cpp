// End-to-end subcommand tests driving the built binary through the
// documented workflows and exit codes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lghand/checkpoint.hpp"
#include "lghand/dataio.hpp"
#include "lghand/metrics.hpp"
#include "lghand/synthetic.hpp"

using namespace lghand;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "lghand_cli_test";

int run_cli(const std::string& args) {
  std::string cmd = std::string(LGHAND_CLI_PATH) + " " + args +
                    " >/dev/null 2>/dev/null";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long count_lines(const fs::path& p) {
  std::ifstream in(p);
  long n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

void write_tiny_config(const fs::path& path, int epochs) {
  std::ofstream out(path);
  out << R"({"epochs": )" << epochs << R"(, "batch_size": 16,
    "initial_lr": 0.002, "window_frames": 3,
    "width21": 4, "width6": 6, "width1": 8, "nonlocal_embed": 2,
    "seed": 9})";
}

}  // namespace

TEST_CASE("cli workflows") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);

  SUBCASE("synth-data writes the documented layout deterministically") {
    fs::path d1 = kWork / "data1", d2 = kWork / "data2";
    CHECK(run_cli("synth-data --count 5 --frames 12 --seed 3 --out " +
                  d1.string()) == 0);
    CHECK(run_cli("synth-data --count 5 --frames 12 --seed 3 --out " +
                  d2.string()) == 0);

    for (int n = 1; n <= 5; ++n) {
      fs::path f1 = d1 / "Subject_1/synthetic_motion" / std::to_string(n) /
                    "skeleton.txt";
      REQUIRE(fs::exists(f1));
      CHECK(count_lines(f1) == 12);
      fs::path f2 = d2 / "Subject_1/synthetic_motion" / std::to_string(n) /
                    "skeleton.txt";
      CHECK(slurp(f1) == slurp(f2));  // byte-identical per seed
    }
    CHECK(fs::exists(d1 / "camera.json"));

    // Zero sequences is a valid empty manifest.
    CHECK(run_cli("synth-data --count 0 --frames 4 --out " +
                  (kWork / "empty").string()) == 0);

    // Unwritable output path.
    CHECK(run_cli("synth-data --count 1 --frames 4 --out /dev/null/x") == 2);
  }

  SUBCASE("train, resume, eval, predict, plot") {
    fs::path data = kWork / "data";
    REQUIRE(run_cli("synth-data --count 5 --frames 12 --seed 3 --out " +
                    data.string()) == 0);
    fs::path cfg = kWork / "config.json";
    write_tiny_config(cfg, 2);

    fs::path run1 = kWork / "run1";
    CHECK(run_cli("train --config " + cfg.string() + " --data " +
                  data.string() + " --out " + run1.string()) == 0);
    CHECK(fs::exists(run1 / "checkpoint.json"));
    CHECK(fs::exists(run1 / "config.json"));
    fs::path log = run1 / "train_log.tsv";
    REQUIRE(fs::exists(log));
    CHECK(count_lines(log) == 3);  // header + 2 epochs
    {
      std::ifstream in(log);
      std::string header;
      std::getline(in, header);
      CHECK(header ==
            "epoch\tlr\tloss_pose\tloss_finger\tloss_angle\tloss_direction\t"
            "loss_total");
    }

    // Resume continues epoch numbering in the same log.
    CHECK(run_cli("train --config " + cfg.string() + " --data " +
                  data.string() + " --out " + run1.string() + " --resume " +
                  (run1 / "checkpoint.json").string()) == 0);
    CHECK(count_lines(log) == 5);
    {
      std::ifstream in(log);
      std::string line;
      std::getline(in, line);  // header
      int expect = 1;
      while (std::getline(in, line)) {
        CHECK(line.rfind(std::to_string(expect) + "\t", 0) == 0);
        ++expect;
      }
      CHECK(expect == 5);
    }
    Checkpoint ck = load_checkpoint((run1 / "checkpoint.json").string());
    CHECK(ck.epochs_trained == 4);

    // Evaluate on the held-out 3rd sequence.
    fs::path eval_out = kWork / "eval";
    CHECK(run_cli("eval --checkpoint " + (run1 / "checkpoint.json").string() +
                  " --data " + data.string() + " --out " +
                  eval_out.string()) == 0);
    REQUIRE(fs::exists(eval_out / "metrics.json"));
    CHECK(fs::exists(eval_out / "pck.tsv"));
    CHECK(fs::exists(eval_out / "pck_curve.svg"));
    CHECK(fs::exists(eval_out / "mpjpe_joint_types.svg"));
    MetricsReport report = load_metrics((eval_out / "metrics.json").string());
    CHECK(report.num_samples == 10);  // sequence 3: 12 frames -> 10 windows
    CHECK(std::isfinite(report.overall_mpjpe));

    // PCK plot values come from the same metrics file.
    std::string pck_tsv = slurp(eval_out / "pck.tsv");
    std::istringstream pck_in(pck_tsv);
    std::string header;
    std::getline(pck_in, header);
    double thr, frac;
    size_t row = 0;
    while (pck_in >> thr >> frac) {
      CHECK(thr == report.pck[row].first);
      CHECK(frac == doctest::Approx(report.pck[row].second));
      ++row;
    }
    CHECK(row == report.pck.size());

    // Predict: 3 input frames with T=3 yield exactly one output frame that
    // re-parses through the skeleton reader, deterministically.
    SyntheticDataset synth = generate_synthetic(1, 3, 8);
    Seq2 projected = project_to_2d(synth.sequences[0], synth.camera);
    Skeleton2dSequence in2d;
    in2d.frame_indices = synth.sequences[0].frame_indices;
    in2d.frames = projected;
    fs::path input2d = kWork / "input2d.txt";
    write_skeleton_2d_file(in2d, input2d.string());

    fs::path pred1 = kWork / "pred1.txt", pred2 = kWork / "pred2.txt";
    CHECK(run_cli("predict --checkpoint " +
                  (run1 / "checkpoint.json").string() + " --input " +
                  input2d.string() + " --out " + pred1.string()) == 0);
    CHECK(run_cli("predict --checkpoint " +
                  (run1 / "checkpoint.json").string() + " --input " +
                  input2d.string() + " --out " + pred2.string()) == 0);
    SkeletonSequence pred = parse_fphab_skeleton_file(pred1.string());
    CHECK(pred.size() == 1);
    CHECK(pred.frame_indices[0] == 1);  // central frame of 0,1,2
    CHECK(slurp(pred1) == slurp(pred2));

    // Plot regeneration from the metrics file alone.
    fs::path plots = kWork / "plots";
    CHECK(run_cli("plot --metrics " + (eval_out / "metrics.json").string() +
                  " --out " + plots.string()) == 0);
    CHECK(fs::exists(plots / "pck_curve.svg"));
  }

  SUBCASE("ablation table mirrors the grid") {
    fs::path cfg = kWork / "config.json";
    write_tiny_config(cfg, 1);
    fs::path grid = kWork / "grid.json";
    {
      std::ofstream out(grid);
      out << R"({"rows": [{"label": "pose-only", "weights": [1, 0, 0, 0]},
                          {"label": "full", "weights": [1, 0.1, 0.1, 0.01]}]})";
    }
    fs::path out_dir = kWork / "ablate";
    CHECK(run_cli("ablate --config " + cfg.string() + " --grid " +
                  grid.string() + " --out " + out_dir.string()) == 0);
    fs::path table = out_dir / "ablation.tsv";
    REQUIRE(fs::exists(table));
    CHECK(count_lines(table) == 3);  // header + 2 rows
    std::istringstream in(slurp(table));
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    CHECK(line.rfind("pose-only\t", 0) == 0);
    std::getline(in, line);
    CHECK(line.rfind("full\t", 0) == 0);
  }

  SUBCASE("documented error exit codes") {
    fs::path cfg = kWork / "config.json";
    write_tiny_config(cfg, 1);

    // Missing data root.
    CHECK(run_cli("train --config " + cfg.string() + " --data " +
                  (kWork / "missing").string() + " --out " +
                  (kWork / "r").string()) == 3);

    // Not a checkpoint.
    fs::path bogus = kWork / "bogus.json";
    {
      std::ofstream out(bogus);
      out << "{\"format\": \"other\", \"version\": 1}";
    }
    CHECK(run_cli("eval --checkpoint " + bogus.string() + " --data " +
                  (kWork / "missing").string() + " --out " +
                  (kWork / "e").string()) == 5);

    // Wrong joint count in a 2D input file.
    fs::path data = kWork / "pdata";
    REQUIRE(run_cli("synth-data --count 3 --frames 6 --seed 1 --out " +
                    data.string()) == 0);
    fs::path run_dir = kWork / "prun";
    REQUIRE(run_cli("train --config " + cfg.string() + " --data " +
                    data.string() + " --out " + run_dir.string()) == 0);
    fs::path bad2d = kWork / "bad2d.txt";
    {
      std::ofstream out(bad2d);
      out << "0 1.0 2.0 3.0\n";
    }
    CHECK(run_cli("predict --checkpoint " +
                  (run_dir / "checkpoint.json").string() + " --input " +
                  bad2d.string() + " --out " + (kWork / "p.txt").string()) ==
          3);

    // Usage errors.
    CHECK(run_cli("no-such-command") == 1);
    CHECK(run_cli("train") == 1);
  }

  fs::remove_all(kWork);
}
