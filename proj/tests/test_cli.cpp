#include <gtest/gtest.h>

#include <sstream>

#include "ringnet/cli.hpp"
#include "temp_dir.hpp"

using namespace ringnet;
using test_support::TempDir;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

/// gen-model (small mesh) and a 4 x 4 dataset in `dir`.
void prepare(const TempDir& dir) {
  ASSERT_EQ(run({"gen-model", "-o", (dir / "model.json").string(), "--rings", "12", "--segments", "20"}).code, 0);
  ASSERT_EQ(run({"--seed", "7", "synth", "--model", (dir / "model.json").string(), "-o", (dir / "data.json").string(),
                 "--identities", "4", "--images", "4"})
                .code,
            0);
}

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run({}).code, 2);
  const CliRun unknown = run({"frobnicate"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({"gen-model", "--bogus", "-o", "x.json"}).code, 2);
  EXPECT_EQ(run({"train", "--model", "m.json"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, RuntimeFailuresExitWithOneAndDiagnose) {
  TempDir dir("cli_err");
  const CliRun r = run({"infer", "--model", (dir / "missing.json").string(), "--checkpoint", "c.json", "--landmarks", "l.txt"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("missing.json"), std::string::npos);
  prepare(dir);
  write_text(dir / "bad.cfg", "ring = 6\nwarp = 9\n");
  const CliRun bad = run({"train", "--model", (dir / "model.json").string(), "--data", (dir / "data.json").string(), "-o",
                       (dir / "c.json").string(), "--config", (dir / "bad.cfg").string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("bad.cfg:2"), std::string::npos) << bad.err;
}

TEST(Cli, TrainWithZeroEpochsWritesTheInitialization) {
  TempDir dir("cli_init");
  prepare(dir);
  ASSERT_EQ(run({"--seed", "3", "train", "--model", (dir / "model.json").string(), "--data", (dir / "data.json").string(),
                 "-o", (dir / "c.json").string(), "--epochs", "0"})
                .code,
            0);
  const HeadModel m = load_model(dir / "model.json");
  const StoredDataset d = load_dataset(dir / "data.json");
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.epochs = 0;
  EXPECT_EQ(load_checkpoint(dir / "c.json"), init_training(m, d.data, cfg));
}

TEST(Cli, SynthAndTrainAreByteDeterministic) {
  TempDir a("cli_det_a"), b("cli_det_b");
  for (const TempDir* dir : {&a, &b}) {
    prepare(*dir);
    write_text(*dir / "t.cfg", "slices = 2\nhidden = 32\n");
    ASSERT_EQ(run({"--seed", "11", "train", "--model", (*dir / "model.json").string(), "--data", (*dir / "data.json").string(),
                   "-o", (*dir / "c.json").string(), "--steps", "4", "--config", (*dir / "t.cfg").string(), "--loss-csv",
                   (*dir / "loss.csv").string()})
                  .code,
              0);
  }
  for (const char* f : {"model.bin", "data.json", "data.bin", "c.json", "c.bin", "loss.csv"})
    EXPECT_EQ(read_bytes(a / f), read_bytes(b / f)) << f;
  EXPECT_EQ(read_text(a / "loss.csv").rfind("step,total,", 0), 0u);
}

TEST(Cli, ResumeContinuesFromCheckpoint) {
  TempDir dir("cli_resume");
  prepare(dir);
  write_text(dir / "t.cfg", "slices = 2\nhidden = 16\n");
  const std::string model = (dir / "model.json").string(), data = (dir / "data.json").string(), cfg = (dir / "t.cfg").string();
  ASSERT_EQ(run({"train", "--model", model, "--data", data, "-o", (dir / "full.json").string(), "--steps", "4", "--config", cfg}).code, 0);
  ASSERT_EQ(run({"train", "--model", model, "--data", data, "-o", (dir / "half.json").string(), "--steps", "2", "--config", cfg}).code, 0);
  ASSERT_EQ(run({"train", "--model", model, "--data", data, "-o", (dir / "rest.json").string(), "--steps", "4", "--resume",
                 (dir / "half.json").string()})
                .code,
            0);
  EXPECT_EQ(load_checkpoint(dir / "rest.json").weights, load_checkpoint(dir / "full.json").weights);
}

TEST(Cli, EvalOfScanAgainstItselfIsZero) {
  TempDir dir("cli_eval");
  prepare(dir);
  ASSERT_EQ(run({"synth", "--model", (dir / "model.json").string(), "-o", (dir / "d2.json").string(), "--identities", "2",
                 "--images", "1", "--export", (dir / "exp").string()})
                .code,
            0);
  write_text(dir / "m.csv",
             "image_id,challenge,prediction_mesh,prediction_landmarks,scan_mesh,scan_landmarks\n"
             "a,neutral,exp/id0.obj,exp/id0_landmarks.txt,exp/id0.obj,exp/id0_landmarks.txt\n"
             "b,selfie,exp/id1.obj,exp/id1_landmarks.txt,exp/id1.obj,exp/id1_landmarks.txt\n");
  const CliRun r = run({"eval", "--manifest", (dir / "m.csv").string(), "-o", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rep = Json::parse(read_text(dir / "out" / "report.json"));
  EXPECT_LT(rep["overall"]["median"].get<double>(), 1e-9);
  EXPECT_LT(rep["per_challenge"]["selfie"]["median"].get<double>(), 1e-9);
  const Curve c = parse_curve_csv(read_text(dir / "out" / "curve.csv"), "c");
  EXPECT_EQ(c.fractions.back(), 1.0);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "curve.svg"));
}

TEST(Cli, FullPipelineSmoke) {
  TempDir dir("cli_full");
  prepare(dir);
  const std::string model = (dir / "model.json").string(), data = (dir / "data.json").string();
  write_text(dir / "t.cfg", "slices = 2\nhidden = 32\n");
  ASSERT_EQ(run({"train", "--model", model, "--data", data, "-o", (dir / "c.json").string(), "--steps", "3", "--config",
                 (dir / "t.cfg").string(), "--checkpoint-every", "2"})
                .code,
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "c_step2.json"));
  ASSERT_EQ(run({"synth", "--model", model, "-o", (dir / "e.json").string(), "--identities", "2", "--images", "1", "--export",
                 (dir / "exp").string()})
                .code,
            0);
  const CliRun inf = run({"infer", "--model", model, "--checkpoint", (dir / "c.json").string(), "--landmarks",
                       (dir / "exp" / "img0.txt").string(), "--params", (dir / "p.json").string(), "--mesh",
                       (dir / "pred.obj").string(), "--mesh-landmarks", (dir / "pred_lm.txt").string(), "--neutral"});
  ASSERT_EQ(inf.code, 0) << inf.err;
  const ParamVector p = params_from_json(Json::parse(read_text(dir / "p.json")));
  EXPECT_EQ(p.shape.size(), 10u);
  EXPECT_EQ(read_points(dir / "pred_lm.txt").size(), 7u);
  const CliRun fit = run({"fit", "--model", model, "--landmarks", (dir / "exp" / "img1.txt").string(), "--mesh",
                       (dir / "fit.obj").string(), "--mesh-landmarks", (dir / "fit_lm.txt").string(), "--iterations", "50"});
  ASSERT_EQ(fit.code, 0) << fit.err;
  write_text(dir / "m.csv",
             "image_id,challenge,prediction_mesh,prediction_landmarks,scan_mesh,scan_landmarks\n"
             "a,neutral,pred.obj,pred_lm.txt,exp/id0.obj,exp/id0_landmarks.txt\n"
             "b,neutral,fit.obj,fit_lm.txt,exp/id1.obj,exp/id1_landmarks.txt\n"
             "c,selfie,,,exp/id1.obj,exp/id1_landmarks.txt\n");
  const CliRun ev = run({"--threads", "2", "eval", "--manifest", (dir / "m.csv").string(), "-o", (dir / "out").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const Json rep = Json::parse(read_text(dir / "out" / "report.json"));
  EXPECT_EQ(rep["failures"], 1);
  EXPECT_GT(rep["overall"]["median"].get<double>(), 0.0);
  ASSERT_EQ(run({"plot", "--curve", (dir / "out" / "curve.csv").string(), "--curve", (dir / "out" / "curve.csv").string(),
                 "-o", (dir / "plot.svg").string(), "--title", "smoke"})
                .code,
            0);
  EXPECT_NE(read_text(dir / "plot.svg").find("smoke"), std::string::npos);
}

TEST(Cli, AblateWritesOneRowPerRing) {
  TempDir dir("cli_ablate");
  prepare(dir);
  write_text(dir / "t.cfg", "slices = 2\nhidden = 16\n");
  const CliRun r = run({"ablate", "--model", (dir / "model.json").string(), "--data", (dir / "data.json").string(), "--rings",
                     "3,4", "--holdout", "1", "--steps", "2", "--config", (dir / "t.cfg").string(), "-o",
                     (dir / "abl.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string table = read_text(dir / "abl.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  EXPECT_EQ(table.rfind("ring,median_mm", 0), 0u);
  ASSERT_EQ(run({"--seed", "8", "synth", "--model", (dir / "model.json").string(), "-o", (dir / "val.json").string(),
                 "--identities", "2", "--images", "2"})
                .code,
            0);
  const CliRun v = run({"ablate", "--model", (dir / "model.json").string(), "--data", (dir / "data.json").string(), "--validation",
                        (dir / "val.json").string(), "--rings", "3", "--steps", "2", "--config", (dir / "t.cfg").string(), "-o",
                        (dir / "abl2.csv").string()});
  ASSERT_EQ(v.code, 0) << v.err;
  EXPECT_NE(read_text(dir / "abl2.csv").find("\n3,"), std::string::npos);
  EXPECT_EQ(run({"ablate", "--model", (dir / "model.json").string(), "--data", (dir / "data.json").string(), "--rings",
                 "3,x", "-o", (dir / "abl.csv").string()})
                .code,
            1);
}
