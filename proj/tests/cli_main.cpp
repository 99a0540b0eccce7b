// End-to-end checks of the hhi command-line tool. The binary under test is
// passed as the first argument and every test drives it as a subprocess.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string g_hhi;
fs::path g_root;
int g_run_counter = 0;

struct RunResult {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Runs the tool with `args`, optionally prefixed by environment assignments
// such as "HHI_SIMD=scalar". Working directory is the scratch root.
RunResult run(const std::string& args, const std::string& env = "") {
  fs::path out = g_root / ("out" + std::to_string(g_run_counter));
  fs::path err = g_root / ("err" + std::to_string(g_run_counter));
  ++g_run_counter;
  std::string cmd = "cd '" + g_root.string() + "' && " + env + (env.empty() ? "" : " ") +
                    "'" + g_hhi + "' " + args + " > '" + out.string() + "' 2> '" +
                    err.string() + "'";
  int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

bool same_bytes(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

const char* kTwoJointBvh = R"(HIERARCHY
ROOT Hips
{
  OFFSET 0.0 90.0 0.0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT Chest
  {
    OFFSET 0.0 30.5 -2.25
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0.0 15.0 0.0
    }
  }
}
MOTION
Frames: 2
Frame Time: 0.01
1.0 90.0 -3.0 0.5 10.0 -20.0 4.0 5.0 6.0
1.5 90.2 -3.1 0.6 10.5 -20.5 4.1 5.1 6.1
)";

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("inspect summarizes a rig") {
  write_file(g_root / "rig.bvh", kTwoJointBvh);
  RunResult r = run("inspect rig.bvh");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("joints: 2, frames: 2, fps: 100\n", 0) == 0);
  CHECK(r.out.find("Hips (6 channels") != std::string::npos);
  CHECK(r.out.find("Chest (3 channels") != std::string::npos);
}

TEST_CASE("bad invocations exit with status 2") {
  RunResult missing = run("inspect does_not_exist.bvh");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("error:") != std::string::npos);

  CHECK(run("").code == 2);                       // a subcommand is required
  CHECK(run("frobnicate x").code == 2);           // unknown subcommand
  CHECK(run("inspect --frobnicate rig.bvh").code == 2);
  CHECK(run("train").code == 2);                  // missing required positionals
  CHECK(run("synth d --stride 0").code == 2);     // rejected configuration
}

TEST_CASE("synthetic corpus pipeline runs end to end") {
  RunResult synth =
      run("synth ds --seed 7 --clips 6 --len 120 --stride 12 --noise 2 --delay 6");
  REQUIRE(synth.code == 0);
  CHECK(synth.err.find("[synth] resolved config:") != std::string::npos);
  for (const char* split : {"train", "val", "test"}) {
    CHECK(fs::exists(g_root / "ds" / split / "meta.json"));
    CHECK(fs::exists(g_root / "ds" / split / "data.bin"));
    CHECK(fs::exists(g_root / "ds" / split / "manifest.jsonl"));
  }

  RunResult train = run(
      "train ds/train model.ckpt --epochs 1 --batch 8 --width 8 --ff 8 --blocks 1 "
      "--heads 2 --seed 1");
  REQUIRE(train.code == 0);
  CHECK(fs::exists(g_root / "model.ckpt"));
  CHECK_FALSE(fs::exists(g_root / "model.ckpt.partial"));
  CHECK(train.err.find("simd=") != std::string::npos);

  RunResult predict = run("predict model.ckpt ds/val pred --num-samples 1 --seed 2");
  REQUIRE(predict.code == 0);
  CHECK(fs::exists(g_root / "pred" / "data.bin"));

  RunResult ev = run("eval pred ds/val report.csv");
  REQUIRE(ev.code == 0);
  std::string csv = slurp(g_root / "report.csv");
  CHECK(csv.find("agent,horizon_ms,mpjpe_mm,n_windows") != std::string::npos);
  CHECK(csv.find("cg,average,") != std::string::npos);
  CHECK(csv.find("cr,1000,") != std::string::npos);

  RunResult zv = run("baseline zero-velocity ds/val pred_zv");
  REQUIRE(zv.code == 0);
  RunResult cv = run("baseline constant-velocity ds/val pred_cv");
  REQUIRE(cv.code == 0);
  CHECK(run("eval pred_zv ds/val zv.csv").code == 0);
  CHECK(run("eval pred_cv ds/val cv.csv --include-pelvis").code == 0);
  CHECK(run("baseline teleport ds/val pred_bad").code == 2);

  SUBCASE("the same seeds reproduce every byte") {
    REQUIRE(run("synth ds2 --seed 7 --clips 6 --len 120 --stride 12 --noise 2 --delay 6")
                .code == 0);
    CHECK(same_bytes(g_root / "ds/train/data.bin", g_root / "ds2/train/data.bin"));
    REQUIRE(run("train ds2/train model2.ckpt --epochs 1 --batch 8 --width 8 --ff 8 "
                "--blocks 1 --heads 2 --seed 1")
                .code == 0);
    CHECK(same_bytes(g_root / "model.ckpt", g_root / "model2.ckpt"));
    REQUIRE(run("predict model2.ckpt ds2/val pred2 --num-samples 1 --seed 2").code == 0);
    CHECK(same_bytes(g_root / "pred/data.bin", g_root / "pred2/data.bin"));
    REQUIRE(run("eval pred2 ds2/val report2.csv").code == 0);
    CHECK(same_bytes(g_root / "report.csv", g_root / "report2.csv"));
  }

  SUBCASE("thread count does not change the result") {
    REQUIRE(run("train ds/train model_t2.ckpt --epochs 1 --batch 8 --width 8 --ff 8 "
                "--blocks 1 --heads 2 --seed 1",
                "HHI_NUM_THREADS=2")
                .code == 0);
    CHECK(same_bytes(g_root / "model.ckpt", g_root / "model_t2.ckpt"));
  }

  SUBCASE("simd backend is selectable and logged") {
    RunResult scalar = run("predict model.ckpt ds/val pred_s --num-samples 1 --seed 2",
                           "HHI_SIMD=scalar");
    REQUIRE(scalar.code == 0);
    CHECK(scalar.err.find("simd=scalar") != std::string::npos);
  }

  SUBCASE("interrupted training resumes to the identical checkpoint") {
    REQUIRE(run("train ds/train part.ckpt --epochs 2 --batch 8 --width 8 --ff 8 "
                "--blocks 1 --heads 2 --seed 1 --stop-after 1")
                .code == 0);
    CHECK(fs::exists(g_root / "part.ckpt.partial"));
    REQUIRE(run("train ds/train part.ckpt --epochs 2 --batch 8 --width 8 --ff 8 "
                "--blocks 1 --heads 2 --seed 1 --resume")
                .code == 0);
    REQUIRE(run("train ds/train whole.ckpt --epochs 2 --batch 8 --width 8 --ff 8 "
                "--blocks 1 --heads 2 --seed 1")
                .code == 0);
    CHECK(same_bytes(g_root / "part.ckpt", g_root / "whole.ckpt"));
    CHECK_FALSE(fs::exists(g_root / "part.ckpt.partial"));
  }

  SUBCASE("angle representation trains and reports link drift") {
    REQUIRE(run("train ds/train ang.ckpt --epochs 1 --batch 8 --width 8 --ff 8 "
                "--blocks 1 --heads 2 --seed 1 --representation angle")
                .code == 0);
    RunResult pr = run("predict ang.ckpt ds/val pred_ang --num-samples 1 --seed 2");
    REQUIRE(pr.code == 0);
    CHECK(fs::exists(g_root / "pred_ang" / "link_report.csv"));
    CHECK(pr.err.find("link_report.csv") != std::string::npos);
    CHECK(run("eval pred_ang ds/val ang.csv").code == 0);
  }
}

TEST_CASE("prepare ingests BVH pairs and skips incomplete takes") {
  REQUIRE(run("synth ds_raw --seed 9 --clips 4 --len 100 --stride 10 --emit-bvh raw")
              .code == 0);
  REQUIRE(fs::exists(g_root / "raw" / "pairs.csv"));

  // Knock out one partner file: the take must be skipped with a warning
  // while the remaining pairs still make it through.
  std::vector<fs::path> cr_files;
  for (const auto& e : fs::directory_iterator(g_root / "raw"))
    if (e.path().string().find("_cr.bvh") != std::string::npos)
      cr_files.push_back(e.path());
  REQUIRE(cr_files.size() == 4);
  std::sort(cr_files.begin(), cr_files.end());
  fs::remove(cr_files[0]);

  RunResult prep = run("prepare raw prepared --stride 10 --angles");
  REQUIRE(prep.code == 0);
  CHECK(prep.err.find("missing its partner file, skipped") != std::string::npos);
  for (const char* split : {"train", "val", "test"})
    CHECK(fs::exists(g_root / "prepared" / split / "meta.json"));

  RunResult ins = run("inspect raw/synth_0_cg.bvh");
  CHECK(ins.code == 0);
  CHECK(ins.out.find("joints: 5") != std::string::npos);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <hhi-binary> [doctest options]\n", argv[0]);
    return 64;
  }
  g_hhi = fs::absolute(argv[1]).string();
  g_root = fs::temp_directory_path() / ("hhi_cli_" + std::to_string(::getpid()));
  fs::create_directories(g_root);
  doctest::Context ctx;
  ctx.applyCommandLine(argc - 1, argv + 1);
  int rc = ctx.run();
  fs::remove_all(g_root);
  return rc;
}
