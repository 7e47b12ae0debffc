// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "doctest.h"
#include "niaque/metrics.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Workspace {
 public:
  explicit Workspace(const std::string& name)
      : dir_(fs::temp_directory_path() / ("niaque_cli_" + name)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Run niaque(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" NIAQUE_CLI_PATH "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  /// Synthesizes a dataset and a manifest listing it.
  void synthetic_manifest(int n = 600) const {
    REQUIRE(niaque("synth --task hetero-gaussian --n " + std::to_string(n) +
                   " --seed 4 --out data.csv")
                .code == 0);
    write("manifest.tsv", "# training data\nsynthetic\tdata.csv\ty\n");
  }

 private:
  fs::path dir_;
};

const std::string kQuickTrain =
    "--set model.latent_dim=8 --set model.input_embed_dim=4 --set model.blocks=1 "
    "--set model.layers_per_block=1 --set model.feature_vocab_capacity=32 "
    "--set train.batch_size=32 --set train.total_batches=20 --set train.validation_interval=10 "
    "--set train.lr=1e-3";

}  // namespace

TEST_CASE("synth is deterministic and requires an output path") {
  Workspace w("synth");
  REQUIRE(w.niaque("synth --n 100 --seed 3 --out a.csv").code == 0);
  REQUIRE(w.niaque("synth --n 100 --seed 3 --out b.csv").code == 0);
  const std::string a = slurp(w.path("a.csv"));
  CHECK(a == slurp(w.path("b.csv")));
  CHECK(a.rfind("x1,x2,x3,x4,x5,y\n", 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 101);
  CHECK(w.niaque("synth --n 100").code == 2);
  CHECK(w.niaque("no-such-command").code == 2);
  CHECK(w.niaque("synth --task unknown --out c.csv").code == 1);
}

TEST_CASE("ingest writes dataset stores and a registry") {
  Workspace w("ingest");
  w.synthetic_manifest();
  REQUIRE(w.niaque("ingest --manifest manifest.tsv --out store").code == 0);
  CHECK(fs::exists(w.path("store/synthetic.niaq")));
  CHECK(slurp(w.path("store/synthetic.niaq")).rfind("NIAQ", 0) == 0);
  const std::string reg = slurp(w.path("store/registry.json"));
  CHECK(reg.find("\"x5\"") != std::string::npos);
}

TEST_CASE("train is reproducible and writes both checkpoints") {
  Workspace w("train");
  w.synthetic_manifest();
  const auto a = w.niaque("train --manifest manifest.tsv --out run_a " + kQuickTrain);
  REQUIRE(a.code == 0);
  REQUIRE(w.niaque("train --manifest manifest.tsv --out run_b " + kQuickTrain).code == 0);
  CHECK(fs::exists(w.path("run_a/final.ckpt")));
  CHECK(fs::exists(w.path("run_a/best.ckpt")));
  const std::string log = slurp(w.path("run_a/train.log"));
  CHECK(log == slurp(w.path("run_b/train.log")));
  CHECK(slurp(w.path("run_a/final.ckpt")) == slurp(w.path("run_b/final.ckpt")));
  const std::regex line(R"(batch=\d+ lr=\S+ train_pinball=\S+ val_pinball=\S+)");
  std::istringstream lines(log);
  int count = 0;
  for (std::string l; std::getline(lines, l); ++count) CHECK(std::regex_match(l, line));
  CHECK(count == 2);
  // Provenance of every setting goes to stderr.
  CHECK(a.err.find("config train.total_batches = 20 (flag)") != std::string::npos);
}

TEST_CASE("a missing manifest fails with a message naming it") {
  Workspace w("badmanifest");
  const auto r = w.niaque("train --manifest nope.tsv --out run");
  CHECK(r.code == 1);
  CHECK(r.err.find("nope.tsv") != std::string::npos);
  CHECK(w.niaque("train --manifest nope.tsv --out run --set model.no_key=1").code != 0);
}

TEST_CASE("evaluate, predict, importance and finetune on a trained checkpoint") {
  Workspace w("pipeline");
  w.synthetic_manifest();
  REQUIRE(w.niaque("train --manifest manifest.tsv --out run " + kQuickTrain).code == 0);

  const auto ev = w.niaque("evaluate --ckpt run/final.ckpt --manifest manifest.tsv --quantiles 200");
  REQUIRE(ev.code == 0);
  const auto keys = niaque::parse_metric_text(ev.out);
  for (const char* k : {"smape", "aad", "bias", "rmse", "rmsle", "crps", "coverage@95"}) {
    CHECK_MESSAGE(keys.count(k) == 1, k);
  }
  CHECK(keys.at("quantile_count") == 200);

  w.write("rows.csv", "x1,x2,x3,x4,x5\n0.1,0.2,0.3,0.4,0.5\n-0.5,0,0,0,0\n0.9,,,,0.1\n0,0,0,0,0\n");
  const auto pr = w.niaque("predict --ckpt run/final.ckpt --input rows.csv --quantiles 0.1,0.5,0.9");
  REQUIRE(pr.code == 0);
  CHECK(std::count(pr.out.begin(), pr.out.end(), '\n') == 12);
  CHECK(pr.out.rfind("0,0.1,", 0) == 0);
  const auto with_header = w.niaque(
      "predict --ckpt run/final.ckpt --input rows.csv --quantiles 0.5 --header --out p.csv");
  REQUIRE(with_header.code == 0);
  CHECK(slurp(w.path("p.csv")).rfind("row_index,q,yhat\n", 0) == 0);
  CHECK(w.niaque("predict --ckpt run/final.ckpt --input rows.csv --quantiles 1.5").code != 0);

  const auto im = w.niaque("importance --ckpt run/final.ckpt --manifest manifest.tsv");
  REQUIRE(im.code == 0);
  CHECK(im.out.rfind("feature_id,dataset,column,ci_width,weight\n", 0) == 0);
  CHECK(std::count(im.out.begin(), im.out.end(), '\n') == 6);

  REQUIRE(w.niaque("synth --task sine --n 400 --seed 9 --out new.csv").code == 0);
  w.write("new.tsv", "fresh\tnew.csv\ty\n");
  const auto ft = w.niaque("finetune --ckpt run/final.ckpt --manifest new.tsv --fraction 0.5 --out tuned " +
                           kQuickTrain);
  REQUIRE(ft.code == 0);
  const std::string log = slurp(w.path("tuned/train.log"));
  CHECK(log.find("lr=0.0001 ") != std::string::npos);
  CHECK(fs::exists(w.path("tuned/final.ckpt")));
}

TEST_CASE("gradcheck passes on the default tiny configurations") {
  Workspace w("gradcheck");
  const auto r = w.niaque("gradcheck");
  CHECK(r.code == 0);
  const std::regex last(R"((?:^|\n)max_relative_error=(\S+) tolerance=\S+ PASS\n?$)");
  std::smatch m;
  REQUIRE(std::regex_search(r.out, m, last));
  CHECK(std::stod(m[1].str()) <= 1e-4);
}
