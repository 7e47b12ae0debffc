// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "niaque/run_config.hpp"

using namespace niaque;

TEST_CASE("defaults mirror the library defaults") {
  const RunConfig c;
  CHECK(c.model() == NiaqueConfig{});
  CHECK(c.training() == TrainConfig{});
  CHECK(c.ingest().max_rows == 20000);
  CHECK(c.source("train.lr") == RunConfig::Source::default_value);
}

TEST_CASE("file values then flags override defaults") {
  RunConfig c;
  c.load_text(
      "# comment\n"
      "[model]\n"
      "latent_dim = 64   # trailing comment\n"
      "blocks=2\n"
      "\n"
      "[train]\n"
      "lr = 0.001\n"
      "lr_drop_points = 100, 200\n");
  c.set_assignment("model.latent_dim=32");
  CHECK(c.model().latent_dim == 32);
  CHECK(c.model().blocks == 2);
  CHECK(c.training().lr == 0.001);
  CHECK(c.training().lr_drop_points == std::vector<Index>{100, 200});
  CHECK(c.source("model.latent_dim") == RunConfig::Source::flag);
  CHECK(c.source("model.blocks") == RunConfig::Source::file);
  CHECK(c.source("train.seed") == RunConfig::Source::default_value);
  const std::string p = c.provenance();
  CHECK(p.find("config model.latent_dim = 32 (flag)\n") != std::string::npos);
  CHECK(p.find("config model.blocks = 2 (file)\n") != std::string::npos);
  CHECK(p.find("config train.batch_size = 512 (default)\n") != std::string::npos);
}

TEST_CASE("malformed configuration is rejected") {
  RunConfig c;
  CHECK_THROWS_AS(c.load_text("[model]\nnot_a_key = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(c.load_text("blocks = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(c.load_text("[model\nblocks = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(c.load_text("[model]\nblocks 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(c.set_assignment("train.lr"), std::invalid_argument);
  c.set("train.lr", "fast");
  CHECK_THROWS_AS(c.training(), std::invalid_argument);
  c.set("train.lr", "-1");
  CHECK_THROWS_AS(c.training(), std::invalid_argument);
  c.set("train.lr", "1e-3");
  c.set("model.blocks", "0");
  CHECK_THROWS(c.model());
}
