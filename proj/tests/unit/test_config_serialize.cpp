#include "helpers.hpp"

#include "optima/config.hpp"
#include "optima/serialize.hpp"

#include <doctest.h>

using namespace optima;
using testing::same_bits;

TEST_CASE("config resolution is strict") {
  const ExperimentConfig defaults = resolve_config(nullptr, {});
  CHECK(defaults.train.epsilon == 2.0);
  const ExperimentConfig c = resolve_config(nullptr, {"train.epsilon=0.5", "task.name=toy2d", "pretrain.seeds=[4,5]"});
  CHECK(c.train.epsilon == 0.5);
  CHECK(c.task.task == TaskKind::toy2d);
  CHECK(c.pretrain.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(c.report.reference == "optima");

  CHECK_THROWS_AS(resolve_config(nullptr, {"train.epsilonn=0.5"}), ConfigError);
  CHECK_THROWS_AS(resolve_config(nullptr, {"train.max_steps=\"many\""}), ConfigError);
  CHECK_THROWS_AS(resolve_config(nullptr, {"train.optimizer=adafactor"}), ConfigError);
  CHECK_THROWS_AS(resolve_config(nullptr, {"train.epsilon=-1"}), ConfigError);
  CHECK_THROWS_AS(resolve_config(nullptr, {"no_equals_sign"}), ConfigError);

  const auto dir = testing::temp_dir("config");
  write_json(dir / "c.json", {{"train", {{"ascent_steps", 5}}}});
  const auto path = dir / "c.json";
  const ExperimentConfig f = resolve_config(&path, {"train.ascent_steps=6"});
  CHECK(f.train.ascent_steps == 6);
  write_json(dir / "bad.json", {{"trian", {{"ascent_steps", 5}}}});
  const auto bad = dir / "bad.json";
  CHECK_THROWS_AS(resolve_config(&bad, {}), ConfigError);

  // the JSON form round-trips to the same resolved config
  CHECK(canonical_config(config_from_json(to_json(c))) == canonical_config(c));
}

TEST_CASE("config hash is stable and sensitive") {
  const ExperimentConfig a = resolve_config(nullptr, {"train.epsilon=1.5"});
  const ExperimentConfig b = resolve_config(nullptr, {"train.epsilon=1.5"});
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 64);
  CHECK(config_hash(a) != config_hash(resolve_config(nullptr, {"train.epsilon=1.25"})));
  CHECK(config_hash(a) != config_hash(resolve_config(nullptr, {"train.epsilon=1.5", "seed=2"})));
}

TEST_CASE("weights snapshot reload gives bitwise identical forwards") {
  const testing::Small s = testing::small_setup();
  const BackboneWeights back = weights_from_json(nlohmann::json::parse(weights_to_json(s.model.backbone, 7).dump()));
  CHECK(digest(back) == digest(s.model.backbone));
  const PromptParameters p = initial_prompt(s.model, PromptInit::gaussian, 3);
  for (int i = 0; i < 20; ++i) {
    const EmbeddedSequence seq = s.model.frontend.build(p, s.pair.source[static_cast<std::size_t>(i)].input);
    CHECK(same_bits(forward(seq, back, s.model.head).probs, forward(seq, s.model.backbone, s.model.head).probs));
  }
  nlohmann::json broken = weights_to_json(s.model.backbone, 7);
  broken["format"] = "something-else";
  CHECK_THROWS_AS(weights_from_json(broken), InputError);
}

TEST_CASE("rng, report and checkpoint round trips") {
  Rng rng(42);
  rng.discard(1000);
  Rng copy = rng_from_state(rng_state(rng));
  CHECK(copy == rng);
  CHECK(copy() == rng());
  CHECK_THROWS_AS(rng_from_state("not a state"), InputError);

  RunReport r = compute_metrics(std::vector<int>{0, 1, 1, 2}, std::vector<int>{0, 1, 2, 2}, 3);
  r.method = "vat";
  r.phase = "fewshot";
  r.seed = 2;
  r.sample_index = 5;
  r.config_hash = "abc";
  const RunReport back = report_from_json(nlohmann::json::parse(report_to_json(r).dump()));
  CHECK(report_to_json(back) == report_to_json(r));
  CHECK(back.accuracy == r.accuracy);
  CHECK(back.sample_index == 5);

  const testing::Small s = testing::small_setup();
  TrainConfig config;
  config.max_steps = 4;
  config.eval_interval = 2;
  config.batch_size = 8;
  const ValidationSplit split = split_validation(s.pair.source, 0.1);
  const Checkpoint ck = pretrain(s.model, Method::optima, {split.train, split.validation, s.pair.target.examples}, config);
  const nlohmann::json j = checkpoint_to_json(ck);
  const Checkpoint reloaded = checkpoint_from_json(nlohmann::json::parse(j.dump()));
  CHECK(checkpoint_to_json(reloaded) == j);
  CHECK(same_bits(reloaded.state.prompt.rows, ck.state.prompt.rows));
  CHECK(reloaded.state.delta_rng == ck.state.delta_rng);

  nlohmann::json tampered = j;
  tampered["backbone_digest"] = std::string(64, '0');
  CHECK_THROWS_AS(checkpoint_from_json(tampered), InputError);
}

TEST_CASE("atomic text writes") {
  const auto dir = testing::temp_dir("io");
  write_text(dir / "a" / "b.txt", "hello\n");
  CHECK(read_text(dir / "a" / "b.txt") == "hello\n");
  write_text(dir / "a" / "b.txt", "again\n");
  CHECK(read_text(dir / "a" / "b.txt") == "again\n");
  CHECK_THROWS_AS(read_text(dir / "missing.txt"), InputError);
  write_text(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(read_json(dir / "bad.json"), InputError);
}
