// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "tivgan/curriculum/curriculum.hpp"
#include "tivgan/errors.hpp"

using namespace tivgan;
using namespace tivgan::curriculum;

namespace {

data::DatasetIndex tiny_dataset() {
  data::SyntheticSpec s;
  s.frame_size = 8;
  s.radius = 1.5;
  s.clips_per_class = 2;
  s.seed = 3;
  return data::generate_synthetic_dataset(s);
}

CurriculumConfig tiny_config() {
  CurriculumConfig c;
  c.n = 4;
  c.iters_stage1 = 3;
  c.iters_per_step = 2;
  c.batch_size = 2;
  c.arch.frame_size = 8;
  c.arch.text_dim = 3;
  c.arch.z_dim = 2;
  c.arch.hidden = 4;
  c.arch.ngf = 2;
  c.arch.ndf = 2;
  c.raw_dim = 16;
  c.seed = 9;
  return c;
}

std::set<std::uint64_t> ids_of(const std::vector<nn::Parameter<float>*>& ps) {
  std::set<std::uint64_t> out;
  for (auto* p : ps) out.insert(p->id);
  return out;
}

}  // namespace

TEST_CASE("config key values round trip") {
  auto c = tiny_config();
  c.steps_mask = {0, 2, 4};
  c.lr_g = 1.0 / 3.0;
  c.use_isp = false;
  const auto back = CurriculumConfig::from_kv(c.to_kv());
  CHECK(back.to_kv().dump() == c.to_kv().dump());
  CHECK(back.lr_g == c.lr_g);
  CHECK(back.steps_mask == c.steps_mask);
  KeyValues kv;
  kv.set("d", "7");
  kv.set("h", "9");
  const auto aliases = CurriculumConfig::from_kv(kv);
  CHECK(aliases.arch.text_dim == 7);
  CHECK(aliases.arch.hidden == 9);
  kv.set("learning_rate", "1");
  CHECK_THROWS_AS(CurriculumConfig::from_kv(kv), InvalidInput);
  KeyValues bad;
  bad.set("n", "four");
  CHECK_THROWS_AS(CurriculumConfig::from_kv(bad), InvalidInput);
}

TEST_CASE("steps mask budgets") {
  CHECK(parse_steps_mask("4, 0,2") == std::vector<int>{0, 2, 4});
  CHECK(format_steps_mask({0, 2, 4}) == "0,2,4");
  CHECK_THROWS_AS(parse_steps_mask("1,x"), InvalidInput);

  CurriculumConfig c;
  c.steps_mask = {0, 2, 4};
  CHECK(c.budget(0) == 3000);
  CHECK(c.budget(1) == 0);
  CHECK(c.budget(2) == 3000);
  CHECK(c.budget(4) == 3000);
  CHECK(c.total_iterations() == 9000);
  c.steps_mask = {1, 4};
  CHECK(c.budget(1) == 4500);
  CHECK(c.budget(4) == 4500);
  CHECK(c.executed_stages() == std::vector<int>{1, 4});
  c.steps_mask = {0, 2};
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c.steps_mask = {0, 5};
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("full schedule on a tiny budget") {
  const auto index = tiny_dataset();
  auto st = initial_state(tiny_config(), index);
  const auto td = prepare_training_data(index, st.pca);
  const auto g_ids = ids_of(st.models.generator_params());
  const auto di_ids = ids_of(st.models.image_disc_params());
  std::vector<int> frames;
  std::vector<std::string> labels;
  std::set<std::uint64_t> seen_step_ids;
  Hooks hooks;
  hooks.at_boundary = [&](CurriculumState& s) {
    frames.push_back(s.frames_per_clip());
    CHECK(ids_of(s.models.generator_params()) == g_ids);
    CHECK(ids_of(s.models.image_disc_params()) == di_ids);
    if (s.stage == 0) {
      CHECK_FALSE(s.models.step_disc.has_value());
    } else {
      REQUIRE(s.models.step_disc.has_value());
      labels.push_back(s.models.step_disc->label());
      CHECK(s.models.step_disc->in_channels() == 3 * s.frames_per_clip());
      const auto ids = ids_of(s.models.step_disc_params());
      for (auto id : ids) CHECK_FALSE(seen_step_ids.contains(id));
      seen_step_ids.insert(ids.begin(), ids.end());
    }
  };
  train(st, td, hooks);
  CHECK(frames == std::vector<int>{1, 2, 4, 8, 16});
  CHECK(labels == std::vector<std::string>{"d_s1", "d_s2", "d_s3", "d_s4"});
  CHECK(st.global_iteration == tiny_config().total_iterations());
}

TEST_CASE("a fixed seed repeats bit for bit") {
  const auto index = tiny_dataset();
  auto a = train(tiny_config(), index);
  auto b = train(tiny_config(), index);
  CHECK(parameter_checksum(a.models.all_params()) == parameter_checksum(b.models.all_params()));
  auto other = tiny_config();
  other.seed = 10;
  auto c = train(other, index);
  CHECK(parameter_checksum(a.models.all_params()) != parameter_checksum(c.models.all_params()));
}

TEST_CASE("masked schedules start at the first executed stage") {
  const auto index = tiny_dataset();
  auto cfg = tiny_config();
  cfg.steps_mask = {1, 4};
  auto st = initial_state(cfg, index);
  CHECK(st.stage == 1);
  REQUIRE(st.models.step_disc.has_value());
  const auto td = prepare_training_data(index, st.pca);
  std::vector<std::pair<int, std::int64_t>> seen;
  Hooks hooks;
  hooks.at_boundary = [&](CurriculumState& s) { seen.emplace_back(s.stage, s.stage_iteration); };
  train(st, td, hooks);
  CHECK(seen == std::vector<std::pair<int, std::int64_t>>{{1, 5}, {4, 6}});
}

TEST_CASE("random step discriminator init") {
  const auto index = tiny_dataset();
  auto cfg = tiny_config();
  cfg.use_eq1_init = false;
  auto st = initial_state(cfg, index);
  auto inherited = initial_state(tiny_config(), index);
  advance_step(st, 1);
  advance_step(inherited, 1);
  CHECK_FALSE(st.models.step_disc->cond_hidden.weight.value == inherited.models.step_disc->cond_hidden.weight.value);
  CHECK(inherited.models.step_disc->cond_hidden.weight.value == inherited.models.image_disc.cond_hidden.weight.value);
}

TEST_CASE("checkpoints round trip and resume exactly") {
  const auto index = tiny_dataset();
  const auto dir = std::filesystem::temp_directory_path() / "tivgan_test_curriculum";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  auto full = train(tiny_config(), index);

  auto part = initial_state(tiny_config(), index);
  const auto td = prepare_training_data(index, part.pca);
  Hooks stop;
  stop.stop_at = 6;
  train(part, td, stop);
  CHECK(part.global_iteration == 6);
  save_checkpoint(part, dir / "c.tivg");
  auto resumed = load_checkpoint(dir / "c.tivg");
  CHECK(resumed.stage == part.stage);
  CHECK(resumed.rng == part.rng);
  CHECK(serialize_checkpoint(resumed) == serialize_checkpoint(part));
  const auto td2 = prepare_training_data(index, resumed.pca);
  train(resumed, td2);
  CHECK(parameter_checksum(resumed.models.all_params()) == parameter_checksum(full.models.all_params()));
  CHECK(serialize_checkpoint(resumed) == serialize_checkpoint(full));

  auto bytes = serialize_checkpoint(full);
  CHECK_THROWS_AS(deserialize_checkpoint(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + bytes.size() / 2)),
                  FormatError);
  bytes[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bytes), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.tivg"), FormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset and config must agree") {
  const auto index = tiny_dataset();
  auto cfg = tiny_config();
  cfg.arch.frame_size = 16;
  CHECK_THROWS_AS(initial_state(cfg, index), InvalidInput);
  cfg = tiny_config();
  cfg.n = 5;
  CHECK_THROWS_AS(initial_state(cfg, index), InvalidInput);
}

TEST_CASE("generated clips are deterministic per seed") {
  const auto index = tiny_dataset();
  auto st = initial_state(tiny_config(), index);
  const auto code = text::condition_code(st.pca, index.class_caption(0));
  Rng a(1), b(1), c(2);
  const auto x = generate_clips(st.models, code, 3, 4, a);
  CHECK(x.shape() == nn::Shape{3, 12, 8, 8});
  CHECK(x == generate_clips(st.models, code, 3, 4, b));
  CHECK_FALSE(x == generate_clips(st.models, code, 3, 4, c));
}
