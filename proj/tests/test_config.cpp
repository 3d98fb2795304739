#include <gtest/gtest.h>

#include <cstdlib>

#include "nib/config.hpp"

using namespace nib;

TEST(Config, Defaults) {
  const RunConfig c;
  EXPECT_DOUBLE_EQ(c.lambda, 0.6);
  EXPECT_DOUBLE_EQ(c.lr, 0.001);
  EXPECT_EQ(c.batch_size, 128);
  EXPECT_EQ(c.epochs, 200);
  EXPECT_EQ(c.ramp_epochs, 10);
  EXPECT_EQ(c.last_k, 10);
  EXPECT_DOUBLE_EQ(c.jocor_lambda, 0.85);
  EXPECT_EQ(c.method(), "coteaching");
  c.validate();
}

TEST(Config, ParsesKeysCommentsAndWhitespace) {
  const auto c = parse_config(R"(
# a comment
dataset.kind = blobs
noise.kind=symmetric   # trailing comment
noise.rate=0.2
paradigm = jocor
nib.mode = ic_only
arch.widths = 16, 8
seed = 7
train.epochs = 3
)");
  EXPECT_EQ(c.noise, NoiseKind::symmetric);
  EXPECT_DOUBLE_EQ(c.noise_rate, 0.2);
  EXPECT_EQ(c.paradigm, Paradigm::jocor);
  EXPECT_EQ(c.nib, NibMode::ic_only);
  EXPECT_EQ(c.arch.widths, (std::vector<int>{16, 8}));
  EXPECT_EQ(c.seed_data, 7u);
  EXPECT_EQ(c.seed_shuffle, 7u);
  EXPECT_EQ(c.epochs, 3);
  EXPECT_EQ(c.method(), "jocor+IC-only");
  EXPECT_DOUBLE_EQ(c.effective_tau(), 0.2);
}

TEST(Config, SelectionModeAlias) {
  RunConfig c;
  apply_override(c, "selection.mode=overall");
  EXPECT_EQ(c.nib, NibMode::on);
  apply_override(c, "selection.mode=cls_only");
  EXPECT_EQ(c.nib, NibMode::off);
  EXPECT_EQ(criterion_for(NibMode::ic_only), Criterion::ic_only);
}

TEST(Config, TauOverrideAndAuto) {
  RunConfig c;
  apply_override(c, "noise.kind=pair");
  apply_override(c, "noise.rate=0.1");
  apply_override(c, "selection.tau=0.3");
  EXPECT_DOUBLE_EQ(c.effective_tau(), 0.3);
  apply_override(c, "selection.tau=auto");
  EXPECT_DOUBLE_EQ(c.effective_tau(), 0.1);
  apply_override(c, "noise.kind=none");
  EXPECT_DOUBLE_EQ(c.effective_tau(), 0.0);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  RunConfig c;
  EXPECT_THROW(apply_override(c, "train.epoch=3"), ParameterError);
  EXPECT_THROW(apply_override(c, "train.epochs=three"), ParameterError);
  EXPECT_THROW(apply_override(c, "nib.mode=maybe"), ParameterError);
  EXPECT_THROW(apply_override(c, "no equals sign"), ParameterError);
  EXPECT_THROW(parse_config("train.epochs 3\n"), ParameterError);
}

TEST(Config, ValidateCatchesOutOfRangeValues) {
  auto bad = [](const char* kv) {
    RunConfig c;
    apply_override(c, kv);
    return c;
  };
  EXPECT_THROW(bad("nib.lambda=1.2").validate(), ParameterError);
  EXPECT_THROW(bad("jocor.lambda=-0.1").validate(), ParameterError);
  EXPECT_THROW(bad("train.epochs=0").validate(), ParameterError);
  EXPECT_THROW(bad("train.batch_size=0").validate(), ParameterError);
  EXPECT_THROW(bad("noise.rate=1.0").validate(), ParameterError);
  EXPECT_THROW(bad("dataset.n_per_class=3").validate(), ParameterError);
}

TEST(Config, TextRoundTrip) {
  RunConfig c;
  apply_override(c, "noise.kind=symmetric");
  apply_override(c, "noise.rate=0.2");
  apply_override(c, "nib.lambda=0.123456789012345678");
  apply_override(c, "dataset.cluster_std=1.7");
  apply_override(c, "arch.kind=small_cnn");
  apply_override(c, "arch.widths=4,8");
  apply_override(c, "arch.fc_width=16");
  apply_override(c, "seed.init=18446744073709551615");
  apply_override(c, "output.label=my run");
  apply_override(c, "selection.tau=0.25");
  const std::string text = to_text(c);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(to_text(back), text);
  EXPECT_EQ(back.lambda, c.lambda);
  EXPECT_EQ(back.seed_init, c.seed_init);
  EXPECT_EQ(back.label, "my run");
  EXPECT_EQ(back.arch.kind, ArchKind::small_cnn);
}

TEST(Config, SetRunSeedKeepsDataSeed) {
  RunConfig c;
  apply_override(c, "seed.data=5");
  c.set_run_seed(42);
  EXPECT_EQ(c.seed_data, 5u);
  EXPECT_EQ(c.seed_noise, 42u);
  EXPECT_EQ(c.seed_init, 42u);
  EXPECT_EQ(c.seed_shuffle, 42u);
}

TEST(Config, DatasetPathFallsBackToEnvironment) {
  RunConfig c;
  ::setenv(kDataRootEnv, "/data/cifar", 1);
  EXPECT_EQ(resolve_dataset_path(c), "/data/cifar");
  c.dataset_path = "/explicit";
  EXPECT_EQ(resolve_dataset_path(c), "/explicit");
  ::unsetenv(kDataRootEnv);
  c.dataset_path.clear();
  EXPECT_TRUE(resolve_dataset_path(c).empty());
}
