#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

#include "curvssl/config.hpp"
#include "curvssl/error.hpp"

using namespace curvssl;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(std::string_view text, std::optional<std::size_t>* row = nullptr) {
  try {
    (void)parse_config_text(text);
  } catch (const Error& e) {
    if (row) *row = e.row();
    return e.kind();
  }
  FAIL("config accepted");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("empty text gives the documented defaults") {
  const RunConfig c = parse_config_text("");
  CHECK(c.train.k == 10);
  CHECK(c.train.batch_size == 256);
  CHECK(c.train.epochs == 100);
  CHECK(c.train.weights == LossWeights{1, 1, 1});
  CHECK(std::holds_alternative<Euclidean>(c.train.metric));
  CHECK(c.train.learning_rate == 1e-3);
  CHECK(c.train.weight_decay == 1e-4);
  CHECK(c.train.eps == 1e-5);
  CHECK(c.train.seed == 0);
  CHECK(c.train.architecture == Architecture{});
  CHECK(c.train.augmentation == AugmentationPolicy{});
  CHECK(c.dataset == DatasetKind::Mnist);
  CHECK(c.probe.epochs == 50);
  CHECK(c.probe.learning_rate == 0.1);
  CHECK(c.probe.batch_size == 256);
  CHECK(c.probe.hidden_units == 0);
}

TEST_CASE("values, comments and whitespace") {
  const RunConfig c = parse_config_text(
      "# a comment\n"
      "  k=5   # trailing comment\n"
      "batch_size = 64\n"
      "\n"
      "encoder_widths = 32, 16\n"
      "lambda_emb = 0.005\n"
      "seed = 18446744073709551615\n"
      "dataset = blobs\n"
      "input_dim = 8\r\n");
  CHECK(c.train.k == 5);
  CHECK(c.train.batch_size == 64);
  CHECK(c.train.architecture.encoder_widths == std::vector<std::size_t>{32, 16});
  CHECK(c.train.weights.lambda_emb == 0.005);
  CHECK(c.train.seed == 18446744073709551615ULL);
  CHECK(c.probe.seed == c.train.seed);
  CHECK(c.dataset == DatasetKind::Blobs);
}

TEST_CASE("metric selection") {
  const RunConfig median = parse_config_text("metric = rbf\n");
  CHECK(std::get<KernelSpec>(median.train.metric) == KernelSpec::rbf_median());
  const RunConfig fixed = parse_config_text("gamma = 0.25\nmetric = rbf\n");
  CHECK(std::get<KernelSpec>(fixed.train.metric) == KernelSpec::rbf(0.25));
  const RunConfig lin = parse_config_text("metric = linear\n");
  CHECK(std::get<KernelSpec>(lin.train.metric) == KernelSpec::linear());
  CHECK(kind_of("metric = cosine\n") == ErrorKind::TypeError);
  CHECK(kind_of("gamma = 1\n") == ErrorKind::InvariantViolation);
  CHECK(kind_of("metric = rbf\ngamma = -1\n") == ErrorKind::InvalidArgument);
}

TEST_CASE("errors") {
  std::optional<std::size_t> row;
  CHECK(kind_of("k = 3\nbogus = 1\n", &row) == ErrorKind::UnknownKey);
  CHECK(row == 2u);
  CHECK(kind_of("k = three\n", &row) == ErrorKind::TypeError);
  CHECK(row == 1u);
  CHECK(kind_of("k = -1\n") == ErrorKind::TypeError);
  CHECK(kind_of("learning_rate = fast\n") == ErrorKind::TypeError);
  CHECK(kind_of("learning_rate = nan\n") == ErrorKind::TypeError);
  CHECK(kind_of("encoder_widths = 3,,4\n") == ErrorKind::TypeError);
  CHECK(kind_of("just some words\n") == ErrorKind::TypeError);
  CHECK(kind_of("k = 300\nbatch_size = 256\n") == ErrorKind::InvariantViolation);
  CHECK(kind_of("k = 3\nk = 4\n") == ErrorKind::InvariantViolation);
  CHECK(kind_of("epochs = 0\n") == ErrorKind::InvariantViolation);
  CHECK(kind_of("mask_fraction = 1\n") == ErrorKind::InvariantViolation);
  CHECK(kind_of("dataset = ring\n") == ErrorKind::InvariantViolation);
  CHECK(kind_of("projector_widths = 32\n") == ErrorKind::InvalidArchitecture);
}

TEST_CASE("rendered config parses back to the same values") {
  const RunConfig c = parse_config_text(
      "metric = rbf\ngamma = 0.3\nk = 4\nbatch_size = 32\nseed = 9\ndataset = ring\ninput_dim = 2\n"
      "ring_noise = 0.1\nprobe_hidden = 8\nweight_decay = 0.1\n",
      "/base");
  const std::string text = render_config(c);
  const RunConfig back = parse_config_text(text);
  CHECK(render_config(back) == text);
  CHECK(std::get<KernelSpec>(back.train.metric) == KernelSpec::rbf(0.3));
  CHECK(back.train.weight_decay == 0.1);
  CHECK(back.ring_noise == 0.1);
  CHECK(back.out == fs::path("/base/out"));
  CHECK(text.find("gamma = 0.29999999999999999\n") != std::string::npos);
}

TEST_CASE("relative paths resolve against the config file") {
  const fs::path dir = fs::temp_directory_path() / ("curvssl_cfg_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir / "sub");
  std::ofstream(dir / "sub" / "run.conf") << "train_images = ../imgs\nout = results\n";
  const RunConfig c = parse_config(dir / "sub" / "run.conf");
  CHECK(c.train_images == (dir / "imgs").lexically_normal());
  CHECK(c.out == (dir / "sub" / "results").lexically_normal());
  write_resolved_config(c, dir);
  CHECK(fs::exists(dir / "config.resolved"));
  fs::remove_all(dir);

  try {
    (void)parse_config(dir / "missing.conf");
    FAIL("expected IoFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IoFailure);
  }
}

TEST_CASE("synthetic splits share their class layout") {
  const RunConfig c = parse_config_text("dataset = blobs\ninput_dim = 4\nsynthetic_train = 40\nsynthetic_test = 20\n"
                                        "blobs_spread = 0\ntrain_limit = 30\n");
  const DataSplit s = load_datasets(c);
  CHECK(s.train.size() == 30);
  CHECK(s.test.size() == 20);
  // Zero spread: a test point equals the train point of its class.
  for (std::size_t i = 0; i < s.test.size(); ++i) {
    const auto cls = static_cast<std::size_t>(s.test.labels[i]);
    for (std::size_t p = 0; p < 4; ++p) CHECK(s.test.features(i, p) == s.train.features(cls, p));
  }
  CHECK_THROWS_AS(load_datasets(parse_config_text("")), Error);
}
