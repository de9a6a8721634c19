#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "curvssl/checkpoint.hpp"
#include "curvssl/error.hpp"

using namespace curvssl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("curvssl_ckpt_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Checkpoint sample() {
  Checkpoint c;
  c.architecture.input_dim = 4;
  c.architecture.encoder_widths = {3};
  c.architecture.projector_widths = {3, 2};
  c.parameters = init_params(c.architecture, 77);
  c.parameters.encoder[0].bias[1] = -0.0;
  c.parameters.projector[0].bias[0] = 1e-310;
  c.parameters.projector[1].bias[1] = 0.1 + 0.2;
  c.provenance.seed = 77;
  c.provenance.epochs_completed = 2;
  c.provenance.config_text = "k = 3\nbatch_size = 8\n";
  c.provenance.weights = {1.0, 0.5, 0.25};
  c.provenance.loss_history = {{10.5, 1, 2, 3, 4, c.provenance.weights}, {9.25, 0.5, 1.5, 2.5, 3.5, c.provenance.weights}};
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

ErrorKind load_error(const fs::path& p) {
  try {
    (void)load_checkpoint(p);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("load succeeded");
  return ErrorKind::InvariantViolation;
}

}  // namespace

TEST_CASE("double encoding is lossless") {
  for (double v : {0.0, -0.0, 1.0, 0.1, -3.5e-300, 4.9e-324, std::numeric_limits<double>::max(),
                   std::numeric_limits<double>::infinity()}) {
    const std::string h = encode_double(v);
    CHECK(h.size() == 16);
    const double back = decode_double(h);
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
  CHECK(encode_double(1.0) == "3ff0000000000000");
  CHECK_THROWS_AS(decode_double("3ff"), Error);
  CHECK_THROWS_AS(decode_double("zzzzzzzzzzzzzzzz"), Error);
}

TEST_CASE("config digest is FNV-1a 64") {
  CHECK(config_digest("") == 0xcbf29ce484222325ULL);
  CHECK(config_digest("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(config_digest("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("save then load is bit exact") {
  TempDir dir;
  const Checkpoint c = sample();
  const fs::path p = dir.path / "model.ckpt";
  save_checkpoint(c, p);
  CHECK_FALSE(fs::exists(dir.path / "model.ckpt.tmp"));
  const Checkpoint back = load_checkpoint(p);
  CHECK(back == c);
  CHECK(std::signbit(back.parameters.encoder[0].bias[1]));

  // A second save over the same path replaces it atomically.
  Checkpoint c2 = c;
  c2.provenance.seed = 78;
  save_checkpoint(c2, p);
  CHECK(load_checkpoint(p) == c2);
}

TEST_CASE("default-size checkpoint round trip") {
  TempDir dir;
  Checkpoint c;
  c.parameters = init_params(c.architecture, 1);
  save_checkpoint(c, dir.path / "big.ckpt");
  CHECK(load_checkpoint(dir.path / "big.ckpt") == c);
}

TEST_CASE("truncation never yields a partial checkpoint") {
  TempDir dir;
  const fs::path p = dir.path / "model.ckpt";
  save_checkpoint(sample(), p);
  const std::string body = slurp(p);
  for (std::size_t cut : {std::size_t{0}, std::size_t{10}, body.size() / 3, body.size() / 2, body.size() - 5}) {
    CAPTURE(cut);
    spit(p, body.substr(0, cut));
    const ErrorKind k = load_error(p);
    CHECK((k == ErrorKind::FormatVersionMismatch || k == ErrorKind::IoFailure));
  }
}

TEST_CASE("load errors") {
  TempDir dir;
  CHECK(load_error(dir.path / "missing.ckpt") == ErrorKind::IoFailure);

  const fs::path p = dir.path / "model.ckpt";
  save_checkpoint(sample(), p);
  const std::string body = slurp(p);

  std::string v2 = body;
  v2.replace(v2.find("curvssl-checkpoint 1"), 20, "curvssl-checkpoint 2");
  spit(p, v2);
  CHECK(load_error(p) == ErrorKind::FormatVersionMismatch);

  std::string tampered = body;
  tampered.replace(tampered.find("k = 3"), 5, "k = 4");
  spit(p, tampered);
  CHECK(load_error(p) == ErrorKind::DigestMismatch);

  spit(p, "not a checkpoint\n");
  CHECK(load_error(p) == ErrorKind::FormatVersionMismatch);
}

TEST_CASE("hand-written minimal file") {
  TempDir dir;
  const fs::path p = dir.path / "tiny.ckpt";
  // 1 -> 1 encoder, 1 -> 1 -> 1 projector, every tensor 1×1.
  spit(p,
       "curvssl-checkpoint 1\n"
       "architecture 1 encoder 1 projector 1,1 activation relu\n"
       "seed 5\n"
       "epochs 0\n"
       "config_digest cbf29ce484222325\n"
       "config 0\n"
       "weights 3ff0000000000000 3ff0000000000000 3ff0000000000000\n"
       "history 0\n"
       "tensors 6\n"
       "tensor encoder.0.weight 1 1\n"
       "4004000000000000\n"
       "tensor encoder.0.bias 1 1\n"
       "0000000000000000\n"
       "tensor projector.0.weight 1 1\n"
       "3ff0000000000000\n"
       "tensor projector.0.bias 1 1\n"
       "0000000000000000\n"
       "tensor projector.1.weight 1 1\n"
       "bff0000000000000\n"
       "tensor projector.1.bias 1 1\n"
       "3fe0000000000000\n"
       "end\n");
  const Checkpoint c = load_checkpoint(p);
  CHECK(c.parameters.encoder[0].weight.item() == 2.5);
  CHECK(c.parameters.projector[1].weight.item() == -1.0);
  CHECK(c.parameters.projector[1].bias.item() == 0.5);
  CHECK(c.provenance.seed == 5);
  CHECK(c.provenance.config_text.empty());
  CHECK(encode(c.parameters, Tensor::from_rows({{2}})) == Tensor::from_rows({{5}}));
}

TEST_CASE("config text must end with a newline") {
  TempDir dir;
  Checkpoint c = sample();
  c.provenance.config_text = "k = 3";
  CHECK_THROWS_AS(save_checkpoint(c, dir.path / "x.ckpt"), Error);
}
