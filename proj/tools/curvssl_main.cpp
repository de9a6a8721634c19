// curvssl command-line tool.
//
// Exit status:
//   0        success
//   1        unexpected internal failure
//   2        usage error (bad flags, missing required option)
//   10 + n   library error, n = position of the kind in ErrorKind:
//            10 ShapeMismatch        11 NonFinite          12 NotScalarOutput
//            13 KTooLarge            14 DegenerateEdge     15 BatchTooSmall
//            16 InvalidArgument      17 InvalidArchitecture 18 IoFailure
//            19 FormatVersionMismatch 20 DigestMismatch    21 BadMagic
//            22 CountMismatch        23 TruncatedFile      24 InvalidCounts
//            25 EmptyDataset         26 UnknownKey         27 TypeError
//            28 InvariantViolation

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "curvssl/checkpoint.hpp"
#include "curvssl/config.hpp"
#include "curvssl/error.hpp"
#include "curvssl/geometry.hpp"
#include "curvssl/trainer.hpp"

namespace fs = std::filesystem;
using namespace curvssl;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitErrorBase = 10;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string checkpoint;
  std::string input;
  std::string split = "test";
};

RunConfig prepare(const Options& o) {
  RunConfig cfg = o.config.empty() ? parse_config_text("") : parse_config(o.config);
  if (o.seed) {
    cfg.train.seed = *o.seed;
    cfg.probe.seed = *o.seed;
  }
  if (!o.out.empty()) cfg.out = fs::absolute(o.out).lexically_normal();
  fs::create_directories(cfg.out);
  write_resolved_config(cfg, cfg.out);
  return cfg;
}

Checkpoint need_checkpoint(const Options& o) {
  if (o.checkpoint.empty()) throw Error(ErrorKind::InvalidArgument, "--checkpoint is required");
  return load_checkpoint(o.checkpoint);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int run_pretrain(const Options& o) {
  const RunConfig cfg = prepare(o);
  const DataSplit data = load_datasets(cfg);
  const PretrainResult r = pretrain(cfg.train, data.train, render_config(cfg));
  save_checkpoint(r.checkpoint, cfg.out / "checkpoint.ckpt");
  write_history_csv(r.history, cfg.out / "history.csv");
  const auto& last = r.history.back();
  std::cout << "epochs " << r.history.size() << " final_total " << fmt(last.mean.total) << '\n';
  return 0;
}

int run_probe(const Options& o) {
  const RunConfig cfg = prepare(o);
  const Checkpoint ckpt = need_checkpoint(o);
  const DataSplit data = load_datasets(cfg);
  const ProbeResult r = linear_probe(ckpt, data.train, data.test, cfg.probe);
  std::ofstream csv(cfg.out / "probe.csv");
  csv << "accuracy,train_accuracy\n" << fmt(r.accuracy) << ',' << fmt(r.train_accuracy) << '\n';
  if (!csv) throw Error(ErrorKind::IoFailure, "cannot write probe.csv");
  std::cout << "accuracy " << fmt(r.accuracy) << '\n';
  return 0;
}

int run_curvature(const Options& o) {
  const RunConfig cfg = prepare(o);
  Dataset rows;
  if (!o.input.empty()) {
    rows = read_labeled_csv(o.input);
  } else {
    rows = o.split == "train" ? load_datasets(cfg).train : load_datasets(cfg).test;
  }
  const std::size_t k = cfg.train.k;
  const Metric kernel =
      std::holds_alternative<KernelSpec>(cfg.train.metric) ? cfg.train.metric : Metric{KernelSpec::rbf_median()};
  const Tensor eu = batch_curvature(rows.features, k, Euclidean{});
  const Tensor ke = batch_curvature(rows.features, k, kernel);

  std::ofstream csv(cfg.out / "curvature.csv");
  csv << "index,label,euclidean,kernel\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv << i << ',' << rows.labels[i] << ',' << fmt(eu[i]) << ',' << fmt(ke[i]) << '\n';
  }
  if (!csv) throw Error(ErrorKind::IoFailure, "cannot write curvature.csv");
  std::cout << "rows " << rows.size() << " k " << k << " kernel " << describe(kernel) << '\n';
  return 0;
}

int run_export(const Options& o) {
  const RunConfig cfg = prepare(o);
  const Checkpoint ckpt = need_checkpoint(o);
  const DataSplit data = load_datasets(cfg);
  const Dataset& d = o.split == "train" ? data.train : data.test;
  if (d.dim() != ckpt.architecture.input_dim) {
    throw Error(ErrorKind::ShapeMismatch, "dataset width " + std::to_string(d.dim()) + " differs from checkpoint input " +
                                              std::to_string(ckpt.architecture.input_dim));
  }
  write_embeddings_csv(encode(ckpt.parameters, d.features), d.labels, cfg.out / "embeddings.csv");
  std::cout << "rows " << d.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curvature-regularized self-supervised pretraining"};
  app.require_subcommand(1);
  app.footer("Exit status: 0 ok, 1 internal, 2 usage, 10+n for library error kind n (see README).");

  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides config)");
    sub->add_option("--seed", o.seed, "root seed (overrides config)");
  };

  auto* pre = app.add_subcommand("pretrain", "train encoder and projector; writes checkpoint.ckpt and history.csv");
  common(pre);
  auto* probe = app.add_subcommand("probe", "fit a probe on frozen features; prints accuracy, writes probe.csv");
  common(probe);
  probe->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  auto* curv = app.add_subcommand("curvature", "per-row curvature scores under both metrics; writes curvature.csv");
  common(curv);
  curv->add_option("--input", o.input, "label,values CSV (dataset or embeddings); default: configured dataset");
  curv->add_option("--split", o.split, "train or test when reading the configured dataset")
      ->check(CLI::IsMember({"train", "test"}));
  auto* exp = app.add_subcommand("export-embeddings", "encoder features of a split; writes embeddings.csv");
  common(exp);
  exp->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  exp->add_option("--split", o.split, "train or test")->check(CLI::IsMember({"train", "test"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (pre->parsed()) return run_pretrain(o);
    if (probe->parsed()) return run_probe(o);
    if (curv->parsed()) return run_curvature(o);
    if (exp->parsed()) return run_export(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitErrorBase + static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}
