#include "curvssl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "curvssl/error.hpp"

namespace curvssl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Field {
  std::string_view key;
  std::string_view value;
  std::size_t line;

  [[noreturn]] void bad(const std::string& expected) const {
    throw Error(ErrorKind::TypeError,
                "line " + std::to_string(line) + ": " + std::string(key) + " expects " + expected + ", got '" +
                    std::string(value) + "'",
                line);
  }

  std::uint64_t u64() const {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size()) bad("a non-negative integer");
    return v;
  }

  std::size_t size() const { return static_cast<std::size_t>(u64()); }

  double real() const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size() || !std::isfinite(v)) bad("a finite number");
    return v;
  }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out;
    std::string_view rest = value;
    while (true) {
      const auto comma = rest.find(',');
      const Field part{key, trim(rest.substr(0, comma)), line};
      if (part.value.empty()) bad("a comma-separated list of integers");
      out.push_back(part.size());
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }
};

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// Parser-side state for the two keys that combine into one metric.
struct Scratch {
  std::string metric = "euclidean";
  std::optional<double> gamma;
  std::filesystem::path base;
};

std::filesystem::path resolve(const Scratch& s, std::string_view value) {
  std::filesystem::path p{std::string(value)};
  if (p.is_relative() && !s.base.empty()) p = s.base / p;
  return p.lexically_normal();
}

struct Entry {
  std::string_view key;
  std::function<void(RunConfig&, Scratch&, const Field&)> set;
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

std::string metric_name(const Metric& m) {
  if (std::holds_alternative<Euclidean>(m)) return "euclidean";
  return std::get<KernelSpec>(m).kind == KernelSpec::Kind::Linear ? "linear" : "rbf";
}

std::optional<std::string> path_or_none(const std::filesystem::path& p) {
  if (p.empty()) return std::nullopt;
  return p.string();
}

const std::vector<Entry>& entries() {
  using R = RunConfig;
  using S = Scratch;
  using F = Field;
  using O = std::optional<std::string>;
  static const std::vector<Entry> table = {
      {"epochs", [](R& c, S&, const F& f) { c.train.epochs = f.size(); },
       [](const R& c) -> O { return std::to_string(c.train.epochs); }},
      {"batch_size", [](R& c, S&, const F& f) { c.train.batch_size = f.size(); },
       [](const R& c) -> O { return std::to_string(c.train.batch_size); }},
      {"k", [](R& c, S&, const F& f) { c.train.k = f.size(); }, [](const R& c) -> O { return std::to_string(c.train.k); }},
      {"lambda_emb", [](R& c, S&, const F& f) { c.train.weights.lambda_emb = f.real(); },
       [](const R& c) -> O { return fmt_real(c.train.weights.lambda_emb); }},
      {"lambda_curv", [](R& c, S&, const F& f) { c.train.weights.lambda_curv = f.real(); },
       [](const R& c) -> O { return fmt_real(c.train.weights.lambda_curv); }},
      {"alpha_curv", [](R& c, S&, const F& f) { c.train.weights.alpha_curv = f.real(); },
       [](const R& c) -> O { return fmt_real(c.train.weights.alpha_curv); }},
      {"metric",
       [](R&, S& s, const F& f) {
         if (f.value != "euclidean" && f.value != "linear" && f.value != "rbf") f.bad("euclidean, linear or rbf");
         s.metric = std::string(f.value);
       },
       [](const R& c) -> O { return metric_name(c.train.metric); }},
      {"gamma", [](R&, S& s, const F& f) { s.gamma = f.real(); },
       [](const R& c) -> O {
         if (const auto* k = std::get_if<KernelSpec>(&c.train.metric); k && k->gamma) return fmt_real(*k->gamma);
         return std::nullopt;
       }},
      {"learning_rate", [](R& c, S&, const F& f) { c.train.learning_rate = f.real(); },
       [](const R& c) -> O { return fmt_real(c.train.learning_rate); }},
      {"weight_decay", [](R& c, S&, const F& f) { c.train.weight_decay = f.real(); },
       [](const R& c) -> O { return fmt_real(c.train.weight_decay); }},
      {"eps", [](R& c, S&, const F& f) { c.train.eps = f.real(); }, [](const R& c) -> O { return fmt_real(c.train.eps); }},
      {"seed", [](R& c, S&, const F& f) { c.train.seed = f.u64(); },
       [](const R& c) -> O { return std::to_string(c.train.seed); }},
      {"input_dim", [](R& c, S&, const F& f) { c.train.architecture.input_dim = f.size(); },
       [](const R& c) -> O { return std::to_string(c.train.architecture.input_dim); }},
      {"encoder_widths", [](R& c, S&, const F& f) { c.train.architecture.encoder_widths = f.sizes(); },
       [](const R& c) -> O { return fmt_sizes(c.train.architecture.encoder_widths); }},
      {"projector_widths", [](R& c, S&, const F& f) { c.train.architecture.projector_widths = f.sizes(); },
       [](const R& c) -> O { return fmt_sizes(c.train.architecture.projector_widths); }},
      {"noise_sigma", [](R& c, S&, const F& f) { c.train.augmentation.noise_sigma = f.real(); },
       [](const R& c) -> O { return fmt_real(c.train.augmentation.noise_sigma); }},
      {"mask_fraction", [](R& c, S&, const F& f) { c.train.augmentation.mask_fraction = f.real(); },
       [](const R& c) -> O { return fmt_real(c.train.augmentation.mask_fraction); }},
      {"shift_max", [](R& c, S&, const F& f) { c.train.augmentation.shift_max = f.size(); },
       [](const R& c) -> O { return std::to_string(c.train.augmentation.shift_max); }},
      {"dataset",
       [](R& c, S&, const F& f) {
         if (f.value == "mnist") c.dataset = DatasetKind::Mnist;
         else if (f.value == "blobs") c.dataset = DatasetKind::Blobs;
         else if (f.value == "ring") c.dataset = DatasetKind::Ring;
         else f.bad("mnist, blobs or ring");
       },
       [](const R& c) -> O {
         switch (c.dataset) {
           case DatasetKind::Mnist: return "mnist";
           case DatasetKind::Blobs: return "blobs";
           case DatasetKind::Ring: return "ring";
         }
         return std::nullopt;
       }},
      {"train_images", [](R& c, S& s, const F& f) { c.train_images = resolve(s, f.value); },
       [](const R& c) { return path_or_none(c.train_images); }},
      {"train_labels", [](R& c, S& s, const F& f) { c.train_labels = resolve(s, f.value); },
       [](const R& c) { return path_or_none(c.train_labels); }},
      {"test_images", [](R& c, S& s, const F& f) { c.test_images = resolve(s, f.value); },
       [](const R& c) { return path_or_none(c.test_images); }},
      {"test_labels", [](R& c, S& s, const F& f) { c.test_labels = resolve(s, f.value); },
       [](const R& c) { return path_or_none(c.test_labels); }},
      {"train_limit", [](R& c, S&, const F& f) { c.train_limit = f.size(); },
       [](const R& c) -> O { return std::to_string(c.train_limit); }},
      {"test_limit", [](R& c, S&, const F& f) { c.test_limit = f.size(); },
       [](const R& c) -> O { return std::to_string(c.test_limit); }},
      {"synthetic_train", [](R& c, S&, const F& f) { c.synthetic_train = f.size(); },
       [](const R& c) -> O { return std::to_string(c.synthetic_train); }},
      {"synthetic_test", [](R& c, S&, const F& f) { c.synthetic_test = f.size(); },
       [](const R& c) -> O { return std::to_string(c.synthetic_test); }},
      {"synthetic_classes", [](R& c, S&, const F& f) { c.synthetic_classes = f.size(); },
       [](const R& c) -> O { return std::to_string(c.synthetic_classes); }},
      {"blobs_spread", [](R& c, S&, const F& f) { c.blobs_spread = f.real(); },
       [](const R& c) -> O { return fmt_real(c.blobs_spread); }},
      {"ring_radius", [](R& c, S&, const F& f) { c.ring_radius = f.real(); },
       [](const R& c) -> O { return fmt_real(c.ring_radius); }},
      {"ring_noise", [](R& c, S&, const F& f) { c.ring_noise = f.real(); },
       [](const R& c) -> O { return fmt_real(c.ring_noise); }},
      {"data_seed", [](R& c, S&, const F& f) { c.data_seed = f.u64(); },
       [](const R& c) -> O { return std::to_string(c.data_seed); }},
      {"probe_epochs", [](R& c, S&, const F& f) { c.probe.epochs = f.size(); },
       [](const R& c) -> O { return std::to_string(c.probe.epochs); }},
      {"probe_lr", [](R& c, S&, const F& f) { c.probe.learning_rate = f.real(); },
       [](const R& c) -> O { return fmt_real(c.probe.learning_rate); }},
      {"probe_batch", [](R& c, S&, const F& f) { c.probe.batch_size = f.size(); },
       [](const R& c) -> O { return std::to_string(c.probe.batch_size); }},
      {"probe_hidden", [](R& c, S&, const F& f) { c.probe.hidden_units = f.size(); },
       [](const R& c) -> O { return std::to_string(c.probe.hidden_units); }},
      {"out", [](R& c, S& s, const F& f) { c.out = resolve(s, f.value); },
       [](const R& c) { return path_or_none(c.out); }},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvariantViolation, what);
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  require(probe.epochs >= 1, "probe_epochs must be at least 1");
  require(probe.learning_rate > 0.0, "probe_lr must be positive");
  require(probe.batch_size >= 1, "probe_batch must be at least 1");
  if (dataset != DatasetKind::Mnist) {
    require(synthetic_train >= 1 && synthetic_test >= 1, "synthetic_train and synthetic_test must be positive");
    require(synthetic_classes >= 1, "synthetic_classes must be positive");
    require(blobs_spread >= 0.0 && ring_noise >= 0.0, "noise scales must be non-negative");
    require(ring_radius > 0.0, "ring_radius must be positive");
  }
  if (dataset == DatasetKind::Ring) require(train.architecture.input_dim == 2, "ring data needs input_dim = 2");
}

RunConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  Scratch scratch;
  scratch.base = base_dir;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t gamma_line = 0;

  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::TypeError, "line " + std::to_string(line_no) + ": expected key = value", line_no);
    }
    const Field f{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    const auto& table = entries();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return e.key == f.key; });
    if (it == table.end()) {
      throw Error(ErrorKind::UnknownKey, "line " + std::to_string(line_no) + ": unknown key '" + std::string(f.key) + "'",
                  line_no);
    }
    if (!seen.insert(std::string(f.key)).second) {
      throw Error(ErrorKind::InvariantViolation,
                  "line " + std::to_string(line_no) + ": duplicate key '" + std::string(f.key) + "'", line_no);
    }
    if (f.key == "gamma") gamma_line = line_no;
    it->set(cfg, scratch, f);
  }

  if (scratch.metric == "euclidean") cfg.train.metric = Euclidean{};
  else if (scratch.metric == "linear") cfg.train.metric = KernelSpec::linear();
  else cfg.train.metric = scratch.gamma ? KernelSpec::rbf(*scratch.gamma) : KernelSpec::rbf_median();
  if (scratch.gamma && scratch.metric != "rbf") {
    throw Error(ErrorKind::InvariantViolation, "gamma is only meaningful with metric = rbf", gamma_line);
  }
  if (cfg.out.is_relative() && !base_dir.empty()) cfg.out = (base_dir / cfg.out).lexically_normal();
  cfg.probe.seed = cfg.train.seed;
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::filesystem::absolute(path).parent_path());
}

std::string render_config(const RunConfig& config) {
  std::string s;
  for (const Entry& e : entries()) {
    if (auto v = e.get(config)) s += std::string(e.key) + " = " + *v + '\n';
  }
  return s;
}

void write_resolved_config(const RunConfig& config, const std::filesystem::path& dir) {
  const auto path = dir / "config.resolved";
  std::ofstream os(path, std::ios::binary);
  os << render_config(config);
  if (!os) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
}

DataSplit load_datasets(const RunConfig& config) {
  DataSplit split;
  switch (config.dataset) {
    case DatasetKind::Mnist: {
      if (config.train_images.empty() || config.train_labels.empty() || config.test_images.empty() ||
          config.test_labels.empty()) {
        throw Error(ErrorKind::InvariantViolation,
                    "dataset = mnist needs train_images, train_labels, test_images and test_labels");
      }
      split.train = load_idx(config.train_images, config.train_labels);
      split.test = load_idx(config.test_images, config.test_labels);
      break;
    }
    case DatasetKind::Blobs:
    case DatasetKind::Ring: {
      // One draw split in two so both halves share the class layout.
      const std::size_t n = config.synthetic_train + config.synthetic_test;
      const Dataset all =
          config.dataset == DatasetKind::Blobs
              ? make_blobs(n, config.synthetic_classes, config.train.architecture.input_dim, config.blobs_spread,
                           config.data_seed)
              : make_ring(n, config.synthetic_classes, config.ring_radius, config.ring_noise, config.data_seed);
      std::vector<std::size_t> rows(config.synthetic_test);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = config.synthetic_train + i;
      split.train = all.head(config.synthetic_train);
      split.test = all.subset(rows);
      break;
    }
  }
  if (config.train_limit > 0 && config.train_limit < split.train.size()) split.train = split.train.head(config.train_limit);
  if (config.test_limit > 0 && config.test_limit < split.test.size()) split.test = split.test.head(config.test_limit);
  return split;
}

}  // namespace curvssl
