#include "curvssl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "curvssl/error.hpp"
#include "curvssl/random.hpp"

namespace curvssl {

namespace {

constexpr std::uint32_t kImagesMagic = 2051;
constexpr std::uint32_t kLabelsMagic = 2049;

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

void need(const std::vector<unsigned char>& b, std::size_t bytes, const std::filesystem::path& path) {
  if (b.size() < bytes) {
    throw Error(ErrorKind::TruncatedFile, path.string() + " has " + std::to_string(b.size()) + " bytes, needs " +
                                              std::to_string(bytes));
  }
}

void check_classes(std::size_t n, std::size_t num_classes) {
  if (num_classes < 2 || n < num_classes) {
    throw Error(ErrorKind::InvalidCounts, "need n >= num_classes >= 2, got n=" + std::to_string(n) +
                                              " num_classes=" + std::to_string(num_classes));
  }
}

}  // namespace

void Dataset::validate() const {
  if (features.rows() != labels.size() || !features.is_matrix()) {
    throw Error(ErrorKind::ShapeMismatch, name + ": " + std::to_string(features.rows()) + " rows vs " +
                                              std::to_string(labels.size()) + " labels");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
      throw Error(ErrorKind::InvalidCounts, name + ": label " + std::to_string(l) + " outside [0, " +
                                                std::to_string(num_classes) + ")");
    }
  }
  for (double v : features.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::InvalidCounts, name + ": feature outside [0, 1]");
  }
  if (image && image->rows * image->cols != features.cols()) {
    throw Error(ErrorKind::ShapeMismatch, name + ": image shape does not match feature width");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out{name, Tensor::matrix(rows.size(), dim()), {}, num_classes, image};
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(features.row(rows[r]).data(), dim(), out.features.row(r).data());
    out.labels.push_back(labels[rows[r]]);
  }
  return out;
}

Dataset Dataset::head(std::size_t n) const {
  std::vector<std::size_t> rows(std::min(n, size()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return subset(rows);
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_bytes(images_path);
  const auto labels = read_bytes(labels_path);
  need(images, 4, images_path);
  need(labels, 4, labels_path);
  if (be32(images, 0) != kImagesMagic) {
    throw Error(ErrorKind::BadMagic, images_path.string() + ": magic " + std::to_string(be32(images, 0)) + ", expected 2051");
  }
  if (be32(labels, 0) != kLabelsMagic) {
    throw Error(ErrorKind::BadMagic, labels_path.string() + ": magic " + std::to_string(be32(labels, 0)) + ", expected 2049");
  }
  need(images, 16, images_path);
  need(labels, 8, labels_path);
  const std::size_t n = be32(images, 4), rows = be32(images, 8), cols = be32(images, 12);
  const std::size_t n_labels = be32(labels, 4);
  if (n != n_labels) {
    throw Error(ErrorKind::CountMismatch, std::to_string(n) + " images vs " + std::to_string(n_labels) + " labels");
  }
  const std::size_t d = rows * cols;
  need(images, 16 + n * d, images_path);
  need(labels, 8 + n, labels_path);

  Dataset out{"mnist", Tensor::matrix(n, d), std::vector<int>(n), 0, ImageShape{rows, cols}};
  for (std::size_t i = 0; i < n * d; ++i) out.features[i] = static_cast<double>(images[16 + i]) / 255.0;
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = labels[8 + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  // IDX label files carry digits; keep all ten classes even if a subset misses some.
  out.num_classes = static_cast<std::size_t>(std::max(10, max_label + 1));
  return out;
}

Dataset make_blobs(std::size_t n, std::size_t num_classes, std::size_t dim, double spread, std::uint64_t seed) {
  check_classes(n, num_classes);
  if (dim == 0 || !(spread >= 0.0)) throw Error(ErrorKind::InvalidCounts, "blobs need dim >= 1 and spread >= 0");
  auto centers_rng = make_stream(seed, StreamPurpose::Synthetic, {0});
  std::uniform_real_distribution<double> center_dist(0.25, 0.75);
  Tensor centers = Tensor::matrix(num_classes, dim);
  for (double& v : centers.values()) v = center_dist(centers_rng);

  auto rng = make_stream(seed, StreamPurpose::Synthetic, {1});
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset out{"blobs", Tensor::matrix(n, dim), std::vector<int>(n), num_classes, std::nullopt};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % num_classes;
    out.labels[i] = static_cast<int>(c);
    for (std::size_t p = 0; p < dim; ++p) {
      const double jitter = spread > 0.0 ? spread * noise(rng) : 0.0;
      out.features(i, p) = std::clamp(centers(c, p) + jitter, 0.0, 1.0);
    }
  }
  return out;
}

Dataset make_ring(std::size_t n, std::size_t num_classes, double radius, double noise, std::uint64_t seed) {
  check_classes(n, num_classes);
  if (!(radius > 0.0) || !(noise >= 0.0)) throw Error(ErrorKind::InvalidCounts, "ring needs radius > 0 and noise >= 0");
  auto rng = make_stream(seed, StreamPurpose::Synthetic, {2});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> radial(0.0, 1.0);
  const double arc = 2.0 * std::numbers::pi / static_cast<double>(num_classes);
  Dataset out{"ring", Tensor::matrix(n, 2), std::vector<int>(n), num_classes, std::nullopt};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % num_classes;
    const double theta = arc * (static_cast<double>(c) + unit(rng));
    const double r = radius + (noise > 0.0 ? noise * radial(rng) : 0.0);
    out.labels[i] = static_cast<int>(c);
    out.features(i, 0) = std::clamp(0.5 + r * std::cos(theta), 0.0, 1.0);
    out.features(i, 1) = std::clamp(0.5 + r * std::sin(theta), 0.0, 1.0);
  }
  return out;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out.precision(17);
  out << "label";
  for (std::size_t p = 0; p < data.dim(); ++p) out << ",f" << p;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (double v : data.features.row(i)) out << ',' << v;
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

Dataset read_labeled_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyDataset, path.string() + ": no header");
  const std::size_t width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (width == 0) throw Error(ErrorKind::CountMismatch, path.string() + ": header has no value columns");

  std::vector<double> values;
  Dataset out;
  out.name = path.filename().string();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t col = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
      const char* stop = std::find(p, end, ',');
      if (col == 0) {
        int label = 0;
        const auto [q, ec] = std::from_chars(p, stop, label);
        if (ec != std::errc{} || q != stop || label < 0) {
          throw Error(ErrorKind::TypeError, path.string() + ": bad label on line " + std::to_string(line_no), line_no);
        }
        out.labels.push_back(label);
      } else {
        double v = 0.0;
        const auto [q, ec] = std::from_chars(p, stop, v);
        if (ec != std::errc{} || q != stop) {
          throw Error(ErrorKind::TypeError, path.string() + ": bad number on line " + std::to_string(line_no), line_no);
        }
        values.push_back(v);
      }
      ++col;
      if (stop == end) break;
      p = stop + 1;
    }
    if (col != width + 1) {
      throw Error(ErrorKind::CountMismatch, path.string() + ": line " + std::to_string(line_no) + " has " +
                                                std::to_string(col) + " fields, expected " + std::to_string(width + 1),
                  line_no);
    }
  }
  if (out.labels.empty()) throw Error(ErrorKind::EmptyDataset, path.string() + ": no rows");
  out.features = Tensor({out.labels.size(), width}, std::move(values));
  out.num_classes = static_cast<std::size_t>(*std::max_element(out.labels.begin(), out.labels.end())) + 1;
  return out;
}

void AugmentationPolicy::validate() const {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorKind::InvariantViolation, "noise_sigma must be >= 0");
  }
  if (!(mask_fraction >= 0.0 && mask_fraction < 1.0)) {
    throw Error(ErrorKind::InvariantViolation, "mask_fraction must lie in [0, 1)");
  }
}

Tensor augment_view(std::span<const double> x, const AugmentationPolicy& policy, std::mt19937_64& rng,
                    std::optional<ImageShape> image) {
  const std::size_t d = x.size();
  Tensor out({d}, std::vector<double>(x.begin(), x.end()));

  if (image && policy.shift_max > 0) {
    const auto s = static_cast<long>(policy.shift_max);
    std::uniform_int_distribution<long> shift(-s, s);
    const long dy = shift(rng);
    const long dx = shift(rng);
    const auto rows = static_cast<long>(image->rows), cols = static_cast<long>(image->cols);
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        const long sr = r - dy, sc = c - dx;
        const bool inside = sr >= 0 && sr < rows && sc >= 0 && sc < cols;
        out[static_cast<std::size_t>(r * cols + c)] = inside ? x[static_cast<std::size_t>(sr * cols + sc)] : 0.0;
      }
    }
  }

  const auto masked = static_cast<std::size_t>(std::llround(policy.mask_fraction * static_cast<double>(d)));
  if (masked > 0) {
    std::vector<std::size_t> idx(d);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t t = 0; t < masked; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, d - 1);
      std::swap(idx[t], idx[pick(rng)]);
      out[idx[t]] = 0.0;
    }
  }

  if (policy.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, policy.noise_sigma);
    for (double& v : out.values()) v += noise(rng);
  }
  for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_stream(seed, StreamPurpose::Shuffle, {epoch});
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  return order;
}

std::vector<std::vector<std::size_t>> batches(const Dataset& data, const BatchPlan& plan, std::size_t epoch) {
  const std::size_t n = data.size();
  if (plan.batch_size == 0 || plan.batch_size > n) {
    throw Error(ErrorKind::BatchTooSmall, "batch size " + std::to_string(plan.batch_size) + " with " +
                                              std::to_string(n) + " samples");
  }
  const auto order = epoch_order(n, plan.seed, epoch);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += plan.batch_size) {
    const std::size_t end = std::min(n, start + plan.batch_size);
    if (end - start < plan.batch_size && end - start < plan.min_rows) break;
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace curvssl
