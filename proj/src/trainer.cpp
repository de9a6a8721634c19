#include "curvssl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "curvssl/error.hpp"
#include "curvssl/random.hpp"
#include "curvssl/simd/kernels.hpp"

namespace curvssl {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvariantViolation, what);
}

std::string strip_kind(const Error& e) {
  std::string msg = e.what();
  const std::string prefix = std::string(to_string(e.kind())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  return msg;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  return os;
}

}  // namespace

void TrainConfig::validate() const {
  require(epochs >= 1, "epochs must be at least 1");
  require(k >= 1, "k must be at least 1");
  require(batch_size > k + 1, "batch_size must exceed k + 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
  require(weight_decay >= 0.0 && std::isfinite(weight_decay), "weight_decay must be non-negative");
  require(eps > 0.0, "eps must be positive");
  require(weights.lambda_emb >= 0.0 && weights.lambda_curv >= 0.0 && weights.alpha_curv >= 0.0,
          "loss weights must be non-negative");
  augmentation.validate();
  architecture.validate();
  if (const auto* spec = std::get_if<KernelSpec>(&metric)) spec->validate();
}

AdamState AdamState::zeros_like(std::span<const Tensor> params) {
  AdamState s;
  for (const Tensor& p : params) {
    s.first_moment.emplace_back(p.shape(), 0.0);
    s.second_moment.emplace_back(p.shape(), 0.0);
  }
  return s;
}

void adam_update(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state, double lr,
                 double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw Error(ErrorKind::ShapeMismatch, "adam: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]) || !params[i].same_shape(state.first_moment[i]) ||
        !params[i].same_shape(state.second_moment[i])) {
      throw Error(ErrorKind::ShapeMismatch, "adam: tensor " + std::to_string(i) + " has mismatched shapes");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].values();
    auto g = grads[i].values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = g[j] + weight_decay * theta[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

std::vector<Tensor> flatten(const Parameters& params) {
  std::vector<Tensor> out;
  for (const auto* stack : {&params.encoder, &params.projector}) {
    for (const Layer& l : *stack) {
      out.push_back(l.weight);
      out.push_back(l.bias);
    }
  }
  return out;
}

Parameters unflatten(const Parameters& like, std::vector<Tensor> tensors) {
  const std::size_t expected = 2 * (like.encoder.size() + like.projector.size());
  if (tensors.size() != expected) throw Error(ErrorKind::ShapeMismatch, "unflatten: wrong tensor count");
  Parameters out = like;
  std::size_t i = 0;
  for (auto* stack : {&out.encoder, &out.projector}) {
    for (Layer& l : *stack) {
      if (!tensors[i].same_shape(l.weight) || !tensors[i + 1].same_shape(l.bias)) {
        throw Error(ErrorKind::ShapeMismatch, "unflatten: shape differs for " + l.name);
      }
      l.weight = std::move(tensors[i++]);
      l.bias = std::move(tensors[i++]);
    }
  }
  return out;
}

AdamResult adam_step(const Parameters& params, const Parameters& grads, const AdamState& state, double lr,
                     double weight_decay) {
  AdamResult r{params, state};
  auto theta = flatten(params);
  const auto g = flatten(grads);
  if (r.state.first_moment.empty() && r.state.step == 0) {
    const AdamState fresh = AdamState::zeros_like(theta);
    r.state.first_moment = fresh.first_moment;
    r.state.second_moment = fresh.second_moment;
  }
  adam_update(theta, g, r.state, lr, weight_decay);
  r.params = unflatten(params, std::move(theta));
  return r;
}

Pretrainer::Pretrainer(TrainConfig config, const Dataset& data) : config_(std::move(config)), data_(data) {
  config_.validate();
  data_.validate();
  if (data_.size() == 0) throw Error(ErrorKind::EmptyDataset, "pretraining set is empty");
  if (data_.dim() != config_.architecture.input_dim) {
    throw Error(ErrorKind::ShapeMismatch, "dataset has " + std::to_string(data_.dim()) +
                                              " features, architecture expects " +
                                              std::to_string(config_.architecture.input_dim));
  }
  if (data_.size() < config_.batch_size) {
    throw Error(ErrorKind::BatchTooSmall, "dataset has fewer rows than batch_size");
  }
  params_ = init_params(config_.architecture, config_.seed);
  adam_ = AdamState::zeros_like(flatten(params_));
}

Tensor Pretrainer::views(std::size_t epoch, std::size_t batch, std::span<const std::size_t> rows,
                         std::uint64_t view) const {
  Tensor out = Tensor::matrix(rows.size(), data_.dim());
  for (std::size_t s = 0; s < rows.size(); ++s) {
    auto rng = make_stream(config_.seed, StreamPurpose::Augment, {epoch, batch, rows[s], view});
    const Tensor v = augment_view(data_.features.row(rows[s]), config_.augmentation, rng, data_.image);
    std::copy(v.values().begin(), v.values().end(), out.row(s).begin());
  }
  return out;
}

LossBreakdown Pretrainer::step(std::size_t epoch, std::size_t batch, std::span<const std::size_t> rows) {
  try {
    Graph g;
    const BoundParameters bound = bind_parameters(g, params_);
    const NodeId x1 = g.constant(views(epoch, batch, rows, 0));
    const NodeId x2 = g.constant(views(epoch, batch, rows, 1));
    const NodeId z1 = project(g, bound, encode(g, bound, x1));
    const NodeId z2 = project(g, bound, encode(g, bound, x2));

    LossOptions opts;
    opts.k = config_.k;
    opts.metric = config_.metric;
    opts.weights = config_.weights;
    opts.eps = config_.eps;
    opts.include_curvature = config_.compute_curvature;
    const LossNodes loss = build_total_loss(g, z1, z2, opts);
    const LossBreakdown before = loss.breakdown(g);
    if (!std::isfinite(before.total)) throw Error(ErrorKind::NonFinite, "loss is not finite");

    const Gradients grads = reverse_grad(g, loss.total);
    auto theta = flatten(params_);
    adam_update(theta, flatten(gradients_like(params_, bound, grads)), adam_, config_.learning_rate,
                config_.weight_decay);
    for (const Tensor& t : theta) {
      if (!t.all_finite()) throw Error(ErrorKind::NonFinite, "parameters became non-finite");
    }
    params_ = unflatten(params_, std::move(theta));
    return before;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonFinite && e.kind() != ErrorKind::DegenerateEdge) throw;
    throw Error(e.kind(), "epoch " + std::to_string(epoch) + " batch " + std::to_string(batch) + ": " + strip_kind(e),
                e.row());
  }
}

EpochRecord Pretrainer::run_epoch(std::size_t epoch) {
  const auto start = std::chrono::steady_clock::now();
  const BatchPlan plan{config_.seed, config_.batch_size, config_.k + 2};
  const auto slices = batches(data_, plan, epoch);

  EpochRecord rec;
  rec.epoch = epoch;
  rec.mean.weights = config_.weights;
  for (std::size_t b = 0; b < slices.size(); ++b) {
    const LossBreakdown l = step(epoch, b, slices[b]);
    rec.mean.total += l.total;
    rec.mean.emb_diag += l.emb_diag;
    rec.mean.emb_offdiag += l.emb_offdiag;
    rec.mean.curv_diag += l.curv_diag;
    rec.mean.curv_offdiag += l.curv_offdiag;
  }
  const double n = static_cast<double>(slices.size());
  rec.mean.total /= n;
  rec.mean.emb_diag /= n;
  rec.mean.emb_offdiag /= n;
  rec.mean.curv_diag /= n;
  rec.mean.curv_offdiag /= n;
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

History Pretrainer::run() {
  History h;
  for (std::size_t e = 1; e <= config_.epochs; ++e) h.push_back(run_epoch(e));
  return h;
}

Checkpoint Pretrainer::checkpoint(const History& history, std::string config_text) const {
  Checkpoint c;
  c.architecture = config_.architecture;
  c.parameters = params_;
  c.provenance.seed = config_.seed;
  c.provenance.epochs_completed = history.size();
  c.provenance.config_text = std::move(config_text);
  c.provenance.weights = config_.weights;
  for (const EpochRecord& r : history) c.provenance.loss_history.push_back(r.mean);
  return c;
}

PretrainResult pretrain(const TrainConfig& config, const Dataset& data, std::string config_text) {
  Pretrainer p(config, data);
  PretrainResult r;
  r.history = p.run();
  r.checkpoint = p.checkpoint(r.history, std::move(config_text));
  return r;
}

namespace {

// Softmax cross-entropy gradient with respect to the logits, averaged over
// the batch.
Tensor cross_entropy_grad(const Tensor& logits, std::span<const int> labels) {
  const std::size_t b = logits.rows(), c = logits.cols();
  Tensor g = Tensor::matrix(b, c);
  for (std::size_t i = 0; i < b; ++i) {
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < c; ++j) {
      const double p = std::exp(row[j] - mx) / z;
      g(i, j) = (p - (static_cast<int>(j) == labels[i] ? 1.0 : 0.0)) / static_cast<double>(b);
    }
  }
  return g;
}

NodeId head_logits(Graph& g, const std::vector<BoundLayer>& layers, NodeId x) {
  NodeId h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = g.add(g.matmul(h, layers[l].weight), g.broadcast_row(layers[l].bias, g.value(h).rows()));
    if (l + 1 < layers.size()) h = g.relu(h);
  }
  return h;
}

Tensor head_forward(const std::vector<Layer>& layers, const Tensor& x) {
  Graph g;
  std::vector<BoundLayer> bound;
  for (const Layer& l : layers) bound.push_back({g.constant(l.weight), g.constant(l.bias)});
  return g.value(head_logits(g, bound, g.constant(x)));
}

}  // namespace

ProbeResult linear_probe(const Checkpoint& ckpt, const Dataset& train, const Dataset& test, const ProbeConfig& config) {
  if (train.size() == 0 || test.size() == 0) throw Error(ErrorKind::EmptyDataset, "probe needs non-empty train and test sets");
  train.validate();
  test.validate();
  const std::size_t in = ckpt.architecture.input_dim;
  if (train.dim() != in || test.dim() != in) {
    throw Error(ErrorKind::ShapeMismatch, "probe data dimension does not match the encoder input (" +
                                              std::to_string(in) + ")");
  }
  if (config.epochs == 0 || config.batch_size == 0 || !(config.learning_rate > 0.0)) {
    throw Error(ErrorKind::InvariantViolation, "probe needs epochs, batch_size and learning_rate > 0");
  }
  ckpt.parameters.validate(ckpt.architecture);

  const Tensor h_train = encode(ckpt.parameters, train.features);
  const Tensor h_test = encode(ckpt.parameters, test.features);
  const std::size_t classes = std::max(train.num_classes, test.num_classes);
  const std::size_t feat = h_train.cols();

  std::vector<Layer> head;
  if (config.hidden_units > 0) {
    auto rng = make_stream(config.seed, StreamPurpose::Probe, {0});
    const double s = std::sqrt(6.0 / static_cast<double>(feat + config.hidden_units));
    std::uniform_real_distribution<double> u(-s, s);
    Tensor w = Tensor::matrix(feat, config.hidden_units);
    for (double& v : w.values()) v = u(rng);
    head.push_back({"probe.hidden", std::move(w), Tensor::matrix(1, config.hidden_units)});
    head.push_back({"probe.out", Tensor::matrix(config.hidden_units, classes), Tensor::matrix(1, classes)});
  } else {
    head.push_back({"probe.out", Tensor::matrix(feat, classes), Tensor::matrix(1, classes)});
  }

  const std::size_t n = train.size();
  const std::size_t bs = std::min(config.batch_size, n);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(n, splitmix64(config.seed ^ static_cast<std::uint64_t>(StreamPurpose::Probe)), epoch);
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(n, start + bs);
      Tensor xb = Tensor::matrix(end - start, feat);
      std::vector<int> yb;
      for (std::size_t i = start; i < end; ++i) {
        auto src = h_train.row(order[i]);
        std::copy(src.begin(), src.end(), xb.row(i - start).begin());
        yb.push_back(train.labels[order[i]]);
      }
      Graph g;
      std::vector<BoundLayer> bound;
      for (const Layer& l : head) {
        bound.push_back({g.parameter(l.name + ".weight", l.weight), g.parameter(l.name + ".bias", l.bias)});
      }
      const NodeId logits = head_logits(g, bound, g.constant(std::move(xb)));
      // d/dθ sum(logits ∘ G) with G = dCE/dlogits held constant is the CE gradient.
      const NodeId surrogate = g.sum(g.mul(logits, g.constant(cross_entropy_grad(g.value(logits), yb))));
      const Gradients grads = reverse_grad(g, surrogate);
      for (std::size_t l = 0; l < head.size(); ++l) {
        const Tensor& gw = grads.at(bound[l].weight);
        const Tensor& gb = grads.at(bound[l].bias);
        for (std::size_t j = 0; j < gw.size(); ++j) head[l].weight[j] -= config.learning_rate * gw[j];
        for (std::size_t j = 0; j < gb.size(); ++j) head[l].bias[j] -= config.learning_rate * gb[j];
      }
    }
  }

  ProbeResult r;
  r.train_accuracy = top1_accuracy(head_forward(head, h_train), train.labels);
  r.accuracy = top1_accuracy(head_forward(head, h_test), test.labels);
  return r;
}

double top1_accuracy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) throw Error(ErrorKind::ShapeMismatch, "logits rows differ from label count");
  if (labels.empty()) throw Error(ErrorKind::EmptyDataset, "no labels to score");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto row = logits.row(i);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

void write_history_csv(const History& history, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "epoch,total,emb_diag,emb_offdiag,curv_diag,curv_offdiag,seconds\n";
  for (const EpochRecord& r : history) {
    os << r.epoch << ',' << fmt(r.mean.total) << ',' << fmt(r.mean.emb_diag) << ',' << fmt(r.mean.emb_offdiag) << ','
       << fmt(r.mean.curv_diag) << ',' << fmt(r.mean.curv_offdiag) << ',' << fmt(r.seconds) << '\n';
  }
  if (!os) throw Error(ErrorKind::IoFailure, "failed writing " + path.string());
}

void write_embeddings_csv(const Tensor& features, std::span<const int> labels, const std::filesystem::path& path) {
  if (features.rows() != labels.size()) throw Error(ErrorKind::ShapeMismatch, "feature rows differ from label count");
  auto os = open_out(path);
  os << "label";
  for (std::size_t j = 0; j < features.cols(); ++j) os << ",h" << j;
  os << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    os << labels[i];
    for (double v : features.row(i)) os << ',' << fmt(v);
    os << '\n';
  }
  if (!os) throw Error(ErrorKind::IoFailure, "failed writing " + path.string());
}

}  // namespace curvssl
