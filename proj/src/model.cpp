#include "curvssl/model.hpp"

#include <cmath>
#include <random>

#include "curvssl/error.hpp"
#include "curvssl/random.hpp"
#include "curvssl/simd/kernels.hpp"

namespace curvssl {

namespace {

std::vector<std::pair<std::size_t, std::size_t>> layer_dims(std::size_t in, const std::vector<std::size_t>& widths) {
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  for (std::size_t w : widths) {
    dims.emplace_back(in, w);
    in = w;
  }
  return dims;
}

void check_layers(const std::vector<Layer>& layers, std::size_t in, const std::vector<std::size_t>& widths,
                  const char* part) {
  const auto dims = layer_dims(in, widths);
  if (layers.size() != dims.size()) {
    throw Error(ErrorKind::InvalidArchitecture, std::string(part) + " has " + std::to_string(layers.size()) +
                                                    " layers, architecture says " + std::to_string(dims.size()));
  }
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const auto [fi, fo] = dims[l];
    const Layer& layer = layers[l];
    if (layer.weight.shape() != std::vector<std::size_t>{fi, fo} || layer.bias.shape() != std::vector<std::size_t>{1, fo}) {
      throw Error(ErrorKind::InvalidArchitecture, layer.name + " has weight " + shape_string(layer.weight.shape()) +
                                                      ", expected [" + std::to_string(fi) + "x" + std::to_string(fo) + "]");
    }
    if (!layer.weight.all_finite() || !layer.bias.all_finite()) {
      throw Error(ErrorKind::NonFinite, layer.name + " holds non-finite values");
    }
  }
}

std::vector<Layer> init_stack(std::size_t in, const std::vector<std::size_t>& widths, const std::string& prefix,
                              std::uint64_t seed, std::uint64_t stack_id) {
  std::vector<Layer> layers;
  std::uint64_t position = 0;
  for (const auto& [fi, fo] : layer_dims(in, widths)) {
    auto rng = make_stream(seed, StreamPurpose::Init, {stack_id, position});
    const double s = std::sqrt(6.0 / static_cast<double>(fi + fo));
    std::uniform_real_distribution<double> dist(-s, s);
    Layer layer{prefix + "." + std::to_string(position), Tensor::matrix(fi, fo), Tensor::matrix(1, fo)};
    for (double& v : layer.weight.values()) v = dist(rng);
    layers.push_back(std::move(layer));
    ++position;
  }
  return layers;
}

Tensor affine(const Layer& layer, const Tensor& x, bool relu) {
  if (!x.is_matrix() || x.cols() != layer.weight.rows()) {
    throw Error(ErrorKind::ShapeMismatch, layer.name + " expects " + std::to_string(layer.weight.rows()) +
                                              " input columns, got " + shape_string(x.shape()));
  }
  const auto& k = simd::active();
  const std::size_t m = x.rows(), n = layer.weight.cols();
  Tensor out = Tensor::matrix(m, n);
  k.gemm_nn(x.data(), layer.weight.data(), out.data(), m, x.cols(), n);
  for (std::size_t i = 0; i < m; ++i) k.add(out.row(i).data(), layer.bias.data(), out.row(i).data(), n);
  if (relu) k.relu(out.data(), out.data(), out.size());
  if (!out.all_finite()) throw Error(ErrorKind::NonFinite, layer.name + " produced a non-finite value");
  return out;
}

NodeId affine(Graph& g, const BoundLayer& layer, NodeId x, bool relu) {
  const NodeId xw = g.matmul(x, layer.weight);
  const NodeId y = g.add(xw, g.broadcast_row(layer.bias, g.value(xw).rows()));
  return relu ? g.relu(y) : y;
}

std::vector<BoundLayer> bind(Graph& g, const std::vector<Layer>& layers, bool as_parameters) {
  std::vector<BoundLayer> out;
  for (const Layer& l : layers) {
    if (as_parameters) {
      out.push_back({g.parameter(l.name + ".weight", l.weight), g.parameter(l.name + ".bias", l.bias)});
    } else {
      out.push_back({g.constant(l.weight), g.constant(l.bias)});
    }
  }
  return out;
}

}  // namespace

void Architecture::validate() const {
  if (input_dim == 0) throw Error(ErrorKind::InvalidArchitecture, "input_dim must be positive");
  if (encoder_widths.empty()) throw Error(ErrorKind::InvalidArchitecture, "encoder needs at least one layer");
  if (projector_widths.size() < 2) throw Error(ErrorKind::InvalidArchitecture, "projector needs at least two layers");
  for (std::size_t w : encoder_widths) {
    if (w == 0) throw Error(ErrorKind::InvalidArchitecture, "encoder width 0");
  }
  for (std::size_t w : projector_widths) {
    if (w == 0) throw Error(ErrorKind::InvalidArchitecture, "projector width 0");
  }
}

void Parameters::validate(const Architecture& arch) const {
  arch.validate();
  check_layers(encoder, arch.input_dim, arch.encoder_widths, "encoder");
  check_layers(projector, arch.feature_dim(), arch.projector_widths, "projector");
}

Parameters init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  return {init_stack(arch.input_dim, arch.encoder_widths, "encoder", seed, 0),
          init_stack(arch.feature_dim(), arch.projector_widths, "projector", seed, 1)};
}

Tensor encode(const Parameters& params, const Tensor& inputs) {
  Tensor h = inputs;
  for (const Layer& l : params.encoder) h = affine(l, h, true);
  return h;
}

Tensor project(const Parameters& params, const Tensor& features) {
  Tensor z = features;
  for (std::size_t l = 0; l < params.projector.size(); ++l) {
    z = affine(params.projector[l], z, l + 1 < params.projector.size());
  }
  return z;
}

BoundParameters bind_parameters(Graph& graph, const Parameters& params) {
  return {bind(graph, params.encoder, true), bind(graph, params.projector, true)};
}

BoundParameters bind_constants(Graph& graph, const Parameters& params) {
  return {bind(graph, params.encoder, false), bind(graph, params.projector, false)};
}

NodeId encode(Graph& graph, const BoundParameters& params, NodeId inputs) {
  NodeId h = inputs;
  for (const BoundLayer& l : params.encoder) h = affine(graph, l, h, true);
  return h;
}

NodeId project(Graph& graph, const BoundParameters& params, NodeId features) {
  NodeId z = features;
  for (std::size_t l = 0; l < params.projector.size(); ++l) {
    z = affine(graph, params.projector[l], z, l + 1 < params.projector.size());
  }
  return z;
}

Parameters gradients_like(const Parameters& params, const BoundParameters& bound, const Gradients& grads) {
  auto pick = [&](NodeId id, const Tensor& like) {
    auto it = grads.find(id);
    return it == grads.end() ? Tensor(like.shape(), 0.0) : it->second;
  };
  Parameters out = params;
  for (std::size_t l = 0; l < out.encoder.size(); ++l) {
    out.encoder[l].weight = pick(bound.encoder[l].weight, params.encoder[l].weight);
    out.encoder[l].bias = pick(bound.encoder[l].bias, params.encoder[l].bias);
  }
  for (std::size_t l = 0; l < out.projector.size(); ++l) {
    out.projector[l].weight = pick(bound.projector[l].weight, params.projector[l].weight);
    out.projector[l].bias = pick(bound.projector[l].bias, params.projector[l].bias);
  }
  return out;
}

}  // namespace curvssl
