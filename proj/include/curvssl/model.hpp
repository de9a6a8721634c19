#pragma once

// Desk-scale encoder f (affine + relu on every layer) and projector g
// (affine + relu, last layer affine only), usable either as plain forward
// passes or as differentiable graph fragments.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "curvssl/autodiff.hpp"
#include "curvssl/tensor.hpp"

namespace curvssl {

enum class Activation { Relu };

struct Architecture {
  std::size_t input_dim = 784;
  std::vector<std::size_t> encoder_widths{256, 128};
  std::vector<std::size_t> projector_widths{128, 32};
  Activation activation = Activation::Relu;

  // Throws InvalidArchitecture: zero widths, empty encoder, or a projector
  // with fewer than two affine layers.
  void validate() const;
  std::size_t feature_dim() const { return encoder_widths.back(); }
  std::size_t embedding_dim() const { return projector_widths.back(); }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct Layer {
  std::string name;
  Tensor weight;  // fan_in × fan_out
  Tensor bias;    // 1 × fan_out

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct Parameters {
  std::vector<Layer> encoder;
  std::vector<Layer> projector;

  // Checks shapes against `arch` and finiteness. Throws InvalidArchitecture.
  void validate(const Architecture& arch) const;

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

// Glorot-uniform weights in [-s, s], s = sqrt(6 / (fan_in + fan_out)); zero
// biases. One random stream per layer, keyed by (seed, layer position).
Parameters init_params(const Architecture& arch, std::uint64_t seed);

Tensor encode(const Parameters& params, const Tensor& inputs);
Tensor project(const Parameters& params, const Tensor& features);

struct BoundLayer {
  NodeId weight;
  NodeId bias;
};

struct BoundParameters {
  std::vector<BoundLayer> encoder;
  std::vector<BoundLayer> projector;
};

// Registers every tensor as a named parameter leaf.
BoundParameters bind_parameters(Graph& graph, const Parameters& params);
// Same as bind_parameters but as constants (frozen, no gradient).
BoundParameters bind_constants(Graph& graph, const Parameters& params);

NodeId encode(Graph& graph, const BoundParameters& params, NodeId inputs);
NodeId project(Graph& graph, const BoundParameters& params, NodeId features);

// Copies gradients back into the Parameters layout.
Parameters gradients_like(const Parameters& params, const BoundParameters& bound, const Gradients& grads);

}  // namespace curvssl
