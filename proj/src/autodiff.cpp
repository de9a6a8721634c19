#include "curvssl/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "curvssl/error.hpp"
#include "curvssl/simd/kernels.hpp"

namespace curvssl {

namespace {

[[noreturn]] void shape_error(Primitive p, const std::string& detail) {
  throw Error(ErrorKind::ShapeMismatch, std::string(to_string(p)) + ": " + detail);
}

void require_arity(Primitive p, std::span<const Tensor* const> in, std::size_t n) {
  if (in.size() != n) shape_error(p, "expects " + std::to_string(n) + " inputs, got " + std::to_string(in.size()));
}

void require_matrix(Primitive p, const Tensor& t) {
  if (!t.is_matrix()) shape_error(p, "expects a matrix, got " + shape_string(t.shape()));
}

void require_same_shape(Primitive p, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_error(p, shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

Tensor transposed(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = Tensor::matrix(c, r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out(j, i) = a(i, j);
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::matrix(a.rows(), b.cols());
  simd::active().gemm_nn(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
  return out;
}

// aᵀ·b without materializing aᵀ.
Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::matrix(a.cols(), b.cols());
  simd::active().gemm_tn(a.data(), b.data(), out.data(), a.cols(), a.rows(), b.cols());
  return out;
}

void accumulate(Tensor& into, const Tensor& g) {
  if (into.size() == 0) {
    into = g;
    return;
  }
  simd::active().add(into.data(), g.data(), into.data(), into.size());
}

}  // namespace

const char* to_string(Primitive p) {
  switch (p) {
    case Primitive::Leaf: return "leaf";
    case Primitive::MatMul: return "matmul";
    case Primitive::Add: return "add";
    case Primitive::Sub: return "subtract";
    case Primitive::Mul: return "multiply";
    case Primitive::Div: return "divide";
    case Primitive::Scale: return "scale";
    case Primitive::AddScalar: return "add-scalar";
    case Primitive::Relu: return "relu";
    case Primitive::Sum: return "sum";
    case Primitive::MeanRows: return "mean-over-rows";
    case Primitive::StdRows: return "std-over-rows";
    case Primitive::Sqrt: return "sqrt";
    case Primitive::Square: return "square";
    case Primitive::Exp: return "exp";
    case Primitive::Transpose: return "transpose";
    case Primitive::GatherRows: return "row-gather";
    case Primitive::BroadcastRow: return "broadcast-row";
    case Primitive::BroadcastCol: return "broadcast-col";
    case Primitive::RowSum: return "row-sum";
    case Primitive::SegmentSum: return "segment-sum";
  }
  return "unknown";
}

Tensor eval_primitive(Primitive kind, std::span<const Tensor* const> in, const PrimitiveAttrs& attrs) {
  const auto& k = simd::active();
  Tensor out;
  switch (kind) {
    case Primitive::Leaf:
      shape_error(kind, "leaves have no forward rule");
    case Primitive::MatMul: {
      require_arity(kind, in, 2);
      require_matrix(kind, *in[0]);
      require_matrix(kind, *in[1]);
      if (in[0]->cols() != in[1]->rows()) {
        shape_error(kind, shape_string(in[0]->shape()) + " x " + shape_string(in[1]->shape()));
      }
      out = matmul(*in[0], *in[1]);
      break;
    }
    case Primitive::Add:
    case Primitive::Sub:
    case Primitive::Mul:
    case Primitive::Div: {
      require_arity(kind, in, 2);
      require_same_shape(kind, *in[0], *in[1]);
      out = Tensor(in[0]->shape());
      auto fn = kind == Primitive::Add ? k.add : kind == Primitive::Sub ? k.sub : kind == Primitive::Mul ? k.mul : k.div;
      fn(in[0]->data(), in[1]->data(), out.data(), out.size());
      break;
    }
    case Primitive::Scale:
      require_arity(kind, in, 1);
      out = Tensor(in[0]->shape());
      k.scale(attrs.scalar, in[0]->data(), out.data(), out.size());
      break;
    case Primitive::AddScalar:
      require_arity(kind, in, 1);
      out = *in[0];
      for (double& v : out.values()) v = v + attrs.scalar;
      break;
    case Primitive::Relu:
      require_arity(kind, in, 1);
      out = Tensor(in[0]->shape());
      k.relu(in[0]->data(), out.data(), out.size());
      break;
    case Primitive::Sum: {
      require_arity(kind, in, 1);
      double s = 0.0;
      for (double v : in[0]->values()) s += v;
      out = Tensor::scalar(s);
      break;
    }
    case Primitive::MeanRows:
    case Primitive::StdRows: {
      require_arity(kind, in, 1);
      require_matrix(kind, *in[0]);
      const Tensor& a = *in[0];
      const std::size_t m = a.rows(), n = a.cols();
      if (m == 0) shape_error(kind, "no rows");
      Tensor mean = Tensor::matrix(1, n);
      for (std::size_t i = 0; i < m; ++i) k.add(mean.data(), a.row(i).data(), mean.data(), n);
      k.scale(1.0 / static_cast<double>(m), mean.data(), mean.data(), n);
      if (kind == Primitive::MeanRows) {
        out = std::move(mean);
        break;
      }
      out = Tensor::matrix(1, n);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double d = a(i, j) - mean[j];
          out[j] += d * d;
        }
      }
      for (std::size_t j = 0; j < n; ++j) out[j] = std::sqrt(out[j] / static_cast<double>(m));
      break;
    }
    case Primitive::Sqrt:
      require_arity(kind, in, 1);
      out = *in[0];
      for (double& v : out.values()) v = std::sqrt(v);
      break;
    case Primitive::Square:
      require_arity(kind, in, 1);
      out = Tensor(in[0]->shape());
      k.mul(in[0]->data(), in[0]->data(), out.data(), out.size());
      break;
    case Primitive::Exp:
      require_arity(kind, in, 1);
      out = *in[0];
      for (double& v : out.values()) v = std::exp(v);
      break;
    case Primitive::Transpose:
      require_arity(kind, in, 1);
      require_matrix(kind, *in[0]);
      out = transposed(*in[0]);
      break;
    case Primitive::GatherRows: {
      require_arity(kind, in, 1);
      require_matrix(kind, *in[0]);
      const Tensor& a = *in[0];
      out = Tensor::matrix(attrs.indices.size(), a.cols());
      for (std::size_t t = 0; t < attrs.indices.size(); ++t) {
        if (attrs.indices[t] >= a.rows()) shape_error(kind, "row index " + std::to_string(attrs.indices[t]) + " out of range");
        std::copy_n(a.row(attrs.indices[t]).data(), a.cols(), out.row(t).data());
      }
      break;
    }
    case Primitive::BroadcastRow: {
      require_arity(kind, in, 1);
      require_matrix(kind, *in[0]);
      if (in[0]->rows() != 1) shape_error(kind, "expects 1xn, got " + shape_string(in[0]->shape()));
      out = Tensor::matrix(attrs.count, in[0]->cols());
      for (std::size_t i = 0; i < attrs.count; ++i) std::copy_n(in[0]->data(), in[0]->cols(), out.row(i).data());
      break;
    }
    case Primitive::BroadcastCol: {
      require_arity(kind, in, 1);
      require_matrix(kind, *in[0]);
      if (in[0]->cols() != 1) shape_error(kind, "expects mx1, got " + shape_string(in[0]->shape()));
      out = Tensor::matrix(in[0]->rows(), attrs.count);
      for (std::size_t i = 0; i < out.rows(); ++i) std::fill_n(out.row(i).data(), attrs.count, (*in[0])[i]);
      break;
    }
    case Primitive::RowSum: {
      require_arity(kind, in, 1);
      require_matrix(kind, *in[0]);
      const Tensor& a = *in[0];
      out = Tensor::matrix(a.rows(), 1);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (double v : a.row(i)) s += v;
        out[i] = s;
      }
      break;
    }
    case Primitive::SegmentSum: {
      require_arity(kind, in, 1);
      require_matrix(kind, *in[0]);
      const Tensor& a = *in[0];
      const std::size_t seg = attrs.count;
      if (seg == 0 || a.rows() % seg != 0) {
        shape_error(kind, std::to_string(a.rows()) + " rows do not split into segments of " + std::to_string(seg));
      }
      out = Tensor::matrix(a.rows() / seg, a.cols());
      for (std::size_t g = 0; g < out.rows(); ++g) {
        for (std::size_t t = 0; t < seg; ++t) k.add(out.row(g).data(), a.row(g * seg + t).data(), out.row(g).data(), a.cols());
      }
      break;
    }
  }
  if (!out.all_finite()) throw Error(ErrorKind::NonFinite, std::string(to_string(kind)) + " produced a non-finite value");
  return out;
}

Tensor eval_primitive(Primitive kind, const std::vector<Tensor>& inputs, const PrimitiveAttrs& attrs) {
  std::vector<const Tensor*> ptrs;
  ptrs.reserve(inputs.size());
  for (const auto& t : inputs) ptrs.push_back(&t);
  return eval_primitive(kind, ptrs, attrs);
}

namespace {

// Adds ∂/∂input_i of <grad_out, f(inputs)> into grads[i] for inputs that need it.
void backward_primitive(Primitive kind, std::span<const Tensor* const> in, const Tensor& out, const Tensor& g,
                        const PrimitiveAttrs& attrs, std::span<Tensor*> grads) {
  const auto& k = simd::active();
  auto want = [&](std::size_t i) { return grads[i] != nullptr; };
  switch (kind) {
    case Primitive::Leaf:
      return;
    case Primitive::MatMul:
      if (want(0)) accumulate(*grads[0], matmul(g, transposed(*in[1])));
      if (want(1)) accumulate(*grads[1], matmul_tn(*in[0], g));
      return;
    case Primitive::Add:
      if (want(0)) accumulate(*grads[0], g);
      if (want(1)) accumulate(*grads[1], g);
      return;
    case Primitive::Sub:
      if (want(0)) accumulate(*grads[0], g);
      if (want(1)) {
        Tensor neg(g.shape());
        k.scale(-1.0, g.data(), neg.data(), g.size());
        accumulate(*grads[1], neg);
      }
      return;
    case Primitive::Mul:
      for (std::size_t i = 0; i < 2; ++i) {
        if (!want(i)) continue;
        Tensor d(g.shape());
        k.mul(g.data(), in[1 - i]->data(), d.data(), g.size());
        accumulate(*grads[i], d);
      }
      return;
    case Primitive::Div: {
      if (want(0)) {
        Tensor d(g.shape());
        k.div(g.data(), in[1]->data(), d.data(), g.size());
        accumulate(*grads[0], d);
      }
      if (want(1)) {
        // -g * (a / b) / b
        Tensor d(g.shape());
        k.mul(g.data(), out.data(), d.data(), g.size());
        k.div(d.data(), in[1]->data(), d.data(), g.size());
        k.scale(-1.0, d.data(), d.data(), g.size());
        accumulate(*grads[1], d);
      }
      return;
    }
    case Primitive::Scale: {
      Tensor d(g.shape());
      k.scale(attrs.scalar, g.data(), d.data(), g.size());
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::AddScalar:
      accumulate(*grads[0], g);
      return;
    case Primitive::Relu: {
      // Subgradient 0 at exactly 0.
      Tensor d(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = (*in[0])[i] > 0.0 ? g[i] : 0.0;
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::Sum:
      accumulate(*grads[0], Tensor(in[0]->shape(), g[0]));
      return;
    case Primitive::MeanRows: {
      const std::size_t m = in[0]->rows(), n = in[0]->cols();
      Tensor d = Tensor::matrix(m, n);
      const double inv = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) d(i, j) = g[j] * inv;
      }
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::StdRows: {
      // ∂σ_j/∂a_ij = (a_ij - μ_j) / (m σ_j); taken as 0 for a constant column.
      const Tensor& a = *in[0];
      const std::size_t m = a.rows(), n = a.cols();
      std::vector<double> mean(n, 0.0);
      for (std::size_t i = 0; i < m; ++i) k.add(mean.data(), a.row(i).data(), mean.data(), n);
      k.scale(1.0 / static_cast<double>(m), mean.data(), mean.data(), n);
      Tensor d = Tensor::matrix(m, n);
      for (std::size_t j = 0; j < n; ++j) {
        if (out[j] == 0.0) continue;
        const double coef = g[j] / (static_cast<double>(m) * out[j]);
        for (std::size_t i = 0; i < m; ++i) d(i, j) = coef * (a(i, j) - mean[j]);
      }
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::Sqrt: {
      Tensor d(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] / (2.0 * out[i]);
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::Square: {
      Tensor d(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = 2.0 * (*in[0])[i] * g[i];
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::Exp: {
      Tensor d(g.shape());
      k.mul(g.data(), out.data(), d.data(), g.size());
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::Transpose:
      accumulate(*grads[0], transposed(g));
      return;
    case Primitive::GatherRows: {
      Tensor d = Tensor::matrix(in[0]->rows(), in[0]->cols());
      for (std::size_t t = 0; t < attrs.indices.size(); ++t) {
        k.add(d.row(attrs.indices[t]).data(), g.row(t).data(), d.row(attrs.indices[t]).data(), d.cols());
      }
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::BroadcastRow: {
      Tensor d = Tensor::matrix(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i) k.add(d.data(), g.row(i).data(), d.data(), g.cols());
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::BroadcastCol: {
      Tensor d = Tensor::matrix(g.rows(), 1);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double s = 0.0;
        for (double v : g.row(i)) s += v;
        d[i] = s;
      }
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::RowSum: {
      Tensor d = Tensor::matrix(in[0]->rows(), in[0]->cols());
      for (std::size_t i = 0; i < d.rows(); ++i) std::fill_n(d.row(i).data(), d.cols(), g[i]);
      accumulate(*grads[0], d);
      return;
    }
    case Primitive::SegmentSum: {
      const std::size_t seg = attrs.count;
      Tensor d = Tensor::matrix(in[0]->rows(), in[0]->cols());
      for (std::size_t r = 0; r < d.rows(); ++r) std::copy_n(g.row(r / seg).data(), d.cols(), d.row(r).data());
      accumulate(*grads[0], d);
      return;
    }
  }
}

}  // namespace

const Graph::Node& Graph::node(NodeId id) const {
  if (id >= nodes_.size()) throw Error(ErrorKind::InvalidArgument, "unknown node id " + std::to_string(id));
  return nodes_[id];
}

NodeId Graph::parameter(std::string name, Tensor value) {
  if (!value.all_finite()) throw Error(ErrorKind::NonFinite, "parameter " + name + " is not finite");
  nodes_.push_back(Node{Primitive::Leaf, {}, {}, std::move(value), std::move(name), true, true});
  return nodes_.size() - 1;
}

NodeId Graph::constant(Tensor value) {
  nodes_.push_back(Node{Primitive::Leaf, {}, {}, std::move(value), {}, false, false});
  return nodes_.size() - 1;
}

NodeId Graph::apply(Primitive kind, std::vector<NodeId> inputs, PrimitiveAttrs attrs) {
  if (kind == Primitive::Leaf) throw Error(ErrorKind::InvalidArgument, "use parameter() or constant() for leaves");
  Node n{kind, std::move(inputs), std::move(attrs), {}, {}, false, false};
  for (NodeId id : n.inputs) n.requires_grad = n.requires_grad || node(id).requires_grad;
  n.value = evaluate(n);
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

Tensor Graph::evaluate(const Node& n) const {
  std::vector<const Tensor*> in;
  in.reserve(n.inputs.size());
  for (NodeId id : n.inputs) in.push_back(&nodes_[id].value);
  return eval_primitive(n.kind, in, n.attrs);
}

std::vector<NodeId> Graph::parameters() const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_parameter) out.push_back(i);
  }
  return out;
}

void Graph::set_value(NodeId leaf, Tensor value) {
  const Node& n = node(leaf);
  if (n.kind != Primitive::Leaf) throw Error(ErrorKind::InvalidArgument, "set_value on a non-leaf node");
  if (!n.value.same_shape(value)) {
    throw Error(ErrorKind::ShapeMismatch, shape_string(n.value.shape()) + " vs " + shape_string(value.shape()));
  }
  nodes_[leaf].value = std::move(value);
}

void Graph::forward() {
  for (auto& n : nodes_) {
    if (n.kind != Primitive::Leaf) n.value = evaluate(n);
  }
}

Gradients reverse_grad(const Graph& graph, NodeId output) {
  if (graph.value(output).size() != 1) {
    throw Error(ErrorKind::NotScalarOutput, "output node has shape " + shape_string(graph.value(output).shape()));
  }
  std::vector<Tensor> grads(output + 1);
  grads[output] = Tensor(graph.value(output).shape(), 1.0);

  for (NodeId id = output + 1; id-- > 0;) {
    if (grads[id].size() == 0 || graph.kind(id) == Primitive::Leaf || !graph.requires_grad(id)) continue;
    const auto& ins = graph.inputs(id);
    std::vector<const Tensor*> in_values;
    std::vector<Tensor*> in_grads;
    for (NodeId in : ins) {
      in_values.push_back(&graph.value(in));
      in_grads.push_back(graph.requires_grad(in) ? &grads[in] : nullptr);
    }
    // Same node used twice (e.g. mul(x, x)): accumulate through a scratch slot.
    std::vector<Tensor> scratch(ins.size());
    for (std::size_t i = 0; i < ins.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (ins[i] == ins[j] && in_grads[i]) in_grads[i] = &scratch[i];
      }
    }
    backward_primitive(graph.kind(id), in_values, graph.value(id), grads[id], graph.attrs(id), in_grads);
    for (std::size_t i = 0; i < ins.size(); ++i) {
      if (in_grads[i] == &scratch[i] && scratch[i].size() != 0) accumulate(grads[ins[i]], scratch[i]);
    }
    grads[id] = Tensor();
  }

  Gradients out;
  for (NodeId p : graph.parameters()) {
    if (p <= output && grads[p].size() != 0) {
      if (!grads[p].all_finite()) {
        throw Error(ErrorKind::NonFinite, "gradient of " + graph.name(p) + " is not finite");
      }
      out.emplace(p, std::move(grads[p]));
    } else {
      out.emplace(p, Tensor(graph.value(p).shape(), 0.0));
    }
  }
  return out;
}

GradReport finite_diff_check(Graph& graph, NodeId output, double step, double tol, double floor) {
  if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "finite-difference step must be positive");
  const Gradients analytic = reverse_grad(graph, output);
  GradReport report;
  for (const auto& [leaf, grad] : analytic) {
    ParameterError pe{graph.name(leaf)};
    const Tensor original = graph.value(leaf);
    for (std::size_t i = 0; i < original.size(); ++i) {
      Tensor probe = original;
      probe[i] = original[i] + step;
      graph.set_value(leaf, probe);
      graph.forward();
      const double up = graph.value(output).item();
      probe[i] = original[i] - step;
      graph.set_value(leaf, probe);
      graph.forward();
      const double down = graph.value(output).item();
      const double numeric = (up - down) / (2.0 * step);
      const double a = grad[i];
      const double abs_err = std::abs(a - numeric);
      pe.max_abs_error = std::max(pe.max_abs_error, abs_err);
      if (std::abs(a) + std::abs(numeric) > floor) {
        const double rel = abs_err / std::max(std::abs(a), std::abs(numeric));
        pe.max_rel_error = std::max(pe.max_rel_error, rel);
        if (rel > tol) report.pass = false;
      }
    }
    graph.set_value(leaf, original);
    report.max_rel_error = std::max(report.max_rel_error, pe.max_rel_error);
    report.max_abs_error = std::max(report.max_abs_error, pe.max_abs_error);
    report.parameters.push_back(std::move(pe));
  }
  graph.forward();
  return report;
}

}  // namespace curvssl
