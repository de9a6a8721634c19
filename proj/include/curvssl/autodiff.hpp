#pragma once

// Minimal reverse-mode differentiation over a fixed primitive set.
//
// A Graph is built eagerly: every node caches its forward value when it is
// added. Node ids are assigned in creation order and inputs always precede
// their consumers, so id order is a topological order. Leaves can be
// overwritten and the graph re-run (forward()), which keeps every discrete
// attribute (gather indices, scalars) frozen; finite-difference checks rely
// on exactly that.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "curvssl/tensor.hpp"

namespace curvssl {

enum class Primitive {
  Leaf,
  MatMul,
  Add,
  Sub,
  Mul,
  Div,
  Scale,
  AddScalar,
  Relu,
  Sum,
  MeanRows,
  StdRows,
  Sqrt,
  Square,
  Exp,
  Transpose,
  GatherRows,
  BroadcastRow,
  BroadcastCol,
  RowSum,
  SegmentSum,
};

const char* to_string(Primitive p);

struct PrimitiveAttrs {
  double scalar = 0.0;                // Scale, AddScalar
  std::vector<std::size_t> indices;   // GatherRows
  std::size_t count = 0;              // BroadcastRow/Col: copies; SegmentSum: rows per segment

  static PrimitiveAttrs with_scalar(double s) {
    PrimitiveAttrs a;
    a.scalar = s;
    return a;
  }
  static PrimitiveAttrs with_indices(std::vector<std::size_t> idx) {
    PrimitiveAttrs a;
    a.indices = std::move(idx);
    return a;
  }
  static PrimitiveAttrs with_count(std::size_t n) {
    PrimitiveAttrs a;
    a.count = n;
    return a;
  }
};

// Forward value of one primitive. Throws ShapeMismatch or NonFinite.
Tensor eval_primitive(Primitive kind, std::span<const Tensor* const> inputs, const PrimitiveAttrs& attrs = {});
Tensor eval_primitive(Primitive kind, const std::vector<Tensor>& inputs, const PrimitiveAttrs& attrs = {});

using NodeId = std::size_t;

class Graph {
 public:
  NodeId parameter(std::string name, Tensor value);
  NodeId constant(Tensor value);
  NodeId apply(Primitive kind, std::vector<NodeId> inputs, PrimitiveAttrs attrs = {});

  NodeId matmul(NodeId a, NodeId b) { return apply(Primitive::MatMul, {a, b}); }
  NodeId add(NodeId a, NodeId b) { return apply(Primitive::Add, {a, b}); }
  NodeId sub(NodeId a, NodeId b) { return apply(Primitive::Sub, {a, b}); }
  NodeId mul(NodeId a, NodeId b) { return apply(Primitive::Mul, {a, b}); }
  NodeId div(NodeId a, NodeId b) { return apply(Primitive::Div, {a, b}); }
  NodeId scale(NodeId a, double s) { return apply(Primitive::Scale, {a}, PrimitiveAttrs::with_scalar(s)); }
  NodeId add_scalar(NodeId a, double s) { return apply(Primitive::AddScalar, {a}, PrimitiveAttrs::with_scalar(s)); }
  NodeId relu(NodeId a) { return apply(Primitive::Relu, {a}); }
  NodeId sum(NodeId a) { return apply(Primitive::Sum, {a}); }
  NodeId mean_rows(NodeId a) { return apply(Primitive::MeanRows, {a}); }
  NodeId std_rows(NodeId a) { return apply(Primitive::StdRows, {a}); }
  NodeId sqrt(NodeId a) { return apply(Primitive::Sqrt, {a}); }
  NodeId square(NodeId a) { return apply(Primitive::Square, {a}); }
  NodeId exp(NodeId a) { return apply(Primitive::Exp, {a}); }
  NodeId transpose(NodeId a) { return apply(Primitive::Transpose, {a}); }
  NodeId gather_rows(NodeId a, std::vector<std::size_t> rows) {
    return apply(Primitive::GatherRows, {a}, PrimitiveAttrs::with_indices(std::move(rows)));
  }
  NodeId broadcast_row(NodeId a, std::size_t rows) { return apply(Primitive::BroadcastRow, {a}, PrimitiveAttrs::with_count(rows)); }
  NodeId broadcast_col(NodeId a, std::size_t cols) { return apply(Primitive::BroadcastCol, {a}, PrimitiveAttrs::with_count(cols)); }
  NodeId row_sum(NodeId a) { return apply(Primitive::RowSum, {a}); }
  NodeId segment_sum(NodeId a, std::size_t rows_per_segment) {
    return apply(Primitive::SegmentSum, {a}, PrimitiveAttrs::with_count(rows_per_segment));
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const Tensor& value(NodeId id) const { return node(id).value; }
  Primitive kind(NodeId id) const { return node(id).kind; }
  const std::vector<NodeId>& inputs(NodeId id) const { return node(id).inputs; }
  const PrimitiveAttrs& attrs(NodeId id) const { return node(id).attrs; }
  const std::string& name(NodeId id) const { return node(id).name; }
  bool is_parameter(NodeId id) const { return node(id).is_parameter; }
  bool requires_grad(NodeId id) const { return node(id).requires_grad; }
  std::vector<NodeId> parameters() const;

  // Replace a leaf's value (same shape). Call forward() afterwards.
  void set_value(NodeId leaf, Tensor value);
  // Re-evaluate every non-leaf node in id order.
  void forward();

 private:
  struct Node {
    Primitive kind = Primitive::Leaf;
    std::vector<NodeId> inputs;
    PrimitiveAttrs attrs;
    Tensor value;
    std::string name;
    bool is_parameter = false;
    bool requires_grad = false;
  };

  const Node& node(NodeId id) const;
  Tensor evaluate(const Node& n) const;

  std::vector<Node> nodes_;
};

using Gradients = std::map<NodeId, Tensor>;

// ∂output/∂leaf for every parameter leaf (zeros for leaves the output does not
// reach). Throws NotScalarOutput unless the output holds exactly one value.
Gradients reverse_grad(const Graph& graph, NodeId output);

struct ParameterError {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradReport {
  std::vector<ParameterError> parameters;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool pass = true;
};

// Central differences against reverse_grad for every coordinate of every
// parameter leaf. A coordinate is judged on relative error only when
// |analytic| + |numeric| exceeds `floor`. Leaves the graph as it found it.
GradReport finite_diff_check(Graph& graph, NodeId output, double step, double tol, double floor = 1e-6);

}  // namespace curvssl
