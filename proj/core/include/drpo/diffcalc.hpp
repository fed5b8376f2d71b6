#pragma once

// Scalar reverse-mode differentiation.
//
// Every intermediate quantity lives as one node on a Tape. Nodes store their
// forward value together with the local partial derivative towards each
// parent, so backward() is a single reverse sweep that accumulates adjoints.
// A Tape is single-threaded and is meant to live for one training step.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace drpo {

using NodeId = std::uint32_t;

class Tape;

/// Handle to a tape node. Cheap to copy; valid while its Tape is alive and
/// has not been cleared.
class Value {
 public:
  Value() = default;

  double data() const { return data_; }
  NodeId id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Value(Tape* tape, NodeId id, double data) : tape_(tape), id_(id), data_(data) {}

  Tape* tape_ = nullptr;
  NodeId id_ = 0;
  double data_ = 0.0;
};

enum class OpKind : std::uint8_t { Leaf, Add, Sub, Mul, Div, Ln, Pow2, Exp, Fused };
enum class ArithKind : std::uint8_t { Add, Sub, Mul, Div };
enum class UnaryKind : std::uint8_t { Ln, Pow2, Exp };

/// Gradients of one output with respect to every tracked leaf of a tape.
class GradientMap {
 public:
  GradientMap() = default;
  explicit GradientMap(std::vector<std::pair<NodeId, double>> entries)
      : entries_(std::move(entries)) {}

  bool contains(NodeId id) const;
  /// Throws DomainError when `id` is not a tracked leaf.
  double at(NodeId id) const;
  double operator[](const Value& v) const { return at(v.id()); }

  /// Gradients for `leaves` in order; the common case of a contiguous
  /// parameter block is served without per-element search.
  std::vector<double> gather(std::span<const Value> leaves) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<NodeId, double>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<NodeId, double>> entries_;  // sorted by id
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Throws DomainError for non-finite x.
  Value leaf(double x, bool tracked = false);
  Value constant(double x) { return leaf(x, false); }

  Value arith(Value a, Value b, ArithKind kind);
  Value unary(Value a, UnaryKind kind);

  /// Node with caller-supplied forward value and local partials, for blocks
  /// whose Jacobian is computed in closed form (e.g. a whole sequence
  /// log-likelihood). Zero partials are dropped. Replay treats fused nodes
  /// as opaque sources.
  Value fused(double data, std::span<const Value> parents, std::span<const double> partials);

  /// Reverse sweep seeded with d(output)/d(output) = 1.
  GradientMap backward(Value output) const;

  /// Recomputes every node's forward value from the leaves.
  std::vector<double> replay() const;

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
  double data(NodeId id) const { return nodes_.at(id).data; }
  bool tracked(NodeId id) const { return nodes_.at(id).tracked; }
  std::span<const NodeId> parents(NodeId id) const;
  std::span<const double> partials(NodeId id) const;

  void clear();
  void reserve(std::size_t nodes, std::size_t edges);

 private:
  struct Node {
    OpKind kind;
    bool tracked;
    std::uint32_t edge_begin;
    std::uint32_t edge_count;
    double data;
  };

  Value push(OpKind kind, double data, std::initializer_list<std::pair<NodeId, double>> edges);
  void check_owned(const Value& v) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> edge_parent_;
  std::vector<double> edge_partial_;
};

Value operator+(Value a, Value b);
Value operator-(Value a, Value b);
Value operator*(Value a, Value b);
Value operator/(Value a, Value b);
Value operator+(Value a, double b);
Value operator+(double a, Value b);
Value operator-(Value a, double b);
Value operator-(double a, Value b);
Value operator*(Value a, double b);
Value operator*(double a, Value b);
Value operator/(Value a, double b);
Value operator/(double a, Value b);
Value operator-(Value a);

Value ln(Value a);
Value pow2(Value a);
Value exp(Value a);

/// Left-to-right sum; requires a nonempty span.
Value sum(std::span<const Value> xs);

using TapeFunction = std::function<Value(Tape&, std::span<const Value>)>;

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double finite_diff_check(const TapeFunction& f, std::span<const double> point, double eps);

/// Forward value and tape gradient of f at `point`.
std::pair<double, std::vector<double>> value_and_grad(const TapeFunction& f,
                                                      std::span<const double> point);

}  // namespace drpo
