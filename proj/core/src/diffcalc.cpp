#include "drpo/diffcalc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "drpo/error.hpp"

namespace drpo {

namespace {

double checked(double x, const char* op) {
  if (!std::isfinite(x)) {
    throw NumericError(std::string("non-finite result from ") + op);
  }
  return x;
}

}  // namespace

bool GradientMap::contains(NodeId id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const auto& e, NodeId key) { return e.first < key; });
  return it != entries_.end() && it->first == id;
}

double GradientMap::at(NodeId id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const auto& e, NodeId key) { return e.first < key; });
  if (it == entries_.end() || it->first != id) {
    throw DomainError("node " + std::to_string(id) + " is not a tracked leaf");
  }
  return it->second;
}

std::vector<double> GradientMap::gather(std::span<const Value> leaves) const {
  std::vector<double> out(leaves.size());
  if (leaves.empty()) return out;
  auto it = std::lower_bound(entries_.begin(), entries_.end(), leaves.front().id(),
                             [](const auto& e, NodeId key) { return e.first < key; });
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const NodeId id = leaves[i].id();
    if (it != entries_.end() && it->first == id) {
      out[i] = it->second;
      ++it;
    } else {
      out[i] = at(id);
      it = std::upper_bound(entries_.begin(), entries_.end(), id,
                            [](NodeId key, const auto& e) { return key < e.first; });
    }
  }
  return out;
}

Value Tape::push(OpKind kind, double data,
                 std::initializer_list<std::pair<NodeId, double>> edges) {
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(Node{kind, false, static_cast<std::uint32_t>(edge_parent_.size()),
                        static_cast<std::uint32_t>(edges.size()), data});
  for (const auto& [parent, partial] : edges) {
    edge_parent_.push_back(parent);
    edge_partial_.push_back(partial);
  }
  return Value(this, id, data);
}

void Tape::check_owned(const Value& v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw DomainError("value does not belong to this tape");
  }
}

Value Tape::leaf(double x, bool tracked) {
  if (!std::isfinite(x)) throw DomainError("leaf value must be finite");
  Value v = push(OpKind::Leaf, x, {});
  nodes_.back().tracked = tracked;
  return v;
}

Value Tape::arith(Value a, Value b, ArithKind kind) {
  check_owned(a);
  check_owned(b);
  const double x = a.data();
  const double y = b.data();
  switch (kind) {
    case ArithKind::Add:
      return push(OpKind::Add, checked(x + y, "add"), {{a.id(), 1.0}, {b.id(), 1.0}});
    case ArithKind::Sub:
      return push(OpKind::Sub, checked(x - y, "sub"), {{a.id(), 1.0}, {b.id(), -1.0}});
    case ArithKind::Mul:
      return push(OpKind::Mul, checked(x * y, "mul"), {{a.id(), y}, {b.id(), x}});
    case ArithKind::Div:
      if (y == 0.0) throw DomainError("division by zero");
      return push(OpKind::Div, checked(x / y, "div"),
                  {{a.id(), 1.0 / y}, {b.id(), -x / (y * y)}});
  }
  throw DomainError("unknown arithmetic kind");
}

Value Tape::unary(Value a, UnaryKind kind) {
  check_owned(a);
  const double x = a.data();
  switch (kind) {
    case UnaryKind::Ln:
      if (!(x > 0.0)) throw DomainError("ln of non-positive value");
      return push(OpKind::Ln, std::log(x), {{a.id(), 1.0 / x}});
    case UnaryKind::Pow2: {
      const double y = checked(std::exp2(x), "pow2");
      return push(OpKind::Pow2, y, {{a.id(), y * std::numbers::ln2}});
    }
    case UnaryKind::Exp: {
      const double y = checked(std::exp(x), "exp");
      return push(OpKind::Exp, y, {{a.id(), y}});
    }
  }
  throw DomainError("unknown unary kind");
}

Value Tape::fused(double data, std::span<const Value> parents, std::span<const double> partials) {
  if (parents.size() != partials.size()) {
    throw DomainError("fused node: parents/partials length mismatch");
  }
  checked(data, "fused");
  const auto id = static_cast<NodeId>(nodes_.size());
  const auto begin = static_cast<std::uint32_t>(edge_parent_.size());
  for (std::size_t i = 0; i < parents.size(); ++i) {
    check_owned(parents[i]);
    if (partials[i] == 0.0) continue;
    edge_parent_.push_back(parents[i].id());
    edge_partial_.push_back(checked(partials[i], "fused partial"));
  }
  nodes_.push_back(Node{OpKind::Fused, false, begin,
                        static_cast<std::uint32_t>(edge_parent_.size()) - begin, data});
  return Value(this, id, data);
}

GradientMap Tape::backward(Value output) const {
  check_owned(output);
  std::vector<double> adjoint(output.id() + 1, 0.0);
  adjoint[output.id()] = 1.0;
  for (NodeId i = output.id() + 1; i-- > 0;) {
    const double a = adjoint[i];
    if (a == 0.0) continue;
    const Node& n = nodes_[i];
    for (std::uint32_t e = n.edge_begin; e < n.edge_begin + n.edge_count; ++e) {
      adjoint[edge_parent_[e]] += a * edge_partial_[e];
    }
  }
  std::vector<std::pair<NodeId, double>> grads;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].tracked) grads.emplace_back(i, i < adjoint.size() ? adjoint[i] : 0.0);
  }
  return GradientMap(std::move(grads));
}

std::vector<double> Tape::replay() const {
  std::vector<double> v(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    auto arg = [&](std::uint32_t k) { return v[edge_parent_[n.edge_begin + k]]; };
    switch (n.kind) {
      case OpKind::Leaf:
      case OpKind::Fused: v[i] = n.data; break;
      case OpKind::Add: v[i] = arg(0) + arg(1); break;
      case OpKind::Sub: v[i] = arg(0) - arg(1); break;
      case OpKind::Mul: v[i] = arg(0) * arg(1); break;
      case OpKind::Div: v[i] = arg(0) / arg(1); break;
      case OpKind::Ln: v[i] = std::log(arg(0)); break;
      case OpKind::Pow2: v[i] = std::exp2(arg(0)); break;
      case OpKind::Exp: v[i] = std::exp(arg(0)); break;
    }
  }
  return v;
}

std::span<const NodeId> Tape::parents(NodeId id) const {
  const Node& n = nodes_.at(id);
  return {edge_parent_.data() + n.edge_begin, n.edge_count};
}

std::span<const double> Tape::partials(NodeId id) const {
  const Node& n = nodes_.at(id);
  return {edge_partial_.data() + n.edge_begin, n.edge_count};
}

void Tape::clear() {
  nodes_.clear();
  edge_parent_.clear();
  edge_partial_.clear();
}

void Tape::reserve(std::size_t nodes, std::size_t edges) {
  nodes_.reserve(nodes);
  edge_parent_.reserve(edges);
  edge_partial_.reserve(edges);
}

namespace {

Tape& tape_of(const Value& a) {
  if (a.tape() == nullptr) throw DomainError("value is not attached to a tape");
  return *a.tape();
}

}  // namespace

Value operator+(Value a, Value b) { return tape_of(a).arith(a, b, ArithKind::Add); }
Value operator-(Value a, Value b) { return tape_of(a).arith(a, b, ArithKind::Sub); }
Value operator*(Value a, Value b) { return tape_of(a).arith(a, b, ArithKind::Mul); }
Value operator/(Value a, Value b) { return tape_of(a).arith(a, b, ArithKind::Div); }
Value operator+(Value a, double b) { return a + tape_of(a).constant(b); }
Value operator+(double a, Value b) { return tape_of(b).constant(a) + b; }
Value operator-(Value a, double b) { return a - tape_of(a).constant(b); }
Value operator-(double a, Value b) { return tape_of(b).constant(a) - b; }
Value operator*(Value a, double b) { return a * tape_of(a).constant(b); }
Value operator*(double a, Value b) { return tape_of(b).constant(a) * b; }
Value operator/(Value a, double b) { return a / tape_of(a).constant(b); }
Value operator/(double a, Value b) { return tape_of(b).constant(a) / b; }
Value operator-(Value a) { return tape_of(a).constant(0.0) - a; }

Value ln(Value a) { return tape_of(a).unary(a, UnaryKind::Ln); }
Value pow2(Value a) { return tape_of(a).unary(a, UnaryKind::Pow2); }
Value exp(Value a) { return tape_of(a).unary(a, UnaryKind::Exp); }

Value sum(std::span<const Value> xs) {
  if (xs.empty()) throw DomainError("sum of empty span");
  Value acc = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) acc = acc + xs[i];
  return acc;
}

std::pair<double, std::vector<double>> value_and_grad(const TapeFunction& f,
                                                      std::span<const double> point) {
  Tape tape;
  std::vector<Value> leaves;
  leaves.reserve(point.size());
  for (double x : point) leaves.push_back(tape.leaf(x, true));
  const Value out = f(tape, leaves);
  return {out.data(), tape.backward(out).gather(leaves)};
}

double finite_diff_check(const TapeFunction& f, std::span<const double> point, double eps) {
  const auto [value, grad] = value_and_grad(f, point);
  (void)value;
  auto eval = [&](const std::vector<double>& x) {
    Tape tape;
    std::vector<Value> leaves;
    leaves.reserve(x.size());
    for (double xi : x) leaves.push_back(tape.leaf(xi, false));
    return f(tape, leaves).data();
  };
  std::vector<double> x(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double up = eval(x);
    x[i] = orig - eps;
    const double down = eval(x);
    x[i] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(grad[i] - numeric) / std::max(1.0, std::abs(grad[i])));
  }
  return worst;
}

}  // namespace drpo
