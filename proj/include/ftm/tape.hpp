#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ftm/tensor.hpp"

namespace ftm {

class Tape;

enum class OpKind : std::uint8_t {
    Leaf,
    Add,        // elementwise, equal shapes
    AddRowVec,  // (m x d) + (1 x d), row broadcast
    Mul,        // elementwise, equal shapes
    Scale,      // multiply by attribute constant
    MatMul,
    Transpose,
    ConcatRows,
    ConcatCols,
    Slice,      // rectangular sub-block [r0,r1) x [c0,c1)
    Relu,
    Sigmoid,
    Log,
    Cos,
    SoftmaxRows,
    SumAll,
    MeanAll,
};

const char* op_name(OpKind kind);

/// Handle to a tensor recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::int32_t id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Tensor& value() const;
    /// Value of a 1x1 result.
    double scalar() const;
};

/// A recorded computation: an ordered list of primitive applications. Inputs
/// of every node precede it, so a forward replay is a single in-order sweep
/// and reverse-mode differentiation is a single reverse sweep.
class Tape {
public:
    struct Node {
        OpKind kind = OpKind::Leaf;
        std::vector<std::int32_t> inputs;
        std::vector<std::int64_t> iattrs; // slice bounds, etc.
        double dattr = 0.0;               // Scale factor
        Tensor out;
    };

    Var leaf(Tensor t);

    std::size_t size() const { return nodes_.size(); }
    const Node& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const Tensor& value(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)].out; }
    Tensor& mutable_value(std::int32_t id) { return nodes_[static_cast<std::size_t>(id)].out; }

    /// Re-executes every non-leaf node in recorded order, overwriting stored
    /// outputs. With unchanged leaves the results are bit-identical.
    void replay();

    /// Reverse sweep from a scalar loss. Returns one adjoint tensor per node
    /// (zeros where the loss is unreachable), indexed by node id.
    std::vector<Tensor> backward(Var loss) const;

    Var apply(OpKind kind, std::vector<std::int32_t> inputs,
              std::vector<std::int64_t> iattrs = {}, double dattr = 0.0);

private:
    std::vector<Node> nodes_;

    Tensor eval(const Node& n) const;
};

// --- primitives -------------------------------------------------------------

Var add(Var a, Var b);
Var add_rowvec(Var m, Var row);
Var mul(Var a, Var b);
Var scale(Var a, double c);
inline Var neg(Var a) { return scale(a, -1.0); }
Var matmul(Var a, Var b);
Var transpose(Var a);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice(Var a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1);
inline Var slice_rows(Var a, std::size_t r0, std::size_t r1) {
    return slice(a, r0, r1, 0, a.value().cols());
}
inline Var slice_cols(Var a, std::size_t c0, std::size_t c1) {
    return slice(a, 0, a.value().rows(), c0, c1);
}
Var relu(Var a);
Var sigmoid(Var a);
Var log(Var a);
Var cos(Var a);
Var softmax_rows(Var a);
Var sum_all(Var a);
Var mean_all(Var a);

/// Inner product of two 1 x d rows as a 1 x 1 scalar.
inline Var dot(Var a, Var b) { return matmul(a, transpose(b)); }

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

} // namespace ftm
