#pragma once

#include "satnn/bitvec.hpp"
#include "satnn/cnf.hpp"
#include "satnn/datasets.hpp"
#include "satnn/hyperparams.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace satnn {

enum class NetKind { Vanilla, Kernelised };

/// Fully connected network with a single output neuron. A kernelised net
/// derives its first-layer weights from per-neuron kernel grids by window
/// averaging; its input is a grid_side x grid_side image.
struct NetworkSpec {
    NetKind kind = NetKind::Vanilla;
    int input_dim = 0;
    std::vector<int> hidden;
    int grid_side = 0;
    int window_size = 1;
    int window_stride = 1;

    [[nodiscard]] int num_layers() const { return static_cast<int>(hidden.size()) + 1; }
    [[nodiscard]] int fan_in(int layer) const { return layer == 0 ? input_dim : hidden[static_cast<std::size_t>(layer - 1)]; }
    [[nodiscard]] int width(int layer) const {
        return layer + 1 < num_layers() ? hidden[static_cast<std::size_t>(layer)] : 1;
    }
    /// Side of each kernel grid such that the windows yield grid_side^2 weights.
    [[nodiscard]] int kernel_side() const { return (grid_side - 1) * window_stride + window_size; }
    /// log2 of the averaging divisor: smallest power of two >= window area.
    [[nodiscard]] int window_shift() const;

    void validate() const;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct LayerVars {
    std::vector<std::vector<BitVec>> weights; // [neuron][input], num_bits wide
    std::vector<BitVec> biases;               // [neuron], slack_bits wide
};

/// The bit-vectors the solver assigns. For kernelised nets the first
/// layer's weights are circuits over `kernels`, not free variables.
struct WeightVars {
    std::vector<LayerVars> layers;
    std::vector<std::vector<BitVec>> kernels; // [neuron][cell], row-major

    /// Ids of every free weight, bias and kernel variable in declaration order.
    [[nodiscard]] std::vector<int> variable_ids() const;
};

/// Integer mirror of WeightVars.
struct LayerValues {
    std::vector<std::vector<std::int64_t>> weights;
    std::vector<std::int64_t> biases;

    friend bool operator==(const LayerValues&, const LayerValues&) = default;
};

struct WeightValues {
    std::vector<LayerValues> layers;
    std::vector<std::vector<std::int64_t>> kernels;

    friend bool operator==(const WeightValues&, const WeightValues&) = default;
};

/// Allocates labelled variables "L<layer>_N<neuron>_W<input>_b<bit>" for
/// weights and "L<layer>_N<neuron>_B_b<bit>" for biases. Kernelised first
/// layers are delegated to `kernelised_weights`.
WeightVars declare_weights(CnfFormula& f, const NetworkSpec& net, const Hyperparams& hp);

/// First layer of a kernelised net: kernel cells "K_N<neuron>_C<cell>_b<bit>"
/// and window-averaged weights. Window-sum side constraints are asserted.
LayerVars kernelised_weights(CnfFormula& f, const NetworkSpec& net, const Hyperparams& hp,
                             std::vector<std::vector<BitVec>>& kernels_out);

/// Same shapes as `declare_weights`, built from constants. Kernelised nets
/// take `values.kernels` and recompute layer-0 weights through the circuit.
WeightVars constant_weights(CnfFormula& f, const NetworkSpec& net, const Hyperparams& hp, const WeightValues& values);

/// Integer window average used by both the circuit and the interpreter.
std::vector<std::vector<std::int64_t>> kernel_to_weights(const NetworkSpec& net, std::span<const std::vector<std::int64_t>> kernels);

BitVec relu(CnfFormula& f, const BitVec& bv);

/// min(max(floor(x / 2^regret_bits), 0), 2^(num_bits-1) - 1), num_bits wide.
std::pair<BitVec, SideConstraints> relu_clipped(CnfFormula& f, const BitVec& bv, const Hyperparams& hp);

std::pair<BitVec, SideConstraints> weighted_sum(CnfFormula& f, std::span<const BitVec> inputs,
                                                std::span<const BitVec> weights, const BitVec& bias,
                                                const Hyperparams& hp);

/// Margin constraints on the raw output. +1: sign clear and one of bits
/// 1..n-cost_bits-1 set. -1 under MarginRule::Literal: sign set and bits
/// 1..n-cost_bits-1 clear; under MarginRule::Stated: y <= -2^cost_bits.
void encode_cost(CnfFormula& f, const BitVec& y, int label, const Hyperparams& hp);

std::pair<BitVec, SideConstraints> encode_forward(CnfFormula& f, const NetworkSpec& net, const WeightVars& weights,
                                                  const Example& example, const Hyperparams& hp);

struct EncodedBatch {
    CnfFormula formula;
    WeightVars weights;
};

EncodedBatch encode_batch(const NetworkSpec& net, std::span<const Example> batch, const Hyperparams& hp);

} // namespace satnn
