#include "satnn/encoder.hpp"

#include "satnn/errors.hpp"

#include <string>

namespace satnn {

void Hyperparams::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("hyperparameters: " + msg); };
    if (num_bits < 2) fail("num_bits must be at least 2");
    if (slack_bits <= num_bits) fail("num_bits must be below slack_bits");
    if (slack_bits > 40) fail("slack_bits above 40 is not supported");
    if (regret_bits < 0 || regret_bits > slack_bits - num_bits) fail("regret_bits must lie in [0, slack_bits - num_bits]");
    if (cost_bits < 0 || cost_bits >= slack_bits - 1) fail("cost_bits must lie in [0, slack_bits - 1)");
    if (product_magnitude_bits < num_bits || product_magnitude_bits > 2 * num_bits - 1)
        fail("product_magnitude_bits must lie in [num_bits, 2*num_bits - 1]");
    if (2 * num_bits - 1 > slack_bits) fail("slack_bits must be at least 2*num_bits - 1");
    if (product_magnitude_bits >= slack_bits) fail("product_magnitude_bits must be below slack_bits");
    if (alpha <= 1 || alpha >= num_bits) fail("alpha must satisfy 1 < alpha < num_bits");
    if (batch_size < 1) fail("batch_size must be at least 1");
    if (num_batches < 1) fail("num_batches must be at least 1");
}

int NetworkSpec::window_shift() const {
    const int area = window_size * window_size;
    int shift = 0;
    while ((1 << shift) < area) ++shift;
    return shift;
}

void NetworkSpec::validate() const {
    if (input_dim < 1) throw ShapeError("network input_dim must be positive");
    for (int h : hidden)
        if (h < 1) throw ShapeError("hidden layer widths must be positive");
    if (kind == NetKind::Kernelised) {
        if (grid_side * grid_side != input_dim) throw ShapeError("kernelised net needs input_dim = grid_side^2");
        if (window_size < 1 || window_stride < 1) throw ShapeError("window size and stride must be positive");
        if (window_size > grid_side)
            throw ShapeError("window size " + std::to_string(window_size) + " exceeds grid side " + std::to_string(grid_side));
        if (hidden.empty()) throw ShapeError("kernelised net needs a hidden layer");
    }
}

std::vector<int> WeightVars::variable_ids() const {
    std::vector<int> ids;
    auto collect = [&](const BitVec& bv) {
        for (Lit l : bv.bits())
            if (!l.is_constant() && !l.is_negated()) ids.push_back(l.var());
    };
    for (const auto& neuron : kernels)
        for (const BitVec& cell : neuron) collect(cell);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const bool derived = l == 0 && !kernels.empty();
        for (std::size_t n = 0; n < layers[l].biases.size(); ++n) {
            if (!derived)
                for (const BitVec& w : layers[l].weights[n]) collect(w);
            collect(layers[l].biases[n]);
        }
    }
    return ids;
}

namespace {

BitVec fresh_bitvec(CnfFormula& f, int width, const std::string& prefix) {
    std::vector<Lit> bits;
    bits.reserve(static_cast<std::size_t>(width));
    for (int b = 0; b < width; ++b) bits.push_back(f.fresh_var(prefix + "_b" + std::to_string(b)));
    return BitVec{std::move(bits)};
}

std::string neuron_prefix(int layer, int neuron) {
    return "L" + std::to_string(layer) + "_N" + std::to_string(neuron);
}

// Window averages over one kernel grid, as circuits.
std::vector<BitVec> window_average(CnfFormula& f, const NetworkSpec& net, const Hyperparams& hp,
                                   const std::vector<BitVec>& kernel) {
    const int ks = net.kernel_side();
    const int shift = net.window_shift();
    std::vector<BitVec> weights;
    weights.reserve(static_cast<std::size_t>(net.input_dim));
    SideConstraints sc;
    for (int r = 0; r < net.grid_side; ++r) {
        for (int c = 0; c < net.grid_side; ++c) {
            BitVec acc;
            bool first = true;
            for (int dr = 0; dr < net.window_size; ++dr) {
                for (int dc = 0; dc < net.window_size; ++dc) {
                    const int cell = (r * net.window_stride + dr) * ks + (c * net.window_stride + dc);
                    BitVec term = sign_extend(kernel[static_cast<std::size_t>(cell)], hp.slack_bits);
                    if (first) {
                        acc = std::move(term);
                        first = false;
                        continue;
                    }
                    auto [sum, add_sc] = bitwise_add(f, acc, term, AddMode::Signed);
                    acc = std::move(sum);
                    sc.append(add_sc);
                }
            }
            weights.push_back(truncate_to(drop_lsbs(acc, shift), hp.num_bits));
        }
    }
    sc.assert_into(f);
    return weights;
}

} // namespace

std::vector<std::vector<std::int64_t>> kernel_to_weights(const NetworkSpec& net,
                                                         std::span<const std::vector<std::int64_t>> kernels) {
    const int ks = net.kernel_side();
    const int shift = net.window_shift();
    std::vector<std::vector<std::int64_t>> out;
    for (const auto& kernel : kernels) {
        if (kernel.size() != static_cast<std::size_t>(ks) * ks) throw ShapeError("kernel grid has the wrong cell count");
        std::vector<std::int64_t> weights;
        for (int r = 0; r < net.grid_side; ++r)
            for (int c = 0; c < net.grid_side; ++c) {
                std::int64_t sum = 0;
                for (int dr = 0; dr < net.window_size; ++dr)
                    for (int dc = 0; dc < net.window_size; ++dc)
                        sum += kernel[static_cast<std::size_t>((r * net.window_stride + dr) * ks + (c * net.window_stride + dc))];
                // Arithmetic shift: floor toward -inf.
                weights.push_back(sum >> shift);
            }
        out.push_back(std::move(weights));
    }
    return out;
}

LayerVars kernelised_weights(CnfFormula& f, const NetworkSpec& net, const Hyperparams& hp,
                             std::vector<std::vector<BitVec>>& kernels_out) {
    if (net.kind != NetKind::Kernelised) throw ShapeError("kernelised_weights needs a kernelised network");
    net.validate();
    const int ks = net.kernel_side();
    const int neurons = net.width(0);
    LayerVars layer;
    kernels_out.assign(static_cast<std::size_t>(neurons), {});
    for (int n = 0; n < neurons; ++n) {
        auto& kernel = kernels_out[static_cast<std::size_t>(n)];
        for (int cell = 0; cell < ks * ks; ++cell)
            kernel.push_back(fresh_bitvec(f, hp.num_bits, "K_N" + std::to_string(n) + "_C" + std::to_string(cell)));
    }
    for (int n = 0; n < neurons; ++n) {
        layer.weights.push_back(window_average(f, net, hp, kernels_out[static_cast<std::size_t>(n)]));
        layer.biases.push_back(fresh_bitvec(f, hp.slack_bits, neuron_prefix(0, n) + "_B"));
    }
    return layer;
}

WeightVars declare_weights(CnfFormula& f, const NetworkSpec& net, const Hyperparams& hp) {
    net.validate();
    WeightVars wv;
    for (int l = 0; l < net.num_layers(); ++l) {
        if (l == 0 && net.kind == NetKind::Kernelised) {
            wv.layers.push_back(kernelised_weights(f, net, hp, wv.kernels));
            continue;
        }
        LayerVars layer;
        for (int n = 0; n < net.width(l); ++n) {
            const std::string prefix = neuron_prefix(l, n);
            std::vector<BitVec> row;
            for (int i = 0; i < net.fan_in(l); ++i)
                row.push_back(fresh_bitvec(f, hp.num_bits, prefix + "_W" + std::to_string(i)));
            layer.weights.push_back(std::move(row));
            layer.biases.push_back(fresh_bitvec(f, hp.slack_bits, prefix + "_B"));
        }
        wv.layers.push_back(std::move(layer));
    }
    return wv;
}

WeightVars constant_weights(CnfFormula& f, const NetworkSpec& net, const Hyperparams& hp, const WeightValues& values) {
    net.validate();
    if (values.layers.size() != static_cast<std::size_t>(net.num_layers())) throw ShapeError("layer count mismatch");
    WeightVars wv;
    if (net.kind == NetKind::Kernelised) {
        for (const auto& kernel : values.kernels) {
            std::vector<BitVec> cells;
            for (std::int64_t v : kernel) cells.push_back(const_bitvec(v, hp.num_bits));
            wv.kernels.push_back(std::move(cells));
        }
    }
    for (int l = 0; l < net.num_layers(); ++l) {
        const LayerValues& lv = values.layers[static_cast<std::size_t>(l)];
        if (lv.biases.size() != static_cast<std::size_t>(net.width(l))) throw ShapeError("bias count mismatch");
        LayerVars layer;
        for (int n = 0; n < net.width(l); ++n) {
            if (l == 0 && net.kind == NetKind::Kernelised) {
                layer.weights.push_back(window_average(f, net, hp, wv.kernels.at(static_cast<std::size_t>(n))));
            } else {
                const auto& row = lv.weights.at(static_cast<std::size_t>(n));
                if (row.size() != static_cast<std::size_t>(net.fan_in(l))) throw ShapeError("weight row length mismatch");
                std::vector<BitVec> bvs;
                for (std::int64_t w : row) bvs.push_back(const_bitvec(w, hp.num_bits));
                layer.weights.push_back(std::move(bvs));
            }
            layer.biases.push_back(const_bitvec(lv.biases[static_cast<std::size_t>(n)], hp.slack_bits));
        }
        wv.layers.push_back(std::move(layer));
    }
    return wv;
}

BitVec relu(CnfFormula& f, const BitVec& bv) {
    std::vector<Lit> out(static_cast<std::size_t>(bv.width()));
    out[0] = kFalse;
    for (int i = 1; i < bv.width(); ++i) out[static_cast<std::size_t>(i)] = f.emit_and(bv[i], ~bv.sign());
    return BitVec{std::move(out)};
}

std::pair<BitVec, SideConstraints> relu_clipped(CnfFormula& f, const BitVec& bv, const Hyperparams& hp) {
    const int slack = hp.slack_bits;
    const int nb = hp.num_bits;
    if (bv.width() != slack)
        throw ShapeError("relu_clipped: input must be slack_bits=" + std::to_string(slack) + " wide, got " +
                         std::to_string(bv.width()));
    const BitVec shifted = drop_lsbs(relu(f, bv), hp.regret_bits);
    // Any set bit at weight >= 2^(nb-1) saturates the output.
    Lit saturated = kFalse;
    for (int i = 0; i <= slack - nb; ++i) saturated = f.emit_or(saturated, shifted[i]);
    std::vector<Lit> out(static_cast<std::size_t>(nb));
    out[0] = kFalse;
    for (int k = 1; k < nb; ++k) out[static_cast<std::size_t>(k)] = f.emit_or(saturated, shifted[slack - nb + k]);
    return {BitVec{std::move(out)}, SideConstraints{}};
}

std::pair<BitVec, SideConstraints> weighted_sum(CnfFormula& f, std::span<const BitVec> inputs,
                                                std::span<const BitVec> weights, const BitVec& bias,
                                                const Hyperparams& hp) {
    if (inputs.size() != weights.size())
        throw ShapeError("weighted_sum: " + std::to_string(inputs.size()) + " inputs but " +
                         std::to_string(weights.size()) + " weights");
    if (bias.width() != hp.slack_bits) throw ShapeError("weighted_sum: bias must be slack_bits wide");
    SideConstraints sc;
    BitVec acc;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto [product, mul_sc] = bitwise_mul(f, inputs[i], weights[i], hp);
        sc.append(mul_sc);
        if (i == 0) {
            acc = std::move(product);
            continue;
        }
        auto [sum, add_sc] = bitwise_add(f, acc, product, AddMode::Signed);
        acc = std::move(sum);
        sc.append(add_sc);
    }
    if (inputs.empty()) return {bias, std::move(sc)};
    auto [out, bias_sc] = bitwise_add(f, acc, bias, AddMode::Signed);
    sc.append(bias_sc);
    return {std::move(out), std::move(sc)};
}

const char* to_string(MarginRule r) { return r == MarginRule::Literal ? "literal" : "stated"; }

MarginRule parse_margin_rule(std::string_view s) {
    if (s == "literal") return MarginRule::Literal;
    if (s == "stated") return MarginRule::Stated;
    throw ConfigError("margin rule must be literal or stated, got '" + std::string(s) + "'");
}

void encode_cost(CnfFormula& f, const BitVec& y, int label, const Hyperparams& hp) {
    if (y.width() != hp.slack_bits) throw ShapeError("encode_cost: output must be slack_bits wide");
    if (label != 1 && label != -1) throw ConfigError("label must be -1 or +1");
    const int last = y.width() - hp.cost_bits - 1;
    if (label > 0) {
        f.add_clause({~y.sign()});
        Clause any;
        for (int i = 1; i <= last; ++i) any.push_back(y[i]);
        f.add_clause(any);
    } else if (hp.margin_rule == MarginRule::Literal) {
        f.add_clause({y.sign()});
        for (int i = 1; i <= last; ++i) f.add_clause({~y[i]});
    } else {
        // y <= -2^c: some high bit clear, or y == -2^c exactly (low bits clear).
        f.add_clause({y.sign()});
        Lit low_clear = kTrue;
        for (int i = last + 1; i < y.width(); ++i) low_clear = f.emit_and(low_clear, ~y[i]);
        Clause c{low_clear};
        for (int i = 1; i <= last; ++i) c.push_back(~y[i]);
        f.add_clause(c);
    }
}

std::pair<BitVec, SideConstraints> encode_forward(CnfFormula& f, const NetworkSpec& net, const WeightVars& weights,
                                                  const Example& example, const Hyperparams& hp) {
    if (example.features.size() != static_cast<std::size_t>(net.input_dim))
        throw ShapeError("example has " + std::to_string(example.features.size()) + " features, network expects " +
                         std::to_string(net.input_dim));
    if (weights.layers.size() != static_cast<std::size_t>(net.num_layers())) throw ShapeError("weight layer count mismatch");
    std::vector<BitVec> activations;
    activations.reserve(example.features.size());
    for (int x : example.features) activations.push_back(const_bitvec(x, hp.num_bits));

    SideConstraints sc;
    for (int l = 0; l < net.num_layers(); ++l) {
        const LayerVars& layer = weights.layers[static_cast<std::size_t>(l)];
        const bool output_layer = l + 1 == net.num_layers();
        std::vector<BitVec> next;
        for (int n = 0; n < net.width(l); ++n) {
            auto [sum, sum_sc] = weighted_sum(f, activations, layer.weights[static_cast<std::size_t>(n)],
                                              layer.biases[static_cast<std::size_t>(n)], hp);
            sc.append(sum_sc);
            if (output_layer) return {std::move(sum), std::move(sc)};
            auto [act, act_sc] = relu_clipped(f, sum, hp);
            sc.append(act_sc);
            next.push_back(std::move(act));
        }
        activations = std::move(next);
    }
    throw ShapeError("network has no output layer");
}

EncodedBatch encode_batch(const NetworkSpec& net, std::span<const Example> batch, const Hyperparams& hp) {
    hp.validate();
    net.validate();
    if (batch.empty()) throw ConfigError("encode_batch needs at least one example");
    EncodedBatch out;
    out.weights = declare_weights(out.formula, net, hp);
    for (const Example& ex : batch) {
        auto [y, sc] = encode_forward(out.formula, net, out.weights, ex, hp);
        sc.assert_into(out.formula);
        encode_cost(out.formula, y, ex.label, hp);
    }
    return out;
}

} // namespace satnn
