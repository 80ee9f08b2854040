#include "support/helpers.hpp"
#include "support/local_sat.hpp"

#include "satnn/encoder.hpp"
#include "satnn/errors.hpp"
#include "satnn/random.hpp"
#include "satnn/runtime.hpp"
#include "satnn/solver.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace satnn;
using namespace satnn::testing;

namespace {

NetworkSpec vanilla(int in, std::vector<int> hidden) {
    NetworkSpec n;
    n.input_dim = in;
    n.hidden = std::move(hidden);
    return n;
}

std::int64_t clipped(std::int64_t x, int regret, int num_bits) {
    return std::min<std::int64_t>(std::max<std::int64_t>(x >> regret, 0), (1 << (num_bits - 1)) - 1);
}

WeightValues random_values(const NetworkSpec& net, const Hyperparams& hp, Rng& rng, int spread) {
    WeightValues v;
    auto draw = [&](std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
    };
    const std::int64_t bmax = std::min<std::int64_t>(hp.slack_max(), spread);
    for (int l = 0; l < net.num_layers(); ++l) {
        LayerValues lv;
        for (int n = 0; n < net.width(l); ++n) {
            std::vector<std::int64_t> row;
            for (int i = 0; i < net.fan_in(l); ++i) row.push_back(draw(hp.weight_min(), hp.weight_max()));
            lv.weights.push_back(row);
            lv.biases.push_back(draw(-bmax, bmax));
        }
        v.layers.push_back(lv);
    }
    return v;
}

} // namespace

TEST_CASE("hyperparameter validation") {
    Hyperparams hp;
    CHECK_NOTHROW(hp.validate());
    auto bad = [](auto mutate) {
        Hyperparams h;
        mutate(h);
        CHECK_THROWS_AS(h.validate(), ConfigError);
    };
    bad([](Hyperparams& h) { h.slack_bits = 4; });
    bad([](Hyperparams& h) { h.regret_bits = 5; });
    bad([](Hyperparams& h) { h.regret_bits = -1; });
    bad([](Hyperparams& h) { h.cost_bits = 7; });
    bad([](Hyperparams& h) { h.product_magnitude_bits = 3; });
    bad([](Hyperparams& h) { h.product_magnitude_bits = 8; });
    bad([](Hyperparams& h) { h.alpha = 1; });
    bad([](Hyperparams& h) { h.alpha = 4; });
    bad([](Hyperparams& h) { h.batch_size = 0; });
    bad([](Hyperparams& h) { h.num_batches = 0; });
    bad([](Hyperparams& h) {
        h.num_bits = 5;
        h.slack_bits = 8;
        h.product_magnitude_bits = 7;
        h.alpha = 2;
    }); // 2*5-1 > 8
}

TEST_CASE("declare_weights counts and labels") {
    Hyperparams hp;
    {
        CnfFormula f;
        WeightVars w = declare_weights(f, vanilla(4, {}), hp);
        CHECK(f.var_count() == 4 * 4 + 8);
        CHECK(w.variable_ids().size() == 24);
        CHECK(f.labels().at(1) == "L0_N0_W0_b0");
        CHECK(f.labels().at(17) == "L0_N0_B_b0");
    }
    {
        CnfFormula f;
        WeightVars w = declare_weights(f, vanilla(196, {10}), hp);
        std::size_t first = 0;
        for (const auto& row : w.layers[0].weights) first += row.size() * 4;
        CHECK(first == 196 * 10 * 4);
        CHECK(f.var_count() == 196 * 10 * 4 + 10 * 8 + 10 * 4 + 8);
    }
    CnfFormula f;
    auto a = declare_weights(f, vanilla(3, {2}), hp).variable_ids();
    auto b = declare_weights(f, vanilla(3, {2}), hp).variable_ids();
    CHECK(*std::max_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end()));
}

TEST_CASE("network spec validation") {
    CHECK_THROWS_AS(vanilla(0, {}).validate(), ShapeError);
    CHECK_THROWS_AS(vanilla(3, {0}).validate(), ShapeError);
    NetworkSpec k;
    k.kind = NetKind::Kernelised;
    k.input_dim = 9;
    k.grid_side = 3;
    k.window_size = 4;
    k.hidden = {2};
    CHECK_THROWS_AS(k.validate(), ShapeError);
    k.window_size = 2;
    CHECK_NOTHROW(k.validate());
    CHECK(k.kernel_side() == 4);
    k.input_dim = 10;
    CHECK_THROWS_AS(k.validate(), ShapeError);
}

TEST_CASE("kernel window averaging") {
    NetworkSpec k;
    k.kind = NetKind::Kernelised;
    k.grid_side = 2;
    k.input_dim = 4;
    k.hidden = {1};
    k.window_size = 1;
    CHECK(k.window_shift() == 0);
    std::vector<std::vector<std::int64_t>> cells{{1, -2, 3, 4}};
    CHECK(kernel_to_weights(k, cells)[0] == cells[0]);

    k.window_size = 2;
    CHECK(k.window_shift() == 2);
    std::vector<std::vector<std::int64_t>> fours{std::vector<std::int64_t>(9, 4)};
    CHECK(kernel_to_weights(k, fours)[0] == std::vector<std::int64_t>(4, 4));

    k.window_size = 3;
    CHECK(k.window_shift() == 4);

    // the circuit agrees with the integer rule
    Hyperparams hp;
    Rng rng(derive_seed(3, 0));
    for (int trial = 0; trial < 30; ++trial) {
        k.window_size = 1 + static_cast<int>(uniform_below(rng, 2));
        k.window_stride = 1 + static_cast<int>(uniform_below(rng, 2));
        const int side = k.kernel_side();
        WeightValues v;
        v.kernels.push_back({});
        for (int c = 0; c < side * side; ++c) v.kernels[0].push_back(-7 + static_cast<std::int64_t>(uniform_below(rng, 15)));
        v.layers.resize(2);
        v.layers[0].biases = {0};
        v.layers[1].weights = {{1}};
        v.layers[1].biases = {0};
        CnfFormula f;
        WeightVars w = constant_weights(f, k, hp, v);
        const auto expect = kernel_to_weights(k, v.kernels);
        if (f.contradictory()) continue;
        for (int i = 0; i < 4; ++i) CHECK(decode_constant(w.layers[0].weights[0][static_cast<std::size_t>(i)]) == expect[0][static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("relu truth table at width 8") {
    CnfFormula f;
    BitVec x = free_bitvec(f, 8);
    BitVec y = relu(f, x);
    CHECK(y.width() == 8);
    CHECK(y.sign().is_false());
    for (int v = -128; v < 128; ++v) {
        auto m = local_solve(f, assume_value(x.bits(), v));
        REQUIRE(m);
        CHECK(decode(y, *m) == std::max(v, 0));
    }
    CnfFormula g;
    CHECK(bit_string(relu(g, const_bitvec(-16, 8))) == "00000000");
    CHECK(bit_string(relu(g, const_bitvec(5, 8))) == "00000101");
}

TEST_CASE("relu_clipped matches the semantic formula") {
    for (int regret = 0; regret <= 4; ++regret) {
        Hyperparams hp;
        hp.regret_bits = regret;
        CnfFormula f;
        BitVec x = free_bitvec(f, 8);
        auto [y, sc] = relu_clipped(f, x, hp);
        sc.assert_into(f);
        CHECK(y.width() == 4);
        std::int64_t prev = -1;
        for (int v = -128; v < 128; ++v) {
            auto m = local_solve(f, assume_value(x.bits(), v));
            REQUIRE(m);
            const std::int64_t out = decode(y, *m);
            CHECK(out == clipped(v, regret, 4));
            CHECK(out >= prev);
            prev = out;
        }
    }
    Hyperparams hp;
    hp.regret_bits = 2;
    CnfFormula g;
    CHECK(decode_constant(relu_clipped(g, const_bitvec(-20, 8), hp).first) == 0);
    CHECK(bit_string(relu_clipped(g, const_bitvec(44, 8), hp).first) == "0111");
    CHECK(bit_string(relu_clipped(g, const_bitvec(8, 8), hp).first) == "0010");
    CHECK_THROWS_AS(relu_clipped(g, const_bitvec(8, 7), hp), ShapeError);
}

TEST_CASE("weighted_sum examples") {
    Hyperparams hp;
    CnfFormula f;
    {
        const BitVec in[] = {const_bitvec(1, 4)};
        const BitVec w[] = {const_bitvec(1, 4)};
        CHECK(decode_constant(weighted_sum(f, in, w, const_bitvec(0, 8), hp).first) == 1);
    }
    {
        const BitVec in[] = {const_bitvec(3, 4), const_bitvec(-1, 4)};
        const BitVec w[] = {const_bitvec(2, 4), const_bitvec(4, 4)};
        CHECK(decode_constant(weighted_sum(f, in, w, const_bitvec(1, 8), hp).first) == 3);
    }
    {
        CnfFormula g;
        const BitVec in[] = {const_bitvec(7, 4), const_bitvec(7, 4), const_bitvec(7, 4)};
        const BitVec w[] = {const_bitvec(7, 4), const_bitvec(7, 4), const_bitvec(7, 4)};
        auto [s, sc] = weighted_sum(g, in, w, const_bitvec(0, 8), hp);
        sc.assert_into(g);
        CHECK(g.contradictory()); // 147 > 127
    }
    const BitVec in[] = {const_bitvec(1, 4)};
    const BitVec w[] = {const_bitvec(1, 4), const_bitvec(1, 4)};
    CHECK_THROWS_AS(weighted_sum(f, in, w, const_bitvec(0, 8), hp), ShapeError);
    const BitVec w1[] = {const_bitvec(1, 4)};
    CHECK_THROWS_AS(weighted_sum(f, in, w1, const_bitvec(0, 4), hp), ShapeError);
}

TEST_CASE("encode_cost literal rule") {
    Hyperparams hp;
    hp.cost_bits = 3;
    std::set<int> pos, neg;
    for (int label : {1, -1}) {
        CnfFormula f;
        BitVec y = free_bitvec(f, 8, "y");
        encode_cost(f, y, label, hp);
        if (label > 0) {
            REQUIRE(f.clauses().size() == 2);
            CHECK(f.clauses()[1] == Clause{y[1], y[2], y[3], y[4]});
        }
        for (int v = -128; v < 128; ++v)
            if (local_solve(f, assume_value(y.bits(), v))) (label > 0 ? pos : neg).insert(v);
    }
    CHECK(*pos.begin() == 8);
    CHECK(*pos.rbegin() == 127);
    CHECK(pos.size() == 120);
    CHECK(*neg.begin() == -128);
    CHECK(*neg.rbegin() == -121);
    CHECK(neg.size() == 8);
    for (int v = -128; v < 128; ++v) {
        CHECK(pos.count(v) == satisfies_margin(v, 1, hp));
        CHECK(neg.count(v) == satisfies_margin(v, -1, hp));
    }
    CnfFormula g;
    encode_cost(g, const_bitvec(16, 8), 1, hp);
    CHECK_FALSE(g.contradictory());
}

TEST_CASE("encode_cost stated rule mirrors the positive margin") {
    for (int c : {0, 3, 6}) {
        Hyperparams hp;
        hp.cost_bits = c;
        hp.margin_rule = MarginRule::Stated;
        CnfFormula f;
        BitVec y = free_bitvec(f, 8, "y");
        encode_cost(f, y, -1, hp);
        for (int v = -128; v < 128; ++v) {
            const bool sat = local_solve(f, assume_value(y.bits(), v)).has_value();
            CHECK(sat == (v <= -(1 << c)));
            CHECK(sat == satisfies_margin(v, -1, hp));
        }
    }
    CHECK(parse_margin_rule("stated") == MarginRule::Stated);
    CHECK_THROWS_AS(parse_margin_rule("loose"), ConfigError);
}

TEST_CASE("encode_forward examples") {
    Hyperparams hp;
    NetworkSpec net = vanilla(4, {});
    WeightValues zero;
    zero.layers.push_back({{{0, 0, 0, 0}}, {0}});
    CnfFormula f;
    WeightVars w = constant_weights(f, net, hp, zero);
    Example ex{{1, 3, 0, 2}, 1};
    CHECK(decode_constant(encode_forward(f, net, w, ex, hp).first) == 0);

    WeightValues pw;
    pw.layers.push_back({{{2, 3, -4, -2}}, {16}});
    CnfFormula g;
    WeightVars w2 = constant_weights(g, net, hp, pw);
    CHECK(decode_constant(encode_forward(g, net, w2, Example{{0, 0, 0, 0}, 1}, hp).first) == 16);
    CHECK_THROWS_AS(encode_forward(g, net, w2, Example{{0, 0, 0}, 1}, hp), ShapeError);
}

TEST_CASE("circuit and interpreter agree on constant weights") {
    Rng rng(derive_seed(42, 0));
    int agree = 0, overflowed = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int in = 1 + static_cast<int>(uniform_below(rng, 16));
        std::vector<int> hidden;
        if (coin(rng)) hidden.push_back(1 + static_cast<int>(uniform_below(rng, 10)));
        NetworkSpec net = vanilla(in, hidden);
        Hyperparams hp;
        hp.regret_bits = static_cast<int>(uniform_below(rng, 3));
        hp.slack_bits = 8 + static_cast<int>(uniform_below(rng, 3));
        const WeightValues values = random_values(net, hp, rng, 20);
        Example ex;
        for (int i = 0; i < in; ++i) ex.features.push_back(static_cast<int>(uniform_below(rng, 4)));
        CnfFormula f;
        WeightVars w = constant_weights(f, net, hp, values);
        auto [out, sc] = encode_forward(f, net, w, ex, hp);
        sc.assert_into(f);
        TrainedModel m{net, hp, values, {}};
        const Inference r = infer(m, ex.features);
        CHECK(out.is_constant());
        CHECK(f.contradictory() == r.overflow.has_value());
        if (!f.contradictory() && !r.overflow) {
            CHECK(decode_constant(out) == r.output);
            ++agree;
        } else {
            ++overflowed;
        }
    }
    CHECK(agree > 300);
    CHECK(overflowed > 0);
}

TEST_CASE("kernelised circuit and interpreter agree") {
    Rng rng(derive_seed(43, 0));
    for (int trial = 0; trial < 50; ++trial) {
        NetworkSpec net;
        net.kind = NetKind::Kernelised;
        net.grid_side = 3;
        net.input_dim = 9;
        net.window_size = 1 + static_cast<int>(uniform_below(rng, 3));
        net.window_stride = 1 + static_cast<int>(uniform_below(rng, 2));
        net.hidden = {2};
        Hyperparams hp;
        WeightValues v = random_values(net, hp, rng, 10);
        const int cells = net.kernel_side() * net.kernel_side();
        v.kernels.assign(2, {});
        for (auto& k : v.kernels)
            for (int c = 0; c < cells; ++c) k.push_back(-7 + static_cast<std::int64_t>(uniform_below(rng, 15)));
        v.layers[0].weights = kernel_to_weights(net, v.kernels);
        Example ex;
        for (int i = 0; i < 9; ++i) ex.features.push_back(static_cast<int>(uniform_below(rng, 4)));
        CnfFormula f;
        WeightVars w = constant_weights(f, net, hp, v);
        auto [out, sc] = encode_forward(f, net, w, ex, hp);
        sc.assert_into(f);
        const Inference r = infer(TrainedModel{net, hp, v, {}}, ex.features);
        CHECK(f.contradictory() == r.overflow.has_value());
        if (!r.overflow && !f.contradictory()) CHECK(decode_constant(out) == r.output);
    }
}

TEST_CASE("encode_batch") {
    Hyperparams hp;
    NetworkSpec net = vanilla(2, {});
    const Example clash[] = {{{1, 1}, 1}, {{1, 1}, -1}};
    CHECK(solve(encode_batch(net, clash, hp).formula, {}, SolverConfig{}).status == SolveStatus::Unsat);
    CHECK_THROWS(encode_batch(net, std::span<const Example>{}, hp));

    // identical batches encode identically
    const Example batch[] = {{{1, 0}, 1}, {{0, 1}, -1}};
    CHECK(to_dimacs(encode_batch(net, batch, hp).formula) == to_dimacs(encode_batch(net, batch, hp).formula));
}

TEST_CASE("perceptron toy set: literal margin is infeasible, stated margin is not") {
    const Dataset toy = perceptron_toyset();
    NetworkSpec net = vanilla(4, {});
    Hyperparams hp;
    hp.batch_size = 16;
    // Negatives would need y == -128 exactly, beyond any 4-bit perceptron.
    CHECK(solve(encode_batch(net, toy.examples, hp).formula, {}, SolverConfig{}).status == SolveStatus::Unsat);

    hp.margin_rule = MarginRule::Stated;
    EncodedBatch enc = encode_batch(net, toy.examples, hp);
    const SolveResult r = solve(enc.formula, {}, SolverConfig{});
    REQUIRE(r.status == SolveStatus::Sat);
    TrainedModel model = decode_weights(r.assignment, enc.weights, enc.formula, net, hp);
    CHECK(margin_fraction(model, toy.examples) == 1.0);
}
