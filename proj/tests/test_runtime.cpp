#include "support/helpers.hpp"
#include "support/local_sat.hpp"

#include "satnn/datasets.hpp"
#include "satnn/errors.hpp"
#include "satnn/random.hpp"
#include "satnn/runtime.hpp"

#include <doctest.h>

#include <filesystem>

using namespace satnn;

namespace {

Hyperparams tiny_hp() {
    Hyperparams hp;
    hp.num_bits = 3;
    hp.slack_bits = 5;
    hp.product_magnitude_bits = 4;
    hp.cost_bits = 1;
    hp.margin_rule = MarginRule::Stated;
    return hp;
}

NetworkSpec tiny_net() {
    NetworkSpec net;
    net.input_dim = 2;
    net.hidden = {1};
    return net;
}

TrainedModel linear_model(std::vector<std::int64_t> w, std::int64_t b) {
    TrainedModel m;
    m.net.input_dim = static_cast<int>(w.size());
    m.values.layers.push_back(LayerValues{{std::move(w)}, {b}});
    return m;
}

} // namespace

TEST_CASE("infer on a linear model") {
    TrainedModel m = linear_model({2, 3, -4, -2}, 1);
    const int x[] = {1, 1, 0, 0};
    CHECK(infer(m, x).output == 6);
    const int y[] = {0, 0, 1, 1};
    CHECK(infer(m, y).output == -5);
    const int bad[] = {1, 1};
    CHECK_THROWS_AS(infer(m, bad), ShapeError);
}

TEST_CASE("infer reports overflow instead of wrapping") {
    TrainedModel m = linear_model({7, 7}, 0);
    const int ok[] = {1, 1};
    CHECK_FALSE(infer(m, ok).overflow);
    const int big[] = {7, 7}; // 98 fits in 8 slack bits
    CHECK_FALSE(infer(m, big).overflow);
    const int neg[] = {-8, 0};
    CHECK(infer(m, neg).overflow);

    m.hp.product_magnitude_bits = 5;
    const int prod[] = {7, 0};
    const auto r = infer(m, prod);
    REQUIRE(r.overflow);
    CHECK(r.overflow->reason.find("product") != std::string::npos);

    TrainedModel s = linear_model({7, 7, 7}, 0);
    const int sum[] = {7, 7, 7};
    REQUIRE(infer(s, sum).overflow);
    CHECK(infer(s, sum).overflow->reason.find("partial sum") != std::string::npos);

    TrainedModel bias = linear_model({7}, 127);
    const int one[] = {1};
    CHECK(infer(bias, one).overflow);
}

TEST_CASE("hidden units shift then clip to the weight range") {
    TrainedModel m;
    m.net.input_dim = 1;
    m.net.hidden = {1};
    m.hp.regret_bits = 1;
    m.values.layers = {LayerValues{{{7}}, {3}}, LayerValues{{{1}}, {0}}};
    const int x1[] = {1};
    CHECK(infer(m, x1).output == 5); // (7+3)>>1
    const int x3[] = {3};
    CHECK(infer(m, x3).output == 7); // 24>>1 clipped to 7
    const int xn[] = {-3};
    CHECK(infer(m, xn).output == 0);
}

TEST_CASE("satisfies_margin follows the margin rule") {
    Hyperparams hp;
    hp.cost_bits = 3;
    CHECK(satisfies_margin(8, 1, hp));
    CHECK_FALSE(satisfies_margin(7, 1, hp));
    CHECK(satisfies_margin(-121, -1, hp));
    CHECK_FALSE(satisfies_margin(-120, -1, hp));
    hp.margin_rule = MarginRule::Stated;
    CHECK(satisfies_margin(-8, -1, hp));
    CHECK_FALSE(satisfies_margin(-7, -1, hp));
}

TEST_CASE("accuracy: serial and parallel agree") {
    const Dataset ds = gen_parity(10, {0, 3, 7}, std::nullopt, 0);
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        TrainedModel m;
        m.net.input_dim = 10;
        m.net.hidden = {3};
        m.values.layers.resize(2);
        for (int n = 0; n < 3; ++n) {
            std::vector<std::int64_t> w;
            for (int i = 0; i < 10; ++i) w.push_back(static_cast<std::int64_t>(uniform_below(rng, 15)) - 7);
            m.values.layers[0].weights.push_back(w);
            m.values.layers[0].biases.push_back(static_cast<std::int64_t>(uniform_below(rng, 31)) - 15);
        }
        m.values.layers[1].weights = {{3, -2, 5}};
        m.values.layers[1].biases = {-4};
        for (auto mode : {AccuracyMode::Plain, AccuracyMode::TrainMargin})
            CHECK(accuracy(m, ds, mode) == accuracy_serial(m, ds, mode));
    }
    CHECK(accuracy(linear_model({0}, 0), Dataset{}, AccuracyMode::Plain) == 0.0);
}

TEST_CASE("accuracy modes") {
    Dataset ds;
    ds.examples = {{{1}, 1}, {{0}, -1}};
    TrainedModel m = linear_model({1}, 0);
    CHECK(accuracy(m, ds, AccuracyMode::Plain) == doctest::Approx(0.5)); // 0 >= 0 predicts +1
    m.values.layers[0].biases = {-1};
    CHECK(accuracy(m, ds, AccuracyMode::Plain) == doctest::Approx(1.0));
    m.hp.cost_bits = 1;
    CHECK(accuracy(m, ds, AccuracyMode::TrainMargin) == doctest::Approx(0.5));
    CHECK(margin_fraction(m, ds.examples) == doctest::Approx(0.0));
}

TEST_CASE("exhaustive oracle: serial and parallel agree") {
    const Hyperparams hp = tiny_hp();
    const NetworkSpec net = tiny_net();
    CHECK(weight_bit_count(net, hp) == 19);
    const std::vector<Example> batch{{{1, 0}, 1}, {{0, 1}, -1}};
    const OracleVerdict par = exhaustive_train_oracle(net, batch, hp);
    const OracleVerdict ser = exhaustive_train_oracle_serial(net, batch, hp);
    CHECK(par.sat == ser.sat);
    REQUIRE(par.witness);
    REQUIRE(ser.witness);
    CHECK(*par.witness == *ser.witness);
    CHECK(margin_fraction(*par.witness, batch) == 1.0);

    const std::vector<Example> clash{{{1, 0}, 1}, {{1, 0}, -1}};
    const OracleVerdict none = exhaustive_train_oracle(net, clash, hp);
    CHECK_FALSE(none.sat);
    CHECK(none.assignments_checked == (std::uint64_t{1} << 19));

    NetworkSpec wide = net;
    wide.input_dim = 6;
    wide.hidden = {2};
    CHECK_THROWS_AS(exhaustive_train_oracle(wide, batch, hp), ConfigError);
}

TEST_CASE("model_from_index spells bits MSB first") {
    Hyperparams hp = tiny_hp();
    NetworkSpec net;
    net.input_dim = 1;
    // bits: w (3) then b (5)
    const TrainedModel m = model_from_index(net, hp, 0b111'00011);
    CHECK(m.values.layers[0].weights[0][0] == -1);
    CHECK(m.values.layers[0].biases[0] == 3);
}

TEST_CASE("decode_weights inverts the encoding") {
    const Hyperparams hp = tiny_hp();
    const NetworkSpec net = tiny_net();
    const std::vector<Example> batch{{{1, 0}, 1}};
    EncodedBatch enc = encode_batch(net, batch, hp);
    const auto model = satnn::testing::local_solve(enc.formula, {});
    REQUIRE(model);
    const TrainedModel m = decode_weights(*model, enc.weights, enc.formula, net, hp);
    CHECK(margin_fraction(m, batch) == 1.0);
    CHECK_THROWS_AS(decode_weights(Assignment{}, enc.weights, enc.formula, net, hp), DecodeError);
}

TEST_CASE("model JSON round trip") {
    TrainedModel m;
    m.net = tiny_net();
    m.hp = tiny_hp();
    m.hp.margin_rule = MarginRule::Stated;
    m.values.layers = {LayerValues{{{1, -2}}, {3}}, LayerValues{{{-4}}, {5}}};
    m.provenance = Provenance{2, 12345678901234ULL, 1, true};
    CHECK(model_from_json(model_to_json(m)) == m);
    CHECK(model_to_json(m) == model_to_json(model_from_json(model_to_json(m))));

    const auto path = std::filesystem::temp_directory_path() / "satnn_model_rt.json";
    save_model(m, path);
    CHECK(load_model(path) == m);
    CHECK_THROWS_AS(model_from_json("{"), FormatError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), EnvironmentError);
}
