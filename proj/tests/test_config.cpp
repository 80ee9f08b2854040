#include "satnn/config.hpp"
#include "satnn/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace satnn;

TEST_CASE("parse_config") {
    const auto kv = parse_config("# widths\nnum_bits = 3\n\n  slack_bits=6  # inline\nnum_bits = 5\n");
    CHECK(kv.size() == 2);
    CHECK(kv.at("num_bits") == "5");
    CHECK(kv.at("slack_bits") == "6");
    CHECK(parse_config("").empty());
    CHECK_THROWS_AS(parse_config("num_bits 3\n"), FormatError);
    CHECK_THROWS_AS(parse_config(" = 3\n"), FormatError);
    try {
        parse_config("a = 1\nbroken\n");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("set_hyperparam") {
    Hyperparams hp;
    CHECK(set_hyperparam(hp, "num_bits", "3"));
    CHECK(set_hyperparam(hp, "product_magnitude_bits", "4"));
    CHECK(set_hyperparam(hp, "margin_rule", "stated"));
    CHECK(hp.num_bits == 3);
    CHECK(hp.product_magnitude_bits == 4);
    CHECK(hp.margin_rule == MarginRule::Stated);
    CHECK_FALSE(set_hyperparam(hp, "colour", "red"));
    CHECK_THROWS_AS(set_hyperparam(hp, "slack_bits", "eight"), ConfigError);
    CHECK_THROWS_AS(set_hyperparam(hp, "slack_bits", "8x"), ConfigError);
    CHECK_THROWS_AS(set_hyperparam(hp, "margin_rule", "loose"), ConfigError);
}

TEST_CASE("load_config") {
    const auto path = std::filesystem::temp_directory_path() / "satnn_cfg_test.conf";
    std::ofstream(path) << "cost_bits = 2\n";
    CHECK(load_config(path).at("cost_bits") == "2");
    CHECK_THROWS_AS(load_config("/nonexistent/x.conf"), EnvironmentError);
}
