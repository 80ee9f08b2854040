#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace satnn {

/// How the output margin for negative labels is encoded.
/// Literal: sign set and bits 1..n-cost_bits-1 clear, i.e.
///   y <= -2^(n-1) + 2^cost_bits - 1.
/// Stated: y <= -2^cost_bits, the mirror image of the positive margin.
enum class MarginRule { Literal, Stated };

const char* to_string(MarginRule r);
MarginRule parse_margin_rule(std::string_view s);

/// Widths and counts that govern every encoding.
struct Hyperparams {
    int num_bits = 4;
    int slack_bits = 8;
    int regret_bits = 0;
    int cost_bits = 0;
    int product_magnitude_bits = 7;
    int alpha = 2;
    int batch_size = 30;
    int num_batches = 1;
    MarginRule margin_rule = MarginRule::Literal;

    /// Throws ConfigError naming the first violated bound.
    void validate() const;

    [[nodiscard]] std::int64_t weight_min() const { return -(std::int64_t{1} << (num_bits - 1)); }
    [[nodiscard]] std::int64_t weight_max() const { return (std::int64_t{1} << (num_bits - 1)) - 1; }
    [[nodiscard]] std::int64_t slack_min() const { return -(std::int64_t{1} << (slack_bits - 1)); }
    [[nodiscard]] std::int64_t slack_max() const { return (std::int64_t{1} << (slack_bits - 1)) - 1; }

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

} // namespace satnn
