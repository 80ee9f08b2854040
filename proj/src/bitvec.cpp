#include "satnn/bitvec.hpp"

#include "satnn/errors.hpp"

#include <algorithm>
#include <string>

namespace satnn {

BitVec::BitVec(std::vector<Lit> bits) : bits_{std::move(bits)} {
    if (bits_.empty()) throw ShapeError("bit-vector width must be at least 1");
}

bool BitVec::is_constant() const {
    return std::all_of(bits_.begin(), bits_.end(), [](Lit l) { return l.is_constant(); });
}

BitVec const_bitvec(std::int64_t value, int width) {
    if (width < 1 || width > 62) throw ShapeError("constant width must lie in [1, 62], got " + std::to_string(width));
    const std::int64_t lo = -(std::int64_t{1} << (width - 1));
    const std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1;
    if (value < lo || value > hi)
        throw RangeError(std::to_string(value) + " does not fit in " + std::to_string(width) + " signed bits");
    const auto pattern = static_cast<std::uint64_t>(value);
    std::vector<Lit> bits(static_cast<std::size_t>(width));
    for (int i = 0; i < width; ++i) {
        const int shift = width - 1 - i;
        bits[static_cast<std::size_t>(i)] = Lit::constant(((pattern >> shift) & 1U) != 0);
    }
    return BitVec{std::move(bits)};
}

namespace {

template <typename BitValue>
std::int64_t decode_with(const BitVec& bv, BitValue&& bit) {
    const int w = bv.width();
    std::int64_t value = bit(bv[0]) ? -(std::int64_t{1} << (w - 1)) : 0;
    for (int i = 1; i < w; ++i)
        if (bit(bv[i])) value += std::int64_t{1} << (w - 1 - i);
    return value;
}

void require_same_width(const BitVec& a, const BitVec& b, const char* op) {
    if (a.width() != b.width())
        throw ShapeError(std::string(op) + ": width mismatch " + std::to_string(a.width()) + " vs " +
                         std::to_string(b.width()));
}

} // namespace

std::int64_t decode(const BitVec& bv, const Assignment& assignment) {
    return decode_with(bv, [&](Lit l) { return assignment.value(l); });
}

std::int64_t decode_constant(const BitVec& bv) {
    return decode_with(bv, [](Lit l) {
        if (!l.is_constant()) throw DecodeError("bit-vector is not constant");
        return l.is_true();
    });
}

std::pair<BitVec, SideConstraints> bitwise_add(CnfFormula& f, const BitVec& a, const BitVec& b, AddMode mode) {
    require_same_width(a, b, "bitwise_add");
    const int n = a.width();
    std::vector<Lit> sum(static_cast<std::size_t>(n));
    Lit carry = kFalse;
    Lit carry_prev = kFalse;
    for (int i = n - 1; i >= 0; --i) {
        carry_prev = carry;
        const Lit g = f.emit_and(a[i], b[i]);
        const Lit p = f.emit_or(a[i], b[i]);
        sum[static_cast<std::size_t>(i)] = f.emit_xor(f.emit_xor(g, p), carry_prev);
        carry = f.emit_or(g, f.emit_and(p, carry_prev));
    }
    SideConstraints sc;
    if (mode == AddMode::Signed)
        sc.add(carry, carry_prev);
    else
        sc.add(carry, kFalse);
    return {BitVec{std::move(sum)}, std::move(sc)};
}

std::pair<BitVec, SideConstraints> negate_if(CnfFormula& f, const BitVec& a, Lit negate) {
    const int n = a.width();
    std::vector<Lit> flipped(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) flipped[static_cast<std::size_t>(i)] = f.emit_xor(a[i], negate);
    std::vector<Lit> lsb(static_cast<std::size_t>(n), kFalse);
    lsb.back() = negate;
    return bitwise_add(f, BitVec{std::move(flipped)}, BitVec{std::move(lsb)}, AddMode::Signed);
}

std::pair<BitVec, SideConstraints> conditional_negate(CnfFormula& f, const BitVec& a) {
    return negate_if(f, a, a.sign());
}

std::pair<BitVec, SideConstraints> bitwise_mul(CnfFormula& f, const BitVec& a, const BitVec& b, const Hyperparams& hp) {
    const int n = hp.num_bits;
    const int slack = hp.slack_bits;
    if (a.width() != n || b.width() != n)
        throw ShapeError("bitwise_mul: operands must be num_bits=" + std::to_string(n) + " wide, got " +
                         std::to_string(a.width()) + " and " + std::to_string(b.width()));
    if (hp.product_magnitude_bits >= slack)
        throw ConfigError("product_magnitude_bits must be below slack_bits");
    if (slack < 2 * n - 1) throw ConfigError("slack_bits must be at least 2*num_bits-1");

    SideConstraints sc;
    auto [a_mag, sc_a] = conditional_negate(f, a);
    auto [b_mag, sc_b] = conditional_negate(f, b);
    sc.append(sc_a);
    sc.append(sc_b);

    BitVec product = const_bitvec(0, slack);
    // Multiplier bit i carries weight 2^(n-1-i); its partial product is
    // b_mag shifted left by that amount inside the slack-wide accumulator.
    for (int i = n - 1; i >= 0; --i) {
        if (a_mag[i].is_false()) continue;
        const int shift = n - 1 - i;
        std::vector<Lit> partial(static_cast<std::size_t>(slack), kFalse);
        for (int j = 0; j < n; ++j) {
            const int pos = slack - 1 - (n - 1 - j) - shift;
            partial[static_cast<std::size_t>(pos)] = f.emit_and(b_mag[j], a_mag[i]);
        }
        auto [next, sc_add] = bitwise_add(f, product, BitVec{std::move(partial)}, AddMode::Unsigned);
        product = std::move(next);
        sc.append(sc_add);
    }
    for (int i = 0; i < slack - hp.product_magnitude_bits; ++i) sc.add(product[i], kFalse);

    const Lit product_sign = f.emit_xor(a.sign(), b.sign());
    auto [signed_product, sc_neg] = negate_if(f, product, product_sign);
    sc.append(sc_neg);
    return {std::move(signed_product), std::move(sc)};
}

BitVec sign_extend(const BitVec& a, int new_width) {
    if (new_width < a.width())
        throw ShapeError("sign_extend: target width " + std::to_string(new_width) + " is below " +
                         std::to_string(a.width()));
    std::vector<Lit> bits(static_cast<std::size_t>(new_width - a.width()), a.sign());
    bits.insert(bits.end(), a.bits().begin(), a.bits().end());
    return BitVec{std::move(bits)};
}

BitVec drop_lsbs(const BitVec& a, int k) {
    if (k < 0 || k >= a.width())
        throw ShapeError("drop_lsbs: k=" + std::to_string(k) + " out of range for width " + std::to_string(a.width()));
    std::vector<Lit> kept(a.bits().begin(), a.bits().end() - k);
    return sign_extend(BitVec{std::move(kept)}, a.width());
}

BitVec truncate_to(const BitVec& a, int new_width) {
    if (new_width < 1 || new_width > a.width())
        throw ShapeError("truncate_to: width " + std::to_string(new_width) + " out of range");
    return BitVec{std::vector<Lit>(a.bits().end() - new_width, a.bits().end())};
}

} // namespace satnn
