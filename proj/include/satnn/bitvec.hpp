#pragma once

#include "satnn/cnf.hpp"
#include "satnn/hyperparams.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace satnn {

/// Two's-complement bit-vector. bits[0] is the MSB and carries the sign:
/// value = -2^(w-1)*b[0] + sum_{i>=1} 2^(w-1-i)*b[i].
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(std::vector<Lit> bits);

    [[nodiscard]] int width() const { return static_cast<int>(bits_.size()); }
    [[nodiscard]] Lit sign() const { return bits_.front(); }
    [[nodiscard]] Lit operator[](int i) const { return bits_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const std::vector<Lit>& bits() const { return bits_; }

    /// True when every bit is a constant literal.
    [[nodiscard]] bool is_constant() const;

    friend bool operator==(const BitVec&, const BitVec&) = default;

private:
    std::vector<Lit> bits_;
};

/// Equalities an arithmetic step needs for its result to be exact.
struct SideConstraints {
    std::vector<std::pair<Lit, Lit>> equalities;

    void add(Lit a, Lit b) { equalities.emplace_back(a, b); }
    void append(const SideConstraints& other) {
        equalities.insert(equalities.end(), other.equalities.begin(), other.equalities.end());
    }
    void assert_into(CnfFormula& formula) const {
        for (auto [a, b] : equalities) formula.assert_equal(a, b);
    }
};

enum class AddMode { Signed, Unsigned };

BitVec const_bitvec(std::int64_t value, int width);

/// Decoded two's-complement value of `bv` under `assignment`.
std::int64_t decode(const BitVec& bv, const Assignment& assignment);

/// Decoded value of a fully constant bit-vector.
std::int64_t decode_constant(const BitVec& bv);

/// Ripple adder with generate/propagate terms, LSB to MSB. The side
/// constraint forbids wraparound: for signed mode the carry into the sign
/// position equals the carry out of it, for unsigned mode the carry out is 0.
std::pair<BitVec, SideConstraints> bitwise_add(CnfFormula& f, const BitVec& a, const BitVec& b, AddMode mode);

/// Two's-complement negation of `a` when `negate` holds, identity otherwise:
/// every bit XORed with `negate`, then `negate` added at the LSB.
std::pair<BitVec, SideConstraints> negate_if(CnfFormula& f, const BitVec& a, Lit negate);

/// |a| at the same width. |-2^(w-1)| is not representable, so that input
/// makes the side constraint unsatisfiable.
std::pair<BitVec, SideConstraints> conditional_negate(CnfFormula& f, const BitVec& a);

/// Sign-magnitude shift-and-add product. Result width is hp.slack_bits and
/// the side constraints bound |product| < 2^product_magnitude_bits.
std::pair<BitVec, SideConstraints> bitwise_mul(CnfFormula& f, const BitVec& a, const BitVec& b, const Hyperparams& hp);

BitVec sign_extend(const BitVec& a, int new_width);

/// Arithmetic right shift by k, sign-extended back to the original width.
BitVec drop_lsbs(const BitVec& a, int k);

/// The low `new_width` bits. Only value-preserving when the dropped high
/// bits all equal the new sign bit.
BitVec truncate_to(const BitVec& a, int new_width);

} // namespace satnn
