#pragma once

#include "satnn/bitvec.hpp"
#include "satnn/cnf.hpp"

#include <string>
#include <vector>

namespace satnn::testing {

inline BitVec free_bitvec(CnfFormula& f, int width, const std::string& name = "x") {
    std::vector<Lit> bits;
    for (int i = 0; i < width; ++i) bits.push_back(f.fresh_var(name + "_b" + std::to_string(i)));
    return BitVec(bits);
}

inline std::string bit_string(const BitVec& bv) {
    std::string s;
    for (Lit l : bv.bits()) s += l.is_true() ? '1' : l.is_false() ? '0' : '?';
    return s;
}

inline std::int64_t floor_div_pow2(std::int64_t v, int k) { return v >> k; }

} // namespace satnn::testing
