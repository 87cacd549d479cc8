#pragma once

#include <cstdint>
#include <vector>

#include "emqm/mat4.hpp"

namespace emqm {

// Bit-string conventions.  A string (b_1, ..., b_n) maps to the vector index
// sum_x b_x * 2^(n-x), so site x=1 is the most significant bit.  A bond x acts
// on sites (x, x+1) with periodic wrap (n, 1); its pair value is
// 2*b_x + b_{x+1}.

inline int site_shift(int n, int x) { return n - x; }

inline int bond_partner(int n, int x) { return x == n ? 1 : x + 1; }

struct BondBits {
    int x = 1;
    int sh_hi = 0; // shift of site x
    int sh_lo = 0; // shift of site x+1 (wrapped)
};

inline BondBits make_bond_bits(int n, int x) {
    return BondBits{x, site_shift(n, x), site_shift(n, bond_partner(n, x))};
}

inline std::uint32_t pair_of_word(std::uint32_t w, const BondBits& b) {
    return (((w >> b.sh_hi) & 1u) << 1) | ((w >> b.sh_lo) & 1u);
}

inline std::uint32_t with_pair(std::uint32_t w, const BondBits& b, std::uint32_t p) {
    w &= ~((1u << b.sh_hi) | (1u << b.sh_lo));
    w |= ((p >> 1) & 1u) << b.sh_hi;
    w |= (p & 1u) << b.sh_lo;
    return w;
}

inline std::uint32_t pair_of_index(std::uint32_t idx, int n, int x) {
    return pair_of_word(idx, make_bond_bits(n, x));
}

// In-place action of a 4x4 kernel on the pair of bits (x, x+1) of a length-N
// vector, without materializing the N x N operator.
inline void apply_pair_kernel(std::vector<double>& v, int n, int x, const Mat4& k) {
    const BondBits b = make_bond_bits(n, x);
    const std::uint32_t m_hi = 1u << b.sh_hi;
    const std::uint32_t m_lo = 1u << b.sh_lo;
    const std::uint32_t nn = static_cast<std::uint32_t>(v.size());
    for (std::uint32_t i = 0; i < nn; ++i) {
        if (i & (m_hi | m_lo)) continue;
        const std::uint32_t i00 = i;
        const std::uint32_t i01 = i | m_lo;
        const std::uint32_t i10 = i | m_hi;
        const std::uint32_t i11 = i | m_hi | m_lo;
        const double w0 = v[i00], w1 = v[i01], w2 = v[i10], w3 = v[i11];
        v[i00] = at(k, 0, 0) * w0 + at(k, 0, 1) * w1 + at(k, 0, 2) * w2 + at(k, 0, 3) * w3;
        v[i01] = at(k, 1, 0) * w0 + at(k, 1, 1) * w1 + at(k, 1, 2) * w2 + at(k, 1, 3) * w3;
        v[i10] = at(k, 2, 0) * w0 + at(k, 2, 1) * w1 + at(k, 2, 2) * w2 + at(k, 2, 3) * w3;
        v[i11] = at(k, 3, 0) * w0 + at(k, 3, 1) * w1 + at(k, 3, 2) * w2 + at(k, 3, 3) * w3;
    }
}

// Relabel bits (x, x+1) of every index of a label map by a pair permutation.
inline std::uint32_t relabel_pair(std::uint32_t idx, const BondBits& b, const PairPerm& p) {
    return with_pair(idx, b, p[pair_of_word(idx, b)]);
}

} // namespace emqm
