#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>

namespace emqm {

// Row-major 4x4 real matrix and length-4 vector.  Matrices act on a pair of
// bits; index p = 2*b_x + b_{x+1} labels the pair values 00,01,10,11.
using Mat4 = std::array<double, 16>;
using Vec4 = std::array<double, 4>;

inline double& at(Mat4& m, int r, int c) { return m[static_cast<size_t>(r) * 4 + c]; }
inline double at(const Mat4& m, int r, int c) { return m[static_cast<size_t>(r) * 4 + c]; }

inline Vec4 mat4_apply(const Mat4& m, const Vec4& v) {
    Vec4 out{};
    for (int r = 0; r < 4; ++r) {
        double acc = 0.0;
        for (int c = 0; c < 4; ++c) acc += at(m, r, c) * v[c];
        out[r] = acc;
    }
    return out;
}

inline Mat4 mat4_zero() { return Mat4{}; }

inline Mat4 mat4_identity() {
    Mat4 m{};
    for (int i = 0; i < 4; ++i) at(m, i, i) = 1.0;
    return m;
}

// A 4x4 permutation viewed as a map on pair values: input pair a -> sigma[a].
using PairPerm = std::array<std::uint8_t, 4>;

inline PairPerm perm_identity() { return {0, 1, 2, 3}; }

inline PairPerm perm_inverse(const PairPerm& p) {
    PairPerm inv{};
    for (std::uint8_t a = 0; a < 4; ++a) inv[p[a]] = a;
    return inv;
}

// All 24 permutations of {0,1,2,3} in lexicographic order; the position in
// this table is the index used by the checkpoint format.
inline const std::array<PairPerm, 24>& all_pair_perms() {
    static const std::array<PairPerm, 24> table = [] {
        std::array<PairPerm, 24> t{};
        PairPerm p = perm_identity();
        for (int i = 0; i < 24; ++i) {
            t[i] = p;
            std::next_permutation(p.begin(), p.end());
        }
        return t;
    }();
    return table;
}

inline int perm_rank(const PairPerm& p) {
    const auto& table = all_pair_perms();
    for (int i = 0; i < 24; ++i)
        if (table[i] == p) return i;
    throw std::logic_error("perm_rank: not a permutation of {0,1,2,3}");
}

// Permutation matrix with column a carrying a 1 at row sigma[a].
inline Mat4 perm_matrix(const PairPerm& p) {
    Mat4 m{};
    for (int a = 0; a < 4; ++a) at(m, p[a], a) = 1.0;
    return m;
}

} // namespace emqm
