#pragma once

#include <cstdint>
#include <vector>

#include "emqm/circuit.hpp"
#include "emqm/mat4.hpp"
#include "emqm/rng.hpp"

namespace emqm {

// Counts of boundary bit-string pairs (b_plus, b_minus) drawn for one flavor
// over a batch of delta_jump raw steps; entries sum to delta_jump exactly.
struct BetaCounts {
    int gamma = 1;
    int n = 2;
    std::vector<std::int64_t> counts; // N x N row-major, (b_plus, b_minus)

    std::int64_t& operator()(std::uint32_t bp, std::uint32_t bm) {
        return counts[static_cast<size_t>(bp) * (1u << n) + bm];
    }
    std::int64_t operator()(std::uint32_t bp, std::uint32_t bm) const {
        return counts[static_cast<size_t>(bp) * (1u << n) + bm];
    }
    std::int64_t total() const;
};

// Conditional distribution p(e | b_minus) for one brick, with the entries the
// repair loop freed marked in free_mask.
struct RepairTable {
    Mat4 p{};                         // p(e|bm) at row e, column bm
    std::array<bool, 16> free_mask{}; // same layout as p
    int iterations = 0;
};

struct RepairInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// How the pair categories are weighted.  `joint` keeps the correlation of
// b_plus and b_minus through the shared boundary string (matches the exact
// sampler with frozen bricks); `product` treats the two as independent with
// the outer-product matrix (B^{(+gamma)} P) (x) (B^{(-gamma)} P).
enum class PairMode { joint, product };

// Multinomial draw of delta_jump trials over the N^2 pair categories.
BetaCounts boundary_pair_counts(const std::vector<double>& p_boundary, const Model& model,
                                std::int64_t delta_jump, int gamma, CounterRng& rng,
                                PairMode mode = PairMode::joint);

// beta_s = Q_s^T beta_{s+1} Q_s as an exact label relabeling by one layer.
void conjugate_backpropagate(BetaCounts& beta, const CircuitState& st, int layer);

// Marginalize both indices onto the pair of bits at bond x.
std::array<std::int64_t, 16> localize_counts(const BetaCounts& beta, int x);

// Zero the negative entries of M = Q + m + update(p) by freeing entries of p,
// resolving the <=12-unknown linear system each round.  local_counts holds the
// per-flavor 4x4 counts (gamma = 1, 2).
RepairTable repair_conditional(const Brick& brick, const std::array<std::array<std::int64_t, 16>, 2>& local_counts,
                               double delta_m);

// Advance the slow variables by delta_jump raw steps in one batch.
void jump(const Model& model, CircuitState& st, std::int64_t delta_jump,
          std::vector<int>* repair_iterations = nullptr, PairMode mode = PairMode::joint);

// Largest batch keeping the batching error subdominant; at least 1.
std::int64_t max_jump(const ModelParams& params, double epsilon0, double epsilon_j,
                      double emergent_dt);

} // namespace emqm
