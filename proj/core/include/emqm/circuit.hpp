#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emqm/bits.hpp"
#include "emqm/hamiltonian.hpp"
#include "emqm/mat4.hpp"
#include "emqm/rng.hpp"

namespace emqm {

struct ModelParams {
    int n = 4;         // boundary sites (even)
    int depth = 64;    // S, length of the extra dimension
    double delta_t = 0.1;  // raw step used by the boundary kernels
    double m0 = 1e-3;      // perturbation scale of each brick
    double delta_m = 1e-6; // per-event perturbation step
    std::uint64_t seed = 1;
};

// How the brick perturbations are drawn at tau = 0.  Every policy produces
// column sums of exactly zero and a nonnegative stochastic M = Q + m.
//   folded:  off-permutation entries |N(0, m0)|, permutation entry balances.
//   clipped: N(0, m0) per entry, column-centered, negatives clipped onto the
//            permutation entry.
//   scaled_quarter: like clipped but with per-entry sigma m0/4.
enum class InitPolicy { folded, clipped, scaled_quarter };

void validate_params(const ModelParams& p);

// One brick of the circuit: M = Q + m with Q the permutation sigma.
struct Brick {
    PairPerm sigma{};     // forward pair map
    PairPerm sigma_inv{}; // backward pair map
    Mat4 m{};             // row-major, M(b,a) = [b == sigma[a]] + m(b,a)
    double entry(int b, int a) const {
        return (sigma[static_cast<size_t>(a)] == b ? 1.0 : 0.0) + at(m, b, a);
    }
};

// Backward-bit flavors, in the fixed draw order.
inline constexpr int kFlavors = 4; // +1, -1, +2, -2
inline int flavor_index(int gamma, bool plus) { return 2 * (gamma - 1) + (plus ? 0 : 1); }

struct CircuitState {
    ModelParams params;
    std::uint64_t stream_key = 0; // per-realization RNG stream
    std::int64_t tau = 0;

    // bricks laid out layer-major: layer s = 1..S, n/2 bricks per layer
    std::vector<Brick> bricks;

    // forward bits, rows s = 0..S packed into one word per row (site x at
    // shift n - x); backward planes indexed by flavor, rows 1..S used
    std::vector<std::uint32_t> forward;
    std::array<std::vector<std::uint32_t>, kFlavors> backward;
    std::uint32_t boundary_prev = 0; // a_S before the latest forward update

    int bricks_per_layer() const { return params.n / 2; }
    int layer_first_bond(int s) const { return (s % 2 == 1) ? 1 : 2; }
    Brick& brick(int s, int k) {
        return bricks[static_cast<size_t>(s - 1) * bricks_per_layer() + k];
    }
    const Brick& brick(int s, int k) const {
        return bricks[static_cast<size_t>(s - 1) * bricks_per_layer() + k];
    }
};

// Static per-run tables shared by all realizations of one model.
struct Model {
    ModelParams params;
    HamiltonianSpec spec;
    std::vector<BoundaryKernel> kernels;
    std::vector<BondBits> bonds; // index x-1

    static Model build(const ModelParams& params, const HamiltonianSpec& spec);
};

CircuitState init_state(const Model& model, std::uint64_t realization = 0,
                        InitPolicy policy = InitPolicy::folded);

// The four phases of one synchronous time step; step() composes them with
// the bookkeeping that keeps every update conditioned on tau-1 values.
void forward_sample(const Model& model, CircuitState& st, CounterRng& rng);
void sample_boundary_feedback(const Model& model, CircuitState& st, CounterRng& rng,
                              std::array<std::uint32_t, kFlavors>& staged);
void backpropagate_bits(const Model& model, CircuitState& st,
                        const std::array<std::uint32_t, kFlavors>& staged);
void apply_feedback_update(const Model& model, CircuitState& st, CounterRng& rng);

void step(const Model& model, CircuitState& st);

// Exact boundary distribution: the uniform vector pushed through all layers.
std::vector<double> boundary_distribution(const CircuitState& st);

// Normalized perturbation direction (P - u)/||P - u||; second value is the
// perturbation norm.  Throws std::domain_error when P is exactly uniform.
std::pair<std::vector<double>, double> emergent_wavefunction(const CircuitState& st);
std::pair<std::vector<double>, double> emergent_wavefunction(const std::vector<double>& p);

// Checkpoint: exact text round-trip of params, permutations (rank 0..23),
// perturbations (hexfloat), bit planes, tau, and the RNG stream key.
void save_checkpoint(std::ostream& out, const CircuitState& st);
CircuitState load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const CircuitState& st);
CircuitState load_checkpoint_file(const std::string& path);

// M column sums == 1 and entries >= 0 for every brick; throws on breach.
void check_stochasticity(const CircuitState& st, double tol = 1e-12);

} // namespace emqm
