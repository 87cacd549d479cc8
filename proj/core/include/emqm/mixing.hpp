#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "emqm/circuit.hpp"
#include "emqm/hamiltonian.hpp"

namespace emqm {

// Spectral summary of the mixing operator in the subspace orthogonal to the
// uniform vector, against the deep-circuit predictions.
struct MixingReport {
    double mean_perp_eig = 0.0;
    double std_perp_eig = 0.0;
    double predicted_mean = 0.0; // (S*n/2) * 3/(N-1)
    double predicted_std = 0.0;  // 4*sqrt(S*n/(2N))
    double one_design_residual = 0.0;
    double w0_distance = 0.0; // ||W - W0||_op
    int rank = 0;
    int rank_bound = 0; // min(2*S*n, N)
};

// Projector that keeps bits (x, x+1) and averages all others.
Eigen::MatrixXd projector_px(int n, int x);
std::vector<double> apply_projector_px(int n, int x, const std::vector<double>& v);

// Sum of projectors conjugated by the permutation products of the circuit,
// accumulated through composed label maps rather than dense matrix chains.
Eigen::MatrixXd accumulate_w(const CircuitState& st);

// Same sum with the left factor replaced by the product of full stochastic
// layers; equals accumulate_w exactly when all perturbations vanish.
Eigen::MatrixXd accumulate_w_tilde(const CircuitState& st);

double operator_norm(const Eigen::MatrixXd& a);

// Frobenius distance between the averaged first-moment tensor of sampled
// brickwork permutation products and the Haar closed form.  depth = number of
// brickwork layers composed per sample.
double one_design_residual(int n, int depth, int trials, std::uint64_t seed);

// Exact average over all 24 permutation matrices at N = 4.
double one_design_residual_exact24();

MixingReport analyze_mixing(const CircuitState& st, int design_trials = 0,
                            std::uint64_t design_seed = 1);

struct CommutatorRow {
    int x = 0;
    int y = 0;
    int dist = 0;
    double comm_norm = 0.0;
};

// Operator norms of [W*H_x, W*H_y] for ring-distant bonds, with W scaled so
// its perpendicular-subspace mean eigenvalue is 1.
std::vector<CommutatorRow> commutator_locality_probe(const Eigen::MatrixXd& w,
                                                     const HamiltonianSpec& spec);

} // namespace emqm
