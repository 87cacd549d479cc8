#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "emqm/mat4.hpp"

namespace emqm {

// One bond term of the generator G_x = -iH_x: a real antisymmetric 4x4 matrix
// with zero row and column sums, acting on sites (x, x+1), periodic wrap.
struct LocalTerm {
    int site = 1;
    Mat4 g{};
};

struct HamiltonianSpec {
    int n = 2;
    std::vector<LocalTerm> terms; // exactly n terms, terms[x-1].site == x
};

struct ValidationReport {
    bool pass = true;
    double max_residual = 0.0;
    std::vector<std::string> violations;
};

// Pair of column-stochastic 4x4 kernels with b_plus - b_minus = delta_t * g.
struct BoundaryKernel {
    int site = 1;
    double delta_t = 0.0;
    Mat4 b_plus{};
    Mat4 b_minus{};
};

ValidationReport validate_local_term(const Mat4& g, double tol = 1e-12);

// Entrywise sign split: g = g_plus - g_minus, both nonnegative, disjoint support.
std::pair<Mat4, Mat4> split_signed(const Mat4& g);

// Column sums of the nonnegative part; equal for g_plus and g_minus.
Vec4 column_sums(const Mat4& g_part);

// Throws std::domain_error if delta_t makes any kernel entry negative.
BoundaryKernel build_boundary_kernel(const LocalTerm& term, double delta_t);

std::vector<BoundaryKernel> build_kernels(const HamiltonianSpec& spec, double delta_t);

enum class LayerParity { odd, even };
enum class KernelSign { plus, minus };

// Apply the depth-1 boundary circuit for one parity/sign to a length-N vector.
std::vector<double> apply_boundary_layer(const std::vector<BoundaryKernel>& kernels, int n,
                                         LayerParity parity, KernelSign sign,
                                         const std::vector<double>& v);

// Named built-in specs; "yx-y" is H_x = Y_x X_{x+1} - Y_x on every bond.
HamiltonianSpec make_named_spec(const std::string& name, int n);

// Plain-text format: header "n <int>", then lines "term <x> <16 reals row-major>".
// Bonds without a term line get the zero generator.
HamiltonianSpec parse_spec(std::istream& in);
HamiltonianSpec load_spec_file(const std::string& path);
void write_spec(std::ostream& out, const HamiltonianSpec& spec);

void validate_spec(const HamiltonianSpec& spec); // throws on violation

// Dense N x N assembly of G = sum_x G_x (tests and reference dynamics).
Eigen::MatrixXd assemble_dense(const HamiltonianSpec& spec);
Eigen::MatrixXd embed_pair_op(const Mat4& op, int n, int x);

// ---- mappings from generic complex Hamiltonians to real zero-sum form ----

// 2-qubit Hermitian term -> 8x8 real antisymmetric generator on the term's
// two qubits plus one auxiliary qubit (appended as least significant).
// Zero sums are not yet enforced; compose with zero_sum_extend_operator.
Eigen::MatrixXd realify_operator(const Eigen::Matrix4cd& h);

// psi -> (psi (x) |-i>^aux + conj(psi) (x) |+i>^aux)/sqrt(2); real, normalized.
Eigen::VectorXd realify_state(const Eigen::VectorXcd& psi, int aux_qubits = 1);

// op -> op (x) |-><-|, state -> state (x) |->^k; exact zero row/column sums.
Eigen::MatrixXd zero_sum_extend_operator(const Eigen::MatrixXd& op);
Eigen::VectorXd zero_sum_extend_state(const Eigen::VectorXd& v, int qubits = 1);

// Convenience pipeline: complex Hermitian term -> real -> zero-sum, 16x16.
Eigen::MatrixXd map_local_term(const Eigen::Matrix4cd& h);

} // namespace emqm
