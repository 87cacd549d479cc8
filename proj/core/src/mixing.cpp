#include "emqm/mixing.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace emqm {

namespace {

// Boundary-label map of the composed permutation product, advanced one layer
// toward the bulk per call: lam_{s-1}(i) = lam_s(sigma_s(i)).
void compose_layer(std::vector<std::uint32_t>& lam, const CircuitState& st, int s,
                   const std::vector<BondBits>& bonds) {
    const int per_layer = st.bricks_per_layer();
    const int x0 = st.layer_first_bond(s);
    std::vector<std::uint32_t> next(lam.size());
    for (std::uint32_t i = 0; i < lam.size(); ++i) {
        std::uint32_t j = i;
        for (int k = 0; k < per_layer; ++k) {
            const BondBits& bond = bonds[static_cast<size_t>(x0 + 2 * k - 1)];
            j = relabel_pair(j, bond, st.brick(s, k).sigma);
        }
        next[i] = lam[j];
    }
    lam.swap(next);
}

std::vector<BondBits> make_bonds(int n) {
    std::vector<BondBits> bonds;
    bonds.reserve(static_cast<size_t>(n));
    for (int x = 1; x <= n; ++x) bonds.push_back(make_bond_bits(n, x));
    return bonds;
}

} // namespace

Eigen::MatrixXd projector_px(int n, int x) {
    const int N = 1 << n;
    const double weight = 1.0 / static_cast<double>(N / 4);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            if (pair_of_index(static_cast<std::uint32_t>(i), n, x) ==
                pair_of_index(static_cast<std::uint32_t>(j), n, x))
                p(i, j) = weight;
    return p;
}

std::vector<double> apply_projector_px(int n, int x, const std::vector<double>& v) {
    const std::size_t N = 1ull << n;
    if (v.size() != N) throw std::invalid_argument("projector: dimension mismatch");
    std::vector<double> sums(4, 0.0);
    for (std::size_t i = 0; i < N; ++i)
        sums[pair_of_index(static_cast<std::uint32_t>(i), n, x)] += v[i];
    const double weight = 1.0 / static_cast<double>(N / 4);
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i)
        out[i] = weight * sums[pair_of_index(static_cast<std::uint32_t>(i), n, x)];
    return out;
}

Eigen::MatrixXd accumulate_w(const CircuitState& st) {
    const int n = st.params.n;
    const int S = st.params.depth;
    const int N = 1 << n;
    const auto bonds = make_bonds(n);
    const double weight = 1.0 / static_cast<double>(N / 4);

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(N, N);
    std::vector<std::uint32_t> lam(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) lam[static_cast<size_t>(i)] = static_cast<std::uint32_t>(i);

    std::vector<std::uint32_t> members;
    members.reserve(static_cast<size_t>(N / 4));
    for (int s = S; s >= 1; --s) {
        const int x0 = st.layer_first_bond(s);
        for (int k = 0; k < st.bricks_per_layer(); ++k) {
            const int x = x0 + 2 * k;
            for (std::uint32_t p = 0; p < 4; ++p) {
                members.clear();
                for (int i = 0; i < N; ++i)
                    if (pair_of_index(static_cast<std::uint32_t>(i), n, x) == p)
                        members.push_back(lam[static_cast<size_t>(i)]);
                for (std::uint32_t a : members)
                    for (std::uint32_t b : members) w(a, b) += weight;
            }
        }
        if (s > 1) compose_layer(lam, st, s, bonds);
    }
    return w;
}

Eigen::MatrixXd accumulate_w_tilde(const CircuitState& st) {
    const int n = st.params.n;
    const int S = st.params.depth;
    const int N = 1 << n;
    const auto bonds = make_bonds(n);
    const double weight = 1.0 / static_cast<double>(N / 4);

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd mprod = Eigen::MatrixXd::Identity(N, N); // product of full layers
    std::vector<std::uint32_t> lam(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) lam[static_cast<size_t>(i)] = static_cast<std::uint32_t>(i);

    std::vector<double> row(static_cast<size_t>(N));
    for (int s = S; s >= 1; --s) {
        const int x0 = st.layer_first_bond(s);
        for (int k = 0; k < st.bricks_per_layer(); ++k) {
            const int x = x0 + 2 * k;
            for (std::uint32_t p = 0; p < 4; ++p) {
                Eigen::VectorXd left = Eigen::VectorXd::Zero(N);
                Eigen::VectorXd right = Eigen::VectorXd::Zero(N);
                for (int i = 0; i < N; ++i)
                    if (pair_of_index(static_cast<std::uint32_t>(i), n, x) == p) {
                        left += mprod.col(i);
                        right(lam[static_cast<size_t>(i)]) += 1.0;
                    }
                w += weight * left * right.transpose();
            }
        }
        if (s > 1) {
            // append layer s on the right: each row of mprod through M_s^T
            for (int r = 0; r < N; ++r) {
                for (int i = 0; i < N; ++i) row[static_cast<size_t>(i)] = mprod(r, i);
                for (int k = 0; k < st.bricks_per_layer(); ++k) {
                    const Brick& br = st.brick(s, k);
                    Mat4 mt;
                    for (int bb = 0; bb < 4; ++bb)
                        for (int aa = 0; aa < 4; ++aa) at(mt, bb, aa) = br.entry(aa, bb);
                    apply_pair_kernel(row, n, x0 + 2 * k, mt);
                }
                for (int i = 0; i < N; ++i) mprod(r, i) = row[static_cast<size_t>(i)];
            }
            compose_layer(lam, st, s, bonds);
        }
    }
    return w;
}

double operator_norm(const Eigen::MatrixXd& a) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
}

namespace {

// First-moment tensor statistics for permutations pi sampled by `draw`:
// residual ||E[(Qp)_ij (Qp)_kl] - Pp_ik Pp_jl/(N-1)||_F with Qp = Q - J/N.
template <typename DrawPerm>
double design_residual_impl(int N, int trials, DrawPerm&& draw) {
    std::vector<double> e2(static_cast<size_t>(N) * N * N * N, 0.0);
    std::vector<double> e1(static_cast<size_t>(N) * N, 0.0);
    std::vector<std::uint32_t> pi(static_cast<size_t>(N));
    const double inc = 1.0 / static_cast<double>(trials);
    for (int t = 0; t < trials; ++t) {
        draw(pi);
        for (int j = 0; j < N; ++j) {
            e1[static_cast<size_t>(pi[static_cast<size_t>(j)]) * N + j] += inc;
            for (int l = 0; l < N; ++l) {
                const std::size_t idx =
                    ((static_cast<size_t>(pi[static_cast<size_t>(j)]) * N + j) *
                         static_cast<size_t>(N) +
                     pi[static_cast<size_t>(l)]) *
                        static_cast<size_t>(N) +
                    l;
                e2[idx] += inc;
            }
        }
    }
    const double invN = 1.0 / static_cast<double>(N);
    double acc = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k)
                for (int l = 0; l < N; ++l) {
                    const double sampled =
                        e2[((static_cast<size_t>(i) * N + j) * static_cast<size_t>(N) + k) *
                               static_cast<size_t>(N) +
                           l] -
                        invN * e1[static_cast<size_t>(i) * N + j] -
                        invN * e1[static_cast<size_t>(k) * N + l] + invN * invN;
                    const double p_ik = (i == k ? 1.0 : 0.0) - invN;
                    const double p_jl = (j == l ? 1.0 : 0.0) - invN;
                    const double target = p_ik * p_jl / static_cast<double>(N - 1);
                    const double d = sampled - target;
                    acc += d * d;
                }
    return std::sqrt(acc);
}

} // namespace

double one_design_residual(int n, int depth, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("one_design_residual: trials must be >= 1");
    const int N = 1 << n;
    const auto bonds = make_bonds(n);
    CounterRng rng(CounterRng::derive(seed, 0x31de5169u));
    auto draw = [&](std::vector<std::uint32_t>& pi) {
        for (int i = 0; i < N; ++i) pi[static_cast<size_t>(i)] = static_cast<std::uint32_t>(i);
        for (int s = 1; s <= depth; ++s) {
            const int x0 = (s % 2 == 1) ? 1 : 2;
            for (int k = 0; k < n / 2; ++k) {
                const PairPerm perm = all_pair_perms()[rng.below(24)];
                const BondBits& bond = bonds[static_cast<size_t>(x0 + 2 * k - 1)];
                for (auto& v : pi) v = relabel_pair(v, bond, perm);
            }
        }
        // identity products (depth 0) fall through unchanged
    };
    return design_residual_impl(N, trials, draw);
}

double one_design_residual_exact24() {
    int which = 0;
    auto draw = [&](std::vector<std::uint32_t>& pi) {
        const PairPerm& p = all_pair_perms()[static_cast<size_t>(which++)];
        for (int i = 0; i < 4; ++i) pi[static_cast<size_t>(i)] = p[static_cast<size_t>(i)];
    };
    return design_residual_impl(4, 24, draw);
}

MixingReport analyze_mixing(const CircuitState& st, int design_trials, std::uint64_t design_seed) {
    const int n = st.params.n;
    const int S = st.params.depth;
    const int N = 1 << n;
    const Eigen::MatrixXd w = accumulate_w(st);

    MixingReport rep;
    rep.predicted_mean = (static_cast<double>(S) * n / 2.0) * 3.0 / static_cast<double>(N - 1);
    rep.predicted_std = 4.0 * std::sqrt(static_cast<double>(S) * n / (2.0 * N));
    rep.rank_bound = std::min(2 * S * n, N);

    // orthonormal basis of the subspace orthogonal to the uniform vector
    Eigen::MatrixXd ones = Eigen::MatrixXd::Zero(N, 1);
    ones.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(N)));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(N, N);
    const Eigen::MatrixXd basis = q.rightCols(N - 1);

    const Eigen::MatrixXd wperp = basis.transpose() * w * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (wperp + wperp.transpose()));
    const Eigen::VectorXd ev = es.eigenvalues();
    rep.mean_perp_eig = ev.mean();
    rep.std_perp_eig = std::sqrt((ev.array() - rep.mean_perp_eig).square().mean());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(0.5 * (w + w.transpose()));
    const double scale = full.eigenvalues().cwiseAbs().maxCoeff();
    rep.rank = static_cast<int>(
        (full.eigenvalues().array().abs() > 1e-10 * std::max(scale, 1.0)).count());

    Eigen::MatrixXd w0 = Eigen::MatrixXd::Constant(
        N, N, (static_cast<double>(S) * n / 2.0) * (1.0 - 3.0 / (N - 1)) / N);
    w0.diagonal().array() += (static_cast<double>(S) * n / 2.0) * 3.0 / (N - 1);
    rep.w0_distance = operator_norm(w - w0);

    if (design_trials > 0)
        rep.one_design_residual = one_design_residual(n, std::max(S / 2, 1), design_trials,
                                                      design_seed);
    return rep;
}

std::vector<CommutatorRow> commutator_locality_probe(const Eigen::MatrixXd& w,
                                                     const HamiltonianSpec& spec) {
    const int n = spec.n;
    const int N = 1 << n;
    if (w.rows() != N) throw std::invalid_argument("locality probe: dimension mismatch");

    // scale so the perpendicular-subspace mean eigenvalue is 1
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);
    const double lam1 = ones.dot(w * ones) / N;
    const double mean_perp = (w.trace() - lam1) / static_cast<double>(N - 1);
    if (!(std::abs(mean_perp) > 0.0))
        throw std::invalid_argument("locality probe: degenerate mixing operator");
    const Eigen::MatrixXd ws = w / mean_perp;

    std::vector<Eigen::MatrixXd> terms;
    terms.reserve(static_cast<size_t>(n));
    for (const auto& t : spec.terms) terms.push_back(ws * embed_pair_op(t.g, n, t.site));

    std::vector<CommutatorRow> rows;
    for (int x = 1; x <= n; ++x)
        for (int y = x + 1; y <= n; ++y) {
            const int d = std::min(y - x, n - (y - x));
            if (d < 2) continue;
            const Eigen::MatrixXd c = terms[static_cast<size_t>(x - 1)] * terms[static_cast<size_t>(y - 1)] -
                                      terms[static_cast<size_t>(y - 1)] * terms[static_cast<size_t>(x - 1)];
            rows.push_back({x, y, d, operator_norm(c)});
        }
    return rows;
}

} // namespace emqm
