#include "emqm/fastsim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace emqm {

namespace {

constexpr std::uint64_t kJumpSalt = 0x4a554d505f544147ULL;

std::uint64_t jump_key(std::uint64_t stream, std::int64_t tau) {
    return CounterRng::derive(CounterRng::derive(stream, kJumpSalt),
                              static_cast<std::uint64_t>(tau));
}

// Sequential conditional binomials over flattened categories.
void multinomial_draw(const std::vector<double>& probs, std::int64_t trials,
                      CounterRng& rng, std::vector<std::int64_t>& out) {
    out.assign(probs.size(), 0);
    double remaining_mass = 0.0;
    for (double p : probs) remaining_mass += p;
    std::int64_t remaining = trials;
    std::binomial_distribution<std::int64_t> binom;
    for (std::size_t i = 0; i + 1 < probs.size() && remaining > 0; ++i) {
        if (probs[i] <= 0.0) continue;
        double frac = probs[i] / remaining_mass;
        frac = std::min(1.0, std::max(0.0, frac));
        std::int64_t d;
        if (frac >= 1.0) {
            d = remaining;
        } else {
            d = binom(rng, std::binomial_distribution<std::int64_t>::param_type(remaining, frac));
        }
        out[i] = d;
        remaining -= d;
        remaining_mass -= probs[i];
        if (remaining_mass <= 0.0) break;
    }
    if (remaining > 0) out.back() += remaining;
}

LayerParity gamma_parity(int gamma) { return gamma == 1 ? LayerParity::odd : LayerParity::even; }

// u(b,e) = dm * sum_gamma [ sum_bm C(b,bm) p(e|bm) - p(e|b) c(b) ]
Mat4 batched_update(const std::array<std::array<double, 16>, 2>& counts,
                    const std::array<Vec4, 2>& col_marginals, const Mat4& p, double dm) {
    Mat4 u{};
    for (int g = 0; g < 2; ++g)
        for (int b = 0; b < 4; ++b)
            for (int e = 0; e < 4; ++e) {
                double gain = 0.0;
                for (int bm = 0; bm < 4; ++bm)
                    gain += counts[static_cast<size_t>(g)][static_cast<size_t>(b) * 4 + bm] *
                            at(p, e, bm);
                const double loss = at(p, e, b) * col_marginals[static_cast<size_t>(g)][static_cast<size_t>(b)];
                at(u, b, e) += dm * (gain - loss);
            }
    return u;
}

Mat4 uniform_conditional() {
    Mat4 p;
    p.fill(0.25);
    return p;
}

} // namespace

std::int64_t BetaCounts::total() const {
    std::int64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

BetaCounts boundary_pair_counts(const std::vector<double>& p_boundary, const Model& model,
                                std::int64_t delta_jump, int gamma, CounterRng& rng,
                                PairMode mode) {
    if (delta_jump < 1) throw std::invalid_argument("pair counts: delta_jump must be >= 1");
    const int n = model.params.n;
    const std::size_t N = 1ull << n;
    if (p_boundary.size() != N) throw std::invalid_argument("pair counts: dimension mismatch");

    std::vector<double> probs(N * N, 0.0);
    if (mode == PairMode::product) {
        const auto plus = apply_boundary_layer(model.kernels, n, gamma_parity(gamma),
                                               KernelSign::plus, p_boundary);
        const auto minus = apply_boundary_layer(model.kernels, n, gamma_parity(gamma),
                                                KernelSign::minus, p_boundary);
        for (std::size_t bp = 0; bp < N; ++bp)
            for (std::size_t bm = 0; bm < N; ++bm) probs[bp * N + bm] = plus[bp] * minus[bm];
    } else {
        // joint over the shared boundary string: sum_a (B+ e_a)(B- e_a) P(a)
        std::vector<double> basis(N, 0.0);
        for (std::size_t a = 0; a < N; ++a) {
            if (p_boundary[a] <= 0.0) continue;
            basis.assign(N, 0.0);
            basis[a] = 1.0;
            const auto plus = apply_boundary_layer(model.kernels, n, gamma_parity(gamma),
                                                   KernelSign::plus, basis);
            const auto minus = apply_boundary_layer(model.kernels, n, gamma_parity(gamma),
                                                    KernelSign::minus, basis);
            const double w = p_boundary[a];
            for (std::size_t bp = 0; bp < N; ++bp) {
                if (plus[bp] == 0.0) continue;
                const double wp = w * plus[bp];
                for (std::size_t bm = 0; bm < N; ++bm) probs[bp * N + bm] += wp * minus[bm];
            }
        }
    }

    BetaCounts beta;
    beta.gamma = gamma;
    beta.n = n;
    multinomial_draw(probs, delta_jump, rng, beta.counts);
    return beta;
}

void conjugate_backpropagate(BetaCounts& beta, const CircuitState& st, int layer) {
    const int n = st.params.n;
    const std::size_t N = 1ull << n;
    std::vector<std::uint32_t> sig(N);
    const int x0 = st.layer_first_bond(layer);
    for (std::uint32_t i = 0; i < N; ++i) {
        std::uint32_t j = i;
        for (int k = 0; k < st.bricks_per_layer(); ++k) {
            const BondBits bond = make_bond_bits(n, x0 + 2 * k);
            j = relabel_pair(j, bond, st.brick(layer, k).sigma);
        }
        sig[i] = j;
    }
    std::vector<std::int64_t> next(N * N);
    for (std::uint32_t i = 0; i < N; ++i)
        for (std::uint32_t j = 0; j < N; ++j)
            next[static_cast<size_t>(i) * N + j] = beta.counts[static_cast<size_t>(sig[i]) * N + sig[j]];
    beta.counts.swap(next);
}

std::array<std::int64_t, 16> localize_counts(const BetaCounts& beta, int x) {
    const int n = beta.n;
    const std::size_t N = 1ull << n;
    std::array<std::int64_t, 16> loc{};
    std::vector<std::uint32_t> pair(N);
    for (std::uint32_t i = 0; i < N; ++i) pair[i] = pair_of_index(i, n, x);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            loc[static_cast<size_t>(pair[i]) * 4 + pair[j]] += beta.counts[i * N + j];
    return loc;
}

RepairTable repair_conditional(const Brick& brick,
                               const std::array<std::array<std::int64_t, 16>, 2>& local_counts,
                               double delta_m) {
    std::array<std::array<double, 16>, 2> counts{};
    std::array<Vec4, 2> col_marg{};
    double total = 0.0;
    for (int g = 0; g < 2; ++g)
        for (int b = 0; b < 4; ++b)
            for (int bm = 0; bm < 4; ++bm) {
                const double c = static_cast<double>(
                    local_counts[static_cast<size_t>(g)][static_cast<size_t>(b) * 4 + bm]);
                counts[static_cast<size_t>(g)][static_cast<size_t>(b) * 4 + bm] = c;
                col_marg[static_cast<size_t>(g)][static_cast<size_t>(bm)] += c;
                total += c;
            }
    const double snap_tol = 1e-13 * std::max(1.0, delta_m * total);

    RepairTable table;
    table.p = uniform_conditional();

    std::vector<std::pair<int, int>> marked; // (b, e) pinned at zero
    std::array<int, 4> free_in_col{};

    for (int iter = 0; iter <= 12; ++iter) {
        const Mat4 u = batched_update(counts, col_marg, table.p, delta_m);
        std::vector<std::pair<double, std::pair<int, int>>> negatives;
        for (int b = 0; b < 4; ++b)
            for (int e = 0; e < 4; ++e) {
                const double v = brick.entry(b, e) + at(u, b, e);
                if (v < -snap_tol &&
                    !table.free_mask[static_cast<size_t>(e) * 4 + b])
                    negatives.push_back({v, {b, e}});
            }
        if (negatives.empty()) {
            table.iterations = iter;
            return table;
        }
        if (iter == 12) break;
        std::sort(negatives.begin(), negatives.end()); // most negative first
        for (const auto& [v, be] : negatives) {
            const auto [b, e] = be;
            if (free_in_col[static_cast<size_t>(b)] >= 3)
                throw RepairInfeasible("repair: column already has three free entries");
            table.free_mask[static_cast<size_t>(e) * 4 + b] = true;
            ++free_in_col[static_cast<size_t>(b)];
            marked.push_back({b, e});
        }

        // p(e|bm) = base + sum_f x_f * dir_f; unknowns are the freed entries
        const int k = static_cast<int>(marked.size());
        auto fill_base = [&](Mat4& base) {
            base = Mat4{};
            for (int bm = 0; bm < 4; ++bm) {
                const double share = 1.0 / (4 - free_in_col[static_cast<size_t>(bm)]);
                for (int e = 0; e < 4; ++e)
                    if (!table.free_mask[static_cast<size_t>(e) * 4 + bm]) at(base, e, bm) = share;
            }
        };
        Mat4 p_base;
        fill_base(p_base);

        Eigen::MatrixXd sys(k, k);
        Eigen::VectorXd rhs(k);
        const Mat4 u_base = batched_update(counts, col_marg, p_base, delta_m);
        for (int i = 0; i < k; ++i) {
            const auto [bi, ei] = marked[static_cast<size_t>(i)];
            rhs(i) = -(brick.entry(bi, ei) + at(u_base, bi, ei));
        }
        for (int f = 0; f < k; ++f) {
            const auto [bf, ef] = marked[static_cast<size_t>(f)];
            Mat4 dir{};
            at(dir, ef, bf) = 1.0;
            const double share = -1.0 / (4 - free_in_col[static_cast<size_t>(bf)]);
            for (int e = 0; e < 4; ++e)
                if (!table.free_mask[static_cast<size_t>(e) * 4 + bf]) at(dir, e, bf) = share;
            const Mat4 du = batched_update(counts, col_marg, dir, delta_m);
            for (int i = 0; i < k; ++i) {
                const auto [bi, ei] = marked[static_cast<size_t>(i)];
                sys(i, f) = at(du, bi, ei);
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
        if (!lu.isInvertible()) throw RepairInfeasible("repair: singular system");
        const Eigen::VectorXd x = lu.solve(rhs);

        std::array<double, 4> freed_mass{};
        for (int f = 0; f < k; ++f) {
            if (!(x(f) > -1e-12) || !(x(f) < 1.0 + 1e-12))
                throw RepairInfeasible("repair: solution leaves probability simplex");
            const auto [bf, ef] = marked[static_cast<size_t>(f)];
            freed_mass[static_cast<size_t>(bf)] += x(f);
        }
        for (int bm = 0; bm < 4; ++bm)
            if (freed_mass[static_cast<size_t>(bm)] > 1.0 + 1e-12)
                throw RepairInfeasible("repair: column mass exceeds one");

        fill_base(table.p);
        for (int f = 0; f < k; ++f) {
            const auto [bf, ef] = marked[static_cast<size_t>(f)];
            at(table.p, ef, bf) = std::max(x(f), 0.0);
        }
        for (int bm = 0; bm < 4; ++bm) {
            const int nfree = 4 - free_in_col[static_cast<size_t>(bm)];
            const double share =
                (1.0 - freed_mass[static_cast<size_t>(bm)]) / static_cast<double>(nfree);
            for (int e = 0; e < 4; ++e)
                if (!table.free_mask[static_cast<size_t>(e) * 4 + bm])
                    at(table.p, e, bm) = std::max(share, 0.0);
        }
    }
    throw RepairInfeasible("repair: did not converge within 12 rounds");
}

void jump(const Model& model, CircuitState& st, std::int64_t delta_jump,
          std::vector<int>* repair_iterations, PairMode mode) {
    if (delta_jump < 1) throw std::invalid_argument("jump: delta_jump must be >= 1");
    const int n = st.params.n;
    const int S = st.params.depth;
    const std::size_t N = 1ull << n;
    const double dm = st.params.delta_m;

    const std::vector<double> p_boundary = boundary_distribution(st);
    CounterRng rng(jump_key(st.stream_key, st.tau));

    std::array<BetaCounts, 2> beta = {
        boundary_pair_counts(p_boundary, model, delta_jump, 1, rng, mode),
        boundary_pair_counts(p_boundary, model, delta_jump, 2, rng, mode),
    };

    // boundary-string marginals; layer-s marginals are gathers through lam
    std::array<std::vector<double>, 2> row_marg, col_marg;
    for (int g = 0; g < 2; ++g) {
        row_marg[static_cast<size_t>(g)].assign(N, 0.0);
        col_marg[static_cast<size_t>(g)].assign(N, 0.0);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                const double c = static_cast<double>(beta[static_cast<size_t>(g)].counts[i * N + j]);
                row_marg[static_cast<size_t>(g)][i] += c;
                col_marg[static_cast<size_t>(g)][j] += c;
            }
    }

    std::vector<std::uint32_t> lam(N);
    for (std::uint32_t i = 0; i < N; ++i) lam[i] = i;
    std::vector<std::uint32_t> scratch(N);

    std::vector<std::uint32_t> pair_cache(N);
    for (int s = S; s >= 1; --s) {
        const int x0 = st.layer_first_bond(s);
        for (int k = 0; k < st.bricks_per_layer(); ++k) {
            const int x = x0 + 2 * k;
            Brick& br = st.brick(s, k);
            for (std::uint32_t i = 0; i < N; ++i) pair_cache[i] = pair_of_index(i, n, x);

            std::array<Vec4, 2> r4{}, c4{};
            for (int g = 0; g < 2; ++g)
                for (std::uint32_t i = 0; i < N; ++i) {
                    const std::uint32_t p = pair_cache[i];
                    r4[static_cast<size_t>(g)][p] += row_marg[static_cast<size_t>(g)][lam[i]];
                    c4[static_cast<size_t>(g)][p] += col_marg[static_cast<size_t>(g)][lam[i]];
                }

            Vec4 u_uniform{};
            for (int b = 0; b < 4; ++b)
                u_uniform[static_cast<size_t>(b)] =
                    0.25 * dm *
                    (r4[0][static_cast<size_t>(b)] - c4[0][static_cast<size_t>(b)] +
                     r4[1][static_cast<size_t>(b)] - c4[1][static_cast<size_t>(b)]);

            bool ok = true;
            for (int e = 0; e < 4 && ok; ++e)
                for (int b = 0; b < 4 && ok; ++b)
                    ok = br.entry(b, e) + u_uniform[static_cast<size_t>(b)] >= 0.0;

            if (ok) {
                for (int e = 0; e < 4; ++e)
                    for (int b = 0; b < 4; ++b) at(br.m, b, e) += u_uniform[static_cast<size_t>(b)];
                continue;
            }

            // joint pair counts for this brick, then the repair path
            std::array<std::array<std::int64_t, 16>, 2> local{};
            for (int g = 0; g < 2; ++g) {
                const auto& counts = beta[static_cast<size_t>(g)].counts;
                for (std::size_t i = 0; i < N; ++i) {
                    const std::size_t row = static_cast<std::size_t>(lam[i]) * N;
                    const std::uint32_t p = pair_cache[i];
                    for (std::size_t j = 0; j < N; ++j) {
                        const std::int64_t c = counts[row + lam[j]];
                        if (c != 0)
                            local[static_cast<size_t>(g)][static_cast<size_t>(p) * 4 +
                                                          pair_cache[j]] += c;
                    }
                }
            }
            const RepairTable table = repair_conditional(br, local, dm);
            if (repair_iterations) repair_iterations->push_back(table.iterations);

            std::array<std::array<double, 16>, 2> cd{};
            std::array<Vec4, 2> cm{};
            double total = 0.0;
            for (int g = 0; g < 2; ++g)
                for (int b = 0; b < 4; ++b)
                    for (int bm = 0; bm < 4; ++bm) {
                        const double c = static_cast<double>(
                            local[static_cast<size_t>(g)][static_cast<size_t>(b) * 4 + bm]);
                        cd[static_cast<size_t>(g)][static_cast<size_t>(b) * 4 + bm] = c;
                        cm[static_cast<size_t>(g)][static_cast<size_t>(bm)] += c;
                        total += c;
                    }
            const Mat4 u = batched_update(cd, cm, table.p, dm);
            for (int e = 0; e < 4; ++e)
                for (int b = 0; b < 4; ++b) at(br.m, b, e) += at(u, b, e);

            // snap float dust at the pinned zeros onto the permutation entry
            const double snap_tol = 1e-13 * std::max(1.0, dm * total);
            for (int e = 0; e < 4; ++e)
                for (int b = 0; b < 4; ++b) {
                    const double v = br.entry(b, e);
                    if (v < 0.0) {
                        if (v < -snap_tol)
                            throw std::logic_error("jump: repair left a negative entry");
                        at(br.m, b, e) -= v;
                        at(br.m, br.sigma[static_cast<size_t>(e)], e) += v;
                    }
                }
        }
        if (s > 1) {
            // lam_{s-1}(i) = lam_s(sigma_s(i))
            const int xb = st.layer_first_bond(s);
            for (std::uint32_t i = 0; i < N; ++i) {
                std::uint32_t j = i;
                for (int k = 0; k < st.bricks_per_layer(); ++k) {
                    const BondBits bond = make_bond_bits(n, xb + 2 * k);
                    j = relabel_pair(j, bond, st.brick(s, k).sigma);
                }
                scratch[i] = lam[j];
            }
            lam.swap(scratch);
        }
    }
    st.tau += delta_jump;
}

std::int64_t max_jump(const ModelParams& params, double epsilon0, double epsilon_j,
                      double emergent_dt) {
    if (!(emergent_dt > 0.0)) throw std::invalid_argument("max_jump: emergent dt must be positive");
    const double raw = epsilon0 * epsilon_j / (emergent_dt * params.n);
    if (!(raw >= 1.0)) return 1;
    return static_cast<std::int64_t>(std::min(raw, 9.0e15));
}

} // namespace emqm
