#include "emqm/circuit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace emqm {

namespace {

constexpr std::uint64_t kInitSalt = 0x494e49545f544147ULL;
constexpr std::uint64_t kStepSalt = 0x535445505f544147ULL;

std::uint64_t step_key(std::uint64_t stream, std::int64_t tau) {
    return CounterRng::derive(CounterRng::derive(stream, kStepSalt),
                              static_cast<std::uint64_t>(tau));
}

std::uint32_t word_mask(int n) { return (n == 32) ? 0xffffffffu : ((1u << n) - 1u); }

// Sample a pair from one stochastic column; prob(b) = [b==sigma(c)] + m(b,c).
inline int sample_column(const Brick& br, int c, double u) {
    double acc = 0.0;
    for (int b = 0; b < 3; ++b) {
        acc += br.entry(b, c);
        if (u < acc) return b;
    }
    return 3;
}

inline int sample_kernel_column(const Mat4& k, int c, double u) {
    double acc = 0.0;
    for (int b = 0; b < 3; ++b) {
        acc += at(k, b, c);
        if (u < acc) return b;
    }
    return 3;
}

void fill_perturbation(Brick& br, CounterRng& rng, const ModelParams& p, InitPolicy policy) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::array<double, 16> gauss{};
        for (auto& g : gauss) g = rng.gaussian();
        br.m = Mat4{};
        if (policy == InitPolicy::folded) {
            for (int a = 0; a < 4; ++a) {
                const int perm_row = br.sigma[static_cast<size_t>(a)];
                double mass = 0.0;
                for (int b = 0; b < 4; ++b) {
                    if (b == perm_row) continue;
                    const double v = std::abs(gauss[static_cast<size_t>(b) * 4 + a]) * p.m0;
                    at(br.m, b, a) = v;
                    mass += v;
                }
                at(br.m, perm_row, a) = -mass;
            }
        } else {
            const double sigma = (policy == InitPolicy::clipped) ? p.m0 : p.m0 / 4.0;
            for (int a = 0; a < 4; ++a) {
                const int perm_row = br.sigma[static_cast<size_t>(a)];
                double mean = 0.0;
                for (int b = 0; b < 4; ++b) mean += gauss[static_cast<size_t>(b) * 4 + a];
                mean *= 0.25;
                double mass = 0.0;
                for (int b = 0; b < 4; ++b) {
                    if (b == perm_row) continue;
                    const double v =
                        std::max((gauss[static_cast<size_t>(b) * 4 + a] - mean) * sigma, 0.0);
                    at(br.m, b, a) = v;
                    mass += v;
                }
                at(br.m, perm_row, a) = -mass;
            }
        }
        bool ok = true;
        for (int a = 0; a < 4 && ok; ++a)
            ok = br.entry(br.sigma[static_cast<size_t>(a)], a) >= 0.0;
        if (ok) return;
    }
    throw std::runtime_error("init_state: m0 too large, could not keep M nonnegative");
}

} // namespace

void validate_params(const ModelParams& p) {
    if (p.n < 2 || p.n % 2 != 0) throw std::invalid_argument("params: n must be even and >= 2");
    if (p.n > 30) throw std::invalid_argument("params: n too large for dense boundary vectors");
    if (p.depth < 1) throw std::invalid_argument("params: depth must be >= 1");
    if (!(p.delta_t > 0.0)) throw std::invalid_argument("params: delta_t must be positive");
    // m0 = 0 (exact permutations) and delta_m = 0 (frozen perturbations) are
    // degenerate diagnostic settings; both are allowed together
    if (p.m0 < 0.0) throw std::invalid_argument("params: m0 must be nonnegative");
    if (p.delta_m < 0.0) throw std::invalid_argument("params: delta_m must be nonnegative");
    if (p.n * p.delta_t > 1.0 + 1e-12)
        throw std::invalid_argument("params: n*delta_t must not exceed 1");
    if (p.m0 > 0.0 && !(p.delta_m < p.m0))
        throw std::invalid_argument("params: delta_m must be below m0");
    if (p.m0 == 0.0 && p.delta_m != 0.0)
        throw std::invalid_argument("params: delta_m needs a positive m0");
    if (!(p.m0 < 0.25)) throw std::invalid_argument("params: m0 must be well below 1");
}

Model Model::build(const ModelParams& params, const HamiltonianSpec& spec) {
    validate_params(params);
    validate_spec(spec);
    if (spec.n != params.n) throw std::invalid_argument("model: spec/params n mismatch");
    Model m;
    m.params = params;
    m.spec = spec;
    m.kernels = build_kernels(spec, params.delta_t);
    m.bonds.reserve(static_cast<size_t>(params.n));
    for (int x = 1; x <= params.n; ++x) m.bonds.push_back(make_bond_bits(params.n, x));
    return m;
}

CircuitState init_state(const Model& model, std::uint64_t realization, InitPolicy policy) {
    const ModelParams& p = model.params;
    CircuitState st;
    st.params = p;
    st.stream_key = CounterRng::derive(p.seed, realization);
    st.tau = 0;

    CounterRng rng(CounterRng::derive(st.stream_key, kInitSalt));
    const int per_layer = p.n / 2;
    st.bricks.resize(static_cast<size_t>(p.depth) * per_layer);
    for (int s = 1; s <= p.depth; ++s)
        for (int k = 0; k < per_layer; ++k) {
            Brick& br = st.brick(s, k);
            br.sigma = all_pair_perms()[rng.below(24)];
            br.sigma_inv = perm_inverse(br.sigma);
            fill_perturbation(br, rng, p, policy);
        }

    const std::uint32_t mask = word_mask(p.n);
    st.forward.resize(static_cast<size_t>(p.depth) + 1);
    for (auto& w : st.forward) w = static_cast<std::uint32_t>(rng.next()) & mask;
    for (auto& plane : st.backward) {
        plane.resize(static_cast<size_t>(p.depth) + 1);
        for (auto& w : plane) w = static_cast<std::uint32_t>(rng.next()) & mask;
    }
    st.boundary_prev = st.forward.back();
    return st;
}

void forward_sample(const Model& model, CircuitState& st, CounterRng& rng) {
    const ModelParams& p = st.params;
    st.boundary_prev = st.forward[static_cast<size_t>(p.depth)];

    static thread_local std::vector<std::uint32_t> next;
    next.assign(st.forward.size(), 0u);
    next[0] = static_cast<std::uint32_t>(rng.next()) & word_mask(p.n);

    const int per_layer = st.bricks_per_layer();
    for (int s = 1; s <= p.depth; ++s) {
        const std::uint32_t prev = st.forward[static_cast<size_t>(s - 1)];
        std::uint32_t row = 0;
        const int x0 = st.layer_first_bond(s);
        for (int k = 0; k < per_layer; ++k) {
            const BondBits& bond = model.bonds[static_cast<size_t>(x0 + 2 * k - 1)];
            const Brick& br = st.brick(s, k);
            const int c = static_cast<int>(pair_of_word(prev, bond));
            const int b = sample_column(br, c, rng.uniform());
            row = with_pair(row, bond, static_cast<std::uint32_t>(b));
        }
        next[static_cast<size_t>(s)] = row;
    }
    st.forward.swap(next);
}

void sample_boundary_feedback(const Model& model, CircuitState& st, CounterRng& rng,
                              std::array<std::uint32_t, kFlavors>& staged) {
    staged.fill(0u);
    for (int x = 1; x <= st.params.n; ++x) {
        const BondBits& bond = model.bonds[static_cast<size_t>(x - 1)];
        const auto& kern = model.kernels[static_cast<size_t>(x - 1)];
        const int gamma = (x % 2 == 1) ? 1 : 2;
        const int c = static_cast<int>(pair_of_word(st.boundary_prev, bond));
        const int bp = sample_kernel_column(kern.b_plus, c, rng.uniform());
        const int bm = sample_kernel_column(kern.b_minus, c, rng.uniform());
        auto& plus_word = staged[static_cast<size_t>(flavor_index(gamma, true))];
        auto& minus_word = staged[static_cast<size_t>(flavor_index(gamma, false))];
        plus_word = with_pair(plus_word, bond, static_cast<std::uint32_t>(bp));
        minus_word = with_pair(minus_word, bond, static_cast<std::uint32_t>(bm));
    }
}

void backpropagate_bits(const Model& model, CircuitState& st,
                        const std::array<std::uint32_t, kFlavors>& staged) {
    const int S = st.params.depth;
    const int per_layer = st.bricks_per_layer();
    for (int f = 0; f < kFlavors; ++f) {
        auto& plane = st.backward[static_cast<size_t>(f)];
        for (int s = 1; s < S; ++s) {
            // bits at layer s come from layer s+1 through the layer-(s+1) bricks
            const std::uint32_t src = plane[static_cast<size_t>(s + 1)];
            std::uint32_t row = 0;
            const int x0 = st.layer_first_bond(s + 1);
            for (int k = 0; k < per_layer; ++k) {
                const BondBits& bond = model.bonds[static_cast<size_t>(x0 + 2 * k - 1)];
                const Brick& br = st.brick(s + 1, k);
                const std::uint32_t q = br.sigma_inv[pair_of_word(src, bond)];
                row = with_pair(row, bond, q);
            }
            plane[static_cast<size_t>(s)] = row;
        }
        plane[static_cast<size_t>(S)] = staged[static_cast<size_t>(f)];
    }
}

void apply_feedback_update(const Model& model, CircuitState& st, CounterRng& rng) {
    const ModelParams& p = st.params;
    const double dm = p.delta_m;
    const int per_layer = st.bricks_per_layer();
    for (int s = 1; s <= p.depth; ++s) {
        const int x0 = st.layer_first_bond(s);
        for (int k = 0; k < per_layer; ++k) {
            const BondBits& bond = model.bonds[static_cast<size_t>(x0 + 2 * k - 1)];
            Brick& br = st.brick(s, k);
            for (int gamma = 1; gamma <= 2; ++gamma) {
                const std::uint32_t bp = pair_of_word(
                    st.backward[static_cast<size_t>(flavor_index(gamma, true))]
                               [static_cast<size_t>(s)],
                    bond);
                const std::uint32_t bm = pair_of_word(
                    st.backward[static_cast<size_t>(flavor_index(gamma, false))]
                               [static_cast<size_t>(s)],
                    bond);
                if (bp == bm) continue;
                // basis columns that keep M nonnegative after subtracting dm
                int feas[4];
                int count = 0;
                for (int e = 0; e < 4; ++e)
                    if (br.entry(static_cast<int>(bm), e) >= dm) feas[count++] = e;
                if (count == 0)
                    throw std::logic_error("feedback update: no feasible basis column");
                const int e = feas[rng.below(static_cast<std::uint64_t>(count))];
                at(br.m, static_cast<int>(bp), e) += dm;
                at(br.m, static_cast<int>(bm), e) -= dm;
            }
        }
    }
}

void step(const Model& model, CircuitState& st) {
    CounterRng rng(step_key(st.stream_key, st.tau));
    forward_sample(model, st, rng);
    std::array<std::uint32_t, kFlavors> staged{};
    sample_boundary_feedback(model, st, rng, staged);
    backpropagate_bits(model, st, staged);
    apply_feedback_update(model, st, rng);
    ++st.tau;
}

std::vector<double> boundary_distribution(const CircuitState& st) {
    const ModelParams& p = st.params;
    const std::size_t N = 1ull << p.n;
    std::vector<double> v(N, 1.0 / static_cast<double>(N));
    const int per_layer = st.bricks_per_layer();
    for (int s = 1; s <= p.depth; ++s) {
        const int x0 = st.layer_first_bond(s);
        for (int k = 0; k < per_layer; ++k) {
            const Brick& br = st.brick(s, k);
            Mat4 m;
            for (int b = 0; b < 4; ++b)
                for (int a = 0; a < 4; ++a) at(m, b, a) = br.entry(b, a);
            apply_pair_kernel(v, p.n, x0 + 2 * k, m);
        }
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    if (std::abs(sum - 1.0) > 1e-10)
        throw std::logic_error("boundary distribution: probability sum drifted");
    return v;
}

std::pair<std::vector<double>, double> emergent_wavefunction(const std::vector<double>& pvec) {
    const double u = 1.0 / static_cast<double>(pvec.size());
    std::vector<double> psi(pvec.size());
    double norm2 = 0.0;
    for (std::size_t i = 0; i < pvec.size(); ++i) {
        psi[i] = pvec[i] - u;
        norm2 += psi[i] * psi[i];
    }
    const double norm = std::sqrt(norm2);
    if (!(norm > 0.0))
        throw std::domain_error("emergent wavefunction: boundary distribution is uniform");
    for (auto& x : psi) x /= norm;
    return {std::move(psi), norm};
}

std::pair<std::vector<double>, double> emergent_wavefunction(const CircuitState& st) {
    return emergent_wavefunction(boundary_distribution(st));
}

void check_stochasticity(const CircuitState& st, double tol) {
    for (const auto& br : st.bricks) {
        for (int a = 0; a < 4; ++a) {
            double sum = 0.0;
            for (int b = 0; b < 4; ++b) {
                const double v = br.entry(b, a);
                if (v < -tol) throw std::logic_error("stochasticity: negative M entry");
                sum += v;
            }
            if (std::abs(sum - 1.0) > tol)
                throw std::logic_error("stochasticity: column sum drifted");
        }
    }
}

namespace {

void put_hex_double(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);
    out << buf;
}

double get_double(std::istream& in) {
    std::string tok;
    if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated");
    return std::strtod(tok.c_str(), nullptr);
}

} // namespace

void save_checkpoint(std::ostream& out, const CircuitState& st) {
    const ModelParams& p = st.params;
    out << "emqm-circuit-checkpoint 1\n";
    out << "n " << p.n << " depth " << p.depth << " seed " << p.seed << "\n";
    out << "delta_t ";
    put_hex_double(out, p.delta_t);
    out << " m0 ";
    put_hex_double(out, p.m0);
    out << " delta_m ";
    put_hex_double(out, p.delta_m);
    out << "\n";
    out << "stream " << st.stream_key << " tau " << st.tau << "\n";
    out << "q";
    for (const auto& br : st.bricks) out << " " << perm_rank(br.sigma);
    out << "\n";
    for (const auto& br : st.bricks) {
        out << "m";
        for (double v : br.m) {
            out << " ";
            put_hex_double(out, v);
        }
        out << "\n";
    }
    out << "a";
    for (auto w : st.forward) out << " " << w;
    out << "\n";
    for (const auto& plane : st.backward) {
        out << "b";
        for (auto w : plane) out << " " << w;
        out << "\n";
    }
    out << "aprev " << st.boundary_prev << "\n";
}

CircuitState load_checkpoint(std::istream& in) {
    std::string tok;
    int version = 0;
    in >> tok >> version;
    if (tok != "emqm-circuit-checkpoint" || version != 1)
        throw std::runtime_error("checkpoint: bad header");
    CircuitState st;
    ModelParams& p = st.params;
    in >> tok >> p.n >> tok >> p.depth >> tok >> p.seed;
    in >> tok;
    p.delta_t = get_double(in);
    in >> tok;
    p.m0 = get_double(in);
    in >> tok;
    p.delta_m = get_double(in);
    in >> tok >> st.stream_key >> tok >> st.tau;
    if (!in) throw std::runtime_error("checkpoint: truncated header");

    const int per_layer = p.n / 2;
    st.bricks.resize(static_cast<size_t>(p.depth) * per_layer);
    in >> tok; // "q"
    for (auto& br : st.bricks) {
        int rank = -1;
        in >> rank;
        if (rank < 0 || rank >= 24) throw std::runtime_error("checkpoint: bad permutation index");
        br.sigma = all_pair_perms()[static_cast<size_t>(rank)];
        br.sigma_inv = perm_inverse(br.sigma);
    }
    for (auto& br : st.bricks) {
        in >> tok; // "m"
        for (auto& v : br.m) v = get_double(in);
    }
    in >> tok; // "a"
    st.forward.resize(static_cast<size_t>(p.depth) + 1);
    for (auto& w : st.forward) in >> w;
    for (auto& plane : st.backward) {
        in >> tok; // "b"
        plane.resize(static_cast<size_t>(p.depth) + 1);
        for (auto& w : plane) in >> w;
    }
    in >> tok >> st.boundary_prev;
    if (!in) throw std::runtime_error("checkpoint: truncated body");
    return st;
}

void save_checkpoint_file(const std::string& path, const CircuitState& st) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open checkpoint for write: " + path);
    save_checkpoint(out, st);
}

CircuitState load_checkpoint_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    return load_checkpoint(in);
}

} // namespace emqm
