#include "emqm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "emqm/reference.hpp"

namespace emqm {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

std::uint32_t parse_component(const std::string& bits, int n) {
    if (static_cast<int>(bits.size()) != n)
        throw std::invalid_argument("component bit string must have length n (got '" + bits +
                                    "' for n=" + std::to_string(n) + ")");
    std::uint32_t idx = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw std::invalid_argument("component must be a bit string");
        idx = (idx << 1) | static_cast<std::uint32_t>(c - '0');
    }
    return idx;
}

struct RealizationResult {
    std::vector<double> eps;
    std::vector<double> comp;
    std::vector<double> comp_qm;
    std::vector<double> eps_jump;
};

} // namespace

std::vector<double> log_spaced(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2)
        throw std::invalid_argument("log_spaced: need 0 < lo < hi and points >= 2");
    std::vector<double> out(static_cast<size_t>(points));
    const double la = std::log(lo), lb = std::log(hi);
    for (int i = 0; i < points; ++i)
        out[static_cast<size_t>(i)] = std::exp(la + (lb - la) * i / (points - 1));
    return out;
}

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

DerivedRun derive_params(int n, double epsilon0) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("derive_params: n must be even >= 2");
    if (!(epsilon0 > 0.0) || epsilon0 > 1.0)
        throw std::invalid_argument("derive_params: epsilon0 must be in (0, 1]");
    const double N = std::ldexp(1.0, n);
    DerivedRun d;
    d.formula_depth = std::llround(N / (epsilon0 * epsilon0));
    d.params.n = n;
    d.params.depth = static_cast<int>(std::max<long long>(1, d.formula_depth));
    d.params.delta_t = epsilon0 / n;
    d.params.m0 = epsilon0 / (d.params.depth * std::pow(static_cast<double>(n), 1.5));
    d.params.delta_m = d.params.m0 * d.params.m0 * epsilon0 / n;
    d.emergent_dt = emergent_time_step(d.params);
    return d;
}

double emergent_time_step(const ModelParams& p) {
    const double N = std::ldexp(1.0, p.n);
    return 0.25 * p.delta_m * (static_cast<double>(p.depth) * p.n / (2.0 * N)) *
           (3.0 / (1.0 - 1.0 / N)) * p.delta_t;
}

DerivedRun resolve_params(const RunConfig& config, const HamiltonianSpec& spec) {
    DerivedRun d = derive_params(config.n, config.epsilon0);
    {
        std::ostringstream os;
        os << "formula depth S=" << d.formula_depth << " for epsilon0=" << config.epsilon0;
        d.notes.push_back(os.str());
    }
    if (config.override_depth >= 0) {
        d.params.depth = static_cast<int>(std::llround(config.override_depth));
        if (d.params.depth != d.formula_depth) {
            std::ostringstream os;
            os << "override depth S=" << d.params.depth << " differs from formula "
               << d.formula_depth;
            d.notes.push_back(os.str());
        }
    }
    if (config.override_delta_t >= 0) d.params.delta_t = config.override_delta_t;
    if (config.override_m0 >= 0) d.params.m0 = config.override_m0;
    if (config.override_delta_m >= 0) d.params.delta_m = config.override_delta_m;
    d.params.seed = config.seed;

    // constructive kernel admissibility: halve delta_t until the kernels exist
    int shrinks = 0;
    while (true) {
        try {
            build_kernels(spec, d.params.delta_t);
            break;
        } catch (const std::domain_error&) {
            if (++shrinks > 60)
                throw std::domain_error("resolve_params: no admissible delta_t found");
            d.params.delta_t *= 0.5;
        }
    }
    if (shrinks > 0) {
        std::ostringstream os;
        os << "delta_t shrunk by 2^" << shrinks << " to " << d.params.delta_t
           << " for kernel admissibility";
        d.notes.push_back(os.str());
    }
    validate_params(d.params);
    d.emergent_dt = emergent_time_step(d.params);
    return d;
}

ErrorComponents predict_errors(const ModelParams& p, double /*emergent_dt*/, double t,
                               const CalibrationConstants& c, double jump_rate) {
    const double N = std::ldexp(1.0, p.n);
    const double sn = std::sqrt(static_cast<double>(p.n));
    ErrorComponents e;
    e.eps_m = c.m * std::min(p.depth * p.n * p.m0, 1.0) * sn * t;
    e.eps_t = c.t * p.n * p.delta_t * t;
    e.eps_s = c.s * std::sqrt(N / p.depth) * t;
    e.eps_stat = (p.m0 > 0.0) ? c.stat * std::sqrt(p.delta_m * p.n * t) / p.m0 : 0.0;
    e.eps_delay = c.delay * p.delta_m * (static_cast<double>(p.n) * p.n) *
                  (static_cast<double>(p.depth) * p.depth) / N * p.delta_t * t;
    e.eps_jump = c.jump * jump_rate * t;
    e.total = std::min(std::sqrt(e.eps_m * e.eps_m + e.eps_t * e.eps_t + e.eps_s * e.eps_s +
                                 e.eps_stat * e.eps_stat),
                       kSqrt2);
    e.total_with_jump = std::min(std::sqrt(e.total * e.total + e.eps_jump * e.eps_jump), kSqrt2);
    return e;
}

double fast_velocity(const ModelParams& p) {
    const double N = std::ldexp(1.0, p.n);
    return N / (p.delta_m * p.delta_t * static_cast<double>(p.depth) * p.n);
}

CpuEstimate cpu_estimate(const ModelParams& p, double emergent_dt, double t,
                         std::int64_t delta_jump) {
    CpuEstimate est;
    if (emergent_dt > 0.0 && t > 0.0) est.steps = t / emergent_dt;
    est.site_updates_exact = est.steps * static_cast<double>(p.depth) * p.n;
    if (delta_jump > 0 && est.steps > 0.0) {
        est.jumps_fast = std::ceil(est.steps / static_cast<double>(delta_jump));
        const double N = std::ldexp(1.0, p.n);
        const double per_jump = 2.0 * p.depth * p.n * N   // boundary distribution
                                + 2.0 * N * N * N          // joint pair probabilities
                                + 2.0 * N * N              // multinomial draws
                                + p.depth * N * (p.n + 4); // marginal gathers and label maps
        est.ops_fast = est.jumps_fast * per_jump;
    }
    return est;
}

HamiltonianSpec resolve_spec(const RunConfig& config) {
    if (!config.spec_file.empty()) return load_spec_file(config.spec_file);
    return make_named_spec(config.spec_name, config.n);
}

InitPolicy parse_init_policy(const std::string& name) {
    if (name == "folded") return InitPolicy::folded;
    if (name == "clipped") return InitPolicy::clipped;
    if (name == "scaled-quarter") return InitPolicy::scaled_quarter;
    throw std::invalid_argument("unknown init policy: " + name);
}

PairMode parse_pair_mode(const std::string& name) {
    if (name == "joint") return PairMode::joint;
    if (name == "product") return PairMode::product;
    throw std::invalid_argument("unknown pair mode: " + name);
}

DeviationSeries run_experiment(const RunConfig& config) {
    if (config.mode != "exact" && config.mode != "fast")
        throw std::invalid_argument("run_experiment: mode must be exact or fast");
    if (config.realizations < 1)
        throw std::invalid_argument("run_experiment: need at least one realization");

    const HamiltonianSpec spec = resolve_spec(config);
    DerivedRun derived = resolve_params(config, spec);
    const Model model = Model::build(derived.params, spec);
    const double dt_em = derived.emergent_dt;
    const InitPolicy policy = parse_init_policy(config.init_policy);
    const PairMode pair_mode = parse_pair_mode(config.pair_mode);
    const std::uint32_t comp_idx = parse_component(config.component, config.n);
    const bool fast = config.mode == "fast";

    // output grid in raw steps; frozen runs (delta_m = 0) use unit steps
    const std::vector<double> t_grid = log_spaced(config.t_min, config.t_max, config.output_points);
    std::vector<std::int64_t> tau_grid(t_grid.size());
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        tau_grid[k] = (dt_em > 0.0) ? std::llround(t_grid[k] / dt_em)
                                    : static_cast<std::int64_t>(k) + 1;
        if (k > 0) tau_grid[k] = std::max(tau_grid[k], tau_grid[k - 1]);
    }

    const CpuEstimate cost = cpu_estimate(derived.params, dt_em,
                                          dt_em > 0.0 ? t_grid.back() : 0.0, 1);
    if (!fast && cost.site_updates_exact > config.cpu_budget) {
        std::ostringstream os;
        os << "run_experiment: exact mode needs ~" << cost.site_updates_exact
           << " site updates per realization, over the budget " << config.cpu_budget
           << " (raise cpu_budget or use fast mode)";
        throw std::runtime_error(os.str());
    }

    std::int64_t jump_cap = 1;
    double jump_rate = 0.0;
    if (fast) {
        jump_cap = max_jump(derived.params, config.epsilon0, config.epsilon_j, dt_em);
        jump_rate = derived.params.n * dt_em * static_cast<double>(jump_cap);
    }

    // shared reference propagators exp(G * t_k)
    const Eigen::MatrixXd g = assemble_dense(spec);
    std::vector<Eigen::MatrixXd> props(t_grid.size());
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double t_eff = dt_em * static_cast<double>(tau_grid[k]);
        props[k] = expm((t_eff * g).eval());
    }

    const bool writing = !config.out_dir.empty();
    if (writing) std::filesystem::create_directories(config.out_dir);

    const int R = config.realizations;
    std::vector<RealizationResult> results(static_cast<size_t>(R));
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= R || failed.load()) return;
            try {
                CircuitState st = init_state(model, static_cast<std::uint64_t>(r), policy);
                auto [psi0_v, eps_psi0] = emergent_wavefunction(st);
                Eigen::VectorXd psi0 = Eigen::Map<Eigen::VectorXd>(psi0_v.data(),
                                                                   static_cast<long>(psi0_v.size()));

                RealizationResult res;
                res.eps.resize(t_grid.size());
                res.comp.resize(t_grid.size());
                res.comp_qm.resize(t_grid.size());
                res.eps_jump.assign(t_grid.size(), 0.0);

                std::ofstream jump_log;
                if (writing && fast) {
                    const std::string dir =
                        config.out_dir + "/real_" + (r < 10 ? "00" : r < 100 ? "0" : "") +
                        std::to_string(r);
                    std::filesystem::create_directories(dir);
                    jump_log.open(dir + "/jump_log.csv");
                    jump_log << "tau,delta_jump,repaired_bricks,repair_iterations\n";
                }

                double sum_dj2 = 0.0;
                for (std::size_t k = 0; k < t_grid.size(); ++k) {
                    while (st.tau < tau_grid[k]) {
                        if (fast) {
                            const std::int64_t step_count =
                                std::min<std::int64_t>(jump_cap, tau_grid[k] - st.tau);
                            std::vector<int> repairs;
                            const std::int64_t tau_before = st.tau;
                            jump(model, st, step_count, &repairs, pair_mode);
                            sum_dj2 += static_cast<double>(step_count) *
                                       static_cast<double>(step_count);
                            if (jump_log.is_open()) {
                                long total_iters = 0;
                                for (int it : repairs) total_iters += it;
                                jump_log << tau_before << ',' << step_count << ','
                                         << repairs.size() << ',' << total_iters << '\n';
                            }
                        } else {
                            step(model, st);
                        }
                    }
                    auto [psi_v, eps_psi] = emergent_wavefunction(st);
                    (void)eps_psi;
                    Eigen::Map<Eigen::VectorXd> psi(psi_v.data(), static_cast<long>(psi_v.size()));
                    const Eigen::VectorXd psi_qm = props[k] * psi0;
                    res.eps[k] = (psi - psi_qm).norm();
                    res.comp[k] = psi_v[comp_idx];
                    res.comp_qm[k] = psi_qm(comp_idx);
                    res.eps_jump[k] = derived.params.n * dt_em * dt_em * sum_dj2;
                }
                check_stochasticity(st);

                if (writing) {
                    const std::string dir =
                        config.out_dir + "/real_" + (r < 10 ? "00" : r < 100 ? "0" : "") +
                        std::to_string(r);
                    std::filesystem::create_directories(dir);
                    std::ofstream out(dir + "/deviation.csv");
                    out << "t,tau,warmup,eps,component,component_qm\n";
                    for (std::size_t k = 0; k < t_grid.size(); ++k) {
                        const double t_eff = dt_em * static_cast<double>(tau_grid[k]);
                        const int warm = t_eff < 2.0 * derived.params.depth * dt_em ? 1 : 0;
                        out << csv_number(t_eff) << ',' << tau_grid[k] << ',' << warm << ','
                            << csv_number(res.eps[k]) << ',' << csv_number(res.comp[k]) << ','
                            << csv_number(res.comp_qm[k]) << '\n';
                    }
                }
                results[static_cast<size_t>(r)] = std::move(res);
            } catch (const std::exception& ex) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failure = "realization " + std::to_string(r) + ": " + ex.what();
                failed.store(true);
                return;
            }
        }
    };

    int threads = config.threads > 0 ? config.threads
                                     : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, R));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed.load()) throw std::runtime_error("run_experiment: " + failure);

    DeviationSeries series;
    series.params = derived.params;
    series.emergent_dt = dt_em;
    series.notes = derived.notes;
    series.rows.resize(t_grid.size());
    series.eps_per_realization.resize(static_cast<size_t>(R));
    for (int r = 0; r < R; ++r) series.eps_per_realization[static_cast<size_t>(r)] = results[static_cast<size_t>(r)].eps;

    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        DeviationRow& row = series.rows[k];
        row.tau = tau_grid[k];
        row.t = dt_em * static_cast<double>(tau_grid[k]);
        row.warmup = row.t < 2.0 * derived.params.depth * dt_em ? 1 : 0;
        double mean = 0.0, mean_c = 0.0, mean_cq = 0.0, mean_j = 0.0;
        for (const auto& res : results) {
            mean += res.eps[k];
            mean_c += res.comp[k];
            mean_cq += res.comp_qm[k];
            mean_j += res.eps_jump[k];
        }
        mean /= R;
        mean_c /= R;
        mean_cq /= R;
        mean_j /= R;
        double var = 0.0, var_c = 0.0;
        for (const auto& res : results) {
            var += (res.eps[k] - mean) * (res.eps[k] - mean);
            var_c += (res.comp[k] - mean_c) * (res.comp[k] - mean_c);
        }
        if (R > 1) {
            var /= (R - 1);
            var_c /= (R - 1);
        }
        row.eps_mean = mean;
        row.eps_std = std::sqrt(var);
        row.eps_sem = row.eps_std / std::sqrt(static_cast<double>(R));
        row.comp_mean = mean_c;
        row.comp_std = std::sqrt(var_c);
        row.comp_qm_mean = mean_cq;
        row.eps_jump_measured = mean_j;
        row.predicted = predict_errors(derived.params, dt_em, row.t, config.calib, jump_rate);
    }

    if (writing) {
        write_deviation_csv(config.out_dir + "/deviation.csv", series);
        write_components_csv(config.out_dir + "/components.csv", series);
    }
    return series;
}

void write_deviation_csv(const std::string& path, const DeviationSeries& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,tau,warmup,eps_mean,eps_std,eps_sem,pred_m,pred_t,pred_S,pred_stat,pred_delay,"
           "pred_jump,pred_total,pred_total_jump,eps_jump_measured\n";
    for (const auto& r : series.rows) {
        out << csv_number(r.t) << ',' << r.tau << ',' << r.warmup << ','
            << csv_number(r.eps_mean) << ',' << csv_number(r.eps_std) << ','
            << csv_number(r.eps_sem) << ',' << csv_number(r.predicted.eps_m) << ','
            << csv_number(r.predicted.eps_t) << ',' << csv_number(r.predicted.eps_s) << ','
            << csv_number(r.predicted.eps_stat) << ',' << csv_number(r.predicted.eps_delay) << ','
            << csv_number(r.predicted.eps_jump) << ',' << csv_number(r.predicted.total) << ','
            << csv_number(r.predicted.total_with_jump) << ','
            << csv_number(r.eps_jump_measured) << '\n';
    }
}

void write_components_csv(const std::string& path, const DeviationSeries& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,tau,component_mean,component_std,component_qm_mean\n";
    for (const auto& r : series.rows) {
        out << csv_number(r.t) << ',' << r.tau << ',' << csv_number(r.comp_mean) << ','
            << csv_number(r.comp_std) << ',' << csv_number(r.comp_qm_mean) << '\n';
    }
}

} // namespace emqm
