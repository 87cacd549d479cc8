// Command-line front end: simulate the stochastic circuit (exact or batched),
// predict deviation curves, analyze mixing operators, map complex Hamiltonians
// into real zero-sum form, and estimate CPU cost.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "emqm/harness.hpp"
#include "emqm/mixing.hpp"
#include "emqm/reference.hpp"

using namespace emqm;

namespace {

void add_run_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->set_config("--config", "", "key = value configuration file");
    cmd->add_option("-n,--sites", cfg.n, "boundary sites (even)");
    cmd->add_option("-e,--epsilon0", cfg.epsilon0, "accuracy knob in (0, 1]");
    cmd->add_option("--depth,--S", cfg.override_depth, "override the circuit depth S");
    cmd->add_option("--delta-t", cfg.override_delta_t, "override the raw step");
    cmd->add_option("--m0", cfg.override_m0, "override the perturbation scale");
    cmd->add_option("--delta-m", cfg.override_delta_m, "override the update step");
    cmd->add_option("--epsilon-j", cfg.epsilon_j, "batching error knob (fast mode)");
    cmd->add_option("--mode", cfg.mode, "exact | fast")->check(CLI::IsMember({"exact", "fast"}));
    cmd->add_option("-r,--realizations", cfg.realizations, "independent realizations");
    cmd->add_option("--t-min", cfg.t_min, "first output time");
    cmd->add_option("--t-max", cfg.t_max, "last output time");
    cmd->add_option("--points", cfg.output_points, "log-spaced output times");
    cmd->add_option("--seed", cfg.seed, "base RNG seed");
    cmd->add_option("--spec", cfg.spec_name, "named Hamiltonian (yx-y, zero)");
    cmd->add_option("--spec-file", cfg.spec_file, "Hamiltonian spec file");
    cmd->add_option("--component", cfg.component, "tracked bit-string component");
    cmd->add_option("-o,--out", cfg.out_dir, "output directory");
    cmd->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
    cmd->add_option("--cpu-budget", cfg.cpu_budget, "pre-flight site-update budget");
    cmd->add_option("--init-policy", cfg.init_policy, "folded | clipped | scaled-quarter");
    cmd->add_option("--pair-mode", cfg.pair_mode, "joint | product");
    cmd->add_option("--calib-m", cfg.calib.m, "calibration constant for the m channel");
    cmd->add_option("--calib-t", cfg.calib.t, "calibration constant for the t channel");
    cmd->add_option("--calib-s", cfg.calib.s, "calibration constant for the S channel");
    cmd->add_option("--calib-stat", cfg.calib.stat, "calibration constant for statistics");
    cmd->add_option("--calib-jump", cfg.calib.jump, "calibration constant for batching");
}

int run_simulate(const RunConfig& cfg) {
    const auto series = run_experiment(cfg);
    for (const auto& note : series.notes) std::fprintf(stderr, "note: %s\n", note.c_str());
    std::printf("# n=%d S=%d delta_t=%s m0=%s delta_m=%s emergent_dt=%s\n", series.params.n,
                series.params.depth, csv_number(series.params.delta_t).c_str(),
                csv_number(series.params.m0).c_str(), csv_number(series.params.delta_m).c_str(),
                csv_number(series.emergent_dt).c_str());
    std::printf("t,eps_mean,eps_std,pred_total\n");
    for (const auto& row : series.rows)
        std::printf("%s,%s,%s,%s\n", csv_number(row.t).c_str(), csv_number(row.eps_mean).c_str(),
                    csv_number(row.eps_std).c_str(),
                    csv_number(cfg.mode == "fast" ? row.predicted.total_with_jump
                                                  : row.predicted.total)
                        .c_str());
    if (!cfg.out_dir.empty())
        std::fprintf(stderr, "wrote %s/deviation.csv and components.csv\n", cfg.out_dir.c_str());
    return 0;
}

int run_predict(const RunConfig& cfg) {
    const auto spec = resolve_spec(cfg);
    const auto d = resolve_params(cfg, spec);
    for (const auto& note : d.notes) std::fprintf(stderr, "note: %s\n", note.c_str());
    const std::int64_t dj = max_jump(d.params, cfg.epsilon0, cfg.epsilon_j, d.emergent_dt);
    const double jump_rate = d.params.n * d.emergent_dt * static_cast<double>(dj);
    std::printf("# S=%d delta_t=%s m0=%s delta_m=%s emergent_dt=%s max_jump=%lld v_fast=%s\n",
                d.params.depth, csv_number(d.params.delta_t).c_str(),
                csv_number(d.params.m0).c_str(), csv_number(d.params.delta_m).c_str(),
                csv_number(d.emergent_dt).c_str(), static_cast<long long>(dj),
                csv_number(fast_velocity(d.params)).c_str());
    std::printf("t,eps_m,eps_t,eps_S,eps_stat,eps_delay,eps_jump,total,total_with_jump\n");
    for (double t : log_spaced(cfg.t_min, cfg.t_max, cfg.output_points)) {
        const auto e = predict_errors(d.params, d.emergent_dt, t, cfg.calib, jump_rate);
        std::printf("%s,%s,%s,%s,%s,%s,%s,%s,%s\n", csv_number(t).c_str(),
                    csv_number(e.eps_m).c_str(), csv_number(e.eps_t).c_str(),
                    csv_number(e.eps_s).c_str(), csv_number(e.eps_stat).c_str(),
                    csv_number(e.eps_delay).c_str(), csv_number(e.eps_jump).c_str(),
                    csv_number(e.total).c_str(), csv_number(e.total_with_jump).c_str());
    }
    return 0;
}

int run_analyze_w(int n, int depth, double m0, int seeds, int design_trials, std::uint64_t seed,
                  const std::string& out) {
    ModelParams p;
    p.n = n;
    p.depth = depth;
    p.delta_t = 0.5 / n;
    p.m0 = m0 > 0 ? m0 : 1e-4;
    p.delta_m = 0.0;
    const auto spec = make_named_spec("yx-y", n);

    double mean = 0, stddev = 0, w0d = 0, design = 0;
    int rank = 0, rank_bound = 0;
    double pred_mean = 0, pred_std = 0;
    for (int s = 0; s < seeds; ++s) {
        p.seed = seed + static_cast<std::uint64_t>(s);
        const Model model = Model::build(p, spec);
        const auto rep = analyze_mixing(init_state(model, 0), s == 0 ? design_trials : 0, p.seed);
        mean += rep.mean_perp_eig / seeds;
        stddev += rep.std_perp_eig / seeds;
        w0d += rep.w0_distance / seeds;
        if (s == 0) design = rep.one_design_residual;
        rank = std::max(rank, rep.rank);
        rank_bound = rep.rank_bound;
        pred_mean = rep.predicted_mean;
        pred_std = rep.predicted_std;
    }

    std::ostringstream csv;
    csv << "quantity,measured,predicted,ratio\n";
    auto emit = [&csv](const std::string& name, double got, double want) {
        csv << name << ',' << csv_number(got) << ',' << csv_number(want) << ','
            << csv_number(want != 0.0 ? got / want : 0.0) << '\n';
        std::printf("%-22s measured %-14s predicted %-14s ratio %s\n", name.c_str(),
                    csv_number(got).c_str(), csv_number(want).c_str(),
                    csv_number(want != 0.0 ? got / want : 0.0).c_str());
    };
    emit("perp_eig_mean", mean, pred_mean);
    emit("perp_eig_std", stddev, pred_std);
    emit("w0_distance", w0d, pred_std);
    emit("rank", rank, rank_bound);
    if (design_trials > 0) emit("one_design_residual", design, 0.0);

    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) {
            std::fprintf(stderr, "cannot write %s\n", out.c_str());
            return 1;
        }
        f << csv.str();
    }
    return 0;
}

int run_map(double ising_j, double ising_h, const std::string& term_file,
            const std::string& out) {
    Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
    if (!term_file.empty()) {
        std::ifstream in(term_file);
        if (!in) {
            std::fprintf(stderr, "cannot open %s\n", term_file.c_str());
            return 1;
        }
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                double re, im;
                if (!(in >> re >> im)) {
                    std::fprintf(stderr, "term file needs 16 're im' pairs\n");
                    return 1;
                }
                h(r, c) = std::complex<double>(re, im);
            }
    } else {
        // transverse-field Ising bond -J Z Z - h Y x 1
        Eigen::Matrix4cd zz = Eigen::Matrix4cd::Zero(), y1 = Eigen::Matrix4cd::Zero();
        const std::complex<double> I(0, 1);
        double zdiag[4] = {1, -1, -1, 1};
        for (int i = 0; i < 4; ++i) zz(i, i) = zdiag[i];
        y1(0, 2) = -I;
        y1(1, 3) = -I;
        y1(2, 0) = I;
        y1(3, 1) = I;
        h = -ising_j * zz - ising_h * y1;
    }

    const Eigen::MatrixXd mapped = map_local_term(h);
    std::printf("# mapped 2-qubit Hermitian term to a real zero-sum generator on 4 qubits\n");
    std::printf("# rows/cols: (q1 q2 aux_real aux_zero), dimension %ld\n",
                static_cast<long>(mapped.rows()));
    const double asym = (mapped + mapped.transpose()).cwiseAbs().maxCoeff();
    const double rowsum = mapped.rowwise().sum().cwiseAbs().maxCoeff();
    const double colsum = mapped.colwise().sum().cwiseAbs().maxCoeff();
    std::printf("antisymmetry residual %s, row-sum %s, col-sum %s\n", csv_number(asym).c_str(),
                csv_number(rowsum).c_str(), csv_number(colsum).c_str());

    std::ostream* os = &std::cout;
    std::ofstream f;
    if (!out.empty()) {
        f.open(out);
        if (!f) {
            std::fprintf(stderr, "cannot write %s\n", out.c_str());
            return 1;
        }
        os = &f;
    }
    char buf[64];
    for (Eigen::Index r = 0; r < mapped.rows(); ++r) {
        for (Eigen::Index c = 0; c < mapped.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g%c", mapped(r, c),
                          c + 1 == mapped.cols() ? '\n' : ' ');
            *os << buf;
        }
    }
    return 0;
}

int run_cpu(const RunConfig& cfg, double t_target) {
    const auto spec = resolve_spec(cfg);
    const auto d = resolve_params(cfg, spec);
    const std::int64_t dj = max_jump(d.params, cfg.epsilon0, cfg.epsilon_j, d.emergent_dt);
    const auto est = cpu_estimate(d.params, d.emergent_dt, t_target, dj);
    std::printf("steps                %s\n", csv_number(est.steps).c_str());
    std::printf("site_updates (exact) %s\n", csv_number(est.site_updates_exact).c_str());
    std::printf("jumps (fast)         %s\n", csv_number(est.jumps_fast).c_str());
    std::printf("ops (fast)           %s\n", csv_number(est.ops_fast).c_str());
    std::printf("budget               %s\n", csv_number(cfg.cpu_budget).c_str());
    if (est.site_updates_exact > cfg.cpu_budget)
        std::printf("verdict              exact mode OVER budget; use fast mode or raise it\n");
    else
        std::printf("verdict              within budget\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic brickwork circuit simulator with an emergent Schrodinger boundary"};
    app.require_subcommand(1);

    RunConfig cfg;
    auto* sim = app.add_subcommand("simulate", "run the circuit and measure deviations");
    add_run_options(sim, cfg);

    RunConfig pcfg;
    pcfg.t_min = 0.01;
    pcfg.t_max = 10.0;
    auto* pred = app.add_subcommand("predict", "analytic deviation components only");
    add_run_options(pred, pcfg);

    auto* wcmd = app.add_subcommand("analyze-w", "mixing-operator spectral report");
    int w_n = 4, w_depth = 4096, w_seeds = 10, w_design = 0;
    double w_m0 = 1e-4;
    std::uint64_t w_seed = 1;
    std::string w_out;
    wcmd->add_option("-n,--sites", w_n, "boundary sites");
    wcmd->add_option("--depth,--S", w_depth, "circuit depth");
    wcmd->add_option("--m0", w_m0, "perturbation scale (for the nonlinear variant)");
    wcmd->add_option("--seeds", w_seeds, "number of seeds to average");
    wcmd->add_option("--design-trials", w_design, "first-moment design residual trials");
    wcmd->add_option("--seed", w_seed, "base seed");
    wcmd->add_option("-o,--out", w_out, "mixing.csv path");

    auto* mcmd = app.add_subcommand("map-hamiltonian", "complex term -> real zero-sum generator");
    double m_j = 1.0, m_h = 0.5;
    std::string m_file, m_out;
    mcmd->add_option("--ising-j", m_j, "Ising coupling");
    mcmd->add_option("--ising-h", m_h, "transverse field");
    mcmd->add_option("--term-file", m_file, "4x4 complex term: 16 're im' pairs");
    mcmd->add_option("-o,--out", m_out, "output file for the mapped generator");

    RunConfig ccfg;
    auto* cpu = app.add_subcommand("cpu-estimate", "pre-flight cost model");
    double c_t = 1.0;
    add_run_options(cpu, ccfg);
    cpu->add_option("-t,--time", c_t, "target emergent time");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_simulate(cfg);
        if (pred->parsed()) return run_predict(pcfg);
        if (wcmd->parsed()) return run_analyze_w(w_n, w_depth, w_m0, w_seeds, w_design, w_seed, w_out);
        if (mcmd->parsed()) return run_map(m_j, m_h, m_file, m_out);
        if (cpu->parsed()) return run_cpu(ccfg, c_t);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
