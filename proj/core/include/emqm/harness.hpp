#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emqm/circuit.hpp"
#include "emqm/fastsim.hpp"

namespace emqm {

struct CalibrationConstants {
    double m = 1.0;
    double t = 1.0;
    double s = 1.0;
    double stat = 1.0;
    double delay = 1.0;
    double jump = 1.0;
};

struct RunConfig {
    int n = 4;
    double epsilon0 = 0.5;
    // parameter overrides; negative means "derive from epsilon0"
    double override_depth = -1.0;
    double override_delta_t = -1.0;
    double override_m0 = -1.0;
    double override_delta_m = -1.0;
    double epsilon_j = 0.02;
    std::string mode = "exact"; // exact | fast
    int realizations = 3;
    double t_min = 0.01;
    double t_max = 4.0;
    int output_points = 24;
    std::uint64_t seed = 1;
    std::string spec_name = "yx-y";
    std::string spec_file; // takes precedence over spec_name when set
    std::string component = "0110";
    std::string out_dir; // empty = no files written
    int threads = 0;     // 0 = hardware concurrency
    CalibrationConstants calib;
    double cpu_budget = 5e13; // exact-mode site updates per realization
    std::string init_policy = "folded";
    std::string pair_mode = "joint";
};

struct DerivedRun {
    ModelParams params;
    double emergent_dt = 0.0;
    long long formula_depth = 0;
    std::vector<std::string> notes;
};

// Single-knob parameterization: S = round(N/eps0^2), dt = eps0/n,
// m0 = eps0/(S n^{3/2}), dm = m0^2 eps0 / n.
DerivedRun derive_params(int n, double epsilon0);

// derive_params plus overrides, kernel-admissibility shrink of delta_t, and
// validation against the named spec.
DerivedRun resolve_params(const RunConfig& config, const HamiltonianSpec& spec);

// Emergent time per raw step: (dm/4) (S n / 2N) (3/(1-1/N)) dt.
double emergent_time_step(const ModelParams& p);

struct ErrorComponents {
    double eps_m = 0.0;
    double eps_t = 0.0;
    double eps_s = 0.0;
    double eps_stat = 0.0;
    double eps_delay = 0.0;
    double eps_jump = 0.0;
    double total = 0.0;          // incoherent sum of the four main channels
    double total_with_jump = 0.0;
};

// jump_rate is the coherent batching-error rate n*dt_em*delta_jump (zero for
// the exact simulator).
ErrorComponents predict_errors(const ModelParams& p, double emergent_dt, double t,
                               const CalibrationConstants& c = {}, double jump_rate = 0.0);

// Information speed of the bulk bits in units of the site spacing.
double fast_velocity(const ModelParams& p);

struct DeviationRow {
    double t = 0.0;
    std::int64_t tau = 0;
    int warmup = 0;
    double eps_mean = 0.0;
    double eps_std = 0.0;
    double eps_sem = 0.0;
    ErrorComponents predicted;
    double eps_jump_measured = 0.0; // from the realized jump sizes
    double comp_mean = 0.0;         // tracked wavefunction component
    double comp_std = 0.0;
    double comp_qm_mean = 0.0;
};

struct DeviationSeries {
    ModelParams params;
    double emergent_dt = 0.0;
    std::vector<std::string> notes;
    std::vector<DeviationRow> rows;
    std::vector<std::vector<double>> eps_per_realization; // [realization][row]
};

DeviationSeries run_experiment(const RunConfig& config);

struct CpuEstimate {
    double steps = 0.0;
    double site_updates_exact = 0.0;
    double jumps_fast = 0.0;
    double ops_fast = 0.0;
};

CpuEstimate cpu_estimate(const ModelParams& p, double emergent_dt, double t,
                         std::int64_t delta_jump);

std::vector<double> log_spaced(double lo, double hi, int points);

// Fixed CSV float format: 9 significant digits.
std::string csv_number(double v);

void write_deviation_csv(const std::string& path, const DeviationSeries& series);
void write_components_csv(const std::string& path, const DeviationSeries& series);

HamiltonianSpec resolve_spec(const RunConfig& config);

InitPolicy parse_init_policy(const std::string& name);
PairMode parse_pair_mode(const std::string& name);

} // namespace emqm
