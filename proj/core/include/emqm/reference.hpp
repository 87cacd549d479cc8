#pragma once

#include <vector>

#include <Eigen/Dense>

#include "emqm/hamiltonian.hpp"

namespace emqm {

// Dense matrix exponential by Pade approximation with scaling and squaring.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

// exp(t*G) psi0 for an antisymmetric generator; the propagator is orthogonal,
// so norm and zero-sum structure are preserved.
Eigen::VectorXd evolve_exact(const Eigen::MatrixXd& g, const Eigen::VectorXd& psi0, double t);
Eigen::VectorXd evolve_exact(const HamiltonianSpec& spec, const Eigen::VectorXd& psi0, double t);

// d/dt psi = w * G * psi integrated with an embedded adaptive Runge-Kutta
// pair; renormalizes only at the requested output times.
struct ModifiedEvolveOptions {
    double local_tol = 1e-10;
    bool renormalize_outputs = true;
    bool check_real_spectrum = false; // verify eig(w*H) real within 1e-8
};

std::vector<Eigen::VectorXd> evolve_modified(const Eigen::MatrixXd& w, const Eigen::MatrixXd& g,
                                             const Eigen::VectorXd& psi0,
                                             const std::vector<double>& times,
                                             const ModifiedEvolveOptions& opt = {});

// Euclidean distance between two normalized real state vectors; range [0, 2].
double deviation(const Eigen::VectorXd& psi, const Eigen::VectorXd& psi_qm);
double deviation(const std::vector<double>& psi, const std::vector<double>& psi_qm);

} // namespace emqm
