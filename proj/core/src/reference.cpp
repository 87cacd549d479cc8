#include "emqm/reference.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace emqm {

namespace {

// Pade approximants from Higham, "The scaling and squaring method for the
// matrix exponential revisited" (2005); degree 13 with scaling.
void pade13(const Eigen::MatrixXd& a, Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};
    const Eigen::Index d = a.rows();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd a2 = a * a;
    const Eigen::MatrixXd a4 = a2 * a2;
    const Eigen::MatrixXd a6 = a4 * a2;
    u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
             b[1] * id);
    v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

} // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("expm: square matrix required");
    const double theta13 = 5.371920351148152;
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff(); // 1-norm
    if (norm == 0.0) return Eigen::MatrixXd::Identity(a.rows(), a.cols());
    int squarings = 0;
    Eigen::MatrixXd as = a;
    if (norm > theta13) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
        as /= std::ldexp(1.0, squarings);
    }
    Eigen::MatrixXd u, v;
    pade13(as, u, v);
    Eigen::MatrixXd num = v + u;
    Eigen::MatrixXd den = v - u;
    Eigen::MatrixXd r = den.partialPivLu().solve(num);
    for (int i = 0; i < squarings; ++i) r = (r * r).eval();
    return r;
}

Eigen::VectorXd evolve_exact(const Eigen::MatrixXd& g, const Eigen::VectorXd& psi0, double t) {
    if (g.rows() != g.cols() || g.rows() != psi0.size())
        throw std::invalid_argument("evolve_exact: dimension mismatch");
    if ((g + g.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("evolve_exact: generator must be antisymmetric");
    if (t < 0.0) throw std::invalid_argument("evolve_exact: t must be nonnegative");
    if (t == 0.0) return psi0;
    return expm((t * g).eval()) * psi0;
}

Eigen::VectorXd evolve_exact(const HamiltonianSpec& spec, const Eigen::VectorXd& psi0, double t) {
    return evolve_exact(assemble_dense(spec), psi0, t);
}

std::vector<Eigen::VectorXd> evolve_modified(const Eigen::MatrixXd& w, const Eigen::MatrixXd& g,
                                             const Eigen::VectorXd& psi0,
                                             const std::vector<double>& times,
                                             const ModifiedEvolveOptions& opt) {
    if (w.rows() != g.rows() || w.cols() != g.rows() || g.rows() != psi0.size())
        throw std::invalid_argument("evolve_modified: dimension mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument("evolve_modified: times must be increasing");

    const Eigen::MatrixXd a = w * g;

    if (opt.check_real_spectrum) {
        const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(a, false).eigenvalues();
        // eig(w*H) = i * eig(w*G); real spectrum of w*H means real eig here is 0
        if (ev.real().cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff()))
            throw std::runtime_error("evolve_modified: w*H spectrum is not real");
    }

    // Dormand-Prince 5(4) embedded pair.
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    std::vector<Eigen::VectorXd> out;
    out.reserve(times.size());
    Eigen::VectorXd y = psi0;
    double t = 0.0;
    const double a_scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    double h = 0.1 / a_scale;

    auto deriv = [&a](const Eigen::VectorXd& v) { return (a * v).eval(); };

    for (double t_out : times) {
        if (t_out < t) throw std::invalid_argument("evolve_modified: times must start at >= 0");
        while (t < t_out) {
            const double hs = std::min(h, t_out - t);
            const Eigen::VectorXd k1 = deriv(y);
            const Eigen::VectorXd k2 = deriv(y + hs * a21 * k1);
            const Eigen::VectorXd k3 = deriv(y + hs * (a31 * k1 + a32 * k2));
            const Eigen::VectorXd k4 = deriv(y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
            const Eigen::VectorXd k5 = deriv(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const Eigen::VectorXd k6 =
                deriv(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            const Eigen::VectorXd y5 =
                y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const Eigen::VectorXd k7 = deriv(y5);
            const double err =
                (hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7)).norm();
            const double tol = opt.local_tol * std::max(1.0, y.norm());
            if (err <= tol) {
                t += hs;
                y = y5;
            }
            const double shrink = (err > 0.0) ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
            h = hs * std::min(5.0, std::max(0.2, shrink));
            if (!(h > 0.0) || !std::isfinite(h))
                throw std::runtime_error("evolve_modified: integrator step collapsed");
            (void)c2; (void)c3; (void)c4; (void)c5;
        }
        Eigen::VectorXd snap = y;
        if (opt.renormalize_outputs && snap.norm() > 0.0) snap /= snap.norm();
        out.push_back(std::move(snap));
    }
    return out;
}

double deviation(const Eigen::VectorXd& psi, const Eigen::VectorXd& psi_qm) {
    if (psi.size() != psi_qm.size()) throw std::invalid_argument("deviation: size mismatch");
    return (psi - psi_qm).norm();
}

double deviation(const std::vector<double>& psi, const std::vector<double>& psi_qm) {
    if (psi.size() != psi_qm.size()) throw std::invalid_argument("deviation: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double d = psi[i] - psi_qm[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

} // namespace emqm
