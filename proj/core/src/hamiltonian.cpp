#include "emqm/hamiltonian.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

#include "emqm/bits.hpp"

namespace emqm {

namespace {

void note(ValidationReport& rep, double residual, const std::string& what, double tol) {
    rep.max_residual = std::max(rep.max_residual, residual);
    if (residual > tol) {
        rep.pass = false;
        std::ostringstream os;
        os << what << " (residual " << residual << ")";
        rep.violations.push_back(os.str());
    }
}

} // namespace

ValidationReport validate_local_term(const Mat4& g, double tol) {
    ValidationReport rep;
    for (double v : g) {
        if (!std::isfinite(v)) {
            rep.pass = false;
            rep.violations.push_back("non-finite entry");
            return rep;
        }
    }
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            std::ostringstream os;
            os << "antisymmetry at (" << r << "," << c << ")";
            note(rep, std::abs(at(g, r, c) + at(g, c, r)), os.str(), tol);
        }
    for (int r = 0; r < 4; ++r) {
        double rs = 0.0, cs = 0.0;
        for (int c = 0; c < 4; ++c) {
            rs += at(g, r, c);
            cs += at(g, c, r);
        }
        note(rep, std::abs(rs), "row sum " + std::to_string(r), tol);
        note(rep, std::abs(cs), "column sum " + std::to_string(r), tol);
    }
    return rep;
}

std::pair<Mat4, Mat4> split_signed(const Mat4& g) {
    Mat4 gp{}, gm{};
    for (size_t i = 0; i < 16; ++i) {
        gp[i] = std::max(g[i], 0.0);
        gm[i] = std::max(-g[i], 0.0);
    }
    return {gp, gm};
}

Vec4 column_sums(const Mat4& g_part) {
    Vec4 s{};
    for (int c = 0; c < 4; ++c)
        for (int r = 0; r < 4; ++r) s[c] += at(g_part, r, c);
    return s;
}

BoundaryKernel build_boundary_kernel(const LocalTerm& term, double delta_t) {
    if (!(delta_t > 0.0)) throw std::domain_error("boundary kernel: delta_t must be positive");
    auto [gp, gm] = split_signed(term.g);
    const Vec4 cs_p = column_sums(gp);
    const Vec4 cs_m = column_sums(gm);
    for (int a = 0; a < 4; ++a)
        if (std::abs(cs_p[a] - cs_m[a]) > 1e-12)
            throw std::invalid_argument("boundary kernel: generator column sums not zero");

    BoundaryKernel k;
    k.site = term.site;
    k.delta_t = delta_t;
    for (int b = 0; b < 4; ++b)
        for (int a = 0; a < 4; ++a) {
            const double diag = (b == a) ? 1.0 - delta_t * cs_p[a] : 0.0;
            at(k.b_plus, b, a) = delta_t * at(gp, b, a) + diag;
            at(k.b_minus, b, a) = delta_t * at(gm, b, a) + diag;
        }
    for (double v : k.b_plus)
        if (v < 0.0) throw std::domain_error("boundary kernel: delta_t too large (negative entry)");
    for (double v : k.b_minus)
        if (v < 0.0) throw std::domain_error("boundary kernel: delta_t too large (negative entry)");
    return k;
}

std::vector<BoundaryKernel> build_kernels(const HamiltonianSpec& spec, double delta_t) {
    std::vector<BoundaryKernel> out;
    out.reserve(spec.terms.size());
    for (const auto& t : spec.terms) out.push_back(build_boundary_kernel(t, delta_t));
    return out;
}

std::vector<double> apply_boundary_layer(const std::vector<BoundaryKernel>& kernels, int n,
                                         LayerParity parity, KernelSign sign,
                                         const std::vector<double>& v) {
    if (v.size() != (1ull << n)) throw std::invalid_argument("boundary layer: dimension mismatch");
    std::vector<double> out = v;
    const int start = (parity == LayerParity::odd) ? 1 : 2;
    for (int x = start; x <= n; x += 2) {
        const auto& k = kernels[static_cast<size_t>(x - 1)];
        apply_pair_kernel(out, n, x, sign == KernelSign::plus ? k.b_plus : k.b_minus);
    }
    return out;
}

HamiltonianSpec make_named_spec(const std::string& name, int n) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("spec: n must be even and >= 2");
    HamiltonianSpec spec;
    spec.n = n;
    spec.terms.resize(static_cast<size_t>(n));
    for (int x = 1; x <= n; ++x) spec.terms[static_cast<size_t>(x - 1)].site = x;
    if (name == "yx-y") {
        // G_x = -i(Y_x X_{x+1} - Y_x) in the pair basis 00,01,10,11.
        const Mat4 g = {0, 0, 1,  -1, //
                        0, 0, -1, 1,  //
                        -1, 1, 0, 0,  //
                        1, -1, 0, 0};
        for (auto& t : spec.terms) t.g = g;
    } else if (name == "zero") {
        // all terms zero
    } else {
        throw std::invalid_argument("unknown named spec: " + name);
    }
    validate_spec(spec);
    return spec;
}

HamiltonianSpec parse_spec(std::istream& in) {
    HamiltonianSpec spec;
    spec.n = 0;
    std::string line;
    std::vector<std::pair<int, Mat4>> terms;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw) || kw[0] == '#') continue;
        if (kw == "n") {
            if (!(ls >> spec.n)) throw std::runtime_error("spec parse: bad n line");
        } else if (kw == "term") {
            int x = 0;
            if (!(ls >> x)) throw std::runtime_error("spec parse: bad term site");
            Mat4 g{};
            for (auto& v : g)
                if (!(ls >> v)) throw std::runtime_error("spec parse: term needs 16 reals");
            terms.emplace_back(x, g);
        } else {
            throw std::runtime_error("spec parse: unknown keyword '" + kw + "'");
        }
    }
    if (spec.n < 2 || spec.n % 2 != 0)
        throw std::runtime_error("spec parse: n must be even and >= 2");
    spec.terms.resize(static_cast<size_t>(spec.n));
    for (int x = 1; x <= spec.n; ++x) spec.terms[static_cast<size_t>(x - 1)].site = x;
    for (const auto& [x, g] : terms) {
        if (x < 1 || x > spec.n) throw std::runtime_error("spec parse: term site out of range");
        spec.terms[static_cast<size_t>(x - 1)].g = g;
    }
    validate_spec(spec);
    return spec;
}

HamiltonianSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec file: " + path);
    return parse_spec(in);
}

void write_spec(std::ostream& out, const HamiltonianSpec& spec) {
    out << "n " << spec.n << "\n";
    char buf[64];
    for (const auto& t : spec.terms) {
        out << "term " << t.site;
        for (double v : t.g) {
            std::snprintf(buf, sizeof buf, " %.17g", v);
            out << buf;
        }
        out << "\n";
    }
}

void validate_spec(const HamiltonianSpec& spec) {
    if (spec.n < 2 || spec.n % 2 != 0)
        throw std::invalid_argument("spec: n must be even and >= 2");
    if (spec.terms.size() != static_cast<size_t>(spec.n))
        throw std::invalid_argument("spec: expected exactly n terms");
    for (int x = 1; x <= spec.n; ++x) {
        const auto& t = spec.terms[static_cast<size_t>(x - 1)];
        if (t.site != x) throw std::invalid_argument("spec: terms must be ordered by site");
        const auto rep = validate_local_term(t.g);
        if (!rep.pass)
            throw std::invalid_argument("spec: term " + std::to_string(x) +
                                        " violates generator constraints: " + rep.violations.front());
    }
}

Eigen::MatrixXd embed_pair_op(const Mat4& op, int n, int x) {
    const int N = 1 << n;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N, N);
    const BondBits b = make_bond_bits(n, x);
    const std::uint32_t m_hi = 1u << b.sh_hi;
    const std::uint32_t m_lo = 1u << b.sh_lo;
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(N); ++i) {
        if (i & (m_hi | m_lo)) continue;
        std::uint32_t idx[4];
        for (std::uint32_t p = 0; p < 4; ++p) idx[p] = with_pair(i, b, p);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) out(idx[r], idx[c]) = at(op, r, c);
    }
    return out;
}

Eigen::MatrixXd assemble_dense(const HamiltonianSpec& spec) {
    const int N = 1 << spec.n;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(N, N);
    for (const auto& t : spec.terms) g += embed_pair_op(t.g, spec.n, t.site);
    return g;
}

Eigen::MatrixXd realify_operator(const Eigen::Matrix4cd& h) {
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("realify: input term must be Hermitian");
    const Eigen::Matrix4d re = h.real();
    const Eigen::Matrix4d im = h.imag();
    Eigen::Matrix2d iy;          // i * sigma^2, real antisymmetric
    iy << 0.0, 1.0, -1.0, 0.0;
    const Eigen::Matrix2d id2 = Eigen::Matrix2d::Identity();
    // G~ = -i H~ = Im(H) (x) 1 + Re(H) (x) (i sigma^2)
    Eigen::MatrixXd out(8, 8);
    out.setZero();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            out.block<2, 2>(2 * r, 2 * c) = im(r, c) * id2 + re(r, c) * iy;
    return out;
}

Eigen::VectorXd realify_state(const Eigen::VectorXcd& psi, int aux_qubits) {
    if (aux_qubits < 1) throw std::invalid_argument("realify_state: need at least one aux qubit");
    using cd = std::complex<double>;
    const cd inv_sqrt2(1.0 / std::sqrt(2.0), 0.0);
    Eigen::VectorXcd minus_i(2), plus_i(2);
    minus_i << inv_sqrt2, cd(0.0, -1.0) * inv_sqrt2; // |-i>
    plus_i << inv_sqrt2, cd(0.0, 1.0) * inv_sqrt2;   // |+i>
    Eigen::VectorXcd chi_m = Eigen::VectorXcd::Ones(1);
    Eigen::VectorXcd chi_p = Eigen::VectorXcd::Ones(1);
    for (int k = 0; k < aux_qubits; ++k) {
        chi_m = Eigen::kroneckerProduct(chi_m, minus_i).eval();
        chi_p = Eigen::kroneckerProduct(chi_p, plus_i).eval();
    }
    Eigen::VectorXcd out = inv_sqrt2 * (Eigen::kroneckerProduct(psi, chi_m).eval() +
                                        Eigen::kroneckerProduct(psi.conjugate(), chi_p).eval());
    if (out.imag().cwiseAbs().maxCoeff() > 1e-12)
        throw std::logic_error("realify_state: output not real");
    return out.real();
}

Eigen::MatrixXd zero_sum_extend_operator(const Eigen::MatrixXd& op) {
    Eigen::Matrix2d proj; // |-><-|
    proj << 0.5, -0.5, -0.5, 0.5;
    const Eigen::Index d = op.rows();
    Eigen::MatrixXd out(2 * d, 2 * d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) out.block<2, 2>(2 * r, 2 * c) = op(r, c) * proj;
    return out;
}

Eigen::VectorXd zero_sum_extend_state(const Eigen::VectorXd& v, int qubits) {
    Eigen::Vector2d minus;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    minus << inv_sqrt2, -inv_sqrt2;
    Eigen::VectorXd out = v;
    for (int k = 0; k < qubits; ++k) out = Eigen::kroneckerProduct(out, minus).eval();
    return out;
}

Eigen::MatrixXd map_local_term(const Eigen::Matrix4cd& h) {
    return zero_sum_extend_operator(realify_operator(h));
}

} // namespace emqm
