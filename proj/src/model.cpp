#include "kwi/model.hpp"

#include <cmath>

namespace kwi {

namespace {

// Coupling terms f1, f2 of the second-order equations; 2*pi-periodic in both
// angles. Arguments are wrapped so lattice translates evaluate identically.
inline double coupling_f1(double e1, double e2, double alpha) {
    return -(1.0 / 3.0) * (2.0 * std::cos(alpha) * std::sin(wrap_angle(e1)) +
                           std::sin(wrap_angle(e2 + alpha)) +
                           std::sin(wrap_angle(e1 - e2 - alpha)));
}

inline double coupling_f2(double e1, double e2, double alpha) {
    return -(1.0 / 3.0) * (2.0 * std::cos(alpha) * std::sin(wrap_angle(e2)) +
                           std::sin(wrap_angle(e1 + alpha)) +
                           std::sin(wrap_angle(e2 - e1 - alpha)));
}

// Residual of the cluster-phase equation g(s) = 2 cos(a) sin(s) + sin(a) + sin(s-a).
inline double cluster_residual(double s, double alpha) {
    return 2.0 * std::cos(alpha) * std::sin(s) + std::sin(alpha) + std::sin(s - alpha);
}

double wrap_positive(double x) {
    double r = std::fmod(x, two_pi);
    return r < 0.0 ? r + two_pi : r;
}

} // namespace

State vector_field(const State& s, const Params& p) {
    State d;
    d[0] = s[1];
    d[1] = -p.epsilon * s[1] + p.mu * coupling_f1(s[0], s[2], p.alpha);
    d[2] = s[3];
    d[3] = -p.epsilon * s[3] + p.mu * coupling_f2(s[0], s[2], p.alpha);
    return d;
}

Eigen::Matrix4d jacobian(const State& s, const Params& p) {
    const double e1 = s[0], e2 = s[2], a = p.alpha;
    const double d11 = -(1.0 / 3.0) * (2.0 * std::cos(a) * std::cos(wrap_angle(e1)) +
                                       std::cos(wrap_angle(e1 - e2 - a)));
    const double d12 = -(1.0 / 3.0) * (std::cos(wrap_angle(e2 + a)) -
                                       std::cos(wrap_angle(e1 - e2 - a)));
    const double d21 = -(1.0 / 3.0) * (std::cos(wrap_angle(e1 + a)) -
                                       std::cos(wrap_angle(e2 - e1 - a)));
    const double d22 = -(1.0 / 3.0) * (2.0 * std::cos(a) * std::cos(wrap_angle(e2)) +
                                       std::cos(wrap_angle(e2 - e1 - a)));
    Eigen::Matrix4d J;
    J << 0.0, 1.0, 0.0, 0.0,
         p.mu * d11, -p.epsilon, p.mu * d12, 0.0,
         0.0, 0.0, 0.0, 1.0,
         p.mu * d21, 0.0, p.mu * d22, -p.epsilon;
    return J;
}

double cluster_phase(double alpha) {
    const double c = std::cos(alpha);
    if (std::abs(c) < 1e-12)
        throw DegenerateEquilibrium("cluster state coincides with O at alpha = pi/2");
    // Closed form: the nontrivial root of g has tan(s/2) = -3 cos(a)/sin(a).
    double s = wrap_positive(std::atan2(-6.0 * std::tan(alpha), std::tan(alpha) * std::tan(alpha) - 9.0));
    if (std::abs(cluster_residual(s, alpha)) > 1e-12) {
        // Bisection fallback on the half-angle factor 3 cos(a) cos(u) + sin(a) sin(u),
        // which changes sign over (0, pi) whenever cos(a) != 0.
        double lo = 1e-12, hi = 3.141592653589793 - 1e-12;
        auto h = [&](double u) { return 3.0 * std::cos(alpha) * std::cos(u) + std::sin(alpha) * std::sin(u); };
        double hlo = h(lo);
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            if ((h(mid) > 0.0) == (hlo > 0.0)) { lo = mid; hlo = h(mid); } else { hi = mid; }
        }
        s = wrap_positive(2.0 * 0.5 * (lo + hi));
    }
    return s;
}

State equilibrium(const EquilibriumId& id, const Params& p) {
    State base = State::Zero();
    switch (id.kind) {
        case EquilibriumKind::O:
            break;
        case EquilibriumKind::S12: {
            const double s = cluster_phase(p.alpha);
            base << 0.0, 0.0, s, 0.0;
            break;
        }
        case EquilibriumKind::S23: {
            const double s = cluster_phase(p.alpha);
            const double ms = wrap_positive(-s);
            base << ms, 0.0, ms, 0.0;
            break;
        }
        case EquilibriumKind::S31: {
            const double s = cluster_phase(p.alpha);
            base << s, 0.0, 0.0, 0.0;
            break;
        }
    }
    base[0] += two_pi * id.p;
    base[2] += two_pi * id.q;
    return base;
}

namespace {

// Roots of lambda^2 + eps*lambda - a = 0 as a complex pair.
Eigen::Vector2cd quadratic_pair(double eps, double a) {
    const std::complex<double> disc = std::complex<double>(eps * eps + 4.0 * a, 0.0);
    const std::complex<double> root = std::sqrt(disc);
    Eigen::Vector2cd out;
    out[0] = 0.5 * (-eps + root);
    out[1] = 0.5 * (-eps - root);
    return out;
}

using Vec4c = Eigen::Vector4cd;

// Eigenvector of the 4x4 Jacobian for eigenvalue lam, given the planar
// direction pattern: "par" selects components (i0, i0+1) carrying (1, lam).
Vec4c block_vector(int i0, std::complex<double> lam) {
    Vec4c v = Vec4c::Zero();
    v[i0] = 1.0;
    v[i0 + 1] = lam;
    v.normalize();
    return v;
}

} // namespace

EigenSplit eigen_split(const EquilibriumId& id, const Params& p) {
    const State x = equilibrium(id, p);
    const Eigen::Matrix4d J = jacobian(x, p);
    const double eps = p.epsilon;
    EigenSplit out;

    switch (id.kind) {
        case EquilibriumKind::O: {
            // J decouples into two identical blocks; parallel and transverse
            // spectra coincide by symmetry.
            const double a = J(1, 0);
            out.parallel = quadratic_pair(eps, a);
            out.transverse = out.parallel;
            for (int i = 0; i < 2; ++i) {
                out.parallel_vectors.col(i) = block_vector(0, out.parallel[i]);
                out.transverse_vectors.col(i) = block_vector(2, out.transverse[i]);
            }
            return out;
        }
        case EquilibriumKind::S31: {
            // Block upper-triangular: (eta1,psi1) is the in-subspace plane.
            const double a_par = J(1, 0);
            const double a_tr = J(3, 2);
            out.parallel = quadratic_pair(eps, a_par);
            out.transverse = quadratic_pair(eps, a_tr);
            for (int i = 0; i < 2; ++i) {
                out.parallel_vectors.col(i) = block_vector(0, out.parallel[i]);
                // full eigenvector: (v1, v2, 1, lam) with the 2x2 parallel block
                // solving (J_par - lam I)(v1,v2)^T = -(0, J(1,2))^T
                const std::complex<double> lam = out.transverse[i];
                Eigen::Matrix2cd A;
                A << -lam, 1.0, a_par, -eps - lam;
                Eigen::Vector2cd rhs(0.0, -J(1, 2));
                Eigen::Vector2cd v12 = A.fullPivLu().solve(rhs);
                Vec4c v;
                v << v12[0], v12[1], 1.0, lam;
                v.normalize();
                out.transverse_vectors.col(i) = v;
            }
            return out;
        }
        case EquilibriumKind::S12: {
            // Block lower-triangular: (eta2,psi2) is the in-subspace plane.
            const double a_par = J(3, 2);
            const double a_tr = J(1, 0);
            out.parallel = quadratic_pair(eps, a_par);
            out.transverse = quadratic_pair(eps, a_tr);
            for (int i = 0; i < 2; ++i) {
                out.parallel_vectors.col(i) = block_vector(2, out.parallel[i]);
                const std::complex<double> lam = out.transverse[i];
                Eigen::Matrix2cd A;
                A << -lam, 1.0, a_par, -eps - lam;
                Eigen::Vector2cd rhs(0.0, -J(3, 0));
                Eigen::Vector2cd v34 = A.fullPivLu().solve(rhs);
                Vec4c v;
                v << 1.0, lam, v34[0], v34[1];
                v.normalize();
                out.transverse_vectors.col(i) = v;
            }
            return out;
        }
        case EquilibriumKind::S23: {
            // Diagonalize the swap symmetry: symmetric vectors (x,y,x,y) are
            // parallel to E23, antisymmetric (x,y,-x,-y) transverse. At S23
            // the Jacobian commutes with the swap, so both planes reduce to
            // companion blocks.
            const double a_sym = J(1, 0) + J(1, 2);
            const double a_anti = J(1, 0) - J(1, 2);
            out.parallel = quadratic_pair(eps, a_sym);
            out.transverse = quadratic_pair(eps, a_anti);
            for (int i = 0; i < 2; ++i) {
                Vec4c vp, vt;
                vp << 1.0, out.parallel[i], 1.0, out.parallel[i];
                vt << 1.0, out.transverse[i], -1.0, -out.transverse[i];
                vp.normalize();
                vt.normalize();
                out.parallel_vectors.col(i) = vp;
                out.transverse_vectors.col(i) = vt;
            }
            return out;
        }
    }
    throw Error("unreachable equilibrium kind");
}

SymmetryOp symmetry_op(SymmetryTag tag) {
    SymmetryOp op;
    op.tag = tag;
    Eigen::Matrix4d& m = op.matrix;
    Eigen::Matrix2i& l = op.lift_action;
    switch (tag) {
        case SymmetryTag::Identity:
            break;
        case SymmetryTag::Rho:
            m << 0, 0, -1, 0,
                 0, 0, 0, -1,
                 1, 0, -1, 0,
                 0, 1, 0, -1;
            l << 0, -1, 1, -1;
            break;
        case SymmetryTag::Rho2:
            m << -1, 0, 1, 0,
                 0, -1, 0, 1,
                 -1, 0, 0, 0,
                 0, -1, 0, 0;
            l << -1, 1, -1, 0;
            break;
        case SymmetryTag::Kappa:
            m << 0, 0, 1, 0,
                 0, 0, 0, 1,
                 1, 0, 0, 0,
                 0, 1, 0, 0;
            l << 0, 1, 1, 0;
            break;
        case SymmetryTag::KappaPrime:
            // The (13) transposition, kappa composed with rho. Fixes E31.
            m << 1, 0, -1, 0,
                 0, 1, 0, -1,
                 0, 0, -1, 0,
                 0, 0, 0, -1;
            l << 1, -1, 0, -1;
            break;
    }
    return op;
}

std::pair<std::complex<double>, std::complex<double>> to_symmetric(const State& s) {
    const std::complex<double> w2 = std::polar(1.0, -two_pi / 3.0); // w^2 = conj(w)
    return {-s[0] * w2 - s[2], -s[1] * w2 - s[3]};
}

double observable_D(const State& s) {
    auto half_sin_sq = [](double x) {
        const double v = std::sin(0.5 * x);
        return v * v;
    };
    const double f1 = half_sin_sq(s[0]) + s[1] * s[1];
    const double f2 = half_sin_sq(s[2]) + s[3] * s[3];
    const double f3 = half_sin_sq(s[0] - s[2]) + (s[1] - s[3]) * (s[1] - s[3]);
    return f1 * f2 * f3;
}

} // namespace kwi
