#include <doctest.h>

#include <cmath>
#include <random>

#include "kwi/model.hpp"

using namespace kwi;

namespace {

// independent scalar oracle: bisection root of g(s) = 2cos(a)sin(s)+sin(a)+sin(s-a)
// on the half-angle factor, avoiding the closed form under test
double cluster_phase_bisection(double alpha) {
    auto g = [&](double s) {
        return 2.0 * std::cos(alpha) * std::sin(s) + std::sin(alpha) + std::sin(s - alpha);
    };
    // scan (0, 2pi) for a bracket away from the trivial root s=0
    const int n = 4000;
    double prev = 1e-4, gprev = g(prev);
    for (int i = 1; i <= n; ++i) {
        const double s = 1e-4 + (two_pi - 2e-4) * i / n;
        const double gs = g(s);
        if ((gprev < 0) != (gs < 0)) {
            double lo = prev, hi = s;
            for (int k = 0; k < 200; ++k) {
                const double mid = 0.5 * (lo + hi);
                if ((g(mid) < 0) == (gprev < 0)) lo = mid; else hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev = s;
        gprev = gs;
    }
    FAIL("no bracket for cluster phase");
    return 0.0;
}

std::mt19937 rng(20240817);

State random_state(double scale = 2.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return State(u(rng), u(rng), u(rng), u(rng));
}

} // namespace

TEST_CASE("vector field vanishes at O and at the cluster states") {
    Params p{1.7, 0.05};
    CHECK(vector_field(State::Zero(), p).norm() == 0.0);

    const double s_oracle = cluster_phase_bisection(1.7);
    CHECK(s_oracle == doctest::Approx(0.744).epsilon(2e-3));
    State s31(s_oracle, 0.0, 0.0, 0.0);
    CHECK(vector_field(s31, p).norm() < 1e-12);

    for (auto kind : {EquilibriumKind::O, EquilibriumKind::S12, EquilibriumKind::S23,
                      EquilibriumKind::S31}) {
        for (int lift = -1; lift <= 1; ++lift) {
            const State eq = equilibrium({kind, lift, -lift}, p);
            CHECK(vector_field(eq, p).norm() < 1e-12);
        }
    }
}

TEST_CASE("equilibrium closed form agrees with the bisection oracle") {
    for (double a : {0.3, 1.0, 1.25, 1.6, 1.7, 1.9, 2.4}) {
        const double s_ref = cluster_phase_bisection(a);
        CHECK(cluster_phase(a) == doctest::Approx(s_ref).epsilon(1e-10));
    }
    CHECK(equilibrium({EquilibriumKind::S31}, Params{0.0, 0.06})[0] ==
          doctest::Approx(3.14159265358979).epsilon(1e-12));
    const State o_shift = equilibrium({EquilibriumKind::O, -1, 0}, Params{1.0, 0.06});
    CHECK(o_shift[0] == doctest::Approx(-two_pi));
    CHECK(o_shift[2] == 0.0);
    CHECK_THROWS_AS(equilibrium({EquilibriumKind::S31}, Params{1.5707963267948966, 0.06}),
                    DegenerateEquilibrium);
}

TEST_CASE("cluster state merges with O at the transcritical point") {
    // s -> 0 as alpha -> pi/2 from both sides
    const double half_pi = 1.5707963267948966;
    for (double d : {1e-2, 1e-3, 1e-4}) {
        const double s_above = cluster_phase(half_pi + d);
        double s_below = cluster_phase(half_pi - d);
        if (s_below > 3.1416) s_below -= two_pi;  // wrapped representative near 0
        CHECK(std::abs(s_above) < 7.0 * d);
        CHECK(std::abs(s_below) < 7.0 * d);
    }
}

TEST_CASE("jacobian matches finite differences and has trace -2 eps") {
    Params p{1.7, 0.05};
    for (int i = 0; i < 20; ++i) {
        const State s = random_state();
        const Eigen::Matrix4d J = jacobian(s, p);
        CHECK(J.trace() == doctest::Approx(-2.0 * p.epsilon).epsilon(1e-14));
        Eigen::Matrix4d Jfd;
        const double h = 1e-6;
        for (int j = 0; j < 4; ++j) {
            State sp = s, sm = s;
            sp[j] += h;
            sm[j] -= h;
            Jfd.col(j) = (vector_field(sp, p) - vector_field(sm, p)) / (2.0 * h);
        }
        CHECK((J - Jfd).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("eigenvalues of O at the organizing center") {
    // numerical eigensolver oracle on the analytic Jacobian
    Params p{1.70111, 0.03317};
    const Eigen::Matrix4d J = jacobian(State::Zero(), p);
    Eigen::EigenSolver<Eigen::Matrix4d> es(J);
    double lp = -1e9, lm = 1e9;
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(es.eigenvalues()[i].imag()) < 1e-12);
        lp = std::max(lp, es.eigenvalues()[i].real());
        lm = std::min(lm, es.eigenvalues()[i].real());
    }
    CHECK(lp == doctest::Approx(0.0325).epsilon(2e-2));
    CHECK(lm == doctest::Approx(-0.1325).epsilon(2e-2));

    const EigenSplit split = eigen_split({EquilibriumKind::O}, p);
    CHECK(split.parallel[0].real() == doctest::Approx(lp).epsilon(1e-10));
    CHECK(split.parallel[0].imag() == 0.0);
    CHECK(split.transverse[1].real() == doctest::Approx(lm).epsilon(1e-10));
}

TEST_CASE("eigen split classification and trace identities") {
    SUBCASE("O below the transcritical point is a stable bifocus") {
        const EigenSplit split = eigen_split({EquilibriumKind::O}, Params{1.0, 0.06});
        for (int i = 0; i < 2; ++i) {
            CHECK(split.parallel[i].real() == doctest::Approx(-0.05).epsilon(1e-12));
            CHECK(split.parallel[i].imag() != 0.0);
        }
    }
    SUBCASE("pair sums equal -epsilon at every cluster state") {
        for (auto kind : {EquilibriumKind::S12, EquilibriumKind::S23, EquilibriumKind::S31}) {
            for (double a : {1.0, 1.25, 1.7, 1.735}) {
                const EigenSplit split = eigen_split({kind}, Params{a, 0.045});
                CHECK(std::abs((split.parallel[0] + split.parallel[1]).real() + 0.1) < 1e-10);
                CHECK(std::abs((split.transverse[0] + split.transverse[1]).real() + 0.1) < 1e-10);
                CHECK(std::abs((split.parallel[0] + split.parallel[1]).imag()) < 1e-10);
            }
        }
    }
    SUBCASE("eigenvectors satisfy the eigenvalue equation") {
        for (auto kind : {EquilibriumKind::S12, EquilibriumKind::S23, EquilibriumKind::S31}) {
            Params p{1.735, 0.0376};
            const Eigen::Matrix4d J = jacobian(equilibrium({kind}, p), p);
            const EigenSplit split = eigen_split({kind}, p);
            for (int i = 0; i < 2; ++i) {
                const auto vp = split.parallel_vectors.col(i);
                const auto vt = split.transverse_vectors.col(i);
                CHECK((J.cast<std::complex<double>>() * vp - split.parallel[i] * vp).norm() <
                      1e-10);
                CHECK((J.cast<std::complex<double>>() * vt - split.transverse[i] * vt).norm() <
                      1e-10);
            }
        }
    }
}

TEST_CASE("symmetry group: relations, equivariance, fixed spaces") {
    const SymmetryOp rho = symmetry_op(SymmetryTag::Rho);
    const SymmetryOp rho2 = symmetry_op(SymmetryTag::Rho2);
    const SymmetryOp kappa = symmetry_op(SymmetryTag::Kappa);
    const SymmetryOp kappap = symmetry_op(SymmetryTag::KappaPrime);
    const SymmetryOp id = symmetry_op(SymmetryTag::Identity);

    CHECK(((rho.matrix * rho.matrix) - rho2.matrix).norm() == 0.0);
    CHECK(((rho.matrix * rho2.matrix) - id.matrix).norm() == 0.0);
    CHECK(((kappa.matrix * kappa.matrix) - id.matrix).norm() == 0.0);
    CHECK(((kappap.matrix * kappap.matrix) - id.matrix).norm() == 0.0);
    CHECK(((kappa.matrix * rho.matrix) - kappap.matrix).norm() == 0.0);
    // lift actions compose the same way
    CHECK(((rho.lift_action * rho.lift_action) - rho2.lift_action).norm() == 0);

    Params p{1.7, 0.05};
    for (int i = 0; i < 100; ++i) {
        const State s = random_state();
        for (const auto& g : {rho, rho2, kappa, kappap, id}) {
            const State lhs = apply_symmetry(g, vector_field(s, p));
            const State rhs = vector_field(apply_symmetry(g, s), p);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
        }
        const State r3 = apply_symmetry(rho, apply_symmetry(rho, apply_symmetry(rho, s)));
        CHECK((r3 - s).cwiseAbs().maxCoeff() < 1e-14);
    }

    // kappa' fixes E31 pointwise
    for (int i = 0; i < 10; ++i) {
        State s = random_state();
        s[2] = 0.0;
        s[3] = 0.0;
        CHECK((apply_symmetry(kappap, s) - s).norm() == 0.0);
    }
    // kappa maps S31 to S12
    Params pk{1.7, 0.06};
    const State s31 = equilibrium({EquilibriumKind::S31}, pk);
    const State s12 = equilibrium({EquilibriumKind::S12}, pk);
    CHECK((apply_symmetry(kappa, s31) - s12).norm() < 1e-14);
}

TEST_CASE("lift action matches the matrix action on lattice points") {
    for (auto tag : {SymmetryTag::Rho, SymmetryTag::Rho2, SymmetryTag::Kappa,
                     SymmetryTag::KappaPrime}) {
        const SymmetryOp g = symmetry_op(tag);
        for (int pp = -2; pp <= 2; ++pp) {
            for (int qq = -2; qq <= 2; ++qq) {
                State lat(two_pi * pp, 0.0, two_pi * qq, 0.0);
                const State img = apply_symmetry(g, lat);
                const Eigen::Vector2i lifted = g.lift_action * Eigen::Vector2i(pp, qq);
                CHECK(img[0] == doctest::Approx(two_pi * lifted[0]));
                CHECK(img[2] == doctest::Approx(two_pi * lifted[1]));
            }
        }
    }
}

TEST_CASE("symmetric coordinates") {
    const std::complex<double> w = std::polar(1.0, two_pi / 3.0);

    SUBCASE("E12 maps to the real line") {
        State s(0.0, 0.0, 1.3, 0.0);
        auto [phi, dphi] = to_symmetric(s);
        CHECK(std::abs(phi.imag()) < 1e-15);
        CHECK(phi.real() == doctest::Approx(-1.3));
        CHECK(std::abs(dphi) < 1e-15);
    }
    SUBCASE("E23 maps to the line R*w") {
        const double x = 0.8;
        State s(x, 0.0, x, 0.0);
        auto [phi, dphi] = to_symmetric(s);
        CHECK(std::abs(phi - x * w) < 1e-14);
        CHECK(std::abs(dphi) < 1e-15);
    }
    SUBCASE("rho acts by multiplication with w") {
        const SymmetryOp rho = symmetry_op(SymmetryTag::Rho);
        for (int i = 0; i < 25; ++i) {
            const State s = random_state();
            auto [phi, dphi] = to_symmetric(s);
            auto [phi_r, dphi_r] = to_symmetric(apply_symmetry(rho, s));
            CHECK(std::abs(phi_r - w * phi) < 1e-13);
            CHECK(std::abs(dphi_r - w * dphi) < 1e-13);
        }
    }
}

TEST_CASE("observable D vanishes exactly on E and only there") {
    CHECK(observable_D(State(0.0, 0.0, 1.0, 0.5)) == 0.0);
    CHECK(observable_D(State(two_pi, 0.0, 0.0, 0.0)) < 1e-30);
    CHECK(observable_D(State(1.1, 0.2, 1.1, 0.2)) == 0.0);

    const State s(3.14159265, 0.1, 2.0, -0.3);
    const double d = observable_D(s);
    CHECK(d > 0.0);
    // recompute the three factors independently
    auto sq = [](double x) { return x * x; };
    const double f1 = sq(std::sin(s[0] / 2)) + sq(s[1]);
    const double f2 = sq(std::sin(s[2] / 2)) + sq(s[3]);
    const double f3 = sq(std::sin((s[0] - s[2]) / 2)) + sq(s[1] - s[3]);
    CHECK(d == doctest::Approx(f1 * f2 * f3).epsilon(1e-14));

    for (int i = 0; i < 50; ++i) {
        State s2 = random_state();
        if (observable_D(s2) == 0.0) continue;  // measure-zero, but be safe
        CHECK(observable_D(s2) > 0.0);
    }
}

TEST_CASE("lattice periodicity is exact at representable points") {
    Params p{1.7, 0.05};
    // 0.5 + 2pi is exactly representable as a double sum, so the wrapped
    // arguments coincide bit for bit
    for (const double e1 : {0.5, -1.25, 2.0}) {
        State s(e1, 0.3, -0.75, 0.1);
        State shifted = s;
        shifted[0] += two_pi;
        CHECK((vector_field(shifted, p) - vector_field(s, p)).norm() == 0.0);
        State shifted2 = s;
        shifted2[2] -= two_pi;
        CHECK((vector_field(shifted2, p) - vector_field(s, p)).norm() == 0.0);
    }
}

TEST_CASE("invariant subspace E31 is exactly preserved") {
    Params p{1.83, 0.041};
    for (int i = 0; i < 20; ++i) {
        State s = random_state(3.0);
        s[2] = 0.0;
        s[3] = 0.0;
        const State d = vector_field(s, p);
        CHECK(d[2] == 0.0);
        CHECK(d[3] == 0.0);
    }
}
