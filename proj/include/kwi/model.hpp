#pragma once

#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "kwi/errors.hpp"

namespace kwi {

inline constexpr double two_pi = 6.283185307179586476925286766559;

/// Model parameters of the reduced system. Inertia is fixed to 1 and the
/// intrinsic frequency is eliminated by the phase-shift symmetry, so neither
/// appears here.
struct Params {
    double alpha{0.0};    ///< phase lag (radians, stored unreduced)
    double mu{0.0};       ///< coupling strength, mu > 0
    double epsilon{0.1};  ///< damping, epsilon > 0
};

/// Phase-space point (eta1, psi1, eta2, psi2). The eta are lifted angles on
/// the covering space R (never wrapped), psi their velocities. This component
/// order is canonical everywhere in the library.
using State = Eigen::Vector4d;

enum class EquilibriumKind { O, S12, S23, S31 };

/// Names an equilibrium together with its 2*pi lattice lift (p, q).
struct EquilibriumId {
    EquilibriumKind kind{EquilibriumKind::O};
    int p{0};
    int q{0};
};

/// Eigen-decomposition of the Jacobian at an equilibrium, split into the pair
/// parallel to the invariant subspace containing it and the transverse pair.
/// Each pair sums to -epsilon. For O the two spectra coincide.
struct EigenSplit {
    Eigen::Vector2cd parallel;
    Eigen::Vector2cd transverse;
    Eigen::Matrix<std::complex<double>, 4, 2> parallel_vectors;
    Eigen::Matrix<std::complex<double>, 4, 2> transverse_vectors;
};

enum class SymmetryTag { Identity, Rho, Rho2, Kappa, KappaPrime };

/// A symmetry-group element: its linear action on State and the induced
/// integer action on lattice lift indices (p, q).
struct SymmetryOp {
    SymmetryTag tag{SymmetryTag::Identity};
    Eigen::Matrix4d matrix{Eigen::Matrix4d::Identity()};
    Eigen::Matrix2i lift_action{Eigen::Matrix2i::Identity()};
};

/// Reduce an angle to (-pi, pi]. Exact for exact inputs (IEEE remainder), so
/// the vector field is exactly periodic under representable 2*pi shifts.
inline double wrap_angle(double x) { return std::remainder(x, two_pi); }

/// Right-hand side of the reduced first-order system.
State vector_field(const State& s, const Params& p);

/// Linearization of vector_field at s. trace == -2*epsilon by structure.
Eigen::Matrix4d jacobian(const State& s, const Params& p);

/// Nontrivial cluster phase s(alpha), wrapped into [0, 2*pi). Independent of
/// mu and epsilon. Throws DegenerateEquilibrium at alpha = pi/2 where the
/// cluster state merges with O.
double cluster_phase(double alpha);

/// Equilibrium state in canonical order, shifted by the lattice lift.
State equilibrium(const EquilibriumId& id, const Params& p);

/// Eigenvalues/eigenvectors at an equilibrium classified parallel/transverse
/// to the invariant subspace containing it.
EigenSplit eigen_split(const EquilibriumId& id, const Params& p);

SymmetryOp symmetry_op(SymmetryTag tag);

inline State apply_symmetry(const SymmetryOp& g, const State& s) { return g.matrix * s; }

/// Complex phase pair (phi, phi_dot) with phi = -eta1*w^2 - eta2,
/// w = exp(2*pi*i/3). The cyclic symmetry acts on phi by multiplication by w.
std::pair<std::complex<double>, std::complex<double>> to_symmetric(const State& s);

/// Nonnegative observable that vanishes exactly on the union E of the three
/// cluster subspaces (modulo the 2*pi lattice) and is positive elsewhere.
double observable_D(const State& s);

} // namespace kwi
