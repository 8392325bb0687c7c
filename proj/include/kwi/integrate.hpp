#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "kwi/errors.hpp"
#include "kwi/model.hpp"

namespace kwi {

struct IntegrationStats {
    std::int64_t steps{0};
    std::int64_t rejected{0};
    std::int64_t evaluations{0};
};

/// Dense-output solution of an initial value problem. Stores the accepted
/// step nodes plus the interpolation coefficients of each step, so the state
/// (and the interpolant's time derivative) can be queried anywhere in the
/// integration span. Immutable after construction; integration direction may
/// be forward or backward.
class Trajectory {
  public:
    struct Step {
        double t;                               // left node (in time direction)
        double h;                               // signed step size
        std::array<Eigen::VectorXd, 5> cont;    // dense-output coefficients
    };

    int dim() const { return dim_; }
    double t_begin() const { return t_begin_; }
    double t_end() const { return t_end_; }
    bool forward() const { return t_end_ >= t_begin_; }

    std::size_t node_count() const { return steps_.size() + 1; }
    double node_time(std::size_t i) const;
    Eigen::VectorXd node_state(std::size_t i) const;

    /// Interpolated state at t (t clamped to the span).
    Eigen::VectorXd at(double t) const;
    /// Time derivative of the interpolant at t.
    Eigen::VectorXd derivative_at(double t) const;

    IntegrationStats stats;

    // populated by the integrator
    std::vector<Step> steps_;
    double t_begin_{0.0}, t_end_{0.0};
    Eigen::VectorXd y_begin_, y_end_;
    int dim_{0};

  private:
    const Step& locate(double t) const;
};

using OdeRhs = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct StepOptions {
    double tol{1e-10};          // atol = rtol = tol, max-norm
    double initial_step{0.0};   // 0 = automatic
    double max_step{0.0};       // 0 = span
    double fixed_step{0.0};     // nonzero disables error control (order tests)
    std::int64_t max_steps{20'000'000};
};

/// Adaptive Dormand-Prince 5(4) with PI step-size control and the classic
/// 4th-order continuous extension. Throws StepSizeUnderflow when the accepted
/// step would fall below 1e-14.
Trajectory integrate_ode(const OdeRhs& f, const Eigen::VectorXd& y0, double t0, double t1,
                         const StepOptions& opt);

/// Integrate the model vector field.
Trajectory integrate(const State& s0, const Params& p, double t0, double t1, double tol);

/// Fixed-step variant used by convergence-order tests.
Trajectory integrate_fixed(const State& s0, const Params& p, double t0, double t1, double h);

/// Base solution plus k columns of the variational equation, propagated as a
/// single augmented system with shared error control.
struct TangentBundle {
    Trajectory augmented;   // dim 4 + 4k
    int k{0};

    State base_at(double t) const;
    Eigen::MatrixXd columns_at(double t) const;     // 4 x k
    State base_end() const;
    Eigen::MatrixXd columns_end() const;
};

TangentBundle integrate_variational(const State& s0, const Eigen::MatrixXd& V0, const Params& p,
                                    double t0, double t1, double tol);

/// What to look for along a trajectory.
struct EventSpec {
    enum class Kind { SectionCrossing, LocalExtremum };
    Kind kind{Kind::SectionCrossing};

    // section crossing: functional . y == level, with optional direction
    // filter on the time derivative of the functional (+1, -1, or 0 = both)
    Eigen::Vector4d functional{Eigen::Vector4d::Zero()};
    double level{0.0};
    int direction{0};

    // local extremum of observable(y); gradient is used to evaluate the
    // interpolant's derivative when polishing
    std::function<double(const State&)> observable;
    std::function<Eigen::Vector4d(const State&)> gradient;

    static EventSpec section(const Eigen::Vector4d& functional, double level, int direction);
    static EventSpec extremum(std::function<double(const State&)> observable,
                              std::function<Eigen::Vector4d(const State&)> gradient);
};

struct Event {
    double t;
    State state;
};

/// Locate all events of the given kind on a 4-dimensional trajectory. Event
/// times are refined on the dense output to 1e-10 in t and returned in time
/// order. Tangential touches and constant sections yield no events.
std::vector<Event> detect_events(const Trajectory& tr, const EventSpec& ev);

} // namespace kwi
