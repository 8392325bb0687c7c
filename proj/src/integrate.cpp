#include "kwi/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace kwi {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// continuous-extension weights
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                  const Eigen::VectorXd& y1, double tol) {
    double m = 0.0;
    for (int i = 0; i < err.size(); ++i) {
        const double sc = tol + tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        m = std::max(m, std::abs(err[i]) / sc);
    }
    return m;
}

double initial_step(const OdeRhs& f, double t0, const Eigen::VectorXd& y0,
                    const Eigen::VectorXd& f0, double dir, double tol, double hmax,
                    IntegrationStats& stats) {
    const double d0 = y0.cwiseAbs().maxCoeff();
    const double d1n = f0.cwiseAbs().maxCoeff();
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, hmax);
    Eigen::VectorXd y1 = y0 + dir * h0 * f0;
    Eigen::VectorXd f1(y0.size());
    f(t0 + dir * h0, y1, f1);
    ++stats.evaluations;
    const double d2 = (f1 - f0).cwiseAbs().maxCoeff() / h0;
    double h1;
    if (std::max(d1n, d2) <= 1e-15)
        h1 = std::max(1e-6, h0 * 1e-3);
    else
        h1 = std::pow(0.01 / std::max(d1n, d2), 0.2);
    return std::min({100.0 * h0, h1, hmax}) * std::pow(tol / 1e-10, 0.2);
}

} // namespace

double Trajectory::node_time(std::size_t i) const {
    if (i < steps_.size()) return steps_[i].t;
    return t_end_;
}

Eigen::VectorXd Trajectory::node_state(std::size_t i) const {
    if (i < steps_.size()) return steps_[i].cont[0];
    return y_end_;
}

const Trajectory::Step& Trajectory::locate(double t) const {
    // binary search over the step left-nodes in integration direction
    const bool fwd = forward();
    std::size_t lo = 0, hi = steps_.size();
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        const bool left = fwd ? (steps_[mid].t <= t) : (steps_[mid].t >= t);
        if (left) lo = mid; else hi = mid;
    }
    return steps_[lo];
}

Eigen::VectorXd Trajectory::at(double t) const {
    if (steps_.empty()) return y_begin_;
    const bool fwd = forward();
    const double tc = fwd ? std::clamp(t, t_begin_, t_end_) : std::clamp(t, t_end_, t_begin_);
    const Step& s = locate(tc);
    const double th = (tc - s.t) / s.h;
    const double th1 = 1.0 - th;
    return s.cont[0] +
           th * (s.cont[1] + th1 * (s.cont[2] + th * (s.cont[3] + th1 * s.cont[4])));
}

Eigen::VectorXd Trajectory::derivative_at(double t) const {
    if (steps_.empty()) return Eigen::VectorXd::Zero(dim_);
    const bool fwd = forward();
    const double tc = fwd ? std::clamp(t, t_begin_, t_end_) : std::clamp(t, t_end_, t_begin_);
    const Step& s = locate(tc);
    const double th = (tc - s.t) / s.h;
    // y(th) = c0 + th c1 + th(1-th) c2 + th^2(1-th) c3 + th^2(1-th)^2 c4
    Eigen::VectorXd d = s.cont[1] + (1.0 - 2.0 * th) * s.cont[2] +
                        th * (2.0 - 3.0 * th) * s.cont[3] +
                        2.0 * th * (1.0 - th) * (1.0 - 2.0 * th) * s.cont[4];
    return d / s.h;
}

Trajectory integrate_ode(const OdeRhs& f, const Eigen::VectorXd& y0, double t0, double t1,
                         const StepOptions& opt) {
    if (!(t1 != t0)) throw Error("integrate_ode: empty time span");
    if (!(opt.tol > 0.0)) throw Error("integrate_ode: tol must be positive");

    const int n = static_cast<int>(y0.size());
    const double dir = (t1 > t0) ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    const double hmax = opt.max_step > 0.0 ? std::min(opt.max_step, span) : span;

    Trajectory tr;
    tr.dim_ = n;
    tr.t_begin_ = t0;
    tr.y_begin_ = y0;
    tr.steps_.reserve(256);

    Eigen::VectorXd y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), ynew(n),
                    err(n);
    double t = t0;
    f(t, y, k1);
    ++tr.stats.evaluations;

    double h;
    if (opt.fixed_step > 0.0)
        h = opt.fixed_step;
    else if (opt.initial_step > 0.0)
        h = std::min(opt.initial_step, hmax);
    else
        h = initial_step(f, t0, y, k1, dir, opt.tol, hmax, tr.stats);

    double facold = 1e-4;
    const bool adaptive = opt.fixed_step <= 0.0;

    while (dir * (t1 - t) > 0.0) {
        if (tr.stats.steps + tr.stats.rejected > opt.max_steps)
            throw Error("integrate_ode: step budget exhausted");
        h = std::min(h, hmax);
        bool last = false;
        if (std::abs(t1 - t) <= h * (1.0 + 1e-12)) {
            h = std::abs(t1 - t);
            last = true;
        }
        if (adaptive && h < 1e-14)
            throw StepSizeUnderflow("integrate_ode: step size underflow (stiffness or blowup)");
        const double hs = dir * h;

        yt = y + hs * (a21 * k1);
        f(t + c2 * hs, yt, k2);
        yt = y + hs * (a31 * k1 + a32 * k2);
        f(t + c3 * hs, yt, k3);
        yt = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * hs, yt, k4);
        yt = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * hs, yt, k5);
        yt = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        f(t + hs, yt, k6);
        ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        f(t + hs, ynew, k7);
        tr.stats.evaluations += 6;

        err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double E = adaptive ? error_norm(err, y, ynew, opt.tol) : 0.0;

        if (E <= 1.0) {
            Trajectory::Step st;
            st.t = t;
            st.h = hs;
            const Eigen::VectorXd ydiff = ynew - y;
            const Eigen::VectorXd bspl = hs * k1 - ydiff;
            st.cont[0] = y;
            st.cont[1] = ydiff;
            st.cont[2] = bspl;
            st.cont[3] = ydiff - hs * k7 - bspl;
            st.cont[4] = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            tr.steps_.push_back(std::move(st));

            t = last ? t1 : t + hs;
            y.swap(ynew);
            k1.swap(k7);
            ++tr.stats.steps;

            if (adaptive) {
                const double fac11 = std::pow(std::max(E, 1e-16), 0.17);
                double fac = fac11 / std::pow(facold, 0.04);
                fac = std::max(0.2, std::min(5.0, fac / 0.9));
                h = h / fac;
                facold = std::max(E, 1e-4);
            }
        } else {
            ++tr.stats.rejected;
            const double fac11 = std::pow(E, 0.17);
            h = h / std::min(5.0, fac11 / 0.9);
        }
    }

    tr.t_end_ = t1;
    tr.y_end_ = y;
    return tr;
}

Trajectory integrate(const State& s0, const Params& p, double t0, double t1, double tol) {
    StepOptions opt;
    opt.tol = tol;
    OdeRhs rhs = [p](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const State d = vector_field(State(y), p);
        dy = d;
    };
    return integrate_ode(rhs, s0, t0, t1, opt);
}

Trajectory integrate_fixed(const State& s0, const Params& p, double t0, double t1, double h) {
    StepOptions opt;
    opt.fixed_step = h;
    OdeRhs rhs = [p](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const State d = vector_field(State(y), p);
        dy = d;
    };
    return integrate_ode(rhs, s0, t0, t1, opt);
}

State TangentBundle::base_at(double t) const { return augmented.at(t).head<4>(); }

Eigen::MatrixXd TangentBundle::columns_at(double t) const {
    const Eigen::VectorXd y = augmented.at(t);
    Eigen::MatrixXd V(4, k);
    for (int j = 0; j < k; ++j) V.col(j) = y.segment<4>(4 + 4 * j);
    return V;
}

State TangentBundle::base_end() const { return augmented.y_end_.head<4>(); }

Eigen::MatrixXd TangentBundle::columns_end() const {
    Eigen::MatrixXd V(4, k);
    for (int j = 0; j < k; ++j) V.col(j) = augmented.y_end_.segment<4>(4 + 4 * j);
    return V;
}

TangentBundle integrate_variational(const State& s0, const Eigen::MatrixXd& V0, const Params& p,
                                    double t0, double t1, double tol) {
    if (V0.rows() != 4) throw Error("integrate_variational: V0 must have 4 rows");
    const int k = static_cast<int>(V0.cols());
    Eigen::VectorXd y0(4 + 4 * k);
    y0.head<4>() = s0;
    for (int j = 0; j < k; ++j) y0.segment<4>(4 + 4 * j) = V0.col(j);

    OdeRhs rhs = [p, k](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const State z = y.head<4>();
        dy.resize(y.size());
        dy.head<4>() = vector_field(z, p);
        const Eigen::Matrix4d J = jacobian(z, p);
        for (int j = 0; j < k; ++j)
            dy.segment<4>(4 + 4 * j) = J * y.segment<4>(4 + 4 * j);
    };
    StepOptions opt;
    opt.tol = tol;
    TangentBundle tb;
    tb.augmented = integrate_ode(rhs, y0, t0, t1, opt);
    tb.k = k;
    return tb;
}

EventSpec EventSpec::section(const Eigen::Vector4d& functional, double level, int direction) {
    EventSpec ev;
    ev.kind = Kind::SectionCrossing;
    ev.functional = functional;
    ev.level = level;
    ev.direction = direction;
    return ev;
}

EventSpec EventSpec::extremum(std::function<double(const State&)> observable,
                              std::function<Eigen::Vector4d(const State&)> gradient) {
    EventSpec ev;
    ev.kind = Kind::LocalExtremum;
    ev.observable = std::move(observable);
    ev.gradient = std::move(gradient);
    return ev;
}

namespace {

constexpr double event_time_tol = 1e-10;

// bisection refinement of a sign change of g over [ta, tb]
template <class G>
double refine_sign_change(G&& g, double ta, double tb, double ga) {
    for (int i = 0; i < 200 && std::abs(tb - ta) > event_time_tol; ++i) {
        const double tm = 0.5 * (ta + tb);
        const double gm = g(tm);
        if (gm == 0.0) return tm;
        if ((gm > 0.0) == (ga > 0.0)) {
            ta = tm;
            ga = gm;
        } else {
            tb = tm;
        }
    }
    return 0.5 * (ta + tb);
}

} // namespace

std::vector<Event> detect_events(const Trajectory& tr, const EventSpec& ev) {
    if (tr.dim() != 4) throw Error("detect_events: 4-dimensional trajectories only");
    std::vector<Event> out;
    if (tr.steps_.empty()) return out;

    const bool fwd = tr.forward();

    auto section_value = [&](double t) {
        return ev.functional.dot(tr.at(t).head<4>()) - ev.level;
    };
    auto obs_rate = [&](double t) {
        const State y = tr.at(t).head<4>();
        const State dy = tr.derivative_at(t).head<4>();
        return ev.gradient(y).dot(dy);
    };

    for (const auto& st : tr.steps_) {
        // subdivide each accepted step so short features are not skipped
        const int nsub = std::max(2, static_cast<int>(std::ceil(std::abs(st.h) / 0.25)));
        double tprev = st.t;
        double vprev = (ev.kind == EventSpec::Kind::SectionCrossing) ? section_value(tprev)
                                                                     : obs_rate(tprev);
        for (int i = 1; i <= nsub; ++i) {
            const double tcur = st.t + st.h * (static_cast<double>(i) / nsub);
            const double vcur = (ev.kind == EventSpec::Kind::SectionCrossing)
                                    ? section_value(tcur)
                                    : obs_rate(tcur);
            if ((vprev < 0.0 && vcur > 0.0) || (vprev > 0.0 && vcur < 0.0)) {
                double te;
                if (ev.kind == EventSpec::Kind::SectionCrossing)
                    te = refine_sign_change(section_value, tprev, tcur, vprev);
                else
                    te = refine_sign_change(obs_rate, tprev, tcur, vprev);
                const State ys = tr.at(te).head<4>();
                bool keep = true;
                if (ev.kind == EventSpec::Kind::SectionCrossing && ev.direction != 0) {
                    // direction is in physical time regardless of integration direction
                    const double rate = ev.functional.dot(tr.derivative_at(te).head<4>());
                    keep = (ev.direction > 0) ? (rate > 0.0) : (rate < 0.0);
                }
                if (keep) out.push_back({te, ys});
            }
            tprev = tcur;
            vprev = vcur;
        }
    }

    std::sort(out.begin(), out.end(), [&](const Event& a, const Event& b) {
        return fwd ? a.t < b.t : a.t > b.t;
    });
    return out;
}

} // namespace kwi
