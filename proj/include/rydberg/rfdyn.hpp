#pragma once

// Two-atom dynamics in static + rf fields. The pair is reduced to three
// levels {sd, pp_a, pp_b}; pp_c sits at W_c(t) = W0 - alpha_c F(t)^2 / 2
// relative to sd and couples to it with a field-independent V_c.
//
// Units: MHz (ordinary frequency) for energies and couplings, us for time,
// V/cm for fields. Phases carry the factor 2 pi.

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"
#include "rydberg/parallel.hpp"
#include "rydberg/spectrum.hpp"
#include "rydberg/stark.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

/// Static field set to `field_Vcm` from `t_start_us` on, reached at the slew rate.
struct FieldSegment {
    double t_start_us = 0.0;
    double field_Vcm = 0.0;
};

struct FieldProgram {
    double F_S = 0.0;        // V/cm, static offset (before the first segment)
    double F_rf = 0.0;       // V/cm, rf amplitude
    double omega_MHz = 0.0;  // rf frequency
    std::vector<FieldSegment> segments;
    double slew_Vcm_per_us = 0.0;  // 0: instantaneous switching

    void validate() const {
        if (!(F_S >= 0.0) || !(F_rf >= 0.0) || !(omega_MHz >= 0.0) || !(slew_Vcm_per_us >= 0.0))
            throw DomainError("FieldProgram: F_S, F_rf, omega and slew rate must be non-negative");
        for (std::size_t i = 0; i < segments.size(); ++i) {
            if (!(segments[i].field_Vcm >= 0.0) || !(segments[i].t_start_us >= 0.0))
                throw DomainError("FieldProgram: segment fields and start times must be non-negative");
            if (i > 0 && !(segments[i].t_start_us > segments[i - 1].t_start_us))
                throw DomainError("FieldProgram: segments must be strictly time-sorted");
        }
    }

    /// Static part of the field at time t (us).
    double static_field(double t) const {
        double from = F_S, target = F_S, t0 = 0.0;
        for (const auto& s : segments) {
            if (s.t_start_us > t) break;
            from = ramp(from, target, t0, s.t_start_us);
            target = s.field_Vcm;
            t0 = s.t_start_us;
        }
        return ramp(from, target, t0, t);
    }

    double field(double t) const {
        return static_field(t) + F_rf * std::sin(units::two_pi * omega_MHz * t);
    }

    /// Times in (0, t_end) where the static field has a kink.
    std::vector<double> breakpoints(double t_end) const {
        std::vector<double> out;
        for (const auto& s : segments) {
            const double start = static_field(s.t_start_us);
            out.push_back(s.t_start_us);
            if (slew_Vcm_per_us > 0.0)
                out.push_back(s.t_start_us + std::abs(s.field_Vcm - start) / slew_Vcm_per_us);
        }
        std::erase_if(out, [&](double t) { return !(t > 0.0 && t < t_end); });
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    double ramp(double from, double target, double t0, double t) const {
        if (slew_Vcm_per_us <= 0.0) return target;
        const double step = slew_Vcm_per_us * (t - t0);
        return target > from ? std::min(target, from + step) : std::max(target, from - step);
    }
};

/// Square-wave switching between F_on and F_off with equal dwell times,
/// starting in the on state at t = 0.
inline FieldProgram switching_program(double F_on, double F_off, double dwell_us, double duration_us,
                                      double slew_Vcm_per_us) {
    if (!(dwell_us > 0.0)) throw DomainError("switching_program: dwell must be positive");
    FieldProgram p;
    p.F_S = F_on;
    p.slew_Vcm_per_us = slew_Vcm_per_us;
    bool on = false;
    for (double t = dwell_us; t < duration_us - 1e-12; t += dwell_us, on = !on)
        p.segments.push_back({t, on ? F_on : F_off});
    return p;
}

/// F_eff = sqrt(F_S^2 + F_rf^2 / 2): the static field with the same
/// time-averaged quadratic Stark shift.
inline double effective_field(double F_S, double F_rf) {
    if (!(F_S >= 0.0) || !(F_rf >= 0.0)) throw DomainError("effective_field: fields must be non-negative");
    return std::sqrt(F_S * F_S + 0.5 * F_rf * F_rf);
}

/// Shift of the resonance by the rf amplitude, alpha F_rf^2 / 4 in MHz.
inline double ac_stark_shift(double alpha, double F_rf) { return 0.25 * alpha * F_rf * F_rf; }

struct Resonance {
    int N = 1;  // photons; negative when the pair absorbs energy from the rf field
    double omega_MHz = 0.0;
};

/// rf frequencies where N photons bridge W(F_eff). For W >= 0 the list is
/// N = 1..N_max with omega = W/N; for W < 0 it is N = -1..-N_max with omega = |W|/|N|.
inline std::vector<Resonance> resonance_frequencies(const PairChannel& ch, double F_S, double F_rf, int N_max) {
    std::vector<Resonance> out;
    const double W = pair_energy_difference(ch, effective_field(F_S, F_rf));
    const int sign = W >= 0.0 ? 1 : -1;
    for (int n = 1; n <= N_max; ++n) out.push_back({sign * n, std::abs(W) / n});
    return out;
}

/// W(t) = W0 - alpha (F_static(t) + F_rf sin(2 pi omega t))^2 / 2 in MHz.
inline double instantaneous_detuning(const PairChannel& ch, const FieldProgram& prog, double t_us) {
    if (!(t_us >= 0.0)) throw DomainError("instantaneous_detuning: t must be non-negative");
    return pair_energy_difference(ch, prog.field(t_us));
}

struct ChannelPair {
    PairChannel a = published_channel(Channel::a);
    PairChannel b = published_channel(Channel::b);
};

/// Coupling of sd to pp_a and pp_b, MHz.
struct PairCoupling {
    double V_a = 0.0, V_b = 0.0;
};

struct DynamicsOptions {
    std::size_t samples = 201;  // uniform grid including both ends
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    std::size_t max_steps = 20'000'000;
    double unitarity_tol = 1e-6;
};

struct DynamicsResult {
    std::vector<double> times;                     // us
    std::vector<std::array<double, 3>> populations;  // sd, pp_a, pp_b
    std::vector<double> p_fraction;                // pp_a + pp_b plus background
    double final_p_fraction = 0.0;
    double max_norm_error = 0.0;
    std::size_t steps = 0;
};

namespace detail {

// a_sd, a_a, a_b as (re, im) pairs, then the phases phi_a, phi_b.
using DynState = std::array<double, 8>;

struct ThreeLevelSystem {
    const ChannelPair& chs;
    const FieldProgram& prog;
    double Va, Vb;

    void operator()(const DynState& x, DynState& dxdt, double t) const {
        using C = std::complex<double>;
        const double F = prog.field(t);
        const C sd(x[0], x[1]), a(x[2], x[3]), b(x[4], x[5]);
        const C ea = std::polar(1.0, x[6]), eb = std::polar(1.0, x[7]);
        const C minus_i(0.0, -units::two_pi);
        const C dsd = minus_i * (Va * a * std::conj(ea) + Vb * b * std::conj(eb));
        const C da = minus_i * Va * sd * ea;
        const C db = minus_i * Vb * sd * eb;
        dxdt = {dsd.real(), dsd.imag(), da.real(), da.imag(), db.real(), db.imag(),
                units::two_pi * pair_energy_difference(chs.a, F), units::two_pi * pair_energy_difference(chs.b, F)};
    }
};

}  // namespace detail

/// Integrates the three-level Schroedinger equation from |sd> at t = 0 in
/// the interaction picture, with the detuning phases as extra ODE
/// variables. `background_rate` (1/us) moves sd population into the 49p
/// fraction incoherently: p_fraction = P_pp + min(1, rate t) P_sd.
inline DynamicsResult simulate_dynamics(const ChannelPair& chs, double V_a, double V_b, const FieldProgram& prog,
                                        double duration_us, double background_rate = 0.0,
                                        const DynamicsOptions& opt = {}) {
    namespace odeint = boost::numeric::odeint;
    prog.validate();
    if (!(duration_us > 0.0)) throw DomainError("simulate_dynamics: duration must be positive");
    if (!(background_rate >= 0.0)) throw DomainError("simulate_dynamics: background rate must be non-negative");
    if (opt.samples < 2) throw DomainError("simulate_dynamics: need at least 2 samples");
    if (!std::isfinite(V_a) || !std::isfinite(V_b)) throw DomainError("simulate_dynamics: couplings must be finite");

    DynamicsResult res;
    res.times.resize(opt.samples);
    for (std::size_t i = 0; i < opt.samples; ++i)
        res.times[i] = duration_us * static_cast<double>(i) / static_cast<double>(opt.samples - 1);

    // integrate piecewise between samples and field kinks
    std::vector<double> stops = prog.breakpoints(duration_us);
    stops.insert(stops.end(), res.times.begin() + 1, res.times.end());
    std::sort(stops.begin(), stops.end());

    detail::DynState x{1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const detail::ThreeLevelSystem sys{chs, prog, V_a, V_b};
    auto stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<detail::DynState>());

    auto record = [&](double t) {
        const std::array<double, 3> p{x[0] * x[0] + x[1] * x[1], x[2] * x[2] + x[3] * x[3], x[4] * x[4] + x[5] * x[5]};
        res.max_norm_error = std::max(res.max_norm_error, std::abs(p[0] + p[1] + p[2] - 1.0));
        res.populations.push_back(p);
        res.p_fraction.push_back(std::clamp(p[1] + p[2] + std::min(1.0, background_rate * t) * p[0], 0.0, 1.0));
    };
    record(0.0);

    double t = 0.0;
    std::size_t next_sample = 1;
    // shortest timescale: a quarter period of the fastest phase or rf oscillation
    const double w_max = std::abs(chs.a.W0) + std::abs(chs.b.W0) + prog.omega_MHz + 1.0;
    const double dt0 = 0.01 / w_max;
    for (double stop : stops) {
        if (stop > t) {
            try {
                res.steps += odeint::integrate_adaptive(stepper, sys, x, t, stop, std::min(dt0, stop - t));
            } catch (const std::exception& e) {
                throw IntegrationError(std::string("simulate_dynamics: ") + e.what(), res.max_norm_error);
            }
            t = stop;
            if (res.steps > opt.max_steps)
                throw IntegrationError("simulate_dynamics: step limit exceeded", res.max_norm_error);
        }
        while (next_sample < opt.samples && res.times[next_sample] <= t + 1e-12 * duration_us) {
            record(res.times[next_sample]);
            ++next_sample;
        }
    }
    if (res.max_norm_error > opt.unitarity_tol)
        throw IntegrationError("simulate_dynamics: norm drift " + std::to_string(res.max_norm_error) +
                                   " exceeds tolerance",
                               res.max_norm_error);
    res.final_p_fraction = res.p_fraction.back();
    return res;
}

/// Rows: time_us, p_sd, p_ppa, p_ppb, p_fraction.
inline void write_dynamics_csv(std::ostream& os, const DynamicsResult& r) {
    os << "# three-level pair dynamics\n";
    os << "# time_us: us; p_*: populations; p_fraction: 49p fraction incl. background\n";
    os << "time_us,p_sd,p_ppa,p_ppb,p_fraction\n";
    os.precision(10);
    for (std::size_t i = 0; i < r.times.size(); ++i)
        os << r.times[i] << ',' << r.populations[i][0] << ',' << r.populations[i][1] << ','
           << r.populations[i][2] << ',' << r.p_fraction[i] << '\n';
}

/// Final 49p fraction after `duration_us` of static + rf field for each rf
/// frequency in `omega_grid` (MHz), averaged over `couplings` with equal
/// weights. Grid points run in parallel.
inline SpectrumResult floquet_spectrum(const ChannelPair& chs, const std::vector<PairCoupling>& couplings, double F_S,
                                       double F_rf, const std::vector<double>& omega_grid, double duration_us,
                                       DynamicsOptions opt = {}) {
    if (couplings.empty()) throw DomainError("floquet_spectrum: no couplings");
    opt.samples = 2;
    SpectrumResult out;
    out.x = omega_grid;
    out.y.assign(omega_grid.size(), 0.0);
    out.y_err.assign(omega_grid.size(), 0.0);
    validate(out);
    parallel_for(omega_grid.size(), [&](std::size_t i) {
        FieldProgram prog;
        prog.F_S = F_S;
        prog.F_rf = F_rf;
        prog.omega_MHz = omega_grid[i];
        double sum = 0.0, sum2 = 0.0;
        for (const auto& c : couplings) {
            const double p = simulate_dynamics(chs, c.V_a, c.V_b, prog, duration_us, 0.0, opt).final_p_fraction;
            sum += p;
            sum2 += p * p;
        }
        const double n = static_cast<double>(couplings.size());
        out.y[i] = sum / n;
        if (couplings.size() > 1) out.y_err[i] = std::sqrt(std::max(0.0, sum2 / n - out.y[i] * out.y[i]) / (n - 1.0));
    });
    return out;
}

inline SpectrumResult floquet_spectrum(const ChannelPair& chs, double V_a, double V_b, double F_S, double F_rf,
                                       const std::vector<double>& omega_grid, double duration_us,
                                       const DynamicsOptions& opt = {}) {
    return floquet_spectrum(chs, std::vector<PairCoupling>{{V_a, V_b}}, F_S, F_rf, omega_grid, duration_us, opt);
}

/// Uniform grid lo, lo + step, ..., up to hi.
inline std::vector<double> linear_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) throw DomainError("linear_grid: need step > 0 and hi >= lo");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
    return g;
}

// ---------------------------------------------------------------------------
// Spectroscopy: invert the N = +-1 resonance condition for W0 and alpha
// ---------------------------------------------------------------------------

struct ResonanceObservation {
    Channel channel = Channel::a;
    double F_S = 0.0;        // V/cm
    double F_rf = 0.0;       // V/cm
    double omega_MHz = 0.0;  // observed rf frequency
    int N = 1;               // +1 or -1
};

struct ParameterEstimate {
    double value = 0.0;
    double sigma = 0.0;  // NaN when the fit has no residual degrees of freedom
};

struct SpectroscopyFit {
    ParameterEstimate W0;
    std::optional<ParameterEstimate> alpha_a;
    std::optional<ParameterEstimate> alpha_b;
    double residual_rms_MHz = 0.0;
    int dof = 0;
};

/// Linear least squares of N omega = W0 - alpha_c F_eff^2 / 2 with W0 shared
/// between channels. Each channel with data contributes its own alpha.
inline SpectroscopyFit extract_spectroscopy(const std::vector<ResonanceObservation>& data) {
    bool has[2] = {false, false};
    for (const auto& d : data) {
        if (d.N != 1 && d.N != -1) throw DomainError("extract_spectroscopy: N must be +1 or -1");
        if (!(d.omega_MHz >= 0.0)) throw DomainError("extract_spectroscopy: omega must be non-negative");
        has[d.channel == Channel::a ? 0 : 1] = true;
    }
    const int col_a = has[0] ? 1 : -1;
    const int col_b = has[1] ? (has[0] ? 2 : 1) : -1;
    const int p = 1 + int(has[0]) + int(has[1]);
    const auto m = static_cast<Eigen::Index>(data.size());
    if (m < p) throw FitError("extract_spectroscopy: fewer observations than parameters");

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, p);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& d = data[static_cast<std::size_t>(i)];
        const double Fe = effective_field(d.F_S, d.F_rf);
        A(i, 0) = 1.0;
        A(i, d.channel == Channel::a ? col_a : col_b) = -0.5 * Fe * Fe;
        y(i) = d.N * d.omega_MHz;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < p)
        throw FitError("extract_spectroscopy: rank-deficient design (need distinct F_eff per channel)");
    const Eigen::VectorXd x = qr.solve(y);
    const Eigen::VectorXd r = A * x - y;

    SpectroscopyFit fit;
    fit.dof = static_cast<int>(m - p);
    fit.residual_rms_MHz = std::sqrt(r.squaredNorm() / static_cast<double>(m));
    const Eigen::MatrixXd cov_unscaled = (A.transpose() * A).inverse();
    const double s2 = fit.dof > 0 ? r.squaredNorm() / fit.dof : std::numeric_limits<double>::quiet_NaN();
    auto est = [&](int k) { return ParameterEstimate{x(k), std::sqrt(s2 * cov_unscaled(k, k))}; };
    fit.W0 = est(0);
    if (col_a > 0) fit.alpha_a = est(col_a);
    if (col_b > 0) fit.alpha_b = est(col_b);
    return fit;
}

}  // namespace rydberg
