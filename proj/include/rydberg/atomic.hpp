#pragma once

// Single-atom Rydberg structure: quantum-defect energies, Numerov radial
// wavefunctions and electric-dipole matrix elements.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "rydberg/errors.hpp"
#include "rydberg/quantum_defects.hpp"
#include "rydberg/units.hpp"
#include "rydberg/wigner.hpp"

namespace rydberg {

/// |n l j m_j>. j and mj are half-integers stored as doubles (0.5, 1.5, ...);
/// mj is signed.
struct RydbergState {
    int n = 1;
    int l = 0;
    double j = 0.5;
    double mj = 0.5;

    int twice_j() const { return static_cast<int>(std::lround(2.0 * j)); }
    int twice_mj() const { return static_cast<int>(std::lround(2.0 * mj)); }
    double mj_abs() const { return std::abs(mj); }

    /// Same (n, l, j) level, m_j ignored.
    bool same_level(const RydbergState& o) const {
        return n == o.n && l == o.l && twice_j() == o.twice_j();
    }

    friend bool operator==(const RydbergState& a, const RydbergState& b) {
        return a.same_level(b) && a.twice_mj() == b.twice_mj();
    }
    friend bool operator<(const RydbergState& a, const RydbergState& b) {
        return std::make_tuple(a.n, a.l, a.twice_j(), a.twice_mj()) <
               std::make_tuple(b.n, b.l, b.twice_j(), b.twice_mj());
    }
};

inline std::string to_string(const RydbergState& s) {
    static constexpr const char* letters = "spdfghiklmnoqrtuv";
    std::ostringstream os;
    os << s.n;
    if (s.l < 17)
        os << letters[s.l];
    else
        os << "[l=" << s.l << "]";
    os << s.twice_j() << "/2," << (s.twice_mj() < 0 ? "-" : "") << std::abs(s.twice_mj()) << "/2";
    return os.str();
}

inline std::ostream& operator<<(std::ostream& os, const RydbergState& s) { return os << to_string(s); }

inline bool is_valid(const RydbergState& s) {
    const int tj = s.twice_j(), tm = s.twice_mj();
    if (std::abs(2.0 * s.j - tj) > 1e-9 || std::abs(2.0 * s.mj - tm) > 1e-9) return false;
    if (s.n < 1 || s.l < 0 || s.l >= s.n) return false;
    if (tj % 2 == 0 || tm % 2 == 0) return false;
    if (std::abs(tj - 2 * s.l) != 1) return false;
    return std::abs(tm) <= tj;
}

inline void validate(const RydbergState& s) {
    if (!is_valid(s)) throw DomainError("invalid quantum numbers: n=" + std::to_string(s.n) +
                                        " l=" + std::to_string(s.l) + " j=" + std::to_string(s.j) +
                                        " mj=" + std::to_string(s.mj));
}

inline double effective_n(const RydbergState& s, const QuantumDefectTable& defects) {
    validate(s);
    return s.n - defects.defect(s.n, s.l, s.twice_j());
}

/// -Ry_M / (n - delta)^2 in hartree, with the reduced-mass Rydberg constant.
inline double binding_energy(const RydbergState& s, const QuantumDefectTable& defects) {
    const double ns = effective_n(s, defects);
    return -defects.rydberg_au() / (ns * ns);
}

inline double binding_energy_GHz(const RydbergState& s, const QuantumDefectTable& defects) {
    return units::au_to_GHz(binding_energy(s, defects));
}

// ---------------------------------------------------------------------------
// Numerov radial integration
// ---------------------------------------------------------------------------

/// Square-root mesh x = sqrt(r) with x_k = k * step. Every wavefunction built
/// with the same step lives on the same lattice, so products need no
/// interpolation.
struct GridSpec {
    double step = 0.01;    // in sqrt(bohr)
    double r_min = 0.05;   // bohr
    double outer_pad = 15; // r_max = 2 n (n + outer_pad)
};

struct RadialWavefunction {
    RydbergState state;
    double energy = 0.0;      // hartree
    double step = 0.0;        // lattice spacing in x = sqrt(r)
    int first_index = 0;      // x of sample i is (first_index + i) * step
    std::vector<double> r;    // bohr
    std::vector<double> u;    // r R(r), normalized to 1

    std::size_t size() const { return u.size(); }
    double x(std::size_t i) const { return (first_index + static_cast<double>(i)) * step; }
    int last_index() const { return first_index + static_cast<int>(u.size()) - 1; }

    /// Radius of the largest |u|.
    double peak_radius() const {
        auto it = std::max_element(u.begin(), u.end(),
                                   [](double a, double b) { return std::abs(a) < std::abs(b); });
        return r[static_cast<std::size_t>(it - u.begin())];
    }
    double peak_amplitude() const {
        double m = 0.0;
        for (double v : u) m = std::max(m, std::abs(v));
        return m;
    }
};

namespace detail {

// Weighted lattice integral sum_k f_k g_k r_k^p 2 x_k h over the common range.
inline double lattice_product(const RadialWavefunction& a, const RadialWavefunction& b, int power) {
    const int lo = std::max(a.first_index, b.first_index);
    const int hi = std::min(a.last_index(), b.last_index());
    double sum = 0.0;
    for (int k = lo; k <= hi; ++k) {
        const auto ia = static_cast<std::size_t>(k - a.first_index);
        const auto ib = static_cast<std::size_t>(k - b.first_index);
        const double x = k * a.step;
        double w = 2.0 * x * a.step;
        if (power == 1)
            w *= a.r[ia];
        else if (power != 0)
            w *= std::pow(a.r[ia], power);
        sum += a.u[ia] * b.u[ib] * w;
    }
    return sum;
}

// Resamples w onto the lattice with spacing `step` (4-point Lagrange in x).
inline RadialWavefunction resample(const RadialWavefunction& w, double step) {
    RadialWavefunction out;
    out.state = w.state;
    out.energy = w.energy;
    out.step = step;
    const double x_lo = w.x(0), x_hi = w.x(w.size() - 1);
    out.first_index = static_cast<int>(std::ceil(x_lo / step));
    const int last = static_cast<int>(std::floor(x_hi / step));
    for (int k = out.first_index; k <= last; ++k) {
        const double x = k * step;
        const double t = (x - x_lo) / w.step;
        auto i = static_cast<long>(std::floor(t)) - 1;
        i = std::clamp<long>(i, 0, static_cast<long>(w.size()) - 4);
        double val = 0.0;
        for (long a = 0; a < 4; ++a) {
            double basis = 1.0;
            for (long b = 0; b < 4; ++b)
                if (b != a) basis *= (t - static_cast<double>(i + b)) / static_cast<double>(a - b);
            val += basis * w.u[static_cast<std::size_t>(i + a)];
        }
        out.r.push_back(x * x);
        out.u.push_back(val);
    }
    return out;
}

}  // namespace detail

/// Inward Numerov integration of the Coulomb radial equation at a fixed
/// (generally non-hydrogenic) energy, on the square-root mesh. With r = x^2
/// and u = sqrt(2x) X the equation becomes
///     X'' = [-8 - 8 E x^2 + (2l + 1/2)(2l + 3/2) / x^2] X.
/// Where the inward solution starts diverging inside the inner classical
/// turning point it is set to zero. Throws DomainError for E >= 0 and
/// IntegrationError when the result cannot be normalized.
inline RadialWavefunction radial_wavefunction(const RydbergState& state, double energy,
                                              const GridSpec& grid = {}) {
    validate(state);
    if (!(energy < 0.0)) throw DomainError("radial_wavefunction: energy must be negative");
    if (grid.step <= 0.0 || grid.r_min <= 0.0) throw DomainError("radial_wavefunction: bad grid");

    const double h = grid.step;
    const double r_max = 2.0 * state.n * (state.n + grid.outer_pad);
    if (r_max <= grid.r_min) throw DomainError("radial_wavefunction: empty grid");
    const int k_lo = static_cast<int>(std::ceil(std::sqrt(grid.r_min) / h));
    const int k_hi = static_cast<int>(std::ceil(std::sqrt(r_max) / h));
    const auto count = static_cast<std::size_t>(k_hi - k_lo + 1);

    const double c = (2.0 * state.l + 0.5) * (2.0 * state.l + 1.5);
    const double h2_12 = h * h / 12.0;
    std::vector<double> f(count);  // 1 - h^2 G / 12
    std::vector<double> G(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = (k_lo + static_cast<double>(i)) * h;
        const double x2 = x * x;
        G[i] = -8.0 - 8.0 * energy * x2 + c / x2;
        f[i] = 1.0 - h2_12 * G[i];
    }

    // innermost classically allowed point
    std::size_t turn = 0;
    while (turn < count && G[turn] >= 0.0) ++turn;
    if (turn == count) throw IntegrationError("radial_wavefunction: no classically allowed region");

    std::vector<double> X(count, 0.0);
    X[count - 1] = 0.0;
    X[count - 2] = 1e-12;
    std::size_t cut = 0;  // samples below `cut` are zero
    for (std::size_t i = count - 2; i > 0; --i) {
        if (f[i - 1] < 0.05) {  // Numerov step no longer stable this deep in the barrier
            cut = i;
            break;
        }
        X[i - 1] = ((12.0 - 10.0 * f[i]) * X[i] - f[i + 1] * X[i + 1]) / f[i - 1];
        if (i - 1 < turn && std::abs(X[i - 1]) > std::abs(X[i])) {
            cut = i;
            break;
        }
        if (std::abs(X[i - 1]) > 1e150) {
            for (std::size_t j = i - 1; j < count; ++j) X[j] *= 1e-150;
        }
        if (!std::isfinite(X[i - 1])) throw IntegrationError("radial_wavefunction: divergence");
    }
    // An s wave at a non-hydrogenic energy stays finite at the origin instead
    // of diverging; terminate it at its innermost node, which plays the role
    // of the core boundary.
    const double n_star = 1.0 / std::sqrt(-2.0 * energy);
    if (state.l == 0 && cut == 0 && std::abs(n_star - std::round(n_star)) > 1e-6) {
        for (std::size_t i = 1; i < count; ++i)
            if (X[i - 1] * X[i] <= 0.0) {
                cut = i;
                break;
            }
    }
    for (std::size_t i = 0; i < cut; ++i) X[i] = 0.0;

    RadialWavefunction w;
    w.state = state;
    w.energy = energy;
    w.step = h;
    w.first_index = k_lo;
    w.r.resize(count);
    w.u.resize(count);
    double norm = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double x = (k_lo + static_cast<double>(i)) * h;
        w.r[i] = x * x;
        w.u[i] = std::sqrt(2.0 * x) * X[i];
        norm += w.u[i] * w.u[i] * 2.0 * x * h;
    }
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw IntegrationError("radial_wavefunction: normalization failed", norm);
    const double scale = 1.0 / std::sqrt(norm);
    for (double& v : w.u) v *= scale;
    return w;
}

/// Integral of u_a r^power u_b dr over the common range.
inline double radial_integral(const RadialWavefunction& a, const RadialWavefunction& b, int power) {
    if (std::abs(a.step - b.step) > 1e-15 * a.step)
        return detail::lattice_product(a, detail::resample(b, a.step), power);
    return detail::lattice_product(a, b, power);
}

inline double overlap(const RadialWavefunction& a, const RadialWavefunction& b) {
    return radial_integral(a, b, 0);
}

/// Angular part of <s2| r_q |s1> in the |l s j m_j> basis; the radial
/// integral is factored out.
inline double dipole_angular_factor(const RydbergState& s1, const RydbergState& s2, int q) {
    using wigner::six_j;
    using wigner::three_j;
    if (std::abs(s2.l - s1.l) != 1) return 0.0;
    if (s2.twice_mj() - s1.twice_mj() != 2 * q) return 0.0;
    const int tj1 = s1.twice_j(), tj2 = s2.twice_j();
    const int tm1 = s1.twice_mj(), tm2 = s2.twice_mj();
    const int l1 = s1.l, l2 = s2.l;

    auto sign = [](int e) { return (e % 2 == 0) ? 1.0 : -1.0; };
    // (-1)^(j2 - m2) (j2 1 j1; -m2 q m1)
    const double wigner_eckart = sign((tj2 - tm2) / 2) * three_j(tj2, 2, tj1, -tm2, 2 * q, tm1);
    // <l2 j2 || r || l1 j1> / <l2 || r || l1>, spin 1/2 spectator
    const double fine = sign((2 * l2 + 1 + tj1 + 2) / 2) * std::sqrt((tj1 + 1.0) * (tj2 + 1.0)) *
                        six_j(2 * l2, tj2, 1, tj1, 2 * l1, 2);
    // <l2 || r || l1> / R
    const double orbital = sign(l2) * std::sqrt((2.0 * l1 + 1.0) * (2.0 * l2 + 1.0)) *
                           three_j(2 * l2, 2, 2 * l1, 0, 0, 0);
    return wigner_eckart * fine * orbital;
}

// ---------------------------------------------------------------------------
// Atom: defect table + grid + memoized wavefunctions and radial integrals
// ---------------------------------------------------------------------------

class Atom {
public:
    explicit Atom(QuantumDefectTable defects = rb85_defects(), GridSpec grid = {})
        : defects_(std::move(defects)), grid_(grid) {}

    Atom(const Atom& o) : defects_(o.defects_), grid_(o.grid_) {}
    Atom& operator=(const Atom& o) {
        if (this != &o) {
            std::scoped_lock lock(mutex_);
            defects_ = o.defects_;
            grid_ = o.grid_;
            wavefunctions_.clear();
            radial_.clear();
        }
        return *this;
    }

    const QuantumDefectTable& defects() const { return defects_; }
    const GridSpec& grid() const { return grid_; }

    double effective_n(const RydbergState& s) const { return rydberg::effective_n(s, defects_); }
    double energy_au(const RydbergState& s) const { return binding_energy(s, defects_); }
    double energy_GHz(const RydbergState& s) const { return binding_energy_GHz(s, defects_); }

    /// Normalized u(r) for the (n, l, j) level of s. The wavefunction solves
    /// the infinite-mass Coulomb problem at E = -1 / (2 n*^2).
    std::shared_ptr<const RadialWavefunction> wavefunction(const RydbergState& s) const {
        const auto key = level_key(s);
        {
            std::scoped_lock lock(mutex_);
            if (auto it = wavefunctions_.find(key); it != wavefunctions_.end()) return it->second;
        }
        const double ns = effective_n(s);
        RydbergState level = s;
        level.mj = 0.5;
        auto w = std::make_shared<const RadialWavefunction>(
            radial_wavefunction(level, -0.5 / (ns * ns), grid_));
        std::scoped_lock lock(mutex_);
        return wavefunctions_.emplace(key, std::move(w)).first->second;
    }

    /// <u1| r |u2> in bohr.
    double radial_matrix_element(const RydbergState& s1, const RydbergState& s2) const {
        auto k1 = level_key(s1), k2 = level_key(s2);
        if (k2 < k1) std::swap(k1, k2);
        const auto key = std::make_pair(k1, k2);
        {
            std::scoped_lock lock(mutex_);
            if (auto it = radial_.find(key); it != radial_.end()) return it->second;
        }
        const double value = radial_integral(*wavefunction(s1), *wavefunction(s2), 1);
        std::scoped_lock lock(mutex_);
        radial_.emplace(key, value);
        return value;
    }

    /// <s2| r_q |s1> in e a0: nonzero only for |l2 - l1| = 1 and m2 = m1 + q.
    double dipole_matrix_element(const RydbergState& s1, const RydbergState& s2, int q) const {
        validate(s1);
        validate(s2);
        if (q < -1 || q > 1) throw DomainError("dipole_matrix_element: q must be -1, 0 or +1");
        const double angular = dipole_angular_factor(s1, s2, q);
        if (angular == 0.0) return 0.0;
        return angular * radial_matrix_element(s1, s2);
    }

private:
    using LevelKey = std::tuple<int, int, int>;
    static LevelKey level_key(const RydbergState& s) { return {s.n, s.l, s.twice_j()}; }

    QuantumDefectTable defects_;
    GridSpec grid_;
    mutable std::mutex mutex_;
    mutable std::map<LevelKey, std::shared_ptr<const RadialWavefunction>> wavefunctions_;
    mutable std::map<std::pair<LevelKey, LevelKey>, double> radial_;
};

}  // namespace rydberg
