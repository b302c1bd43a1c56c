#pragma once

// Monte-Carlo model of two cigar-shaped Rydberg volumes. The laser (cigar)
// axis is x, the field axis is z; the d-volume is displaced by `separation`
// along z. Each 49s atom exchanges energy with one d-atom (its strongest
// coupled partner), incoherently with all of them, or coherently with all
// of them through the collective state of the d-atoms.

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"
#include "rydberg/pairint.hpp"
#include "rydberg/parallel.hpp"
#include "rydberg/rfdyn.hpp"
#include "rydberg/spectrum.hpp"

namespace rydberg {

enum class PairingMode {
    strongest,  // single partner of largest coupling
    all_pairs,  // incoherent sum of pair transfer probabilities, capped at 1
    collective  // one s-atom and N d-atoms: V_eff = sqrt(sum |V|^2)
};

inline const char* to_string(PairingMode m) {
    switch (m) {
        case PairingMode::strongest: return "strongest";
        case PairingMode::all_pairs: return "all_pairs";
        case PairingMode::collective: return "collective";
    }
    return "?";
}

struct EnsembleConfig {
    double separation_um = 25.0;
    double fwhm_s_um = 11.6;   // 49s volume, transverse Gaussian FWHM
    double fwhm_d_um = 16.3;   // 41d volume
    double length_um = 500.0;  // uniform extent along the laser axis
    int n_s = 20;
    int n_d = 20;
    double t_int_us = 20.0;
    int n_shots = 2000;
    std::uint64_t seed = 1;
    double field_jitter_Vcm = 0.0;  // per-shot Gaussian rms, 0 = off
    PairingMode pairing = PairingMode::strongest;

    void validate() const {
        if (!(separation_um >= 0.0) || !(fwhm_s_um > 0.0) || !(fwhm_d_um > 0.0) || !(length_um > 0.0))
            throw DomainError("EnsembleConfig: lengths must be positive");
        if (n_s < 1 || n_d < 1 || n_shots < 1) throw DomainError("EnsembleConfig: atom and shot counts must be >= 1");
        if (!(t_int_us > 0.0)) throw DomainError("EnsembleConfig: interaction time must be positive");
        if (!(field_jitter_Vcm >= 0.0)) throw DomainError("EnsembleConfig: field jitter must be non-negative");
    }
};

/// Independent RNG stream for one shot, derived from (seed, shot).
inline std::mt19937_64 shot_rng(std::uint64_t seed, std::uint64_t shot) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(shot), static_cast<std::uint32_t>(shot >> 32)};
    return std::mt19937_64(seq);
}

struct AtomPositions {
    std::vector<Eigen::Vector3d> s;  // um
    std::vector<Eigen::Vector3d> d;
};

inline double fwhm_to_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

inline AtomPositions sample_atoms(const EnsembleConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    std::uniform_real_distribution<double> along(-0.5 * cfg.length_um, 0.5 * cfg.length_um);
    std::normal_distribution<double> ts(0.0, fwhm_to_sigma(cfg.fwhm_s_um));
    std::normal_distribution<double> td(0.0, fwhm_to_sigma(cfg.fwhm_d_um));
    AtomPositions p;
    for (int i = 0; i < cfg.n_s; ++i) {
        const double x = along(rng), y = ts(rng), z = ts(rng);
        p.s.emplace_back(x, y, z);
    }
    for (int i = 0; i < cfg.n_d; ++i) {
        const double x = along(rng), y = td(rng), z = td(rng);
        p.d.emplace_back(x, y, z + cfg.separation_um);
    }
    return p;
}

/// Positions for shot 0 of the configured seed.
inline AtomPositions sample_atoms(const EnsembleConfig& cfg) {
    auto rng = shot_rng(cfg.seed, 0);
    return sample_atoms(cfg, rng);
}

/// Channel transition dipoles used to evaluate V_a, V_b for any pair position.
struct PairCouplingModel {
    ChannelDipoles a, b;

    PairCouplingModel(const Atom& atom, const ChannelPair& chs) : a(atom, chs.a), b(atom, chs.b) {}

    /// (|V_a|, |V_b|) in MHz for a d-atom at `d` and an s-atom at `s`.
    std::pair<double, double> couplings(const Eigen::Vector3d& d, const Eigen::Vector3d& s) const {
        const PairGeometry g(s - d);
        return {a.max_coupling(g), b.max_coupling(g)};
    }
};

/// Couplings entering each s-atom's dynamics, one list per s-atom: the
/// strongest partner (largest V_a^2 + V_b^2), every d-atom, or the single
/// collective coupling sqrt(sum V^2) per channel.
inline std::vector<std::vector<PairCoupling>> pair_couplings(const AtomPositions& pos, const PairCouplingModel& model,
                                                             PairingMode mode) {
    std::vector<std::vector<PairCoupling>> out(pos.s.size());
    for (std::size_t i = 0; i < pos.s.size(); ++i) {
        PairCoupling best, sum2;
        double best_norm = -1.0;
        for (const auto& d : pos.d) {
            if ((d - pos.s[i]).norm() == 0.0) continue;
            const auto [va, vb] = model.couplings(d, pos.s[i]);
            if (mode == PairingMode::all_pairs) out[i].push_back({va, vb});
            sum2.V_a += va * va;
            sum2.V_b += vb * vb;
            if (va * va + vb * vb > best_norm) {
                best_norm = va * va + vb * vb;
                best = {va, vb};
            }
        }
        if (best_norm < 0.0) continue;
        if (mode == PairingMode::strongest) out[i].push_back(best);
        if (mode == PairingMode::collective) out[i].push_back({std::sqrt(sum2.V_a), std::sqrt(sum2.V_b)});
    }
    return out;
}

/// First `count` per-atom couplings drawn shot by shot from the configured
/// ensemble (collective when cfg.pairing is not strongest). Deterministic in cfg.seed.
inline std::vector<PairCoupling> sample_pair_couplings(const EnsembleConfig& cfg, const PairCouplingModel& model,
                                                       std::size_t count) {
    cfg.validate();
    const auto mode = cfg.pairing == PairingMode::strongest ? PairingMode::strongest : PairingMode::collective;
    std::vector<PairCoupling> out;
    for (std::uint64_t shot = 0; out.size() < count; ++shot) {
        auto rng = shot_rng(cfg.seed, shot);
        for (const auto& partners : pair_couplings(sample_atoms(cfg, rng), model, mode))
            if (!partners.empty() && out.size() < count) out.push_back(partners.front());
    }
    return out;
}

/// 1 - |<sd| exp(-i 2 pi H t) |sd>|^2 for the static three-level pair
/// Hamiltonian H = [[0, Va, Vb], [Va, Wa, 0], [Vb, 0, Wb]] (MHz, us).
inline double static_transfer(double W_a, double W_b, double V_a, double V_b, double t_us) {
    Eigen::Matrix3d H;
    H << 0.0, V_a, V_b, V_a, W_a, 0.0, V_b, 0.0, W_b;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
    std::complex<double> c = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double u = es.eigenvectors()(0, k);
        c += u * u * std::polar(1.0, -units::two_pi * es.eigenvalues()(k) * t_us);
    }
    return std::clamp(1.0 - std::norm(c), 0.0, 1.0);
}

namespace detail {

inline SpectrumResult shot_statistics(const std::vector<double>& x, const std::vector<std::vector<double>>& shots) {
    SpectrumResult out;
    out.x = x;
    out.y.assign(x.size(), 0.0);
    out.y_err.assign(x.size(), 0.0);
    const double n = static_cast<double>(shots.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double sum = 0.0, sum2 = 0.0;
        for (const auto& s : shots) {
            sum += s[i];
            sum2 += s[i] * s[i];
        }
        const double mean = sum / n;
        const double var = shots.size() > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0)) : 0.0;
        out.y[i] = mean;
        out.y_err[i] = std::sqrt(var / n);
    }
    return out;
}

}  // namespace detail

/// 49p fraction after t_int at each static field of `field_grid` (V/cm),
/// averaged over shots. Shots run in parallel with independent RNG streams,
/// so the result does not depend on the thread count.
inline SpectrumResult scan_static_field(const EnsembleConfig& cfg, const ChannelPair& chs,
                                        const PairCouplingModel& model, const std::vector<double>& field_grid) {
    cfg.validate();
    if (field_grid.empty()) throw DomainError("scan_static_field: empty field grid");
    std::vector<std::vector<double>> shots(static_cast<std::size_t>(cfg.n_shots));
    parallel_for(shots.size(), [&](std::size_t shot) {
        auto rng = shot_rng(cfg.seed, shot);
        const auto pos = sample_atoms(cfg, rng);
        double jitter = 0.0;
        if (cfg.field_jitter_Vcm > 0.0) jitter = std::normal_distribution<double>(0.0, cfg.field_jitter_Vcm)(rng);
        const auto pairs = pair_couplings(pos, model, cfg.pairing);
        auto& y = shots[shot];
        y.assign(field_grid.size(), 0.0);
        for (std::size_t f = 0; f < field_grid.size(); ++f) {
            const double F = field_grid[f] + jitter;
            const double Wa = pair_energy_difference(chs.a, F), Wb = pair_energy_difference(chs.b, F);
            double total = 0.0;
            for (const auto& partners : pairs) {
                double p = 0.0;
                for (const auto& c : partners) p += static_transfer(Wa, Wb, c.V_a, c.V_b, cfg.t_int_us);
                total += std::min(1.0, p);
            }
            y[f] = total / static_cast<double>(pairs.size());
        }
    });
    auto out = detail::shot_statistics(field_grid, shots);
    validate(out);
    return out;
}

/// Shot-averaged 49p fraction against time for a field program. x holds the
/// sample times (us). all_pairs mode is treated as collective here, since
/// amplitudes do not add incoherently.
inline SpectrumResult ensemble_dynamics(const EnsembleConfig& cfg, const ChannelPair& chs,
                                        const PairCouplingModel& model, const FieldProgram& prog,
                                        double background_rate = 0.0, DynamicsOptions opt = {}) {
    cfg.validate();
    std::vector<std::vector<double>> shots(static_cast<std::size_t>(cfg.n_shots));
    std::vector<double> times;
    parallel_for(shots.size(), [&](std::size_t shot) {
        auto rng = shot_rng(cfg.seed, shot);
        const auto mode = cfg.pairing == PairingMode::strongest ? PairingMode::strongest : PairingMode::collective;
        const auto pairs = pair_couplings(sample_atoms(cfg, rng), model, mode);
        std::vector<double> y(opt.samples, 0.0);
        for (const auto& partners : pairs) {
            const auto r = simulate_dynamics(chs, partners.front().V_a, partners.front().V_b, prog, cfg.t_int_us,
                                             background_rate, opt);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] += r.p_fraction[i] / static_cast<double>(pairs.size());
        }
        shots[shot] = std::move(y);
    });
    for (std::size_t i = 0; i < opt.samples; ++i)
        times.push_back(cfg.t_int_us * static_cast<double>(i) / static_cast<double>(opt.samples - 1));
    return detail::shot_statistics(times, shots);
}

// ---------------------------------------------------------------------------
// Lorentzian doublet fit
// ---------------------------------------------------------------------------

struct LorentzPeak {
    double center = 0.0;
    double fwhm = 0.0;
    double amplitude = 0.0;  // height above the offset
};

struct FitResult {
    LorentzPeak peaks[2];  // ordered by center
    double offset = 0.0;
    Eigen::Matrix<double, 7, 7> covariance = Eigen::Matrix<double, 7, 7>::Zero();  // (c1, w1, a1, c2, w2, a2, offset)
    double residual_rms = 0.0;
    int iterations = 0;
};

inline double lorentzian(double x, const LorentzPeak& p) {
    const double h = 0.5 * p.fwhm;
    return p.amplitude * h * h / ((x - p.center) * (x - p.center) + h * h);
}

namespace detail {

struct DoubletFunctor : Eigen::DenseFunctor<double> {
    const std::vector<double>& x;
    const std::vector<double>& y;

    DoubletFunctor(const std::vector<double>& xs, const std::vector<double>& ys)
        : Eigen::DenseFunctor<double>(7, static_cast<int>(xs.size())), x(xs), y(ys) {}

    int operator()(const InputType& p, ValueType& r) const {
        for (std::size_t i = 0; i < x.size(); ++i)
            r(static_cast<Eigen::Index>(i)) = lorentzian(x[i], {p(0), p(1), p(2)}) +
                                              lorentzian(x[i], {p(3), p(4), p(5)}) + p(6) - y[i];
        return 0;
    }

    int df(const InputType& p, JacobianType& J) const {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            for (int k = 0; k < 2; ++k) {
                const double c = p(3 * k), w = p(3 * k + 1), a = p(3 * k + 2);
                const double h = 0.5 * w, dx = x[i] - c, den = dx * dx + h * h;
                J(row, 3 * k) = a * h * h * 2.0 * dx / (den * den);
                J(row, 3 * k + 1) = a * (h * den - h * h * h) / (den * den);
                J(row, 3 * k + 2) = h * h / den;
            }
            J(row, 6) = 1.0;
        }
        return 0;
    }
};

}  // namespace detail

/// Two Lorentzians plus a constant offset, by Levenberg-Marquardt. Initial
/// guesses come from the two largest local maxima separated by a dip.
inline FitResult fit_lorentzian_doublet(const SpectrumResult& spec) {
    validate(spec);
    const auto& x = spec.x;
    const auto& y = spec.y;
    const std::size_t n = x.size();
    if (n < 8) throw FitError("fit_lorentzian_doublet: need at least 8 points");

    const double base = *std::min_element(y.begin(), y.end());
    std::vector<std::size_t> maxima;
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i == 0 || y[i] >= y[i - 1];
        const bool right = i + 1 == n || y[i] > y[i + 1];
        if (left && right) maxima.push_back(i);
    }
    std::sort(maxima.begin(), maxima.end(), [&](auto a, auto b) { return y[a] > y[b]; });
    if (maxima.empty()) throw FitError("fit_lorentzian_doublet: no local maximum");
    const std::size_t first = maxima.front();
    std::size_t second = n;
    for (std::size_t k = 1; k < maxima.size() && second == n; ++k) {
        const std::size_t m = maxima[k];
        const auto [lo, hi] = std::minmax(first, m);
        const double dip = *std::min_element(y.begin() + static_cast<std::ptrdiff_t>(lo),
                                             y.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
        if (dip - base < 0.75 * (y[m] - base)) second = m;
    }
    if (second == n) throw FitError("fit_lorentzian_doublet: could not find two separated peaks");

    auto half_width = [&](std::size_t i) {
        const double half = base + 0.5 * (y[i] - base);
        std::size_t l = i, r = i;
        while (l > 0 && y[l] > half) --l;
        while (r + 1 < n && y[r] > half) ++r;
        return std::max(x[r] - x[l], x[1] - x[0]);
    };
    Eigen::VectorXd p(7);
    p << x[first], half_width(first), y[first] - base, x[second], half_width(second), y[second] - base, base;

    detail::DoubletFunctor functor(x, y);
    Eigen::LevenbergMarquardt<detail::DoubletFunctor> lm(functor);
    lm.setXtol(1e-14);
    lm.setFtol(1e-14);
    lm.setGtol(0.0);
    lm.setMaxfev(4000);
    const auto status = lm.minimize(p);
    using S = Eigen::LevenbergMarquardtSpace::Status;
    if (status == S::ImproperInputParameters || status == S::TooManyFunctionEvaluation || !p.allFinite())
        throw FitError("fit_lorentzian_doublet: Levenberg-Marquardt did not converge (status " +
                       std::to_string(static_cast<int>(status)) + ", " + std::to_string(lm.iterations()) +
                       " iterations)");

    FitResult fit;
    fit.iterations = static_cast<int>(lm.iterations());
    for (int k = 0; k < 2; ++k) fit.peaks[k] = {p(3 * k), std::abs(p(3 * k + 1)), p(3 * k + 2)};
    fit.offset = p(6);
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    functor(p, r);
    fit.residual_rms = std::sqrt(r.squaredNorm() / static_cast<double>(n));
    Eigen::MatrixXd J(static_cast<Eigen::Index>(n), 7);
    functor.df(p, J);
    const double s2 = n > 7 ? r.squaredNorm() / static_cast<double>(n - 7) : 0.0;
    fit.covariance = s2 * (J.transpose() * J).inverse();
    if (fit.peaks[0].center > fit.peaks[1].center) {
        std::swap(fit.peaks[0], fit.peaks[1]);
        Eigen::Matrix<double, 7, 7> P = Eigen::Matrix<double, 7, 7>::Zero();
        const int perm[7] = {3, 4, 5, 0, 1, 2, 6};
        for (int i = 0; i < 7; ++i) P(i, perm[i]) = 1.0;
        fit.covariance = P * fit.covariance * P.transpose();
    }
    if (!(fit.peaks[0].fwhm > 0.0) || !(fit.peaks[1].fwhm > 0.0))
        throw FitError("fit_lorentzian_doublet: collapsed to zero width");
    return fit;
}

/// Frequency width (kHz) of a field width (mV/cm) at F_center (V/cm), from
/// the local slope dW/dF = alpha F.
inline double width_to_frequency(double width_mVcm, const PairChannel& ch, double F_center_Vcm) {
    if (!(F_center_Vcm > 0.0)) throw DomainError("width_to_frequency: F_center must be positive");
    return ch.alpha * F_center_Vcm * width_mVcm;  // MHz/(V/cm) * mV/cm = kHz
}

}  // namespace rydberg
