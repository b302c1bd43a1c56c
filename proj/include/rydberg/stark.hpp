#pragma once

// Stark maps by exact diagonalization in a truncated |n l j m_j> basis,
// adiabatic state tracking, polarizability fits and the two-atom channel
// constants (W0, alpha) of the sd -> pp energy transfer.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rydberg/atomic.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/parallel.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

struct StarkBasisSpec {
    int n_min = 35;
    int n_max = 55;
    double window_GHz = 150.0;  // half-width around the center energy
};

/// One fixed-m_j block of the single-atom Hamiltonian. A field along z
/// conserves m_j, so the block is closed.
class StarkBasis {
public:
    StarkBasis(const Atom& atom, const RydbergState& center, StarkBasisSpec spec = {})
        : spec_(spec), center_(center) {
        validate(center);
        mj_ = center.mj_abs();
        center_GHz_ = atom.energy_GHz(center);
        for (int n = spec.n_min; n <= spec.n_max; ++n)
            for (int l = 0; l < n; ++l)
                for (double j : {l - 0.5, l + 0.5}) {
                    if (j < mj_) continue;
                    const RydbergState s{n, l, j, mj_};
                    const double e = atom.energy_GHz(s);
                    if (std::abs(e - center_GHz_) <= spec.window_GHz) {
                        states_.push_back(s);
                        energies_.push_back(e);
                    }
                }
        const auto dim = static_cast<Eigen::Index>(states_.size());
        dipole_z_ = Eigen::MatrixXd::Zero(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index k = 0; k < i; ++k) {
                const auto& a = states_[static_cast<std::size_t>(i)];
                const auto& b = states_[static_cast<std::size_t>(k)];
                if (std::abs(a.l - b.l) != 1) continue;
                const double d = atom.dipole_matrix_element(a, b, 0);
                dipole_z_(i, k) = d;
                dipole_z_(k, i) = d;
            }
    }

    std::size_t size() const { return states_.size(); }
    const std::vector<RydbergState>& states() const { return states_; }
    const RydbergState& state(std::size_t i) const { return states_[i]; }
    /// Zero-field energies in GHz.
    const std::vector<double>& energies() const { return energies_; }
    /// <i| z |k> in bohr.
    const Eigen::MatrixXd& dipole_z() const { return dipole_z_; }
    double mj() const { return mj_; }
    double center_GHz() const { return center_GHz_; }
    const RydbergState& center() const { return center_; }
    const StarkBasisSpec& spec() const { return spec_; }

    std::optional<std::size_t> index_of(const RydbergState& s) const {
        for (std::size_t i = 0; i < states_.size(); ++i)
            if (states_[i].same_level(s) && std::abs(states_[i].mj - s.mj_abs()) < 1e-9) return i;
        return std::nullopt;
    }

private:
    StarkBasisSpec spec_;
    RydbergState center_;
    double mj_ = 0.5;
    double center_GHz_ = 0.0;
    std::vector<RydbergState> states_;
    std::vector<double> energies_;
    Eigen::MatrixXd dipole_z_;
};

/// H(F) = diag(E) + F z, in GHz for F in V/cm.
inline Eigen::MatrixXd build_hamiltonian(const StarkBasis& basis, double field_Vcm) {
    if (field_Vcm < 0.0) throw DomainError("build_hamiltonian: field must be non-negative");
    Eigen::MatrixXd h = units::dipole_field_GHz(1.0, field_Vcm) * basis.dipole_z();
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        h(k, k) += basis.energies()[i];
    }
    return h;
}

struct StarkMap {
    std::vector<double> fields;  // V/cm
    Eigen::MatrixXd energies;    // [field x level], ascending in each row, GHz
    /// labels[f][k]: basis index that level k at field f connects to adiabatically.
    std::vector<std::vector<std::size_t>> labels;
    std::vector<std::string> warnings;

    std::size_t levels() const { return static_cast<std::size_t>(energies.cols()); }

    /// Energy curve (GHz) of the level adiabatically connected to basis state `label`.
    std::vector<double> curve(std::size_t label) const {
        std::vector<double> out(fields.size());
        for (std::size_t f = 0; f < fields.size(); ++f) {
            const auto& row = labels[f];
            const auto k = static_cast<std::size_t>(std::find(row.begin(), row.end(), label) - row.begin());
            out[f] = energies(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k));
        }
        return out;
    }
};

namespace detail {

// Greedy maximum-overlap assignment between eigenvector sets at adjacent
// fields; returns for each current column the previous column it continues.
inline std::vector<std::size_t> match_columns(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& cur,
                                              std::size_t& ambiguous) {
    const Eigen::MatrixXd ov = (prev.transpose() * cur).cwiseAbs();
    const auto n = static_cast<std::size_t>(ov.cols());
    struct Entry {
        double value;
        std::size_t prev, cur;
    };
    std::vector<Entry> entries;
    entries.reserve(n * 4);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t p = 0; p < n; ++p) {
            const double v = ov(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c));
            if (v > 1e-6) entries.push_back({v, p, c});
        }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.value != b.value) return a.value > b.value;
        return std::tie(a.cur, a.prev) < std::tie(b.cur, b.prev);
    });
    std::vector<std::size_t> from(n, n);
    std::vector<bool> used(n, false);
    for (const auto& e : entries) {
        if (from[e.cur] != n || used[e.prev]) continue;
        from[e.cur] = e.prev;
        used[e.prev] = true;
    }
    // leftovers (no significant overlap) pair up in energy order
    std::size_t next_free = 0;
    for (std::size_t c = 0; c < n; ++c) {
        if (from[c] != n) continue;
        while (used[next_free]) ++next_free;
        from[c] = next_free;
        used[next_free] = true;
    }
    for (std::size_t c = 0; c < n; ++c) {
        double best = 0.0, second = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const double v = ov(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c));
            if (v > best) {
                second = best;
                best = v;
            } else if (v > second) {
                second = v;
            }
        }
        if (best - second < 1e-3) ++ambiguous;
    }
    return from;
}

}  // namespace detail

/// Diagonalizes H(F) on each grid point and tracks levels adiabatically by
/// maximal eigenvector overlap between neighbouring fields. The grid must be
/// ascending and start at 0.
inline StarkMap stark_map(const StarkBasis& basis, const std::vector<double>& field_grid) {
    if (field_grid.empty() || field_grid.front() != 0.0)
        throw DomainError("stark_map: field grid must start at 0");
    if (!std::is_sorted(field_grid.begin(), field_grid.end()) ||
        std::adjacent_find(field_grid.begin(), field_grid.end()) != field_grid.end())
        throw DomainError("stark_map: field grid must be strictly ascending");

    const auto nf = field_grid.size();
    const auto dim = static_cast<Eigen::Index>(basis.size());
    std::vector<Eigen::VectorXd> values(nf);
    std::vector<Eigen::MatrixXd> vectors(nf);
    parallel_for(nf, [&](std::size_t f) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(build_hamiltonian(basis, field_grid[f]));
        values[f] = solver.eigenvalues();
        vectors[f] = solver.eigenvectors();
    });

    StarkMap map;
    map.fields = field_grid;
    map.energies.resize(static_cast<Eigen::Index>(nf), dim);
    map.labels.assign(nf, std::vector<std::size_t>(basis.size()));
    for (std::size_t f = 0; f < nf; ++f) map.energies.row(static_cast<Eigen::Index>(f)) = values[f].transpose();

    // F = 0: H is diagonal, each eigenvector is a basis vector
    for (Eigen::Index k = 0; k < dim; ++k) {
        Eigen::Index arg = 0;
        vectors[0].col(k).cwiseAbs().maxCoeff(&arg);
        map.labels[0][static_cast<std::size_t>(k)] = static_cast<std::size_t>(arg);
    }
    std::size_t ambiguous_total = 0;
    for (std::size_t f = 1; f < nf; ++f) {
        std::size_t ambiguous = 0;
        const auto from = detail::match_columns(vectors[f - 1], vectors[f], ambiguous);
        for (std::size_t k = 0; k < basis.size(); ++k) map.labels[f][k] = map.labels[f - 1][from[k]];
        if (ambiguous) {
            ambiguous_total += ambiguous;
            if (map.warnings.size() < 8)
                map.warnings.push_back("ambiguous adiabatic tracking at F = " + std::to_string(field_grid[f]) +
                                       " V/cm (" + std::to_string(ambiguous) + " levels)");
        }
    }
    if (ambiguous_total && map.warnings.size() >= 8)
        map.warnings.push_back("total ambiguous assignments: " + std::to_string(ambiguous_total));
    return map;
}

/// Uniform grid 0, step, 2 step, ... up to and including f_max.
inline std::vector<double> field_grid(double f_max, double step) {
    if (f_max < 0.0 || step <= 0.0) throw DomainError("field_grid: need f_max >= 0, step > 0");
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor(f_max / step + 1e-9));
    for (std::size_t i = 0; i <= count; ++i) grid.push_back(static_cast<double>(i) * step);
    return grid;
}

struct PolarizabilityFit {
    double alpha = 0.0;         // MHz/(V/cm)^2, E = E0 - alpha F^2 / 2
    double e0_GHz = 0.0;
    double residual_MHz = 0.0;  // rms
    double max_shift_MHz = 0.0;
};

/// Least-squares fit of E(F) = E0 - alpha F^2 / 2 to the tracked curve of
/// `label` over [window_lo, window_hi]. Throws QuadraticModelError when the
/// rms residual exceeds `tolerance` times the largest shift in the window.
inline PolarizabilityFit polarizability(const StarkMap& map, const StarkBasis& basis, const RydbergState& label,
                                        double window_lo = 0.0, double window_hi = 0.45,
                                        double tolerance = 0.01) {
    const auto idx = basis.index_of(label);
    if (!idx) throw DomainError("polarizability: " + to_string(label) + " not in basis");
    if (window_lo < map.fields.front() - 1e-12 || window_hi > map.fields.back() + 1e-12)
        throw DomainError("polarizability: fit window outside map range");
    const auto curve = map.curve(*idx);

    std::vector<double> fs, es;
    for (std::size_t f = 0; f < map.fields.size(); ++f)
        if (map.fields[f] >= window_lo - 1e-12 && map.fields[f] <= window_hi + 1e-12) {
            fs.push_back(map.fields[f]);
            es.push_back(units::GHz_to_MHz(curve[f]));
        }
    if (fs.size() < 3) throw DomainError("polarizability: fewer than 3 field points in window");

    const auto m = static_cast<Eigen::Index>(fs.size());
    Eigen::MatrixXd design(m, 2);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = -0.5 * fs[static_cast<std::size_t>(i)] * fs[static_cast<std::size_t>(i)];
        rhs(i) = es[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d p = design.colPivHouseholderQr().solve(rhs);
    const Eigen::VectorXd resid = design * p - rhs;

    PolarizabilityFit fit;
    fit.alpha = p(1);
    fit.e0_GHz = units::MHz_to_GHz(p(0));
    fit.residual_MHz = std::sqrt(resid.squaredNorm() / static_cast<double>(m));
    for (double e : es) fit.max_shift_MHz = std::max(fit.max_shift_MHz, std::abs(e - p(0)));
    if (fit.residual_MHz > tolerance * fit.max_shift_MHz + 1e-9)
        throw QuadraticModelError("polarizability: " + to_string(label) +
                                      " is not quadratic in the fit window (rms residual " +
                                      std::to_string(fit.residual_MHz) + " MHz)",
                                  fit.residual_MHz);
    return fit;
}

/// Second-order perturbation theory polarizability of basis state `s` in MHz/(V/cm)^2.
inline double perturbative_polarizability(const StarkBasis& basis, const RydbergState& s) {
    const auto idx = basis.index_of(s);
    if (!idx) throw DomainError("perturbative_polarizability: state not in basis");
    const double c = units::dipole_field_GHz(1.0, 1.0);
    const auto i = static_cast<Eigen::Index>(*idx);
    double sum = 0.0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
        if (k == *idx) continue;
        const double z = basis.dipole_z()(i, static_cast<Eigen::Index>(k));
        if (z == 0.0) continue;
        sum += c * c * z * z / (basis.energies()[*idx] - basis.energies()[k]);
    }
    return units::GHz_to_MHz(-2.0 * sum);
}

// ---------------------------------------------------------------------------
// Two-atom channels
// ---------------------------------------------------------------------------

enum class Channel { a, b };

inline const char* to_string(Channel c) { return c == Channel::a ? "a" : "b"; }

/// One sd -> pp reaction 41d3/2 + 49s1/2 -> 42p1/2 + 49p3/2 with final
/// |m_j(49p)| = 1/2 (channel a) or 3/2 (channel b). W = E_pp - E_sd.
struct PairChannel {
    Channel id = Channel::a;
    RydbergState d_initial{41, 2, 1.5, 0.5};
    RydbergState s_initial{49, 0, 0.5, 0.5};
    RydbergState d_final{42, 1, 0.5, 0.5};
    RydbergState s_final{49, 1, 1.5, 0.5};
    double W0 = 0.0;     // MHz
    double alpha = 0.0;  // MHz/(V/cm)^2
};

inline PairChannel make_channel(Channel id, double W0_MHz, double alpha) {
    PairChannel ch;
    ch.id = id;
    ch.s_final.mj = (id == Channel::a) ? 0.5 : 1.5;
    ch.W0 = W0_MHz;
    ch.alpha = alpha;
    return ch;
}

/// Published channel constants, for runs that should not depend on the
/// Stark-map computation.
inline PairChannel published_channel(Channel id) {
    return id == Channel::a ? make_channel(Channel::a, 25.15, 347.04) : make_channel(Channel::b, 25.15, 297.40);
}

/// W(F) = W0 - alpha F^2 / 2 in MHz.
inline double pair_energy_difference(const PairChannel& ch, double field_Vcm) {
    return ch.W0 - 0.5 * ch.alpha * field_Vcm * field_Vcm;
}

/// Static field (V/cm) that makes the channel resonant.
inline double resonance_field(const PairChannel& ch) {
    if (!(ch.W0 > 0.0) || !(ch.alpha > 0.0))
        throw DomainError("resonance_field: W0 and alpha must be positive");
    return std::sqrt(2.0 * ch.W0 / ch.alpha);
}

struct ChannelConstantsOptions {
    StarkBasisSpec basis{};
    double fit_max_Vcm = 0.45;
    double field_step_Vcm = 0.025;
};

struct StatePolarizability {
    RydbergState state;
    PolarizabilityFit fit;
};

struct ChannelConstants {
    PairChannel a;
    PairChannel b;
    std::vector<StatePolarizability> states;  // per-state fits behind the channel alphas
    std::vector<std::string> warnings;
};

/// W0 from the zero-field energies and alpha from single-atom Stark maps:
/// alpha = alpha(42p) + alpha(49p) - alpha(41d) - alpha(49s). Three maps are
/// built (the 49s/49p |m_j|=1/2 block, the 49p |m_j|=3/2 block and the
/// 41d/42p block), each centred on its own states.
inline ChannelConstants compute_channel_constants(const Atom& atom, const ChannelConstantsOptions& opt = {}) {
    const PairChannel ref_a = make_channel(Channel::a, 0, 0);
    const PairChannel ref_b = make_channel(Channel::b, 0, 0);
    const auto grid = field_grid(opt.fit_max_Vcm, opt.field_step_Vcm);

    ChannelConstants out;
    auto fit_states = [&](const RydbergState& center, std::vector<RydbergState> targets) {
        const StarkBasis basis(atom, center, opt.basis);
        const auto map = stark_map(basis, grid);
        for (const auto& w : map.warnings) out.warnings.push_back(to_string(center) + ": " + w);
        for (const auto& t : targets) out.states.push_back({t, polarizability(map, basis, t, 0.0, opt.fit_max_Vcm)});
    };
    fit_states(ref_a.s_initial, {ref_a.s_initial, ref_a.s_final});
    fit_states(ref_b.s_final, {ref_b.s_final});
    fit_states(ref_a.d_initial, {ref_a.d_initial, ref_a.d_final});

    auto alpha_of = [&](const RydbergState& s) {
        for (const auto& sp : out.states)
            if (sp.state == s) return sp.fit.alpha;
        throw DomainError("compute_channel_constants: missing fit");
    };
    auto build = [&](const PairChannel& ref) {
        const double w0 = units::GHz_to_MHz(atom.energy_GHz(ref.d_final) + atom.energy_GHz(ref.s_final) -
                                            atom.energy_GHz(ref.d_initial) - atom.energy_GHz(ref.s_initial));
        const double alpha = alpha_of(ref.d_final) + alpha_of(ref.s_final) - alpha_of(ref.d_initial) -
                             alpha_of(ref.s_initial);
        return make_channel(ref.id, w0, alpha);
    };
    out.a = build(ref_a);
    out.b = build(ref_b);
    return out;
}

/// Rows: field_Vcm, level_index, energy_GHz, label.
inline void write_stark_map_csv(std::ostream& os, const StarkMap& map, const StarkBasis& basis) {
    os << "# Stark map, |m_j| = " << basis.mj() << ", " << basis.size() << " basis states\n";
    os << "# field_Vcm: V/cm; energy_GHz: GHz (binding energy); label: zero-field state\n";
    os << "field_Vcm,level_index,energy_GHz,label\n";
    os.precision(12);
    for (std::size_t f = 0; f < map.fields.size(); ++f)
        for (std::size_t k = 0; k < map.levels(); ++k)
            os << map.fields[f] << ',' << k << ','
               << map.energies(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) << ','
               << to_string(basis.state(map.labels[f][k])) << '\n';
}

}  // namespace rydberg
