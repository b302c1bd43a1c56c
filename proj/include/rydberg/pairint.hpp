#pragma once

// Dipole-dipole coupling between a d-atom and an s-atom.
// Convention: V is returned as an ordinary frequency V/h in MHz.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "rydberg/atomic.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/stark.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

/// Transition dipole <f| d |i> as a complex Cartesian vector in e a0.
struct DipoleVector {
    Eigen::Vector3cd components = Eigen::Vector3cd::Zero();

    /// From spherical components mu_q = <f| r_q |i>, q = -1, 0, +1.
    static DipoleVector from_spherical(double mu_minus, double mu_zero, double mu_plus) {
        const double s = 1.0 / std::sqrt(2.0);
        const std::complex<double> i(0.0, 1.0);
        DipoleVector d;
        d.components << s * (mu_minus - mu_plus), i * s * (mu_minus + mu_plus), mu_zero;
        return d;
    }

    /// Spherical component <f| r_q |i> recovered from the Cartesian vector.
    std::complex<double> spherical(int q) const {
        const double s = 1.0 / std::sqrt(2.0);
        const std::complex<double> i(0.0, 1.0);
        switch (q) {
            case -1: return s * (components.x() - i * components.y());
            case 0: return components.z();
            case 1: return -s * (components.x() + i * components.y());
            default: throw DomainError("DipoleVector::spherical: q must be -1, 0 or +1");
        }
    }

    double norm() const { return components.norm(); }
};

/// Transition dipole of atom `from -> to` including all three polarizations.
inline DipoleVector transition_dipole(const Atom& atom, const RydbergState& from, const RydbergState& to) {
    return DipoleVector::from_spherical(atom.dipole_matrix_element(from, to, -1),
                                        atom.dipole_matrix_element(from, to, 0),
                                        atom.dipole_matrix_element(from, to, 1));
}

/// Separation vector from the d-atom to the s-atom, in um.
class PairGeometry {
public:
    explicit PairGeometry(const Eigen::Vector3d& R_um) : R_(R_um) {
        if (!std::isfinite(R_.norm()) || R_.norm() <= 0.0)
            throw DomainError("PairGeometry: separation must be finite and nonzero");
    }
    PairGeometry(double x, double y, double z) : PairGeometry(Eigen::Vector3d(x, y, z)) {}

    /// Separation R along polar angle theta from the field (z) axis.
    static PairGeometry polar(double R_um, double theta, double phi = 0.0) {
        return PairGeometry(R_um * Eigen::Vector3d(std::sin(theta) * std::cos(phi),
                                                   std::sin(theta) * std::sin(phi), std::cos(theta)));
    }
    static PairGeometry along_field(double R_um) { return PairGeometry(0.0, 0.0, R_um); }

    const Eigen::Vector3d& vector_um() const { return R_; }
    double distance_um() const { return R_.norm(); }
    Eigen::Vector3d unit() const { return R_ / R_.norm(); }

private:
    Eigen::Vector3d R_;
};

/// V = (mu1.mu2 - 3 (mu1.R)(mu2.R)) / R^3 in MHz. The products are bilinear,
/// no complex conjugation, as in the matrix element <f1 f2|V|i1 i2>.
inline std::complex<double> coupling(const DipoleVector& mu1, const DipoleVector& mu2, const PairGeometry& geom) {
    const double R = units::um_to_bohr(geom.distance_um());
    const Eigen::Vector3cd n = geom.unit().cast<std::complex<double>>();
    const auto a = mu1.components, b = mu2.components;
    const std::complex<double> v = (a.transpose() * b)(0) - 3.0 * (a.transpose() * n)(0) * (b.transpose() * n)(0);
    return units::au_to_MHz(1.0) * v / (R * R * R);
}

/// Quantum beat angular frequency 2 pi * 2|V| in rad/us for V in MHz.
inline double quantum_beat(double V_MHz) { return units::two_pi * 2.0 * std::abs(V_MHz); }

/// RMS near-field (V/cm) at the partner atom from a dipole oscillating with
/// amplitude mu: |3(mu.R)R - mu| / (sqrt 2 R^3).
inline double dipole_field(const DipoleVector& mu, const PairGeometry& geom) {
    const double R = units::um_to_bohr(geom.distance_um());
    const Eigen::Vector3cd n = geom.unit().cast<std::complex<double>>();
    const Eigen::Vector3cd e = 3.0 * (n.transpose() * mu.components)(0) * n - mu.components;
    return units::au_to_Vcm(e.norm() / (std::sqrt(2.0) * R * R * R));
}

/// Microwave photon exchanged between the atoms: |E(49p) - E(49s)| in GHz.
inline double photon_energy(const Atom& atom, const PairChannel& ch) {
    return std::abs(atom.energy_GHz(ch.s_final) - atom.energy_GHz(ch.s_initial));
}

/// One m_j-resolved path |d m_d, s m_s> -> |p m_p, p' m_p'> of a channel.
struct CouplingPath {
    RydbergState d_initial, s_initial, d_final, s_final;
    int q_d = 0;  // m change of the d-atom
    int q_s = 0;  // m change of the s-atom
    DipoleVector mu_d, mu_s;
    std::complex<double> V;  // MHz, for the geometry it was evaluated at
};

/// Transition dipoles of every dipole-allowed m_j path of the channel (signs
/// of every m_j varied, magnitudes fixed by the channel states). Geometry
/// independent, so it can be reused for many pair positions.
class ChannelDipoles {
public:
    ChannelDipoles() = default;
    ChannelDipoles(const Atom& atom, const PairChannel& ch) {
        auto with_m = [](RydbergState s, int sign) {
            s.mj = sign * s.mj_abs();
            return s;
        };
        for (int sd : {1, -1})
            for (int ss : {1, -1})
                for (int fd : {1, -1})
                    for (int fs : {1, -1}) {
                        CouplingPath p{with_m(ch.d_initial, sd), with_m(ch.s_initial, ss), with_m(ch.d_final, fd),
                                       with_m(ch.s_final, fs), 0, 0, {}, {}, {}};
                        p.q_d = static_cast<int>(std::lround(p.d_final.mj - p.d_initial.mj));
                        p.q_s = static_cast<int>(std::lround(p.s_final.mj - p.s_initial.mj));
                        if (std::abs(p.q_d) > 1 || std::abs(p.q_s) > 1) continue;
                        p.mu_d = transition_dipole(atom, p.d_initial, p.d_final);
                        p.mu_s = transition_dipole(atom, p.s_initial, p.s_final);
                        if (p.mu_d.norm() > 0.0 && p.mu_s.norm() > 0.0) paths_.push_back(p);
                    }
    }

    const std::vector<CouplingPath>& paths() const { return paths_; }

    /// Paths with nonzero coupling in this geometry, V filled in.
    std::vector<CouplingPath> evaluate(const PairGeometry& geom) const {
        std::vector<CouplingPath> out;
        for (auto p : paths_) {
            p.V = coupling(p.mu_d, p.mu_s, geom);
            if (std::abs(p.V) > 0.0) out.push_back(p);
        }
        return out;
    }

    /// Largest |V| over the paths, in MHz.
    double max_coupling(const PairGeometry& geom) const {
        double best = 0.0;
        for (const auto& p : paths_) best = std::max(best, std::abs(coupling(p.mu_d, p.mu_s, geom)));
        return best;
    }

private:
    std::vector<CouplingPath> paths_;
};

/// All nonvanishing m_j paths of the channel for the given geometry.
inline std::vector<CouplingPath> channel_couplings(const Atom& atom, const PairChannel& ch, const PairGeometry& geom) {
    return ChannelDipoles(atom, ch).evaluate(geom);
}

/// Path of largest |V|; the default scalar coupling for the channel.
inline CouplingPath dominant_coupling(const Atom& atom, const PairChannel& ch, const PairGeometry& geom) {
    const auto paths = channel_couplings(atom, ch, geom);
    if (paths.empty()) throw DomainError("dominant_coupling: channel has no allowed path in this geometry");
    return *std::max_element(paths.begin(), paths.end(),
                             [](const auto& a, const auto& b) { return std::abs(a.V) < std::abs(b.V); });
}

/// Orientation-independent coupling scale of the channel levels: the rms of
/// V over every m_j of the four fine-structure levels, averaged over the
/// initial sublevels, sqrt(sum |V|^2 / g_initial). Does not depend on the
/// direction of R.
inline double sublevel_rms_coupling(const Atom& atom, const PairChannel& ch, double R_um) {
    const PairGeometry geom = PairGeometry::along_field(R_um);
    auto sublevels = [](const RydbergState& s) {
        std::vector<RydbergState> out;
        for (int tm = -s.twice_j(); tm <= s.twice_j(); tm += 2) out.push_back({s.n, s.l, s.j, 0.5 * tm});
        return out;
    };
    const auto di = sublevels(ch.d_initial), si = sublevels(ch.s_initial);
    const auto df = sublevels(ch.d_final), sf = sublevels(ch.s_final);
    double sum = 0.0;
    for (const auto& a : di)
        for (const auto& c : df) {
            const auto mu1 = transition_dipole(atom, a, c);
            for (const auto& b : si)
                for (const auto& d : sf) sum += std::norm(coupling(mu1, transition_dipole(atom, b, d), geom));
        }
    return std::sqrt(sum / static_cast<double>(di.size() * si.size()));
}

/// Minimum splitting of the two-level pair Hamiltonian [[W, V], [V*, 0]] in MHz.
inline double pair_splitting(double W_MHz, std::complex<double> V_MHz) {
    return std::sqrt(W_MHz * W_MHz + 4.0 * std::norm(V_MHz));
}

}  // namespace rydberg
