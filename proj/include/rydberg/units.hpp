#pragma once

// Physical constants and unit conversions. Internal physics runs in atomic
// units (hartree, bohr, e*a0); public interfaces use GHz/MHz, V/cm, um, us.

#include <numbers>

namespace rydberg::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018
inline constexpr double hartree_GHz = 6579683.920502;
inline constexpr double hartree_MHz = hartree_GHz * 1e3;
inline constexpr double field_au_Vcm = 5.14220674763e9;
inline constexpr double bohr_um = 5.29177210903e-5;
inline constexpr double electron_mass_u = 5.48579909065e-4;

// 85Rb atomic mass (AME 2016)
inline constexpr double rb85_mass_u = 84.911789738;

/// Rydberg constant for a nucleus of the given mass, in hartree.
constexpr double reduced_rydberg_au(double nuclear_mass_u) {
    return 0.5 / (1.0 + electron_mass_u / nuclear_mass_u);
}

constexpr double au_to_GHz(double e) { return e * hartree_GHz; }
constexpr double au_to_MHz(double e) { return e * hartree_MHz; }
constexpr double GHz_to_au(double f) { return f / hartree_GHz; }
constexpr double MHz_to_au(double f) { return f / hartree_MHz; }

constexpr double Vcm_to_au(double f) { return f / field_au_Vcm; }
constexpr double au_to_Vcm(double f) { return f * field_au_Vcm; }

constexpr double um_to_bohr(double x) { return x / bohr_um; }
constexpr double bohr_to_um(double x) { return x * bohr_um; }

/// Energy (GHz) of a dipole d [e*a0] in a field F [V/cm].
constexpr double dipole_field_GHz(double d_au, double field_Vcm) {
    return d_au * Vcm_to_au(field_Vcm) * hartree_GHz;
}

constexpr double GHz_to_MHz(double f) { return f * 1e3; }
constexpr double MHz_to_GHz(double f) { return f * 1e-3; }

constexpr double mVcm_to_Vcm(double f) { return f * 1e-3; }
constexpr double Vcm_to_mVcm(double f) { return f * 1e3; }

}  // namespace rydberg::units
