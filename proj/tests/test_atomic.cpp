#include <gsl/gsl_sf_coupling.h>
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rydberg/atomic.hpp"

using namespace rydberg;

namespace {

const Atom& rb() {
    static const Atom atom;
    return atom;
}

RydbergState S(int n, int l, double j, double mj = 0.5) { return {n, l, j, mj}; }

// Angular factor through the uncoupled |l m_l> |s m_s> basis, built only from
// GSL Clebsch-Gordan coefficients. Independent of the 6j route in the library.
double uncoupled_angular(const RydbergState& a, const RydbergState& b, int q) {
    auto cg = [](int tj1, int tm1, int tj2, int tm2, int tJ, int tM) {
        // <j1 m1 j2 m2 | J M>
        const double phase = ((tj1 - tj2 + tM) / 2) % 2 ? -1.0 : 1.0;
        return phase * std::sqrt(tJ + 1.0) * gsl_sf_coupling_3j(tj1, tj2, tJ, tm1, tm2, -tM);
    };
    auto orbital = [](int l2, int m2, int l1, int m1, int qq) {
        // <l2 m2 | C^1_q | l1 m1> * sqrt(3)... reduced to r_q / R
        const double phase = (m2 % 2) ? -1.0 : 1.0;
        return phase * std::sqrt((2.0 * l1 + 1) * (2.0 * l2 + 1)) *
               gsl_sf_coupling_3j(2 * l2, 2, 2 * l1, -2 * m2, 2 * qq, 2 * m1) *
               gsl_sf_coupling_3j(2 * l2, 2, 2 * l1, 0, 0, 0);
    };
    double sum = 0.0;
    for (int tms = -1; tms <= 1; tms += 2)
        for (int ml1 = -a.l; ml1 <= a.l; ++ml1)
            for (int ml2 = -b.l; ml2 <= b.l; ++ml2) {
                if (2 * ml1 + tms != a.twice_mj() || 2 * ml2 + tms != b.twice_mj()) continue;
                sum += cg(2 * a.l, 2 * ml1, 1, tms, a.twice_j(), a.twice_mj()) *
                       cg(2 * b.l, 2 * ml2, 1, tms, b.twice_j(), b.twice_mj()) *
                       orbital(b.l, ml2, a.l, ml1, q);
            }
    return sum;
}

}  // namespace

TEST(RydbergState, Validation) {
    EXPECT_TRUE(is_valid(S(49, 0, 0.5)));
    EXPECT_TRUE(is_valid(S(41, 2, 1.5, -1.5)));
    EXPECT_FALSE(is_valid(S(2, 2, 1.5)));      // l >= n
    EXPECT_FALSE(is_valid(S(10, 0, 1.5)));     // j != l +- 1/2
    EXPECT_FALSE(is_valid(S(10, 1, 0.5, 1.5))); // |mj| > j
    EXPECT_FALSE(is_valid(S(10, 1, 1.0)));     // integer j
    EXPECT_THROW(binding_energy(S(3, 3, 2.5), rb85_defects()), DomainError);
    EXPECT_EQ(to_string(S(49, 1, 1.5, 1.5)), "49p3/2,3/2");
}

TEST(QuantumDefects, ShippedFileMatchesBuiltIn) {
    const auto file = load_defect_table(std::string(RYDBERG_DATA_DIR) + "/rb85_quantum_defects.txt");
    const auto builtin = rb85_defects();
    EXPECT_EQ(file.species(), "Rb85");
    EXPECT_DOUBLE_EQ(file.nuclear_mass_u(), builtin.nuclear_mass_u());
    ASSERT_EQ(file.entries().size(), builtin.entries().size());
    for (const auto& [key, c] : builtin.entries()) {
        ASSERT_TRUE(file.contains(key.first, key.second));
        EXPECT_DOUBLE_EQ(file.defect(50, key.first, key.second), builtin.defect(50, key.first, key.second));
    }
}

TEST(QuantumDefects, FiniteAndNonNegative) {
    const auto t = rb85_defects();
    for (const auto& [key, c] : t.entries())
        for (int n = key.first + 1; n <= 200; ++n) {
            const double d = t.defect(n, key.first, key.second);
            EXPECT_TRUE(std::isfinite(d));
            EXPECT_GE(d, 0.0) << "l=" << key.first << " n=" << n;
        }
    EXPECT_EQ(t.defect(50, 7, 15), 0.0);
}

TEST(QuantumDefects, ParserReportsLine) {
    std::istringstream in("species X 10\n0 0.5 0.1 0.0\n1 2.5 0.1 0.0\n");
    try {
        parse_defect_table(in, "t.txt");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("t.txt:3"), std::string::npos) << e.what();
    }
}

TEST(BindingEnergy, Hydrogenic) {
    const auto h = hydrogenic_defects();
    EXPECT_DOUBLE_EQ(binding_energy(S(2, 0, 0.5), h), -1.0 / 8.0);
    EXPECT_DOUBLE_EQ(binding_energy(S(1, 0, 0.5), h), -0.5);
}

TEST(BindingEnergy, StrictlyIncreasingInN) {
    const auto t = rb85_defects();
    for (int l = 0; l <= 6; ++l)
        for (double j : {l - 0.5, l + 0.5}) {
            if (j < 0) continue;
            for (int n = std::max(l + 1, 5); n < 100; ++n)
                EXPECT_LT(binding_energy(S(n, l, j), t), binding_energy(S(n + 1, l, j), t));
        }
}

TEST(BindingEnergy, PairDefectZeroFieldDifference) {
    // E(42p1/2) + E(49p3/2) - E(41d3/2) - E(49s1/2), published value 25.15(13) MHz
    const auto& a = rb();
    const double w0 = 1e3 * (a.energy_GHz(S(42, 1, 0.5)) + a.energy_GHz(S(49, 1, 1.5)) -
                             a.energy_GHz(S(41, 2, 1.5)) - a.energy_GHz(S(49, 0, 0.5)));
    EXPECT_NEAR(w0, 25.15, 0.5);
}

TEST(RadialWavefunction, HydrogenGroundStateAnalytic) {
    const auto w = radial_wavefunction(S(1, 0, 0.5), -0.5);
    double worst = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        worst = std::max(worst, std::abs(w.u[i] - 2.0 * w.r[i] * std::exp(-w.r[i])));
    EXPECT_LT(worst, 1e-4);
}

TEST(RadialWavefunction, HydrogenMatrixElements) {
    const auto s1 = radial_wavefunction(S(1, 0, 0.5), -0.5);
    const auto s2 = radial_wavefunction(S(2, 0, 0.5), -0.125);
    const auto p2 = radial_wavefunction(S(2, 1, 0.5), -0.125);
    EXPECT_NEAR(std::abs(radial_integral(s1, p2, 1)), 128.0 * std::sqrt(6.0) / 243.0, 1e-3);
    EXPECT_NEAR(std::abs(radial_integral(s2, p2, 1)), 3.0 * std::sqrt(3.0), 3e-3 * 3.0 * std::sqrt(3.0));
    EXPECT_NEAR(radial_integral(s1, s1, 1), 1.5, 1.5e-3);  // <r>_1s
    EXPECT_NEAR(overlap(s1, s2), 0.0, 1e-3);
}

TEST(RadialWavefunction, HydrogenRydbergExpectation) {
    // <r> = (3n^2 - l(l+1)) / 2 for hydrogen
    const auto atom = Atom(hydrogenic_defects());
    for (auto [n, l] : {std::pair{30, 0}, {30, 1}, {45, 3}, {45, 20}}) {
        const auto& w = *atom.wavefunction(S(n, l, l + 0.5));
        const double expected = (3.0 * n * n - l * (l + 1.0)) / 2.0;
        EXPECT_NEAR(radial_integral(w, w, 1), expected, 1e-3 * expected) << n << " " << l;
    }
}

TEST(RadialWavefunction, ResamplingMatchesCommonLattice) {
    const auto& a = rb();
    const auto w1 = radial_wavefunction(S(49, 0, 0.5), a.wavefunction(S(49, 0, 0.5))->energy);
    GridSpec coarse;
    coarse.step = 0.013;
    const auto w2 = radial_wavefunction(S(49, 1, 1.5), a.wavefunction(S(49, 1, 1.5))->energy, coarse);
    const double direct = a.radial_matrix_element(S(49, 0, 0.5), S(49, 1, 1.5));
    EXPECT_NEAR(radial_integral(w1, w2, 1), direct, 1e-4 * std::abs(direct));
}

TEST(RadialWavefunction, NormalizationAndEndsForRydbergStates) {
    const auto& a = rb();
    for (int n = 35; n <= 55; n += 4)
        for (int l : {0, 1, 2, 3, 6, 20})
            for (double j : {l - 0.5, l + 0.5}) {
                if (j < 0.5) continue;
                const auto& w = *a.wavefunction(S(n, l, j));
                EXPECT_NEAR(overlap(w, w), 1.0, 1e-6);
                const double peak = w.peak_amplitude();
                EXPECT_LT(std::abs(w.u.front()), 1e-4 * peak) << n << " " << l;
                EXPECT_LT(std::abs(w.u.back()), 1e-4 * peak) << n << " " << l;
            }
}

TEST(RadialWavefunction, SameLNeighboursNearlyOrthogonal) {
    const auto& a = rb();
    const double ov = overlap(*a.wavefunction(S(49, 0, 0.5)), *a.wavefunction(S(48, 0, 0.5)));
    EXPECT_LT(std::abs(ov), 1e-2);
    for (int n = 36; n <= 54; n += 6)
        for (int l : {1, 2}) {
            const double o = overlap(*a.wavefunction(S(n, l, l + 0.5)), *a.wavefunction(S(n + 1, l, l + 0.5)));
            EXPECT_LT(std::abs(o), 1e-2) << n << " " << l;
        }
}

TEST(RadialWavefunction, PeakNearClassicalOuterTurningPoint) {
    const auto& w = *rb().wavefunction(S(49, 0, 0.5));
    EXPECT_NEAR(w.peak_radius(), 2.0 * 49 * 49, 0.25 * 2.0 * 49 * 49);
}

TEST(RadialWavefunction, RejectsPositiveEnergy) {
    EXPECT_THROW(radial_wavefunction(S(2, 0, 0.5), 0.1), DomainError);
}

TEST(RadialMatrixElement, PairTransitionsOfOrderThousandBohr) {
    const auto& a = rb();
    const double dp = a.radial_matrix_element(S(41, 2, 1.5), S(42, 1, 0.5));
    const double sp = a.radial_matrix_element(S(49, 0, 0.5), S(49, 1, 1.5));
    EXPECT_GT(std::abs(dp), 300.0);
    EXPECT_LT(std::abs(dp), 5000.0);
    EXPECT_GT(std::abs(sp), 300.0);
    EXPECT_LT(std::abs(sp), 5000.0);
    // Delta l = 2 still returns the bare quadrature value
    EXPECT_NE(a.radial_matrix_element(S(49, 0, 0.5), S(41, 2, 1.5)), 0.0);
}

TEST(DipoleMatrixElement, SelectionRules) {
    const auto& a = rb();
    EXPECT_EQ(a.dipole_matrix_element(S(49, 0, 0.5), S(48, 0, 0.5), 0), 0.0);
    EXPECT_EQ(a.dipole_matrix_element(S(49, 0, 0.5), S(47, 2, 1.5), 0), 0.0);
    EXPECT_EQ(a.dipole_matrix_element(S(49, 0, 0.5), S(49, 1, 1.5, 1.5), 0), 0.0);  // dm != q
    EXPECT_NE(a.dipole_matrix_element(S(49, 0, 0.5), S(49, 1, 1.5, 1.5), 1), 0.0);
    EXPECT_THROW(a.dipole_matrix_element(S(49, 0, 0.5), S(49, 1, 1.5), 2), DomainError);
}

TEST(DipoleMatrixElement, SToPThreeHalvesOrderThousand) {
    const double mu = rb().dipole_matrix_element(S(49, 0, 0.5), S(49, 1, 1.5), 0);
    EXPECT_GT(std::abs(mu), 300.0);
    EXPECT_LT(std::abs(mu), 3000.0);
}

TEST(DipoleMatrixElement, AngularFactorMatchesUncoupledRoute) {
    for (int l1 = 0; l1 <= 5; ++l1)
        for (int l2 : {l1 - 1, l1 + 1}) {
            if (l2 < 0) continue;
            for (int tj1 : {2 * l1 - 1, 2 * l1 + 1})
                for (int tj2 : {2 * l2 - 1, 2 * l2 + 1}) {
                    if (tj1 < 1 || tj2 < 1) continue;
                    for (int tm1 = -tj1; tm1 <= tj1; tm1 += 2)
                        for (int q = -1; q <= 1; ++q) {
                            const int tm2 = tm1 + 2 * q;
                            if (std::abs(tm2) > tj2) continue;
                            const RydbergState a{20, l1, tj1 / 2.0, tm1 / 2.0};
                            const RydbergState b{21, l2, tj2 / 2.0, tm2 / 2.0};
                            EXPECT_NEAR(dipole_angular_factor(a, b, q), uncoupled_angular(a, b, q), 1e-12)
                                << to_string(a) << " -> " << to_string(b) << " q=" << q;
                        }
                }
        }
    // textbook values: <p3/2,1/2|z|s1/2,1/2> = sqrt(2)/3, <p1/2,1/2|z|s1/2,1/2> = -1/3
    EXPECT_NEAR(std::abs(dipole_angular_factor(S(5, 0, 0.5), S(5, 1, 1.5), 0)), std::sqrt(2.0) / 3.0, 1e-14);
    EXPECT_NEAR(std::abs(dipole_angular_factor(S(5, 0, 0.5), S(5, 1, 0.5), 0)), 1.0 / 3.0, 1e-14);
}

TEST(DipoleMatrixElement, Hermiticity) {
    const auto& a = rb();
    for (auto [s1, s2] : {std::pair{S(49, 0, 0.5), S(49, 1, 1.5, 1.5)},
                          {S(41, 2, 1.5, -0.5), S(42, 1, 0.5, 0.5)},
                          {S(41, 2, 2.5, 1.5), S(40, 3, 3.5, 0.5)}}) {
        for (int q = -1; q <= 1; ++q) {
            const double fwd = a.dipole_matrix_element(s1, s2, q);
            const double back = a.dipole_matrix_element(s2, s1, -q);
            const double phase = (q % 2) ? -1.0 : 1.0;
            EXPECT_NEAR(fwd, phase * back, 1e-10 * std::max(1.0, std::abs(fwd)));
        }
    }
}

TEST(DipoleMatrixElement, SumRuleIndependentOfMjSign) {
    const auto& a = rb();
    for (auto [from, n2, l2] : {std::tuple{S(49, 0, 0.5), 49, 1}, {S(41, 2, 1.5), 42, 1}, {S(41, 2, 2.5), 40, 3}}) {
        auto total = [&](double mj) {
            RydbergState s = from;
            s.mj = mj;
            double sum = 0.0;
            for (double j2 : {l2 - 0.5, l2 + 0.5})
                for (int q = -1; q <= 1; ++q) {
                    const RydbergState t{n2, l2, j2, mj + q};
                    if (!is_valid(t)) continue;
                    const double mu = a.dipole_matrix_element(s, t, q);
                    sum += mu * mu;
                }
            return sum;
        };
        for (double mj = 0.5; mj <= from.j; mj += 1.0)
            EXPECT_NEAR(total(mj), total(-mj), 1e-9 * total(mj));
    }
}

TEST(PhotonEnergy, SToPTransition) {
    const auto& a = rb();
    const double ghz = a.energy_GHz(S(49, 1, 1.5)) - a.energy_GHz(S(49, 0, 0.5));
    EXPECT_NEAR(ghz, 32.8, 0.3);
}

TEST(Atom, CacheIsTransparent) {
    Atom fresh;
    const double direct =
        radial_integral(radial_wavefunction(S(45, 1, 0.5), -0.5 / std::pow(fresh.effective_n(S(45, 1, 0.5)), 2)),
                        radial_wavefunction(S(45, 2, 1.5), -0.5 / std::pow(fresh.effective_n(S(45, 2, 1.5)), 2)), 1);
    EXPECT_DOUBLE_EQ(fresh.radial_matrix_element(S(45, 1, 0.5), S(45, 2, 1.5)), direct);
    EXPECT_DOUBLE_EQ(fresh.radial_matrix_element(S(45, 2, 1.5), S(45, 1, 0.5)), direct);
}
