#pragma once

// Modified Rydberg-Ritz quantum defects, delta(n) = d0 + d2 / (n - d0)^2,
// keyed by (l, j). Series beyond the table's largest l use delta = 0.

#include <cmath>
#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "rydberg/errors.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

struct DefectCoefficients {
    double delta0 = 0.0;
    double delta2 = 0.0;
};

class QuantumDefectTable {
public:
    QuantumDefectTable() = default;
    QuantumDefectTable(std::string species, double nuclear_mass_u)
        : species_(std::move(species)), mass_u_(nuclear_mass_u) {}

    const std::string& species() const { return species_; }
    double nuclear_mass_u() const { return mass_u_; }
    double rydberg_au() const { return units::reduced_rydberg_au(mass_u_); }

    /// twice_j is 2j.
    void set(int l, int twice_j, DefectCoefficients c) { entries_[{l, twice_j}] = c; }

    bool contains(int l, int twice_j) const { return entries_.contains({l, twice_j}); }

    int max_l() const {
        int m = -1;
        for (const auto& [key, _] : entries_) m = std::max(m, key.first);
        return m;
    }

    /// Defect for principal quantum number n; zero for series not in the table.
    double defect(int n, int l, int twice_j) const {
        auto it = entries_.find({l, twice_j});
        if (it == entries_.end()) return 0.0;
        const auto [d0, d2] = it->second;
        const double nd = n - d0;
        return d0 + d2 / (nd * nd);
    }

    const std::map<std::pair<int, int>, DefectCoefficients>& entries() const { return entries_; }

private:
    std::string species_ = "H";
    double mass_u_ = 1.00727646688;  // proton
    std::map<std::pair<int, int>, DefectCoefficients> entries_;
};

/// Built-in 85Rb table; identical to data/rb85_quantum_defects.txt.
inline QuantumDefectTable rb85_defects() {
    QuantumDefectTable t("Rb85", units::rb85_mass_u);
    t.set(0, 1, {3.1311804, 0.1784});
    t.set(1, 1, {2.6548849, 0.2900});
    t.set(1, 3, {2.6416737, 0.2950});
    t.set(2, 3, {1.34809171, -0.60286});
    t.set(2, 5, {1.34646572, -0.59600});
    t.set(3, 5, {0.0165192, -0.085});
    t.set(3, 7, {0.0165437, -0.086});
    t.set(4, 7, {0.00405, 0.0});
    t.set(4, 9, {0.00405, 0.0});
    return t;
}

/// Pure Coulomb (all defects zero) with an infinite nuclear mass, used for
/// analytic hydrogen checks.
inline QuantumDefectTable hydrogenic_defects() {
    return QuantumDefectTable("hydrogenic", std::numeric_limits<double>::infinity());
}

/// Parses the text format
///
///     species <name> <nuclear mass in u>
///     <l> <j> <delta0> <delta2>
///
/// with '#' comments. j is written as a decimal half-integer (0.5, 1.5, ...).
inline QuantumDefectTable parse_defect_table(std::istream& in, const std::string& source = "<stream>") {
    QuantumDefectTable table;
    bool have_species = false;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "species") {
            std::string name;
            double mass = 0.0;
            if (!(ls >> name >> mass) || mass <= 0.0) fail("expected 'species <name> <mass_u>'");
            auto old = table.entries();
            table = QuantumDefectTable(name, mass);
            for (const auto& [k, v] : old) table.set(k.first, k.second, v);
            have_species = true;
            continue;
        }
        int l = 0;
        double j = 0.0;
        DefectCoefficients c;
        try {
            l = std::stoi(first);
        } catch (const std::exception&) {
            fail("expected an integer l, got '" + first + "'");
        }
        if (!(ls >> j >> c.delta0 >> c.delta2)) fail("expected '<l> <j> <delta0> <delta2>'");
        const int twice_j = static_cast<int>(std::lround(2.0 * j));
        if (l < 0 || std::abs(2.0 * j - twice_j) > 1e-9 || twice_j % 2 == 0 ||
            std::abs(twice_j - 2 * l) != 1)
            fail("invalid (l, j) = (" + std::to_string(l) + ", " + std::to_string(j) + ")");
        if (c.delta0 < 0.0) fail("delta0 must be non-negative");
        if (table.contains(l, twice_j)) fail("duplicate entry");
        table.set(l, twice_j, c);
        std::string extra;
        if (ls >> extra) fail("trailing token '" + extra + "'");
    }
    if (!have_species) throw ConfigError(source + ": missing 'species' line");
    return table;
}

inline QuantumDefectTable load_defect_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open quantum-defect file '" + path + "'");
    return parse_defect_table(in, path);
}

}  // namespace rydberg
