#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"

namespace rydberg {

/// 49p fraction against a scan variable (V/cm for field scans, MHz for rf scans).
struct SpectrumResult {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y_err;  // Monte-Carlo standard error, zero for single runs

    std::size_t size() const { return x.size(); }
};

/// Throws DomainError unless x is strictly increasing and the columns agree.
inline void validate(const SpectrumResult& s) {
    if (s.y.size() != s.x.size() || s.y_err.size() != s.x.size())
        throw DomainError("SpectrumResult: column lengths differ");
    for (std::size_t i = 1; i < s.x.size(); ++i)
        if (!(s.x[i] > s.x[i - 1])) throw DomainError("SpectrumResult: x must be strictly increasing");
}

/// Rows: <x_name>,p_fraction,p_err. `x_unit` goes into the header comment.
inline void write_spectrum_csv(std::ostream& os, const SpectrumResult& s, const std::string& x_name,
                               const std::string& x_unit, const std::string& title = "spectrum") {
    os << "# " << title << '\n';
    os << "# " << x_name << ": " << x_unit << "; p_fraction: 49p fraction; p_err: standard error\n";
    os << x_name << ",p_fraction,p_err\n";
    os.precision(10);
    for (std::size_t i = 0; i < s.size(); ++i) os << s.x[i] << ',' << s.y[i] << ',' << s.y_err[i] << '\n';
}

/// Reads the layout written by write_spectrum_csv; the p_err column is
/// optional. Returns the name of the x column through `x_name`.
inline SpectrumResult read_spectrum_csv(std::istream& in, const std::string& source, std::string* x_name = nullptr) {
    SpectrumResult s;
    std::string line;
    int lineno = 0;
    std::size_t columns = 0;
    auto fail = [&](const std::string& msg) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        if (columns == 0) {
            if (cells.size() < 2 || cells.size() > 3 || cells[1] != "p_fraction" ||
                (cells.size() == 3 && cells[2] != "p_err"))
                fail("expected header '<x>,p_fraction[,p_err]', got '" + line + "'");
            if (x_name) *x_name = cells[0];
            columns = cells.size();
            continue;
        }
        if (cells.size() != columns) fail("expected " + std::to_string(columns) + " columns");
        double v[3] = {0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < columns; ++k) {
            std::size_t used = 0;
            try {
                v[k] = std::stod(cells[k], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cells[k].size()) fail("not a number: '" + cells[k] + "'");
        }
        if (!s.x.empty() && !(v[0] > s.x.back())) fail("x column must be strictly increasing");
        s.x.push_back(v[0]);
        s.y.push_back(v[1]);
        s.y_err.push_back(v[2]);
    }
    if (columns == 0) throw ConfigError(source + ": no header line");
    if (s.x.empty()) throw ConfigError(source + ": no data rows");
    return s;
}

}  // namespace rydberg
