#pragma once

// key = value run configuration. Every value remembers where it came from
// (file:line, --flag or default) so validation errors point at it.

#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"

#define RYDBERG_VERSION "1.0.0"

namespace rydberg {

struct KeySpec {
    std::string name;
    std::string default_value;  // empty: unset
    std::string unit;           // empty for dimensionless or text keys
    std::string help;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class RunConfig {
public:
    RunConfig(std::string command, std::vector<KeySpec> keys) : command_(std::move(command)), keys_(std::move(keys)) {
        for (const auto& k : keys_) values_[k.name] = {k.default_value, "default"};
    }

    const std::string& command() const { return command_; }
    const std::vector<KeySpec>& keys() const { return keys_; }

    bool known(const std::string& key) const { return values_.contains(key); }

    void set(const std::string& key, const std::string& value, const std::string& source) {
        if (!known(key)) throw ConfigError(source + ": unknown key '" + key + "' for '" + command_ + "'");
        values_[key] = {value, source};
    }

    /// Reads `key = value` lines; '#' starts a comment. A `command` line, as
    /// written into manifests, must name this subcommand.
    void read(std::istream& in, const std::string& filename) {
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string where = filename + ":" + std::to_string(lineno);
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
            const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(where + ": missing key before '='");
            if (key == "command") {
                if (value != command_)
                    throw ConfigError(where + ": file is for '" + value + "', not '" + command_ + "'");
                continue;
            }
            set(key, value, where);
        }
    }

    const std::string& str(const std::string& key) const { return entry(key).value; }
    const std::string& source(const std::string& key) const { return entry(key).source; }
    bool has(const std::string& key) const { return !str(key).empty(); }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(source(key) + ": " + key + ": " + msg);
    }

    double number(const std::string& key) const {
        const auto& v = str(key);
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &used);
        } catch (const std::exception&) {
            fail(key, "expected a number, got '" + v + "'");
        }
        if (used != v.size() || !std::isfinite(x)) fail(key, "expected a number, got '" + v + "'");
        return x;
    }

    double positive(const std::string& key) const {
        const double x = number(key);
        if (!(x > 0.0)) fail(key, "must be positive");
        return x;
    }

    double non_negative(const std::string& key) const {
        const double x = number(key);
        if (!(x >= 0.0)) fail(key, "must be non-negative");
        return x;
    }

    long long integer(const std::string& key, long long min = std::numeric_limits<long long>::min(),
                      long long max = std::numeric_limits<long long>::max()) const {
        const auto& v = str(key);
        std::size_t used = 0;
        long long x = 0;
        try {
            x = std::stoll(v, &used);
        } catch (const std::exception&) {
            fail(key, "expected an integer, got '" + v + "'");
        }
        if (used != v.size()) fail(key, "expected an integer, got '" + v + "'");
        if (x < min || x > max)
            fail(key, "must lie in [" + std::to_string(min) + ", " + std::to_string(max) + "]");
        return x;
    }

    const std::string& choice(const std::string& key, const std::vector<std::string>& options) const {
        const auto& v = str(key);
        if (std::find(options.begin(), options.end(), v) == options.end()) {
            std::string list;
            for (const auto& o : options) list += (list.empty() ? "" : "|") + o;
            fail(key, "expected one of " + list + ", got '" + v + "'");
        }
        return v;
    }

    bool flag(const std::string& key) const { return choice(key, {"yes", "no"}) == "yes"; }

    /// Config echo that reproduces this run when fed back with --config.
    void write_manifest(std::ostream& os, const std::vector<std::string>& notes = {}) const {
        os << "# rydberg run manifest; feed back with: rydberg " << command_ << " --config <this file>\n";
        os << "# rydberg " << RYDBERG_VERSION << ", Eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION
           << '.' << EIGEN_MINOR_VERSION << ", Boost " << BOOST_VERSION / 100000 << '.' << BOOST_VERSION / 100 % 1000
           << ", compiler " << __VERSION__ << '\n';
        for (const auto& n : notes) os << "# " << n << '\n';
        os << "command = " << command_ << '\n';
        for (const auto& k : keys_) {
            os << k.name << " = " << str(k.name);
            if (!k.unit.empty()) os << "  # " << k.unit;
            os << '\n';
        }
    }

private:
    struct Entry {
        std::string value;
        std::string source;
    };

    const Entry& entry(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("internal: key '" + key + "' not declared for '" + command_ + "'");
        return it->second;
    }

    std::string command_;
    std::vector<KeySpec> keys_;
    std::map<std::string, Entry> values_;
};

}  // namespace rydberg
