#pragma once

// Command-line front end. run() is the whole program; tools/rydberg.cpp only
// forwards argv. Exit codes: 0 ok, 1 numerical failure, 2 usage or config.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rydberg/config.hpp"
#include "rydberg/ensemble.hpp"
#include "rydberg/pairint.hpp"
#include "rydberg/rfdyn.hpp"
#include "rydberg/spectrum.hpp"
#include "rydberg/stark.hpp"

namespace rydberg::cli {

enum ExitCode { ok = 0, numerical = 1, usage = 2 };

namespace detail {

inline std::vector<KeySpec> channel_keys() {
    return {
        {"constants", "computed", "", "channel constants: computed (Stark maps) or published"},
        {"defects", "", "", "quantum-defect table file; empty = built-in Rb-85 table"},
        {"W0_MHz", "", "MHz", "override W0 of both channels"},
        {"alpha_a", "", "MHz/(V/cm)^2", "override the channel a polarizability"},
        {"alpha_b", "", "MHz/(V/cm)^2", "override the channel b polarizability"},
        {"channels", "both", "", "both, a or b (the other channel is uncoupled)"},
    };
}

/// Ensemble geometry keys; `shots` empty leaves out n_shots.
inline std::vector<KeySpec> ensemble_keys(const std::string& shots) {
    std::vector<KeySpec> keys{
        {"separation_um", "25", "um", "distance between the two volumes along the field"},
        {"fwhm_s_um", "11.6", "um", "49s volume transverse FWHM"},
        {"fwhm_d_um", "16.3", "um", "41d volume transverse FWHM"},
        {"length_um", "500", "um", "volume length along the laser axis"},
        {"n_s", "20", "", "49s atoms per shot"},
        {"n_d", "20", "", "41d atoms per shot"},
        {"n_shots", shots, "", "Monte-Carlo shots"},
        {"seed", "1", "", "RNG seed"},
        {"field_jitter_mVcm", "0", "mV/cm", "per-shot Gaussian field noise, rms"},
        {"pairing", "strongest", "", "strongest, all_pairs or collective"},
    };
    if (shots.empty()) std::erase_if(keys, [](const KeySpec& k) { return k.name == "n_shots"; });
    return keys;
}

inline std::vector<KeySpec> join(std::vector<KeySpec> a, const std::vector<KeySpec>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

inline Atom make_atom(const RunConfig& c) {
    if (!c.has("defects")) return Atom{};
    try {
        return Atom(load_defect_table(c.str("defects")));
    } catch (const ConfigError& e) {
        c.fail("defects", e.what());
    }
}

struct Context {
    const RunConfig& cfg;
    std::ostream& out;
    std::vector<std::string> notes;  // extra manifest comment lines
    std::vector<std::string> files;  // outputs written
};

inline ChannelPair channel_pair(Context& ctx) {
    const auto& c = ctx.cfg;
    ChannelPair chs;
    if (c.choice("constants", {"computed", "published"}) == "computed") {
        const auto cc = compute_channel_constants(make_atom(c));
        chs.a = cc.a;
        chs.b = cc.b;
        for (const auto& w : cc.warnings) ctx.notes.push_back("stark warning: " + w);
    }
    if (c.has("W0_MHz")) chs.a.W0 = chs.b.W0 = c.number("W0_MHz");
    if (c.has("alpha_a")) chs.a.alpha = c.positive("alpha_a");
    if (c.has("alpha_b")) chs.b.alpha = c.positive("alpha_b");
    std::ostringstream os;
    os << std::setprecision(10) << "channel constants: W0 = " << chs.a.W0 << " MHz, alpha_a = " << chs.a.alpha
       << ", alpha_b = " << chs.b.alpha << " MHz/(V/cm)^2";
    ctx.notes.push_back(os.str());
    return chs;
}

inline PairCoupling channel_mask(const RunConfig& c, PairCoupling v) {
    const auto& which = c.choice("channels", {"both", "a", "b"});
    if (which == "a") v.V_b = 0.0;
    if (which == "b") v.V_a = 0.0;
    return v;
}

inline EnsembleConfig ensemble_config(const RunConfig& c) {
    EnsembleConfig e;
    e.separation_um = c.non_negative("separation_um");
    e.fwhm_s_um = c.positive("fwhm_s_um");
    e.fwhm_d_um = c.positive("fwhm_d_um");
    e.length_um = c.positive("length_um");
    e.n_s = static_cast<int>(c.integer("n_s", 1, 100000));
    e.n_d = static_cast<int>(c.integer("n_d", 1, 100000));
    if (c.known("n_shots")) e.n_shots = static_cast<int>(c.integer("n_shots", 1, 100000000));
    e.seed = static_cast<std::uint64_t>(c.integer("seed", 0));
    e.field_jitter_Vcm = units::mVcm_to_Vcm(c.non_negative("field_jitter_mVcm"));
    const auto& p = c.choice("pairing", {"strongest", "all_pairs", "collective"});
    e.pairing = p == "strongest" ? PairingMode::strongest
                : p == "all_pairs" ? PairingMode::all_pairs
                                   : PairingMode::collective;
    return e;
}

inline std::ofstream open_output(Context& ctx, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write '" + path + "'");
    ctx.files.push_back(path);
    return os;
}

/// Couplings for rf and dynamics runs: fixed values or draws from the ensemble.
inline std::vector<PairCoupling> couplings(Context& ctx, const ChannelPair& chs, std::size_t count) {
    const auto& c = ctx.cfg;
    std::vector<PairCoupling> out;
    if (c.choice("coupling", {"ensemble", "fixed"}) == "fixed") {
        out.push_back(channel_mask(c, {c.non_negative("V_a_MHz"), c.non_negative("V_b_MHz")}));
        return out;
    }
    const PairCouplingModel model(make_atom(c), chs);
    for (auto v : sample_pair_couplings(ensemble_config(c), model, count)) out.push_back(channel_mask(c, v));
    return out;
}

/// Ensemble coupling model; a deselected channel gets no dipole paths.
inline PairCouplingModel coupling_model(const RunConfig& c, const ChannelPair& chs) {
    PairCouplingModel model(make_atom(c), chs);
    const auto& which = c.choice("channels", {"both", "a", "b"});
    if (which == "a") model.b = ChannelDipoles{};
    if (which == "b") model.a = ChannelDipoles{};
    return model;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

inline void starkmap(Context& ctx) {
    const auto& c = ctx.cfg;
    RydbergState center;
    center.n = static_cast<int>(c.integer("n", 1, 200));
    center.l = static_cast<int>(c.integer("l", 0, 199));
    center.j = c.positive("j");
    center.mj = c.number("mj");
    if (!is_valid(center)) c.fail("n", "invalid state " + to_string(center));
    StarkBasisSpec spec;
    spec.n_min = static_cast<int>(c.integer("n_min", 1, 200));
    spec.n_max = static_cast<int>(c.integer("n_max", spec.n_min, 200));
    spec.window_GHz = c.positive("window_GHz");
    const double f_max = c.non_negative("F_max_Vcm"), step = c.positive("F_step_Vcm");

    const StarkBasis basis(make_atom(c), center, spec);
    const auto map = stark_map(basis, field_grid(f_max, step));
    for (const auto& w : map.warnings) ctx.notes.push_back("stark warning: " + w);
    auto os = open_output(ctx, c.str("output"));
    write_stark_map_csv(os, map, basis);
    ctx.out << "basis states: " << basis.size() << ", fields: " << map.fields.size() << '\n';
    if (f_max > 0.0) {
        try {
            const auto fit = polarizability(map, basis, center, 0.0, map.fields.back());
            ctx.out << "alpha(" << to_string(center) << ") = " << std::setprecision(6) << fit.alpha
                    << " MHz/(V/cm)^2\n";
        } catch (const QuadraticModelError& e) {
            ctx.out << "alpha(" << to_string(center) << "): not quadratic over the map (" << e.what() << ")\n";
        }
    }
}

inline void resonances(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto chs = channel_pair(ctx);
    const double F_S = units::mVcm_to_Vcm(c.non_negative("F_S_mVcm"));
    const double F_rf = units::mVcm_to_Vcm(c.non_negative("F_rf_mVcm"));
    const int N_max = static_cast<int>(c.integer("N_max", 1, 1000));

    ctx.out << std::fixed << std::setprecision(4);
    ctx.out << "W0 = " << chs.a.W0 << " MHz, alpha_a = " << chs.a.alpha << ", alpha_b = " << chs.b.alpha
            << " MHz/(V/cm)^2\n";
    ctx.out << "F_a = " << resonance_field(chs.a) << " V/cm\n";
    ctx.out << "F_b = " << resonance_field(chs.b) << " V/cm\n";
    const double F_eff = effective_field(F_S, F_rf);
    ctx.out << "F_eff = " << std::setprecision(2) << units::Vcm_to_mVcm(F_eff) << " mV/cm\n";

    auto os = open_output(ctx, c.str("output"));
    os << "# rf multi-photon resonances, F_S = " << c.str("F_S_mVcm") << " mV/cm, F_rf = " << c.str("F_rf_mVcm")
       << " mV/cm\n";
    os << "# channel: a or b; N: photon number (negative: absorption branch); omega_MHz: MHz\n";
    os << "channel,N,omega_MHz\n";
    os << std::setprecision(10);
    ctx.out << std::setprecision(4);
    for (const auto* ch : {&chs.a, &chs.b})
        for (const auto& r : resonance_frequencies(*ch, F_S, F_rf, N_max)) {
            os << to_string(ch->id) << ',' << r.N << ',' << r.omega_MHz << '\n';
            ctx.out << "omega_" << to_string(ch->id) << "(N=" << r.N << ") = " << r.omega_MHz << " MHz\n";
        }
}

inline void rfscan(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto chs = channel_pair(ctx);
    const double F_S = units::mVcm_to_Vcm(c.non_negative("F_S_mVcm"));
    const double F_rf = units::mVcm_to_Vcm(c.non_negative("F_rf_mVcm"));
    const double lo = c.positive("omega_min_MHz"), hi = c.positive("omega_max_MHz");
    if (hi < lo) c.fail("omega_max_MHz", "must not be below omega_min_MHz");
    const auto grid = linear_grid(lo, hi, c.positive("omega_step_MHz"));
    const double T = c.positive("duration_us");
    const auto cs = couplings(ctx, chs, static_cast<std::size_t>(c.integer("n_couplings", 1, 100000)));

    const auto s = floquet_spectrum(chs, cs, F_S, F_rf, grid, T);
    auto os = open_output(ctx, c.str("output"));
    write_spectrum_csv(os, s, "freq_MHz", "MHz",
                       "rf spectrum, F_S = " + c.str("F_S_mVcm") + " mV/cm, F_rf = " + c.str("F_rf_mVcm") +
                           " mV/cm, " + std::to_string(cs.size()) + " coupling(s)");
    ctx.out << "points: " << s.size() << ", couplings: " << cs.size() << '\n';
}

inline FieldProgram field_program(const RunConfig& c, const ChannelPair& chs, double duration) {
    FieldProgram p;
    const auto& kind = c.choice("program", {"constant", "switching", "segments"});
    const double slew = c.non_negative("slew_Vcm_per_us");
    if (kind == "switching") {
        const double on = c.has("F_on_mVcm") ? units::mVcm_to_Vcm(c.non_negative("F_on_mVcm")) : resonance_field(chs.a);
        p = switching_program(on, units::mVcm_to_Vcm(c.non_negative("F_off_mVcm")), c.positive("dwell_us"), duration,
                              slew);
    } else {
        p.F_S = units::mVcm_to_Vcm(c.non_negative("F_S_mVcm"));
        p.slew_Vcm_per_us = slew;
        if (kind == "segments") {
            // "t_us:F_mVcm, t_us:F_mVcm, ..."
            std::stringstream ls(c.str("segments"));
            for (std::string item; std::getline(ls, item, ',');) {
                item = trim(item);
                const auto colon = item.find(':');
                double t = 0.0, f = 0.0;
                try {
                    if (colon == std::string::npos) throw std::invalid_argument(item);
                    t = std::stod(item.substr(0, colon));
                    f = std::stod(item.substr(colon + 1));
                } catch (const std::exception&) {
                    c.fail("segments", "expected 't_us:F_mVcm' items, got '" + item + "'");
                }
                p.segments.push_back({t, units::mVcm_to_Vcm(f)});
            }
            if (p.segments.empty()) c.fail("segments", "no segments given");
        }
    }
    p.F_rf = units::mVcm_to_Vcm(c.non_negative("F_rf_mVcm"));
    p.omega_MHz = c.non_negative("omega_MHz");
    try {
        p.validate();
    } catch (const DomainError& e) {
        c.fail(kind == "segments" ? "segments" : "program", e.what());
    }
    return p;
}

inline void dynamics(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto chs = channel_pair(ctx);
    const double T = c.positive("duration_us");
    const auto prog = field_program(c, chs, T);
    const double rate = c.non_negative("background_rate_per_us");
    DynamicsOptions opt;
    opt.samples = static_cast<std::size_t>(c.integer("samples", 2, 10000000));

    auto os = open_output(ctx, c.str("output"));
    if (c.choice("coupling", {"ensemble", "fixed"}) == "fixed") {
        const auto v = couplings(ctx, chs, 1).front();
        const auto r = simulate_dynamics(chs, v.V_a, v.V_b, prog, T, rate, opt);
        write_dynamics_csv(os, r);
        ctx.out << "final p_fraction = " << r.final_p_fraction << ", max norm error = " << r.max_norm_error << '\n';
        return;
    }
    auto e = ensemble_config(c);
    e.t_int_us = T;
    const auto model = coupling_model(c, chs);
    const auto s = ensemble_dynamics(e, chs, model, prog, rate, opt);
    write_spectrum_csv(os, s, "time_us", "us", "ensemble-averaged 49p fraction against time");
    ctx.out << "final p_fraction = " << s.y.back() << " +- " << s.y_err.back() << '\n';
}

inline std::string fit_report(const FitResult& f, const std::string& x_name, const ChannelPair* chs) {
    std::ostringstream os;
    os << std::setprecision(8);
    os << "# Lorentzian doublet fit, x = " << x_name << "\n";
    const char* names[] = {"peak1", "peak2"};
    for (int k = 0; k < 2; ++k) {
        const auto& p = f.peaks[static_cast<std::size_t>(k)];
        os << names[k] << ".center = " << p.center << "\n";
        os << names[k] << ".center_err = " << std::sqrt(f.covariance(3 * k, 3 * k)) << "\n";
        os << names[k] << ".fwhm = " << p.fwhm << "\n";
        os << names[k] << ".fwhm_err = " << std::sqrt(f.covariance(3 * k + 1, 3 * k + 1)) << "\n";
        os << names[k] << ".amplitude = " << p.amplitude << "\n";
        if (chs)
            os << names[k] << ".fwhm_kHz = "
               << width_to_frequency(units::Vcm_to_mVcm(p.fwhm), k == 0 ? chs->a : chs->b, p.center) << "\n";
    }
    os << "offset = " << f.offset << "\n";
    os << "residual_rms = " << f.residual_rms << "\n";
    os << "iterations = " << f.iterations << "\n";
    return os.str();
}

inline void fieldscan(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto chs = channel_pair(ctx);
    auto e = ensemble_config(c);
    e.t_int_us = c.positive("t_int_us");
    const double lo = c.non_negative("F_min_Vcm"), hi = c.non_negative("F_max_Vcm");
    if (hi < lo) c.fail("F_max_Vcm", "must not be below F_min_Vcm");
    const auto grid = linear_grid(lo, hi, c.positive("F_step_Vcm"));
    const bool fit = c.flag("fit");

    const auto model = coupling_model(c, chs);
    const auto s = scan_static_field(e, chs, model, grid);
    {
        auto os = open_output(ctx, c.str("output"));
        write_spectrum_csv(os, s, "field_Vcm", "V/cm",
                           "static field scan, separation " + c.str("separation_um") + " um, " +
                               c.str("n_shots") + " shots, pairing " + c.str("pairing"));
    }
    if (!fit) return;
    const auto report = fit_report(fit_lorentzian_doublet(s), "field_Vcm", &chs);
    auto rs = open_output(ctx, c.str("output") + ".fit.txt");
    rs << report;
    ctx.out << report;
}

inline void fitpeaks(Context& ctx) {
    const auto& c = ctx.cfg;
    if (!c.has("input")) c.fail("input", "a spectrum CSV is required");
    std::ifstream in(c.str("input"));
    if (!in) c.fail("input", "cannot open '" + c.str("input") + "'");
    std::string x_name;
    const auto s = read_spectrum_csv(in, c.str("input"), &x_name);
    std::optional<ChannelPair> chs;
    if (x_name == "field_Vcm") chs = channel_pair(ctx);
    const auto report = fit_report(fit_lorentzian_doublet(s), x_name, chs ? &*chs : nullptr);
    auto os = open_output(ctx, c.str("output"));
    os << report;
    ctx.out << report;
}

inline std::vector<ResonanceObservation> read_observations(const RunConfig& c) {
    const auto& path = c.str("input");
    std::ifstream in(path);
    if (!in) c.fail("input", "cannot open '" + path + "'");
    std::vector<ResonanceObservation> data;
    std::string line;
    int lineno = 0;
    bool header = false;
    auto fail = [&](const std::string& msg) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "channel,F_S_mVcm,F_rf_mVcm,omega_MHz,N")
                fail("expected header 'channel,F_S_mVcm,F_rf_mVcm,omega_MHz,N'");
            header = true;
            continue;
        }
        std::stringstream ls(line);
        std::vector<std::string> cells;
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(trim(cell));
        if (cells.size() != 5) fail("expected 5 columns");
        if (cells[0] != "a" && cells[0] != "b") fail("channel must be a or b");
        ResonanceObservation o;
        o.channel = cells[0] == "a" ? Channel::a : Channel::b;
        try {
            o.F_S = units::mVcm_to_Vcm(std::stod(cells[1]));
            o.F_rf = units::mVcm_to_Vcm(std::stod(cells[2]));
            o.omega_MHz = std::stod(cells[3]);
            o.N = std::stoi(cells[4]);
        } catch (const std::exception&) {
            fail("not a number");
        }
        if (o.N != 1 && o.N != -1) fail("N must be 1 or -1");
        data.push_back(o);
    }
    if (!header) fail("no header line");
    return data;
}

/// Synthetic N = +-1 observations from the channel constants, F_S swept at
/// fixed F_rf, with Gaussian noise on omega.
inline std::vector<ResonanceObservation> synthetic_observations(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto chs = channel_pair(ctx);
    const double F_rf = units::mVcm_to_Vcm(c.non_negative("F_rf_mVcm"));
    const double lo = units::mVcm_to_Vcm(c.non_negative("F_S_min_mVcm"));
    const double hi = units::mVcm_to_Vcm(c.non_negative("F_S_max_mVcm"));
    if (hi < lo) c.fail("F_S_max_mVcm", "must not be below F_S_min_mVcm");
    const auto n = c.integer("points", 2, 100000);
    const double noise = c.non_negative("noise_MHz");
    auto rng = shot_rng(static_cast<std::uint64_t>(c.integer("seed", 0)), 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<ResonanceObservation> out;
    for (const auto* ch : {&chs.a, &chs.b})
        for (long long i = 0; i < n; ++i) {
            ResonanceObservation o;
            o.channel = ch->id;
            o.F_S = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
            o.F_rf = F_rf;
            const double W = pair_energy_difference(*ch, effective_field(o.F_S, F_rf));
            o.N = W >= 0.0 ? 1 : -1;
            o.omega_MHz = std::abs(W) + noise * gauss(rng);
            out.push_back(o);
        }
    auto os = open_output(ctx, c.str("output") + ".observations.csv");
    os << "# synthetic resonance observations, noise " << noise << " MHz\n";
    os << "# F_S_mVcm, F_rf_mVcm: mV/cm; omega_MHz: MHz; N: +1 emission, -1 absorption\n";
    os << "channel,F_S_mVcm,F_rf_mVcm,omega_MHz,N\n" << std::setprecision(12);
    for (const auto& o : out)
        os << to_string(o.channel) << ',' << units::Vcm_to_mVcm(o.F_S) << ',' << units::Vcm_to_mVcm(o.F_rf) << ','
           << o.omega_MHz << ',' << o.N << '\n';
    return out;
}

inline void spectroscopy(Context& ctx) {
    const auto& c = ctx.cfg;
    const auto data = c.has("input") ? read_observations(c) : synthetic_observations(ctx);
    const auto fit = extract_spectroscopy(data);
    std::ostringstream os;
    os << std::setprecision(8) << "# spectroscopy fit of N omega = W0 - alpha F_eff^2 / 2\n";
    os << "points = " << data.size() << "\n";
    os << "W0_MHz = " << fit.W0.value << "\nW0_err = " << fit.W0.sigma << "\n";
    if (fit.alpha_a) os << "alpha_a = " << fit.alpha_a->value << "\nalpha_a_err = " << fit.alpha_a->sigma << "\n";
    if (fit.alpha_b) os << "alpha_b = " << fit.alpha_b->value << "\nalpha_b_err = " << fit.alpha_b->sigma << "\n";
    os << "residual_rms_MHz = " << fit.residual_rms_MHz << "\ndof = " << fit.dof << "\n";
    auto file = open_output(ctx, c.str("output"));
    file << os.str();
    ctx.out << os.str();
}

struct Command {
    std::string name;
    std::string help;
    std::vector<KeySpec> keys;
    std::function<void(Context&)> body;
};

inline std::vector<Command> commands() {
    const KeySpec seed{"seed", "1", "", "RNG seed"};
    const std::vector<KeySpec> fixed_coupling{
        {"coupling", "ensemble", "", "ensemble (sampled pair couplings) or fixed"},
        {"V_a_MHz", "0.1", "MHz", "fixed coupling of channel a"},
        {"V_b_MHz", "0.06", "MHz", "fixed coupling of channel b"},
    };
    const std::vector<KeySpec> rf{
        {"F_S_mVcm", "260", "mV/cm", "static field"},
        {"F_rf_mVcm", "80", "mV/cm", "rf amplitude"},
    };
    return {
        {"starkmap", "single-atom Stark map around one state",
         {{"output", "starkmap.csv", "", "output CSV"},
          {"n", "49", "", "center state n"},
          {"l", "0", "", "center state l"},
          {"j", "0.5", "", "center state j"},
          {"mj", "0.5", "", "center state m_j (the map is the |m_j| block)"},
          {"n_min", "35", "", "lowest n in the basis"},
          {"n_max", "55", "", "highest n in the basis"},
          {"window_GHz", "150", "GHz", "basis half-window around the center energy"},
          {"F_max_Vcm", "0.45", "V/cm", "largest field"},
          {"F_step_Vcm", "0.025", "V/cm", "field step"},
          {"defects", "", "", "quantum-defect table file; empty = built-in Rb-85 table"}},
         starkmap},
        {"resonances", "channel constants, resonance fields and rf resonance frequencies",
         join(join({{"output", "resonances.csv", "", "output CSV"}}, channel_keys()),
              {{"F_S_mVcm", "0", "mV/cm", "static field"},
               {"F_rf_mVcm", "0", "mV/cm", "rf amplitude"},
               {"N_max", "5", "", "largest photon number"}}),
         resonances},
        {"rfscan", "final 49p fraction against rf frequency",
         join(join(join(join({{"output", "rfscan.csv", "", "output CSV"}}, channel_keys()), rf),
                   join(fixed_coupling, ensemble_keys(""))),
              {{"omega_min_MHz", "1", "MHz", "lowest rf frequency"},
               {"omega_max_MHz", "30", "MHz", "highest rf frequency"},
               {"omega_step_MHz", "0.05", "MHz", "rf frequency step"},
               {"duration_us", "20", "us", "interaction time"},
               {"n_couplings", "8", "", "pair couplings drawn from the ensemble"}}),
         rfscan},
        {"dynamics", "49p fraction against time for a field program",
         join(join(join({{"output", "dynamics.csv", "", "output CSV"}}, channel_keys()),
                   join(fixed_coupling, ensemble_keys("25"))),
              {{"program", "switching", "", "constant, switching or segments"},
               {"F_S_mVcm", "0", "mV/cm", "static field (constant, segments)"},
               {"F_rf_mVcm", "0", "mV/cm", "rf amplitude"},
               {"omega_MHz", "0", "MHz", "rf frequency"},
               {"F_on_mVcm", "", "mV/cm", "switching: on field; empty = resonance field of channel a"},
               {"F_off_mVcm", "0", "mV/cm", "switching: off field"},
               {"dwell_us", "2.5", "us", "switching: dwell time of each level"},
               {"segments", "", "", "segments: 't_us:F_mVcm, ...' static field steps"},
               {"slew_Vcm_per_us", "76", "V/cm/us", "slew rate, 0 = instantaneous"},
               {"duration_us", "20", "us", "interaction time"},
               {"samples", "201", "", "uniform time samples"},
               {"background_rate_per_us", "0", "1/us", "incoherent background transfer rate"}}),
         dynamics},
        {"fieldscan", "ensemble 49p fraction against static field, with doublet fit",
         join(join(join({{"output", "fieldscan.csv", "", "output CSV"}}, channel_keys()), ensemble_keys("2000")),
              {{"t_int_us", "20", "us", "interaction time"},
               {"F_min_Vcm", "0.34", "V/cm", "lowest field"},
               {"F_max_Vcm", "0.45", "V/cm", "highest field"},
               {"F_step_Vcm", "0.0005", "V/cm", "field step"},
               {"fit", "yes", "", "fit a Lorentzian doublet (yes|no)"}}),
         fieldscan},
        {"fitpeaks", "Lorentzian doublet fit of a spectrum CSV",
         join({{"input", "", "", "spectrum CSV (<x>,p_fraction[,p_err])"},
               {"output", "fitpeaks.txt", "", "fit report"}},
              channel_keys()),
         fitpeaks},
        {"spectroscopy", "fit W0 and alpha to N = +-1 resonance observations",
         join(join({{"input", "", "", "observations CSV; empty = synthetic data from the channel constants"},
                    {"output", "spectroscopy.txt", "", "fit report"}},
                   channel_keys()),
              {{"F_rf_mVcm", "80", "mV/cm", "synthetic: rf amplitude"},
               {"F_S_min_mVcm", "0", "mV/cm", "synthetic: lowest static field"},
               {"F_S_max_mVcm", "500", "mV/cm", "synthetic: highest static field"},
               {"points", "11", "", "synthetic: points per channel"},
               {"noise_MHz", "0.1", "MHz", "synthetic: Gaussian noise on omega"},
               seed}),
         spectroscopy},
    };
}

}  // namespace detail

/// Runs the command line `args` (args[0] is the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto cmds = detail::commands();
    CLI::App app{"Rydberg pair-state energy transfer: Stark maps, rf spectra, ensemble scans", "rydberg"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 1 numerical failure, 2 usage or configuration error.");

    std::map<std::string, std::map<std::string, std::string>> flags;
    std::map<std::string, std::string> config_files;
    std::map<std::string, CLI::App*> subs;
    for (const auto& cmd : cmds) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("-c,--config", config_files[cmd.name], "key = value config file; flags override it");
        for (const auto& k : cmd.keys) {
            const std::string name = k.name == "output" ? "-o,--output" : "--" + k.name;
            std::string help = k.help;
            if (!k.unit.empty()) help += " [" + k.unit + "]";
            if (!k.default_value.empty()) help += " (default " + k.default_value + ")";
            sub->add_option(name, flags[cmd.name][k.name], help);
        }
        subs[cmd.name] = sub;
    }

    if (args.size() <= 1) {
        err << app.help();
        return usage;
    }
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }

    for (const auto& cmd : cmds) {
        auto* sub = subs[cmd.name];
        if (!sub->parsed()) continue;
        RunConfig cfg(cmd.name, cmd.keys);
        detail::Context ctx{cfg, out, {}, {}};
        try {
            if (!config_files[cmd.name].empty()) {
                std::ifstream in(config_files[cmd.name]);
                if (!in) throw ConfigError("cannot open config file '" + config_files[cmd.name] + "'");
                cfg.read(in, config_files[cmd.name]);
            }
            for (const auto& k : cmd.keys) {
                const std::string opt = k.name == "output" ? "--output" : "--" + k.name;
                if (sub->count(opt) > 0) cfg.set(k.name, flags[cmd.name][k.name], opt);
            }
            if (!cfg.has("output")) cfg.fail("output", "an output path is required");
            cmd.body(ctx);
            auto ms = detail::open_output(ctx, cfg.str("output") + ".manifest");
            cfg.write_manifest(ms, ctx.notes);
        } catch (const ConfigError& e) {
            err << "rydberg " << cmd.name << ": error: " << e.what() << '\n';
            return usage;
        } catch (const std::exception& e) {
            err << "rydberg " << cmd.name << ": numerical error: " << e.what() << '\n';
            return numerical;
        }
        for (const auto& f : ctx.files) out << "wrote " << f << '\n';
        return ok;
    }
    err << app.help();
    return usage;
}

}  // namespace rydberg::cli
