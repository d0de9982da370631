#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>

#include "dcmap/discrete_map.hpp"
#include "dcmap/exact_sim.hpp"
#include "dcmap/freq_response.hpp"
#include "dcmap/model_core.hpp"
#include "dcmap/repro.hpp"
#include "dcmap/run_config.hpp"
#include "dcmap/small_signal.hpp"

namespace {

using namespace dcmap;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitInputError = 2;

struct ConfigFlags {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> pairs;
};

void add_config_options(CLI::App* cmd, ConfigFlags& cf) {
    cmd->add_option("--config", cf.config_file, "key = value config file");
    static const char* keys[] = {"topology", "vs", "L",  "C",  "Rc", "fs", "T",  "d", "scheme",
                                 "D",        "g",  "Vh", "vc", "ma", "R0", "P",  "Io", "v"};
    for (const char* k : keys) {
        cmd->add_option_function<std::string>(
            std::string("--") + k,
            [&cf, k](const std::string& val) { cf.pairs.emplace_back(k, val); },
            std::string("converter field '") + k + "'");
    }
}

RunConfig build_config(const ConfigFlags& cf) {
    RunConfig cfg;
    for (const auto& [k, v] : cf.pairs) cfg.set(k, v);  // flags take precedence
    if (!cf.config_file.empty()) cfg.load_file(cf.config_file);
    return cfg;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) fail(Errc::InvalidParams, "cannot open output file '" + path + "'");
    return file;
}

nlohmann::json point_to_json(const OperatingPoint& op) {
    return {{"topology", to_string(op.topology)},
            {"M", op.M},
            {"D", op.D},
            {"D2", op.D2},
            {"v", op.v},
            {"R", op.R},
            {"K", op.K},
            {"beta", op.beta},
            {"rho", op.rho},
            {"T", op.T},
            {"regime", to_string(op.regime)}};
}

void print_point_text(const OperatingPoint& op) {
    std::printf("  M      = %s\n", format_number(op.M).c_str());
    std::printf("  D      = %s\n", format_number(op.D).c_str());
    std::printf("  D2     = %s\n", format_number(op.D2).c_str());
    std::printf("  v      = %s V\n", format_number(op.v).c_str());
    std::printf("  R      = %s ohm\n", format_number(op.R).c_str());
    std::printf("  K      = %s\n", format_number(op.K).c_str());
    std::printf("  beta   = %s\n", format_number(op.beta).c_str());
    std::printf("  rho    = %s\n", format_number(op.rho).c_str());
    std::printf("  T      = %s s\n", format_number(op.T).c_str());
    std::printf("  regime = %s (D + D2 = %s)\n", to_string(op.regime),
                format_number(op.D + op.D2).c_str());
}

int cmd_steady(const ConfigFlags& cf, bool json) {
    RunConfig cfg = build_config(cf);
    auto pts = solve_operating_point(cfg.params(), cfg.topology(), cfg.load(), cfg.scheme(),
                                     cfg.point_spec());
    if (json) {
        nlohmann::json j;
        j["config"] = nlohmann::json::parse(cfg.to_json_text());
        j["points"] = nlohmann::json::array();
        for (const auto& op : pts) j["points"].push_back(point_to_json(op));
        std::printf("%s\n", j.dump(2).c_str());
        return kExitOk;
    }
    int idx = 0;
    for (const auto& op : pts) {
        if (pts.size() > 1) std::printf("operating point %d of %zu:\n", ++idx, pts.size());
        print_point_text(op);
        if (op.D == 0.0) std::printf("  warning: zero duty, converter is not switching\n");
    }
    return kExitOk;
}

int cmd_pole(const ConfigFlags& cf, bool json, bool no_exact) {
    RunConfig cfg = build_config(cf);
    Topology topo = cfg.topology();
    ConverterParams params = cfg.params();
    LoadModel load = cfg.load();
    Scheme scheme = cfg.scheme();
    auto pts = solve_operating_point(params, topo, load, scheme, cfg.point_spec());

    nlohmann::json jout;
    jout["config"] = nlohmann::json::parse(cfg.to_json_text());
    jout["points"] = nlohmann::json::array();

    int idx = 0;
    for (const auto& op : pts) {
        SmallSignal ss = closed_loop_pole(scheme, load, op, params);
        BifurcationReport cls = classify(ss.p);

        double p_exact = std::numeric_limits<double>::quiet_NaN();
        std::string exact_err;
        if (!no_exact) {
            try {
                double v_star = find_fixed_point(topo, scheme, load, params, op.v);
                p_exact = exact_pole_numeric(topo, scheme, load, params, v_star);
            } catch (const Error& e) {
                exact_err = e.what();
            }
        }

        if (json) {
            nlohmann::json j = point_to_json(op);
            j["p0"] = ss.p0;
            j["dpc"] = ss.dpc;
            j["dpl"] = ss.dpl;
            j["p"] = ss.p;
            j["classification"] = to_string(cls.kind);
            j["margin"] = cls.margin;
            if (std::isfinite(p_exact)) {
                j["p_exact"] = p_exact;
                j["p_error"] = ss.p - p_exact;
            } else if (!exact_err.empty()) {
                j["p_exact_error"] = exact_err;
            }
            jout["points"].push_back(j);
        } else {
            if (pts.size() > 1) std::printf("operating point %d of %zu:\n", ++idx, pts.size());
            std::printf("  v = %s V, M = %s\n", format_number(op.v).c_str(),
                        format_number(op.M).c_str());
            std::printf("  p0  = %s\n", format_number(ss.p0).c_str());
            std::printf("  dpc = %s\n", format_number(ss.dpc).c_str());
            std::printf("  dpl = %s\n", format_number(ss.dpl).c_str());
            std::printf("  p   = %s  (%s, margin %s)\n", format_number(ss.p).c_str(),
                        to_string(cls.kind), format_number(cls.margin).c_str());
            if (std::isfinite(p_exact)) {
                std::printf("  p_exact = %s  (model error %s)\n", format_number(p_exact).c_str(),
                            format_number(ss.p - p_exact).c_str());
            } else if (!exact_err.empty()) {
                std::printf("  p_exact unavailable: %s\n", exact_err.c_str());
            }
        }
    }
    if (json) std::printf("%s\n", jout.dump(2).c_str());
    return kExitOk;
}

int cmd_bode(const ConfigFlags& cf, const std::string& out_path, const std::string& transfer,
             int points) {
    RunConfig cfg = build_config(cf);
    Topology topo = cfg.topology();
    ConverterParams params = cfg.params();
    LoadModel load = cfg.load();
    Scheme scheme = cfg.scheme();
    OperatingPoint op =
        solve_operating_point(params, topo, load, scheme, cfg.point_spec()).front();
    SmallSignal ss = closed_loop_small_signal(scheme, load, op, params);

    TransferKind kind = transfer == "source" ? TransferKind::Source : TransferKind::Control;
    PulseTransfer tf = make_transfer(ss, op.rho, kind, op.T);

    double omega_s = 2.0 * std::numbers::pi / op.T;
    std::vector<double> omegas = default_omega_grid(omega_s);
    if (points > 1 && points != 200) {
        omegas.clear();
        double lo = std::log(omega_s / 1000.0), hi = std::log(0.499 * omega_s);
        for (int i = 0; i < points; ++i)
            omegas.push_back(std::exp(lo + (hi - lo) * i / (points - 1)));
    }

    std::ofstream file;
    std::ostream& os = open_output(out_path, file);
    os << "omega_rad_s,mag_db,phase_deg\n";
    for (const auto& bp : bode(tf, omegas))
        os << format_number(bp.omega) << ',' << format_number(bp.mag_db) << ','
           << format_number(bp.phase_deg) << '\n';
    return kExitOk;
}

int cmd_sim(const ConfigFlags& cf, const std::string& out_path, double v0, double il0, int cycles,
            bool dense) {
    RunConfig cfg = build_config(cf);
    Trajectory traj = simulate(cfg.topology(), cfg.scheme(), cfg.load(), cfg.params(), il0, v0,
                               cycles, dense);
    std::ofstream file;
    std::ostream& os = open_output(out_path, file);
    if (dense) {
        os << "t_s,iL_A,v_V,stage_id\n";
        for (const auto& d : traj.dense)
            os << format_number(d.t) << ',' << format_number(d.iL) << ',' << format_number(d.v)
               << ',' << static_cast<int>(d.stage) << '\n';
    } else {
        os << "n,v_n,d1_s,Tn_s\n";
        for (const auto& s : traj.samples)
            os << s.n << ',' << format_number(s.v) << ',' << format_number(s.d1) << ','
               << format_number(s.Tn) << '\n';
    }
    return kExitOk;
}

void print_report(const repro::Report& rep) {
    std::printf("%s\n", rep.title.c_str());
    for (const auto& c : rep.checks) {
        const char* status = c.pass ? "PASS" : "FAIL";
        switch (c.kind) {
            case repro::CheckKind::Near:
                std::printf("  [%s] %s: expected %s, got %s (tol %s)\n", status, c.name.c_str(),
                            format_number(c.expected).c_str(), format_number(c.got).c_str(),
                            format_number(c.tol).c_str());
                break;
            case repro::CheckKind::Below:
                std::printf("  [%s] %s: %s (bound %s)\n", status, c.name.c_str(),
                            format_number(c.got).c_str(), format_number(c.expected).c_str());
                break;
            case repro::CheckKind::Flag:
                std::printf("  [%s] %s\n", status, c.name.c_str());
                break;
        }
        if (!c.note.empty()) std::printf("         note: %s\n", c.note.c_str());
    }
}

int cmd_reproduce(const std::string& what) {
    std::vector<repro::Report> reports;
    if (what == "all") {
        reports = repro::acceptance();
    } else if (what.rfind("table", 0) == 0 && what.size() == 6) {
        reports.push_back(repro::table(what[5] - '0'));
    } else if (what.size() == 1 && what[0] >= '1' && what[0] <= '7') {
        reports.push_back(repro::example(what[0] - '0'));
    } else {
        fail(Errc::InvalidParams, "expected 1..7, table2, table3, table4, or all");
    }
    bool all_pass = true;
    for (const auto& rep : reports) {
        print_report(rep);
        all_pass = all_pass && rep.passed();
    }
    return all_pass ? kExitOk : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"discrete-time modeling of DC-DC converters in discontinuous conduction"};
    app.require_subcommand(1);

    ConfigFlags cf_steady, cf_pole, cf_bode, cf_sim;
    bool json_steady = false, json_pole = false, no_exact = false, dense = false;
    std::string out_bode, out_sim, transfer = "control", repro_what;
    double v0 = 0.0, il0 = 0.0;
    int cycles = 20, points = 200;

    CLI::App* steady = app.add_subcommand("steady", "solve and print the operating point");
    add_config_options(steady, cf_steady);
    steady->add_flag("--json", json_steady, "emit JSON");

    CLI::App* pole = app.add_subcommand("pole", "pole decomposition and classification");
    add_config_options(pole, cf_pole);
    pole->add_flag("--json", json_pole, "emit JSON");
    pole->add_flag("--no-exact", no_exact, "skip the switching-model pole measurement");

    CLI::App* bode_cmd = app.add_subcommand("bode", "frequency response CSV");
    add_config_options(bode_cmd, cf_bode);
    bode_cmd->add_option("--out", out_bode, "output file (default stdout)");
    bode_cmd->add_option("--transfer", transfer, "control | source")
        ->check(CLI::IsMember({"control", "source"}));
    bode_cmd->add_option("--points", points, "number of frequency points");

    CLI::App* sim = app.add_subcommand("sim", "cycle-by-cycle switching simulation CSV");
    add_config_options(sim, cf_sim);
    sim->add_option("--out", out_sim, "output file (default stdout)");
    sim->add_option("--v0", v0, "initial capacitor voltage")->required();
    sim->add_option("--il0", il0, "initial inductor current");
    sim->add_option("--cycles", cycles, "number of switching cycles");
    sim->add_flag("--dense", dense, "emit dense waveforms instead of per-cycle samples");

    CLI::App* repro_cmd =
        app.add_subcommand("reproduce", "run a built-in reference case or consistency table");
    repro_cmd->add_option("what", repro_what, "1..7 | table2 | table3 | table4 | all")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (steady->parsed()) return cmd_steady(cf_steady, json_steady);
        if (pole->parsed()) return cmd_pole(cf_pole, json_pole, no_exact);
        if (bode_cmd->parsed()) return cmd_bode(cf_bode, out_bode, transfer, points);
        if (sim->parsed()) return cmd_sim(cf_sim, out_sim, v0, il0, cycles, dense);
        if (repro_cmd->parsed()) return cmd_reproduce(repro_what);
    } catch (const dcmap::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInputError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInputError;
    }
    return kExitOk;
}
