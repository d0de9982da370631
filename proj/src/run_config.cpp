#include "dcmap/run_config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dcmap {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& value) {
    std::string v = trim(value);
    std::string lower = v;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "inf" || lower == "infinity") return kInfiniteR;
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail(Errc::InvalidParams, "field '" + key + "': cannot parse number from '" + value + "'");
    }
}

}  // namespace

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::InvalidParams, "cannot open config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(Errc::InvalidParams,
                 "config line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            fail(Errc::InvalidParams,
                 "config line " + std::to_string(lineno) + ": empty key or value");
        // File entries do not override flags that were set earlier.
        kv_.emplace(key, value);
    }
}

void RunConfig::set(const std::string& key, const std::string& value) { kv_[key] = value; }

std::optional<double> RunConfig::number(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return parse_number(key, it->second);
}

double RunConfig::require(const std::string& key) const {
    auto v = number(key);
    if (!v) fail(Errc::InvalidParams, "missing required field '" + key + "'");
    return *v;
}

Topology RunConfig::topology() const {
    auto it = kv_.find("topology");
    if (it == kv_.end()) fail(Errc::InvalidParams, "missing required field 'topology'");
    if (it->second == "boost") return Topology::Boost;
    if (it->second == "buck") return Topology::Buck;
    fail(Errc::InvalidParams, "field 'topology': expected 'boost' or 'buck'");
}

ConverterParams RunConfig::params() const {
    ConverterParams p{};
    p.vs = require("vs");
    p.L = require("L");
    p.C = require("C");
    p.Rc = number("Rc").value_or(0.0);

    std::string name = kv_.count("scheme") ? kv_.at("scheme") : "openloop";
    bool wants_on_time = name == "vcotc" || name == "bcmcot";
    if (wants_on_time) {
        p.timing = FixedOnTime{require("d")};
    } else if (name == "bcm") {
        // Boundary mode sets its own period; keep whatever timing was given.
        if (auto d = number("d")) {
            p.timing = FixedOnTime{*d};
        } else if (auto fs = number("fs")) {
            p.timing = FixedPeriod{1.0 / *fs};
        } else {
            p.timing = FixedOnTime{1e-6};
        }
    } else if (auto T = number("T")) {
        p.timing = FixedPeriod{*T};
    } else {
        p.timing = FixedPeriod{1.0 / require("fs")};
    }
    p.validate();
    return p;
}

LoadModel RunConfig::load() const {
    double R0 = number("R0").value_or(kInfiniteR);
    bool has_p = kv_.count("P") != 0;
    bool has_io = kv_.count("Io") != 0;
    if (has_p && has_io)
        fail(Errc::InvalidParams, "load may specify at most one of 'P' and 'Io'");
    if (has_p) return ResistiveParallelCPL{R0, require("P")};
    if (has_io) return ResistiveParallelCCL{R0, require("Io")};
    if (!std::isfinite(R0))
        fail(Errc::InvalidParams, "load requires 'R0' (or 'P'/'Io' for non-resistive branches)");
    return Resistive{R0};
}

Scheme RunConfig::scheme() const {
    std::string name = kv_.count("scheme") ? kv_.at("scheme") : "openloop";
    if (name == "openloop") return OpenLoop{require("D")};
    if (name == "vmc") return Vmc{require("g"), require("Vh"), require("vc")};
    if (name == "cmc") return Cmc{require("vc"), number("ma").value_or(0.0)};
    if (name == "vcotc") return Vcotc{require("d"), require("vc"), number("ma").value_or(0.0)};
    if (name == "bcm") return Bcm{require("vc")};
    if (name == "bcmcot") return BcmCot{require("d")};
    fail(Errc::InvalidParams, "field 'scheme': unknown scheme '" + name + "'");
}

PointSpec RunConfig::point_spec() const {
    if (auto v = number("v")) return GivenOutput{*v};
    return GivenControl{};
}

std::string RunConfig::to_json_text() const {
    nlohmann::json j;
    for (const auto& [k, v] : kv_) j[k] = v;
    return j.dump();
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    RunConfig cfg;
    auto j = nlohmann::json::parse(text);
    for (auto it = j.begin(); it != j.end(); ++it) cfg.set(it.key(), it.value().get<std::string>());
    return cfg;
}

}  // namespace dcmap
