#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "dcmap/run_config.hpp"

using namespace dcmap;

namespace {

std::string write_temp(const std::string& text) {
    std::string path = "run_config_test.cfg";
    std::ofstream out(path);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("config file parsing with comments and flag precedence") {
    auto path = write_temp(
        "# reference boost stage\n"
        "topology = boost\n"
        "vs = 5\n"
        "L = 5e-6\n"
        "C = 40e-6\n"
        "fs = 100e3\n"
        "R0 = 20   # load\n"
        "scheme = openloop\n"
        "D = 0.7\n");
    RunConfig cfg;
    cfg.set("D", "0.55");  // flag set before the file wins
    cfg.load_file(path);
    std::remove(path.c_str());

    CHECK(cfg.topology() == Topology::Boost);
    ConverterParams p = cfg.params();
    CHECK(p.vs == 5.0);
    CHECK(p.period() == doctest::Approx(1e-5));
    CHECK(p.Rc == 0.0);
    CHECK(std::get<OpenLoop>(cfg.scheme()).D == 0.55);
    CHECK(std::holds_alternative<Resistive>(cfg.load()));
}

TEST_CASE("load selection from keys") {
    RunConfig cfg;
    cfg.set("R0", "20");
    CHECK(std::holds_alternative<Resistive>(cfg.load()));
    cfg.set("Io", "0.9175");
    CHECK(std::get<ResistiveParallelCCL>(cfg.load()).Io == 0.9175);

    RunConfig pure;
    pure.set("R0", "inf");
    pure.set("P", "15");
    auto cpl = std::get<ResistiveParallelCPL>(pure.load());
    CHECK(std::isinf(cpl.R0));
    CHECK(cpl.P == 15.0);

    RunConfig both;
    both.set("R0", "20");
    both.set("P", "1");
    both.set("Io", "1");
    CHECK_THROWS_AS((void)both.load(), Error);
}

TEST_CASE("field-level diagnostics") {
    RunConfig cfg;
    cfg.set("topology", "boost");
    cfg.set("vs", "not-a-number");
    try {
        (void)cfg.params();
        FAIL("expected a parse failure");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("'vs'") != std::string::npos);
    }

    RunConfig missing;
    missing.set("topology", "sepic");
    CHECK_THROWS_AS((void)missing.topology(), Error);
}

TEST_CASE("scheme construction and timing consistency") {
    RunConfig cfg;
    cfg.set("topology", "boost");
    cfg.set("vs", "5");
    cfg.set("L", "5e-6");
    cfg.set("C", "40e-6");
    cfg.set("scheme", "vcotc");
    cfg.set("d", "7e-6");
    cfg.set("vc", "18");
    ConverterParams p = cfg.params();
    CHECK(p.on_time() == doctest::Approx(7e-6));
    auto sch = std::get<Vcotc>(cfg.scheme());
    CHECK(sch.ma == 0.0);
    CHECK(sch.vc == 18.0);
    validate_scheme(p, cfg.scheme());
}

TEST_CASE("json round trip rebuilds the same configuration") {
    RunConfig cfg;
    cfg.set("topology", "boost");
    cfg.set("vs", "5");
    cfg.set("L", "5e-6");
    cfg.set("C", "40e-6");
    cfg.set("fs", "100e3");
    cfg.set("R0", "20");
    cfg.set("scheme", "openloop");
    cfg.set("D", "0.7");

    RunConfig back = RunConfig::from_json_text(cfg.to_json_text());
    CHECK(back.entries() == cfg.entries());
    CHECK(back.params().vs == cfg.params().vs);
    CHECK(std::get<OpenLoop>(back.scheme()).D == 0.7);
}

TEST_CASE("number formatting is deterministic and locale-free") {
    CHECK(format_number(18.4175) == format_number(18.4175));
    CHECK(format_number(0.0125) == "0.0125");
    CHECK(format_number(1e-5) == "1e-05");
    CHECK(format_number(18.816510238758) == "18.8165102388");  // 12 significant digits
    CHECK(format_number(18.4175).find(',') == std::string::npos);
}
