#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

#include "qotto/config.hpp"
#include "qotto/csv.hpp"

using namespace qotto;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace fs = std::filesystem;

TEST_CASE("config grammar") {
    const auto cfg = Config::parse(R"(
# leading comment
[system]
omega_h = 3   # trailing comment
  lambda1=0.25

[bath]
T_h = 1.5
channels = qubit
)");
    CHECK(cfg.number("system", "omega_h") == 3.0);
    CHECK(cfg.number("system", "lambda1") == 0.25);
    CHECK(cfg.number("system", "omega_c") == 1.0);  // default
    CHECK(cfg.given("system", "omega_h"));
    CHECK_FALSE(cfg.given("system", "omega_c"));
    CHECK(cfg.text("bath", "channels") == "qubit");
    CHECK_FALSE(cfg.empty());
    const auto b = bath_from(cfg);
    CHECK(b.qubit);
    CHECK_FALSE(b.boson);
}

TEST_CASE("config errors carry the line number") {
    auto message = [](const std::string& text) {
        try {
            Config::parse(text, "run.conf");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK_THAT(message("[system]\nomega = 2\n"), ContainsSubstring("run.conf:2:"));
    CHECK_THAT(message("[system]\nomega = 2\n"), ContainsSubstring("omega"));
    CHECK_THAT(message("[systm]\n"), ContainsSubstring("run.conf:1:"));
    CHECK_THAT(message("[system]\nu = 0.1\n\nu = 0.2\n"), ContainsSubstring("run.conf:4:"));
    CHECK_THAT(message("lambda1 = 1\n"), ContainsSubstring("run.conf:1:"));
    CHECK_THAT(message("[system]\nlambda1\n"), ContainsSubstring("run.conf:2:"));
    CHECK_THAT(message("[system]\nlambda1 =\n"), ContainsSubstring("run.conf:2:"));

    const auto cfg = Config::parse("[system]\n\nu = abc\n", "run.conf");
    CHECK_THROWS_WITH(cfg.number("system", "u"), ContainsSubstring("run.conf:3"));
}

TEST_CASE("empty configuration names the required keys") {
    const auto cfg = Config::parse("# nothing here\n\n");
    CHECK(cfg.empty());
    try {
        cfg.require({{"system", "omega_h"}, {"bath", "T_h"}});
        FAIL("require did not throw");
    } catch (const ConfigError& e) {
        CHECK_THAT(e.what(), ContainsSubstring("empty"));
        CHECK_THAT(e.what(), ContainsSubstring("system.omega_h"));
        CHECK_THAT(e.what(), ContainsSubstring("bath.T_h"));
    }
    const auto partial = Config::parse("[bath]\nT_h = 1\n");
    CHECK_THROWS_WITH(partial.require({{"system", "omega_h"}, {"bath", "T_h"}}),
                      Catch::Matchers::Equals("missing required keys: system.omega_h"));
}

TEST_CASE("ranges") {
    auto cfg = Config::parse("[sweep]\nrange1 = 0:3:151\n");
    const auto r = cfg.range("sweep", "range1");
    CHECK(r.start == 0.0);
    CHECK(r.stop == 3.0);
    CHECK(r.count == 151);
    for (const char* bad : {"0:3", "0:3:0", "3:0:10", "0:3:1.5", "a:3:4"}) {
        cfg.apply_override(std::string("sweep.range1=") + bad);
        CHECK_THROWS_AS(cfg.range("sweep", "range1"), ConfigError);
    }
    cfg.apply_override("sweep.range1=0.5:0.5:1");
    CHECK(cfg.range("sweep", "range1").count == 1);
}

TEST_CASE("overrides beat the file") {
    auto cfg = Config::parse("[system]\nlambda1 = 0.1\n");
    cfg.apply_override("system.lambda1=0.7");
    cfg.apply_override(" bath.T_c = 0.05 ");
    CHECK(cfg.number("system", "lambda1") == 0.7);
    CHECK(cfg.number("bath", "T_c") == 0.05);
    CHECK_THROWS_AS(cfg.apply_override("system.nope=1"), ConfigError);
    CHECK_THROWS_AS(cfg.apply_override("lambda1=1"), ConfigError);
    CHECK_THROWS_AS(cfg.apply_override("system.lambda1="), ConfigError);
}

TEST_CASE("render round-trips") {
    auto cfg = Config::parse("[system]\nu = 0.4\nratio = 0.5\n[sweep]\naxis1 = lambda1\nrange1 = 0:1:11\n");
    cfg.apply_override("bath.T_h=0.9");
    const auto text = cfg.render();
    CHECK_THAT(text, ContainsSubstring("# default"));
    const auto again = Config::parse(text);
    for (const auto& k : config_schema()) {
        if (cfg.has(k.section, k.key)) CHECK(again.text(k.section, k.key) == cfg.text(k.section, k.key));
    }
    CHECK(again.number("system", "u") == 0.4);
    CHECK(again.number("bath", "T_h") == 0.9);
    CHECK(again.number("system", "ratio") == 0.5);
}

TEST_CASE("sweep spec from config") {
    const auto cfg = Config::parse(R"(
[system]
u = 0.2
n_max = 25
pairing = parity_resolved
[sweep]
axis1 = lambda1
range1 = 0:3:151
axis2 = lambda2
range2 = 0:3:151
)");
    const auto s = sweep_spec_from(cfg, true);
    REQUIRE(s.axes.size() == 2);
    CHECK(s.axes[0].axis == SweepAxis::lambda1);
    CHECK(s.axes[1].count == 151);
    CHECK(s.point_count() == 151u * 151u);
    CHECK(s.n_max == 25);
    CHECK(s.pairing == LevelPairing::parity_resolved);
    CHECK(sweep_spec_from(cfg, false).axes.empty());

    CHECK_THROWS_AS(sweep_spec_from(Config::parse("[system]\nomega_h = 0.5\n"), false), ConfigError);
    CHECK_THROWS_AS(sweep_spec_from(Config::parse("[system]\nu = 1.0\n"), false), ConfigError);
    CHECK_THROWS_AS(sweep_spec_from(Config::parse("[sweep]\naxis1 = omega\nrange1 = 0:1:3\n"), true), ConfigError);
    CHECK_THROWS_AS(sweep_spec_from(Config::parse("[bath]\nchannels = phonon\n"), false), ConfigError);
    CHECK_THROWS_AS(
        sweep_spec_from(Config::parse("[system]\nratio = 1\n[sweep]\naxis1 = lambda2\nrange1 = 0:1:3\n"), true),
        ConfigError);
}

TEST_CASE("minimal ideal-cycle config gives the decoupled efficiency") {
    const auto cfg = Config::parse("[system]\nomega_h = 2\nomega_c = 1\n[bath]\nT_h = 0.5\nT_c = 0.1\n");
    const auto rows = run_sweep(sweep_spec_from(cfg, false));
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].ideal);
    REQUIRE(rows[0].ideal->efficiency);
    CHECK_THAT(*rows[0].ideal->efficiency, WithinAbs(0.5, 1e-12));
}

TEST_CASE("csv escaping and exact round trip") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("two\nlines") == "\"two\nlines\"");

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-300, 300);
    CsvTable t;
    t.header = {"x", "note"};
    std::vector<double> values;
    for (int i = 0; i < 500; ++i) values.push_back(std::ldexp(mant(rng), expo(rng)));
    values.push_back(0.1);
    values.push_back(5e-324);
    for (std::size_t i = 0; i < values.size(); ++i) {
        t.add_row({format_double(values[i]), i % 2 ? "line\r\nbreak" : "r,\"" + std::to_string(i)});
    }
    const auto text = to_csv(t);
    CHECK(text.substr(0, 8) == "x,note\r\n");
    const auto back = parse_csv(text);
    REQUIRE(back.header == t.header);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(back.rows[i] == t.rows[i]);
        CHECK(std::strtod(back.rows[i][0].c_str(), nullptr) == values[i]);
    }
    CHECK(format_optional(std::nullopt).empty());
    CHECK_THROWS_AS(t.add_row({"1"}), OutputError);
}

TEST_CASE("header-only table") {
    CsvTable t;
    t.header = {"a", "b"};
    CHECK(to_csv(t) == "a,b\r\n");
    const auto back = parse_csv(to_csv(t));
    CHECK(back.header == t.header);
    CHECK(back.rows.empty());
}

TEST_CASE("emit refuses to overwrite without force") {
    const fs::path dir = fs::temp_directory_path() / ("qotto_emit_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    CsvTable t;
    t.header = {"a"};
    t.add_row({"1"});
    const auto path = dir / "sub" / "out.csv";
    emit_csv(t, path, "# meta\n", false);
    CHECK(fs::exists(path));
    CHECK(fs::exists(dir / "sub" / "out.csv.meta"));
    CHECK_THROWS_AS(emit_csv(t, path, "# meta\n", false), OutputError);
    t.add_row({"2"});
    emit_csv(t, path, "# meta 2\n", true);
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "a\r\n1\r\n2\r\n");

    fs::remove(path);  // a stray sidecar still blocks the write
    CHECK_THROWS_AS(emit_csv(t, path, "", false), OutputError);
    fs::remove_all(dir);
}
