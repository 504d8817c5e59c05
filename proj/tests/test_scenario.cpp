#include <doctest.h>

#include <cmath>
#include <string>

#include "dynalg/config.hpp"
#include "dynalg/scenario.hpp"

using namespace dynalg;
using namespace dynalg::scenario;

TEST_CASE("config parsing round trip") {
    std::string text = R"(
# demo scenario
[scenario]
id = demo-1
kind = weyl
seed = 7
tolerance_scale = 2.0

[grid]
t_min = -8
t_max = 8
points = 2048

[rep]
box = 12
points = 256
k_track = 24
dof = 1

[functional F1]
linear = bump(center=0.5, halfwidth=1.2, amplitude=1.0, component=0)
potential = gaussian(v=0.2, c=0.0, w=1.0) * bump(center=-0.4, halfwidth=0.6, amplitude=1.0)
constant = 0.25
expect_phase = 0.1

[chain]
interaction = gaussian(v=0.12, c=0.0, w=1.1)
level = (-0.5, 0.5) in (-0.8, 0.8)
level = (-1.1, 1.1) in (-1.4, 1.4)
)";
    ScenarioConfig cfg = parse_config_text(text, "demo.cfg");
    CHECK(cfg.id == "demo-1");
    CHECK(cfg.kind == "weyl");
    CHECK(cfg.seed == 7);
    CHECK(cfg.tolerance_scale == doctest::Approx(2.0));
    CHECK(cfg.grid.points == 2048);
    CHECK(cfg.rep.k_track == 24);
    REQUIRE(cfg.functionals.size() == 1);
    const Functional& F = cfg.functionals[0].functional;
    CHECK(F.constant_part() == doctest::Approx(0.25));
    REQUIRE(F.linear_part().has_value());
    CHECK(F.potential_terms().size() == 1);
    REQUIRE(cfg.functionals[0].expected.phase.has_value());
    CHECK(*cfg.functionals[0].expected.phase == doctest::Approx(0.1));
    REQUIRE(cfg.chain.has_value());
    CHECK(cfg.chain->levels.size() == 2);
    CHECK(cfg.chain->interaction->strength == doctest::Approx(0.12));
}

TEST_CASE("config diagnostics carry location and key") {
    auto expect_mentions = [](const std::string& text, const std::string& needle) {
        try {
            parse_config_text(text, "bad.cfg");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
            CHECK(std::string(e.what()).find("bad.cfg:") != std::string::npos);
        }
    };
    expect_mentions("[scenario]\nspeed = 5\n", "speed");
    expect_mentions("[grid]\npoints = abc\n", "points");
    expect_mentions("[functional F]\nlinear = blob(center=0)\n", "blob");
    expect_mentions("[functional F]\npotential = morse(v=1) * bump(center=0, halfwidth=1)\n",
                    "morse");
    expect_mentions("[functional F]\nlinear = bump(center=0)\n", "halfwidth");
    expect_mentions("key_without_section = 1\n", "key_without_section");
    CHECK_THROWS_AS(parse_config_file("/nonexistent/path.cfg"), ParseError);
}

TEST_CASE("reports are deterministic given the seed") {
    ScenarioConfig cfg;
    cfg.id = "det";
    cfg.kind = "propagators";
    cfg.seed = 7;
    Report a = run(cfg);
    Report b = run(cfg);
    CHECK(a.machine_records() == b.machine_records());
    CHECK(a.records.size() > 0);

    ScenarioConfig other = cfg;
    other.seed = 8;
    Report c = run(other);
    CHECK(a.machine_records() != c.machine_records());
}

TEST_CASE("record pass flags follow the tolerance-plus-leakage rule") {
    ScenarioConfig cfg;
    cfg.id = "rule";
    cfg.kind = "weyl";
    cfg.seed = 3;
    Report r = run(cfg);
    CHECK(r.records.size() >= 12);  // the default suite is a real battery
    for (const auto& rec : r.records) {
        bool ok = std::abs(rec.value - rec.reference) <= rec.tol + rec.leakage;
        CHECK(rec.pass == ok);
    }
    CHECK(r.failed() == 0);
}

TEST_CASE("records are canonically ordered") {
    ScenarioConfig cfg;
    cfg.id = "sorted";
    cfg.kind = "propagators";
    cfg.seed = 5;
    Report r = run(cfg);
    for (std::size_t i = 1; i < r.records.size(); ++i) {
        const auto& a = r.records[i - 1];
        const auto& b = r.records[i];
        CHECK((a.scenario < b.scenario ||
               (a.scenario == b.scenario && a.check <= b.check)));
    }
}

TEST_CASE("unknown scenario kinds are rejected") {
    ScenarioConfig cfg;
    cfg.kind = "nonsense";
    CHECK_THROWS_AS(run(cfg), ParseError);
}
