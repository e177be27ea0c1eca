#include "doctest.h"

#include "jointcrm/config.hpp"
#include "jointcrm/errors.hpp"

#include <sstream>

using namespace jcrm;

namespace {

const char* kToml = R"(
name = "rho-grid"
seed = 77
replications = 2
scenarios = ["S1", "S2", "S3", "S4", "S5"]

[[designs]]
name = "probit"
method = "probit"
initial_k = 3

[[designs]]
name = "joint2d"
method = "joint2d"
initial_k = 3

[[designs]]
name = "joint9d"
method = "joint9d"
initial_k = 3

[[generation]]
rho_b = 0.0

[[generation]]
rho_b = 0.4

[[generation]]
rho_b = 0.8
)";

const char* kJson = R"({
  "name": "rho-grid", "seed": 77, "replications": 2,
  "scenarios": ["S1", "S2", "S3", "S4", "S5"],
  "designs": [
    {"name": "probit", "method": "probit", "initial_k": 3},
    {"name": "joint2d", "method": "joint2d", "initial_k": 3},
    {"name": "joint9d", "method": "joint9d", "initial_k": 3}
  ],
  "generation": [{"rho_b": 0.0}, {"rho_b": 0.4}, {"rho_b": 0.8}]
})";

TrialEngine simulated_trial(DesignMethod m, std::size_t rep) {
    DesignSpec d;
    d.method = m;
    d.initialK = 2;
    const auto scen = standard_scenarios();
    GenerationParams gen;
    gen.rhoB = 0.4;
    const ProfileGenerator g(gen);
    const auto lat = replication_latents(g, 9, 2, rep, 60);
    const DoseLabels labels = d.dose_labels();
    TrialEngine e(d);
    std::size_t patient = 0;
    while (!e.finished()) {
        Cohort c;
        c.dose = e.next_dose();
        for (int i = 0; i < d.cohortSize; ++i) {
            const auto p = profile_from_latent(lat.at(patient++), scen[2], gen, labels);
            c.toxic.push_back(p.toxic[c.dose]);
            c.biomarker.push_back(p.biomarker[c.dose]);
        }
        e.submit(c);
    }
    return e;
}

}  // namespace

TEST_CASE("design documents round-trip and are strict") {
    DesignSpec d;
    d.method = DesignMethod::Probit1;
    d.a0 = 0.5;
    d.initialK = 4;
    d.start = {1.5, -0.25};
    d.labels = DoseLabels({-1.0, -0.5, 0.0, 0.5, 1.0});
    const DesignSpec back = design_from_json(Json::parse(to_json(d).dump()));
    CHECK(to_json(back) == to_json(d));

    Json bad = to_json(d);
    bad["initial_stage"] = 2;
    CHECK_THROWS_AS(design_from_json(bad), SchemaError);
    bad = to_json(d);
    bad["initial_k"] = "three";
    CHECK_THROWS_AS(design_from_json(bad), SchemaError);
    bad = to_json(d);
    bad["skeleton"] = {0.3, 0.2};
    CHECK_THROWS_AS(design_from_json(bad), SchemaError);
    bad = to_json(d);
    bad["start"]["b2"] = 1.0;
    CHECK_THROWS_AS(design_from_json(bad), SchemaError);
    CHECK_THROWS_AS(design_from_json(Json{{"method", "logistic"}}), SchemaError);
    CHECK_THROWS_AS(design_from_json(Json{{"initial_k", 0}}), SchemaError);
}

TEST_CASE("TOML and JSON configs describe the same plan") {
    const auto t = parse_config(kToml, ConfigFormat::Toml);
    const auto j = parse_config(kJson, ConfigFormat::Json);
    CHECK(t.hash() == j.hash());
    CHECK(t.hash().size() == 16);
    CHECK(t.designs.size() == 3);
    CHECK(t.gens.size() == 3);
    CHECK(t.scenarios.size() == 5);
    CHECK(t.seed == 77);
    const auto r = run_plan(t.plan(), Execution::Parallel);
    CHECK(r.cells.size() == 5 * 3 * 3);
    std::ostringstream csv;
    write_oc_csv(csv, r);
    std::size_t rows = 0;
    for (char c : csv.str()) rows += c == '\n';
    CHECK(rows == 1 + 45);

    auto other = j;
    other.seed = 78;
    other.canonical["seed"] = 78;
    CHECK(other.hash() != j.hash());
}

TEST_CASE("config schema errors") {
    CHECK_THROWS_AS(parse_config(R"({"designs": [{}], "replicates": 5})", ConfigFormat::Json), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"designs": [{"method": "probit", "k": 1}]})", ConfigFormat::Json), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"designs": []})", ConfigFormat::Json), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"designs": [{}], "scenarios": ["S9"]})", ConfigFormat::Json), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"designs": [{}], "generation": {"rho": 0.2}})", ConfigFormat::Json), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"designs": [{}], "calibration": {"replications_per_cell": 10}})",
                                 ConfigFormat::Json),
                    SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"designs": [{}], "optimizer": {"tolerance": 1}})", ConfigFormat::Json),
                    SchemaError);
    CHECK_THROWS_AS(parse_config("designs = [", ConfigFormat::Toml), SchemaError);
    CHECK_THROWS_AS(parse_config("{", ConfigFormat::Json), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"designs": [{"name": "a"}, {"name": "a"}]})", ConfigFormat::Json), SchemaError);

    // A schema-valid document can still carry an inadmissible association pair.
    const auto c = parse_config(R"({"designs": [{}], "generation": {"rho_b": 0.95, "rho_c": 0.05}})",
                                ConfigFormat::Json);
    CHECK_THROWS_AS(run_plan(c.plan()), InvalidAssociation);
}

TEST_CASE("custom scenarios and defaults") {
    const auto c = parse_config(R"(
designs = [{method = "empiric"}]
scenarios = ["S2", {name = "flat", truth = [0.05, 0.1, 0.3, 0.5, 0.6]}]
[optimizer]
max_iterations = 80
)",
                                ConfigFormat::Toml);
    REQUIRE(c.scenarios.size() == 2);
    CHECK(c.scenarios[1].targetDose == 2);
    CHECK(c.designs[0].name == "empiric-initial1");
    CHECK(c.optimizer.maxIterations == 80);
    CHECK(c.gens.size() == 1);
    CHECK(c.replications == 1000);
}

TEST_CASE("RFC 4180 fields") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("fingerprint") {
    CHECK(fingerprint("") == "cbf29ce484222325");
    CHECK(fingerprint("a") == "af63dc4c8601ec8c");
}

TEST_CASE("transcripts round-trip to identical state") {
    for (auto m : {DesignMethod::Probit, DesignMethod::Joint2d, DesignMethod::Joint9d, DesignMethod::Empiric}) {
        for (std::size_t rep : {3u, 8u}) {
            const TrialEngine e = simulated_trial(m, rep);
            const std::string text = write_transcript(e);
            const auto r = replay(parse_transcript_text(text));
            CHECK(r.mismatches.empty());
            const auto& a = e.state();
            const auto& b = r.engine.state();
            CHECK(a.stage == b.stage);
            CHECK(a.recommendation == b.recommendation);
            REQUIRE(a.history.size() == b.history.size());
            for (std::size_t i = 0; i < a.history.size(); ++i) {
                CHECK(a.history[i].nextDose == b.history[i].nextDose);
                CHECK(a.history[i].cohort.biomarker == b.history[i].cohort.biomarker);
            }
            REQUIRE(a.finalFit.has_value() == b.finalFit.has_value());
            if (a.finalFit) {
                for (std::size_t j = 0; j < a.finalFit->curve.size(); ++j) {
                    CHECK(std::abs(a.finalFit->curve[j] - b.finalFit->curve[j]) <= 1e-12);
                }
            }
            CHECK(write_transcript(r.engine) == text);
        }
    }
}

TEST_CASE("replay reports decisions it cannot reproduce") {
    const TrialEngine e = simulated_trial(DesignMethod::Probit, 3);
    std::istringstream in(write_transcript(e));
    std::string header, first, rest;
    std::getline(in, header);
    std::getline(in, first);
    Json j = Json::parse(first);
    j["next_dose"] = j["next_dose"].get<int>() == 1 ? 2 : 1;
    std::ostringstream tampered;
    tampered << header << '\n' << j.dump() << '\n';
    for (std::string line; std::getline(in, line);) tampered << line << '\n';
    const auto r = replay(parse_transcript_text(tampered.str()));
    REQUIRE(r.mismatches.size() == 1);
    CHECK(r.mismatches[0].find("cohort 1") != std::string::npos);

    CHECK_THROWS_AS(parse_transcript_text(""), SchemaError);
    CHECK_THROWS_AS(parse_transcript_text(R"({"type":"cohort","dose":1,"toxic":[0]})"), SchemaError);
    CHECK_THROWS_AS(parse_transcript_text("not json"), SchemaError);
}

TEST_CASE("cohort documents") {
    const auto c = cohort_from_json(Json::parse(R"({"dose": 2, "toxic": [0, 1, 0]})"));
    CHECK(c.dose == 1);
    CHECK(c.toxic == std::vector<int>{0, 1, 0});
    CHECK(c.biomarker.empty());
    CHECK_THROWS_AS(cohort_from_json(Json::parse(R"({"dose": 0, "toxic": [0]})")), SchemaError);
    CHECK_THROWS_AS(cohort_from_json(Json::parse(R"({"dose": 1, "toxic": [2]})")), SchemaError);
    CHECK_THROWS_AS(cohort_from_json(Json::parse(R"({"dose": 1, "toxic": []})")), SchemaError);
    CHECK_THROWS_AS(cohort_from_json(Json::parse(R"({"dose": 1, "toxic": [0], "biomarker": [[1,2,3]]})")),
                    SchemaError);
}

TEST_CASE("shipped configs load") {
    const auto a = load_config(std::string(JCRM_CONFIG_DIR) + "/initial3.toml");
    CHECK(a.plan().designs.size() == 3);
    CHECK(a.gens.size() == 3);
    const auto b = load_config(std::string(JCRM_CONFIG_DIR) + "/initial_stage.json");
    CHECK(b.designs[2].name == "probit-initial3");
    const auto c = load_config(std::string(JCRM_CONFIG_DIR) + "/calibrate.toml");
    REQUIRE(c.calibration);
    CHECK(c.calibration->replicationsPerCell == 200);
}
