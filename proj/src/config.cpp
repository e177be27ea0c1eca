#include "jointcrm/config.hpp"

#include "jointcrm/errors.hpp"

#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace jcrm {

namespace {

const std::set<std::string> kTopLevel{"name",       "output",    "seed",      "replications", "workers",
                                      "scenarios",  "designs",   "generation", "optimizer",   "calibration"};

Json toml_to_json(const std::string& text) {
    toml::table tbl;
    try {
        tbl = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "toml: " << e.description() << " at line " << e.source().begin.line;
        throw SchemaError(msg.str());
    }
    std::ostringstream js;
    js << toml::json_formatter{tbl};
    return Json::parse(js.str());
}

std::vector<Scenario> scenarios_from(const Json& j, double phiT) {
    if (!j.is_array() || j.empty()) throw SchemaError("scenarios: expected a non-empty array");
    const auto standard = standard_scenarios(phiT);
    std::vector<Scenario> out;
    for (const auto& s : j) {
        if (s.is_string()) {
            const auto name = s.get<std::string>();
            auto it = std::find_if(standard.begin(), standard.end(), [&](const auto& x) { return x.name == name; });
            if (it == standard.end()) throw SchemaError("scenarios: unknown scenario '" + name + "'");
            out.push_back(*it);
            continue;
        }
        if (!s.is_object()) throw SchemaError("scenarios: expected names or {name, truth} objects");
        for (const auto& [k, v] : s.items()) {
            if (k != "name" && k != "truth") throw SchemaError("scenarios: unknown key '" + k + "'");
        }
        if (!s.contains("name") || !s["name"].is_string() || !s.contains("truth") || !s["truth"].is_array()) {
            throw SchemaError("scenarios: custom scenarios need a name and a truth array");
        }
        std::vector<double> truth;
        for (const auto& p : s["truth"]) {
            if (!p.is_number()) throw SchemaError("scenarios: truth values must be numbers");
            truth.push_back(p.get<double>());
        }
        try {
            out.push_back(make_scenario(s["name"].get<std::string>(), truth, phiT));
        } catch (const DomainError& e) {
            throw SchemaError(std::string("scenarios: ") + e.what());
        }
    }
    return out;
}

RunConfig from_document(const Json& doc) {
    if (!doc.is_object()) throw SchemaError("config: expected a table at the top level");
    for (const auto& [k, v] : doc.items()) {
        if (!kTopLevel.count(k)) throw SchemaError("config: unknown key '" + k + "'");
    }
    RunConfig c;
    auto get = [&](const char* k, auto fallback, auto check) {
        if (!doc.contains(k)) return fallback;
        const Json& v = doc[k];
        if (!check(v)) throw SchemaError(std::string("config.") + k + ": wrong type");
        return v.get<decltype(fallback)>();
    };
    const auto isInt = [](const Json& v) { return v.is_number_integer(); };
    const auto isStr = [](const Json& v) { return v.is_string(); };
    c.name = get("name", c.name, isStr);
    c.outputDirectory = get("output", c.outputDirectory, isStr);
    c.seed = get("seed", c.seed, [](const Json& v) { return v.is_number_unsigned(); });
    c.replications = get("replications", c.replications, isInt);
    c.workers = get("workers", c.workers, isInt);
    if (c.replications < 1) throw SchemaError("config.replications: must be at least 1");
    if (c.workers < 0) throw SchemaError("config.workers: must be non-negative");
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
        throw SchemaError("config.name: must be a non-empty file-name-safe string");
    }

    if (!doc.contains("designs") || !doc["designs"].is_array() || doc["designs"].empty()) {
        throw SchemaError("config.designs: expected a non-empty array");
    }
    std::set<std::string> names;
    for (const auto& d : doc["designs"]) {
        if (!d.is_object()) throw SchemaError("designs: expected objects");
        Json body = d;
        std::string name;
        if (body.contains("name")) {
            if (!body["name"].is_string()) throw SchemaError("designs.name: expected a string");
            name = body["name"].get<std::string>();
            body.erase("name");
        }
        DesignSpec spec = design_from_json(body);
        if (name.empty()) name = to_string(spec.method) + "-initial" + std::to_string(spec.initialK);
        if (!names.insert(name).second) throw SchemaError("designs: duplicate name '" + name + "'");
        c.designs.push_back({name, spec});
    }
    const double phiT = c.designs.front().design.phiT;
    for (const auto& d : c.designs) {
        if (d.design.phiT != phiT) throw SchemaError("designs: all designs must share phi_t");
        if (d.design.doses() != c.designs.front().design.doses()) {
            throw SchemaError("designs: all designs must have the same number of doses");
        }
    }

    c.scenarios = doc.contains("scenarios") ? scenarios_from(doc["scenarios"], phiT) : standard_scenarios(phiT);
    for (const auto& s : c.scenarios) {
        if (s.truth.size() != c.designs.front().design.doses()) {
            throw SchemaError("scenario '" + s.name + "' and the designs differ in dose count");
        }
    }

    if (doc.contains("generation")) {
        const Json& g = doc["generation"];
        if (g.is_object()) {
            c.gens.push_back(generation_from_json(g));
        } else if (g.is_array() && !g.empty()) {
            for (const auto& e : g) c.gens.push_back(generation_from_json(e));
        } else {
            throw SchemaError("config.generation: expected a table or a non-empty array of tables");
        }
    } else {
        c.gens.push_back(GenerationParams{});
    }
    if (doc.contains("optimizer")) c.optimizer = optimizer_from_json(doc["optimizer"]);
    if (doc.contains("calibration")) c.calibration = calibration_grid_from_json(doc["calibration"]);

    // Canonical form: every field explicit, so equivalent documents hash alike.
    Json designs = Json::array();
    for (const auto& d : c.designs) {
        Json j = to_json(d.design);
        j["name"] = d.name;
        designs.push_back(j);
    }
    Json scen = Json::array();
    for (const auto& s : c.scenarios) scen.push_back({{"name", s.name}, {"truth", s.truth}});
    Json gens = Json::array();
    for (const auto& g : c.gens) gens.push_back(to_json(g));
    c.canonical = {{"name", c.name},       {"seed", c.seed},   {"replications", c.replications},
                   {"scenarios", scen},    {"designs", designs}, {"generation", gens},
                   {"optimizer", to_json(c.optimizer)}};
    if (c.calibration) c.canonical["calibration"] = to_json(*c.calibration);
    return c;
}

}  // namespace

SimPlan RunConfig::plan() const {
    SimPlan p;
    p.name = name;
    p.scenarios = scenarios;
    p.designs = designs;
    p.gens = gens;
    p.replications = replications;
    p.masterSeed = seed;
    p.fitSpec = optimizer;
    return p;
}

RunConfig parse_config(const std::string& text, ConfigFormat format) {
    Json doc;
    if (format == ConfigFormat::Toml) {
        doc = toml_to_json(text);
    } else {
        try {
            doc = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw SchemaError(std::string("json: ") + e.what());
        }
    }
    try {
        return from_document(doc);
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto ext = path.extension().string();
    if (ext == ".toml") return parse_config(ss.str(), ConfigFormat::Toml);
    if (ext == ".json") return parse_config(ss.str(), ConfigFormat::Json);
    throw SchemaError("config '" + path.string() + "': expected a .toml or .json file");
}

}  // namespace jcrm
