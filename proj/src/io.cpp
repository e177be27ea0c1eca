#include "jointcrm/io.hpp"

#include "jointcrm/errors.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>

namespace jcrm {

namespace {

// Strict object reader: every key must be consumed.
class Reader {
public:
    Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw SchemaError(where_ + ": expected an object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    const Json& raw(const std::string& k) {
        used_.insert(k);
        return j_.at(k);
    }

    double number(const std::string& k, double fallback) {
        if (!has(k)) return fallback;
        const Json& v = raw(k);
        if (!v.is_number()) throw SchemaError(where_ + "." + k + ": expected a number");
        return v.get<double>();
    }

    int integer(const std::string& k, int fallback) {
        if (!has(k)) return fallback;
        const Json& v = raw(k);
        if (!v.is_number_integer()) throw SchemaError(where_ + "." + k + ": expected an integer");
        return v.get<int>();
    }

    std::uint64_t u64(const std::string& k, std::uint64_t fallback) {
        if (!has(k)) return fallback;
        const Json& v = raw(k);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
            throw SchemaError(where_ + "." + k + ": expected a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::string text(const std::string& k, const std::string& fallback) {
        if (!has(k)) return fallback;
        const Json& v = raw(k);
        if (!v.is_string()) throw SchemaError(where_ + "." + k + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& k) {
        const Json& v = raw(k);
        if (!v.is_array()) throw SchemaError(where_ + "." + k + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw SchemaError(where_ + "." + k + ": expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!used_.count(k)) throw SchemaError(where_ + ": unknown key '" + k + "'");
        }
    }

    const std::string& where() const { return where_; }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> used_;
};

Json params_json(const ToxicityParams& p) { return {{"b0", p.b0}, {"b1", p.b1}}; }

ToxicityParams params_from(const Json& j, const std::string& where) {
    Reader r(j, where);
    ToxicityParams p;
    p.b0 = r.number("b0", 0.0);
    p.b1 = r.number("b1", 0.0);
    r.finish();
    return p;
}

// Domain errors raised while building a value from a document are schema errors.
template <class F>
auto guarded(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const DomainError& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

}  // namespace

Json to_json(const DesignSpec& d) {
    Json j{{"method", to_string(d.method)},
           {"skeleton", d.skeleton.values()},
           {"a0", d.a0},
           {"phi_t", d.phiT},
           {"initial_k", d.initialK},
           {"cohort_size", d.cohortSize},
           {"max_cohorts", d.maxCohorts},
           {"stop_threshold", d.stopThreshold},
           {"stop_min_toxicities", d.stopMinToxicities},
           {"start", params_json(d.start)}};
    if (d.labels) j["labels"] = d.labels->values();
    return j;
}

DesignSpec design_from_json(const Json& j) {
    Reader r(j, "design");
    DesignSpec d;
    return guarded("design", [&] {
        d.method = design_method_from_string(r.text("method", to_string(d.method)));
        if (r.has("skeleton")) d.skeleton = Skeleton(r.numbers("skeleton"));
        d.a0 = r.number("a0", d.a0);
        d.phiT = r.number("phi_t", d.phiT);
        d.initialK = r.integer("initial_k", d.initialK);
        d.cohortSize = r.integer("cohort_size", d.cohortSize);
        d.maxCohorts = r.integer("max_cohorts", d.maxCohorts);
        d.stopThreshold = r.number("stop_threshold", d.stopThreshold);
        d.stopMinToxicities = r.integer("stop_min_toxicities", d.stopMinToxicities);
        if (r.has("start")) d.start = params_from(r.raw("start"), "design.start");
        if (r.has("labels")) d.labels = DoseLabels(r.numbers("labels"));
        r.finish();
        d.validate();
        return d;
    });
}

Json to_json(const GenerationParams& g) {
    return {{"rho_b", g.rhoB}, {"rho_c", g.rhoC}, {"sigma", g.sigma}, {"c0", g.c0}, {"c1", g.c1}, {"at", g.at},
            {"coordinate", g.coordinate == DoseCoordinate::Label ? "label" : "index"}};
}

GenerationParams generation_from_json(const Json& j) {
    Reader r(j, "generation");
    GenerationParams g;
    g.rhoB = r.number("rho_b", g.rhoB);
    g.rhoC = r.number("rho_c", g.rhoC);
    g.sigma = r.number("sigma", g.sigma);
    g.c0 = r.number("c0", g.c0);
    g.c1 = r.number("c1", g.c1);
    g.at = r.number("at", g.at);
    const std::string c = r.text("coordinate", "label");
    if (c == "label") {
        g.coordinate = DoseCoordinate::Label;
    } else if (c == "index") {
        g.coordinate = DoseCoordinate::Index;
    } else {
        throw SchemaError("generation.coordinate: expected 'label' or 'index'");
    }
    r.finish();
    return g;
}

Json to_json(const OptimizerSpec& s) {
    return {{"max_iterations", s.maxIterations},   {"max_evaluations", s.maxEvaluations},
            {"gradient_tolerance", s.gradientTolerance}, {"relative_tolerance", s.relativeTolerance},
            {"step_tolerance", s.stepTolerance},   {"restart_count", s.restartCount},
            {"restart_jitter", s.restartJitter},   {"restart_seed", s.restartSeed},
            {"polish_evaluations", s.polishEvaluations}, {"max_step", s.maxStep}};
}

OptimizerSpec optimizer_from_json(const Json& j) {
    Reader r(j, "optimizer");
    OptimizerSpec s;
    s.maxIterations = r.integer("max_iterations", s.maxIterations);
    s.maxEvaluations = r.integer("max_evaluations", s.maxEvaluations);
    s.gradientTolerance = r.number("gradient_tolerance", s.gradientTolerance);
    s.relativeTolerance = r.number("relative_tolerance", s.relativeTolerance);
    s.stepTolerance = r.number("step_tolerance", s.stepTolerance);
    s.restartCount = r.integer("restart_count", s.restartCount);
    s.restartJitter = r.number("restart_jitter", s.restartJitter);
    s.restartSeed = r.u64("restart_seed", s.restartSeed);
    s.polishEvaluations = r.integer("polish_evaluations", s.polishEvaluations);
    s.maxStep = r.number("max_step", s.maxStep);
    r.finish();
    if (s.maxIterations < 1 || s.maxEvaluations < 1 || s.restartCount < 0 || s.polishEvaluations < 0 ||
        !(s.gradientTolerance > 0.0) || !(s.maxStep > 0.0)) {
        throw SchemaError("optimizer: settings out of range");
    }
    return s;
}

Json to_json(const CalibrationGrid& g) {
    Json params = Json::array();
    for (const auto& p : g.params) params.push_back(params_json(p));
    return {{"offset_min", g.offsetMin},
            {"offset_max", g.offsetMax},
            {"offset_step", g.offsetStep},
            {"scale_min", g.scaleMin},
            {"scale_max", g.scaleMax},
            {"scale_step", g.scaleStep},
            {"params", params},
            {"refinement_rounds", g.refinementRounds},
            {"refinement_divisor", g.refinementDivisor},
            {"refinement_half_width", g.refinementHalfWidth},
            {"replications_per_cell", g.replicationsPerCell}};
}

CalibrationGrid calibration_grid_from_json(const Json& j) {
    Reader r(j, "calibration");
    CalibrationGrid g;
    g.offsetMin = r.number("offset_min", g.offsetMin);
    g.offsetMax = r.number("offset_max", g.offsetMax);
    g.offsetStep = r.number("offset_step", g.offsetStep);
    g.scaleMin = r.number("scale_min", g.scaleMin);
    g.scaleMax = r.number("scale_max", g.scaleMax);
    g.scaleStep = r.number("scale_step", g.scaleStep);
    if (r.has("params")) {
        const Json& ps = r.raw("params");
        if (!ps.is_array()) throw SchemaError("calibration.params: expected an array");
        g.params.clear();
        for (const auto& p : ps) g.params.push_back(params_from(p, "calibration.params"));
    }
    g.refinementRounds = r.integer("refinement_rounds", g.refinementRounds);
    g.refinementDivisor = r.number("refinement_divisor", g.refinementDivisor);
    g.refinementHalfWidth = r.integer("refinement_half_width", g.refinementHalfWidth);
    g.replicationsPerCell = r.integer("replications_per_cell", g.replicationsPerCell);
    r.finish();
    guarded("calibration", [&] {
        g.validate();
        return 0;
    });
    return g;
}

Json to_json(const FitSummary& f) {
    return {{"curve", f.curve},
            {"converged", f.converged},
            {"target", f.target + 1},
            {"flags",
             {{"separation", f.diagnostics.separation},
              {"equal_probability", f.diagnostics.equalProbability},
              {"boundary", f.diagnostics.boundaryParameter}}}};
}

Json to_json(const CohortRecord& r) {
    Json j{{"cohort", r.cohortIndex},
           {"stage", to_string(r.stage)},
           {"dose", r.cohort.dose + 1},
           {"toxic", r.cohort.toxic}};
    if (!r.cohort.biomarker.empty()) {
        Json b = Json::array();
        for (const auto& v : r.cohort.biomarker) b.push_back(std::vector<double>(v.begin(), v.end()));
        j["biomarker"] = b;
    }
    j["fit"] = r.fit ? to_json(*r.fit) : Json(nullptr);
    j["next_dose"] = r.nextDose ? Json(*r.nextDose + 1) : Json(nullptr);
    j["stop_posterior"] = r.stopPosterior;
    j["retained_on_non_convergence"] = r.retainedOnNonConvergence;
    return j;
}

Cohort cohort_from_json(const Json& j) {
    if (!j.is_object()) throw SchemaError("cohort: expected an object");
    Cohort c;
    if (!j.contains("dose") || !j["dose"].is_number_integer() || j["dose"].get<long long>() < 1) {
        throw SchemaError("cohort.dose: expected a dose number starting at 1");
    }
    c.dose = j["dose"].get<std::size_t>() - 1;
    if (!j.contains("toxic") || !j["toxic"].is_array() || j["toxic"].empty()) {
        throw SchemaError("cohort.toxic: expected a non-empty array of 0/1");
    }
    for (const auto& t : j["toxic"]) {
        if (!t.is_number_integer() || (t.get<long long>() != 0 && t.get<long long>() != 1)) {
            throw SchemaError("cohort.toxic: outcomes must be 0 or 1");
        }
        c.toxic.push_back(t.get<int>());
    }
    if (j.contains("biomarker") && !j["biomarker"].is_null()) {
        const Json& b = j["biomarker"];
        if (!b.is_array()) throw SchemaError("cohort.biomarker: expected one array per patient");
        for (const auto& row : b) {
            if (!row.is_array() || row.size() != static_cast<std::size_t>(kWeeks)) {
                throw SchemaError("cohort.biomarker: each patient needs " + std::to_string(kWeeks) + " values");
            }
            Biomarker v{};
            for (int t = 0; t < kWeeks; ++t) {
                if (!row[t].is_number()) throw SchemaError("cohort.biomarker: values must be numbers");
                v[t] = row[t].get<double>();
            }
            c.biomarker.push_back(v);
        }
    }
    return c;
}

std::string transcript_header(const DesignSpec& design, const OptimizerSpec& fitSpec) {
    return Json{{"type", "design"}, {"design", to_json(design)}, {"optimizer", to_json(fitSpec)}}.dump();
}

std::string transcript_line(const CohortRecord& r) {
    Json j = to_json(r);
    j["type"] = "cohort";
    return j.dump();
}

std::string write_transcript(const TrialEngine& engine) {
    std::string out = transcript_header(engine.design(), engine.fit_spec()) + "\n";
    for (const auto& r : engine.state().history) out += transcript_line(r) + "\n";
    return out;
}

Transcript parse_transcript(std::istream& in) {
    Transcript t;
    std::string line;
    bool header = false;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw SchemaError("transcript line " + std::to_string(lineNo) + ": " + e.what());
        }
        const std::string type = j.value("type", "");
        if (!header) {
            if (type != "design") throw SchemaError("transcript must start with a design line");
            Reader r(j, "transcript header");
            r.text("type", "");
            t.design = design_from_json(r.raw("design"));
            if (r.has("optimizer")) t.fitSpec = optimizer_from_json(r.raw("optimizer"));
            r.finish();
            header = true;
            continue;
        }
        if (type != "cohort") throw SchemaError("transcript line " + std::to_string(lineNo) + ": expected a cohort");
        t.cohorts.push_back(cohort_from_json(j));
        t.recorded.push_back(j);
    }
    if (!header) throw SchemaError("empty transcript");
    return t;
}

Transcript parse_transcript_text(const std::string& text) {
    std::istringstream in(text);
    return parse_transcript(in);
}

ReplayResult replay(const Transcript& t) {
    ReplayResult out{TrialEngine(t.design, t.fitSpec), {}};
    for (std::size_t i = 0; i < t.cohorts.size(); ++i) {
        const auto& rec = out.engine.submit(t.cohorts[i]);
        const Json& want = t.recorded[i];
        const Json got = to_json(rec);
        for (const char* key : {"stage", "next_dose"}) {
            if (want.contains(key) && want[key] != got[key]) {
                out.mismatches.push_back("cohort " + std::to_string(i + 1) + ": " + key + " recorded " +
                                         want[key].dump() + ", replayed " + got[key].dump());
            }
        }
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

std::string format_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_oc_csv(std::ostream& out, const PlanResult& result) {
    std::size_t doses = 0;
    for (const auto& c : result.cells) doses = std::max(doses, c.oc.selection.size());
    out << "plan,design,rho_b,scenario,target_dose,seed,replications,pcs,separation,equal_probability,boundary,"
           "non_converged,early_stop,mean_initial_cohorts";
    for (std::size_t j = 0; j < doses; ++j) out << ",select_d" << j + 1;
    out << "\r\n";
    for (const auto& c : result.cells) {
        out << csv_field(result.plan) << ',' << csv_field(c.design) << ',' << format_double(c.rhoB) << ','
            << csv_field(c.scenario) << ',' << c.targetDose + 1 << ',' << c.seed << ',' << c.oc.replications << ','
            << format_double(c.oc.pcs) << ',' << format_double(c.oc.separationRate) << ','
            << format_double(c.oc.equalProbRate) << ',' << format_double(c.oc.boundaryRate) << ','
            << format_double(c.oc.nonConvergedRate) << ',' << format_double(c.oc.earlyStopRate) << ','
            << format_double(c.oc.meanInitialCohorts);
        for (std::size_t j = 0; j < doses; ++j) {
            out << ',';
            if (j < c.oc.selection.size()) out << format_double(c.oc.selection[j]);
        }
        out << "\r\n";
    }
}

Json to_json(const PlanResult& result) {
    Json cells = Json::array();
    for (const auto& c : result.cells) {
        cells.push_back({{"design", c.design},
                         {"rho_b", c.rhoB},
                         {"scenario", c.scenario},
                         {"target_dose", c.targetDose + 1},
                         {"seed", c.seed},
                         {"replications", c.oc.replications},
                         {"stopped", c.oc.stopped},
                         {"pcs", c.oc.pcs},
                         {"separation", c.oc.separationRate},
                         {"equal_probability", c.oc.equalProbRate},
                         {"boundary", c.oc.boundaryRate},
                         {"non_converged", c.oc.nonConvergedRate},
                         {"early_stop", c.oc.earlyStopRate},
                         {"mean_initial_cohorts", c.oc.meanInitialCohorts},
                         {"selection", c.oc.selection}});
    }
    return {{"plan", result.plan}, {"cells", cells}};
}

Json calibration_report(const CalibrationResult& result, const CalibrationGrid& grid, const DesignSpec& design,
                        const GenerationParams& gen, std::uint64_t seed) {
    Json cells = Json::array();
    for (const auto& c : result.cells) {
        cells.push_back({{"round", c.round},
                         {"offset", c.offset},
                         {"scale", c.scale},
                         {"params_index", c.paramsIndex},
                         {"labels", c.labels},
                         {"pcs", c.pcs},
                         {"separation", c.separation},
                         {"objective", c.objective}});
    }
    const auto& w = result.winner;
    return {{"design", to_json(design)},
            {"generation", to_json(gen)},
            {"seed", seed},
            {"grid", to_json(grid)},
            {"cells", cells},
            {"best_by_round", result.bestByRound},
            {"winner",
             {{"round", w.round},
              {"offset", w.offset},
              {"scale", w.scale},
              {"params", params_json(result.params)},
              {"objective", result.objective},
              {"pcs", result.perScenarioPCS},
              {"separation", w.separation}}},
            {"skeleton", result.skeleton.values()},
            {"labels", result.labels.values()},
            {"start", params_json(result.start)}};
}

std::string fingerprint(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace jcrm
