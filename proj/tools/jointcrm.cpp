#include "jointcrm/config.hpp"
#include "jointcrm/errors.hpp"
#include "jointcrm/normal.hpp"
#include "jointcrm/service.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace jcrm;

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitAssociation = 3;
constexpr const char* kVersion = "1.0.0";

int workers_from(int flag, const RunConfig* cfg) {
    if (flag > 0) return flag;
    if (cfg && cfg->workers > 0) return cfg->workers;
    if (const char* env = std::getenv("JCRM_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 0;
}

void check_associations(const RunConfig& cfg) {
    for (const auto& g : cfg.gens) {
        const auto v = validate_params(g.rhoB, g.rhoC, g.sigma);
        if (!v.valid) throw InvalidAssociation(v.reason);
    }
}

std::filesystem::path output_dir(const RunConfig& cfg, const std::string& flag) {
    std::filesystem::path dir = flag.empty() ? std::filesystem::path(cfg.outputDirectory) : std::filesystem::path(flag);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

Json manifest(const RunConfig& cfg, const std::string& command, int workers, double seconds) {
    return {{"command", command},
            {"config_hash", cfg.hash()},
            {"seed", cfg.seed},
            {"replications", cfg.replications},
            {"workers", workers > 0 ? workers : default_workers()},
            {"version", kVersion},
            {"compiler", __VERSION__},
            {"wall_seconds", seconds},
            {"config", cfg.canonical}};
}

int cmd_simulate(const std::string& path, const std::string& outFlag, int workersFlag) {
    const RunConfig cfg = load_config(path);
    check_associations(cfg);
    const int workers = workers_from(workersFlag, &cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const PlanResult r = run_plan(cfg.plan(), Execution::Parallel, workers);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto dir = output_dir(cfg, outFlag);
    std::ostringstream csv;
    write_oc_csv(csv, r);
    write_file(dir / ("oc_" + cfg.name + ".csv"), csv.str());
    Json j = to_json(r);
    j["config_hash"] = cfg.hash();
    write_file(dir / ("oc_" + cfg.name + ".json"), j.dump(2) + "\n");
    write_file(dir / ("manifest_" + cfg.name + ".json"), manifest(cfg, "simulate", workers, secs).dump(2) + "\n");
    for (const auto& c : r.cells) {
        std::cout << std::left << std::setw(22) << c.design << " rho_b=" << std::setw(4) << c.rhoB << ' '
                  << std::setw(4) << c.scenario << " pcs=" << std::fixed << std::setprecision(3) << c.oc.pcs
                  << " sep=" << c.oc.separationRate << " stop=" << c.oc.earlyStopRate << '\n';
    }
    std::cout << "wrote " << (dir / ("oc_" + cfg.name + ".csv")).string() << '\n';
    return 0;
}

int cmd_calibrate(const std::string& path, const std::string& outFlag, int workersFlag) {
    const RunConfig cfg = load_config(path);
    check_associations(cfg);
    const int workers = workers_from(workersFlag, &cfg);
    const CalibrationGrid grid = cfg.calibration.value_or(CalibrationGrid{});
    const auto dir = output_dir(cfg, outFlag);
    const auto t0 = std::chrono::steady_clock::now();
    Json reports = Json::array();
    for (const auto& g : cfg.gens) {
        for (const auto& d : cfg.designs) {
            if (d.design.method == DesignMethod::Empiric) {
                std::cout << d.name << ": empiric labels are not calibrated, skipped\n";
                continue;
            }
            const auto r = calibrate(d.design, cfg.scenarios, g, grid, cfg.seed, cfg.optimizer, workers);
            Json rep = calibration_report(r, grid, d.design, g, cfg.seed);
            rep["name"] = d.name;
            reports.push_back(rep);
            std::cout << d.name << " rho_b=" << g.rhoB << " objective " << std::fixed << std::setprecision(4)
                      << r.objective << " labels";
            for (double x : r.labels.values()) std::cout << ' ' << std::setprecision(4) << x;
            std::cout << '\n';
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file(dir / ("calibration_" + cfg.name + ".json"),
               Json{{"config_hash", cfg.hash()}, {"reports", reports}}.dump(2) + "\n");
    write_file(dir / ("manifest_calibration_" + cfg.name + ".json"),
               manifest(cfg, "calibrate", workers, secs).dump(2) + "\n");
    return 0;
}

int cmd_labels(const std::string& skeletonText, const std::string& modelName, double a0) {
    std::vector<double> p;
    std::stringstream ss(skeletonText);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            p.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw SchemaError("skeleton: '" + item + "' is not a number");
        }
    }
    Skeleton sk = [&] {
        try {
            return Skeleton(p);
        } catch (const DomainError& e) {
            throw SchemaError(std::string("skeleton: ") + e.what());
        }
    }();
    WorkingModel m;
    if (modelName == "probit2" || modelName == "probit") {
        m = {ModelKind::Probit2, 0.0};
    } else if (modelName == "probit1") {
        m = {ModelKind::Probit1, a0};
    } else if (modelName == "empiric") {
        m = {ModelKind::Empiric, 0.0};
    } else {
        throw SchemaError("model: expected probit2, probit1 or empiric");
    }
    const auto x = backward_fit_labels(sk, m);
    std::cout << "dose,skeleton,label\n";
    for (std::size_t j = 0; j < x.size(); ++j) {
        std::cout << 'd' << j + 1 << ',' << format_double(sk[j]) << ',' << std::setprecision(6) << std::fixed << x[j]
                  << '\n';
        std::cout.unsetf(std::ios::floatfield);
    }
    if (m.kind == ModelKind::Probit1) {
        std::cout << "reference dose x* = 0: pi(x*) = Phi(a0) = " << std::setprecision(3) << std::fixed
                  << normal_cdf(a0) << " for every slope; doses with negative labels sit below it\n";
    }
    return 0;
}

int cmd_replay(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot read transcript '" + path + "'");
    const auto t = parse_transcript(in);
    const auto r = replay(t);
    for (const auto& rec : r.engine.state().history) {
        std::cout << "cohort " << rec.cohortIndex << " d" << rec.cohort.dose + 1 << " toxic";
        for (int y : rec.cohort.toxic) std::cout << ' ' << y;
        std::cout << " -> " << to_string(rec.stage);
        if (rec.nextDose) std::cout << ", next d" << *rec.nextDose + 1;
        std::cout << '\n';
    }
    const auto& st = r.engine.state();
    std::cout << "stage " << to_string(st.stage);
    if (st.recommendation) std::cout << ", recommended d" << *st.recommendation + 1;
    std::cout << '\n';
    for (const auto& m : r.mismatches) std::cerr << "mismatch: " << m << '\n';
    return r.mismatches.empty() ? 0 : 1;
}

HttpServer* g_server = nullptr;

int cmd_serve(const std::string& host, int port, const std::string& state) {
    ConductService service(state);
    HttpServer server(service);
    const int bound = server.bind(host, port);
    if (bound < 0) {
        std::cerr << "cannot bind " << host << ':' << port << '\n';
        return 1;
    }
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    std::cout << "listening on http://" << host << ':' << bound << " (" << service.size() << " sessions restored from "
              << state << ")" << std::endl;
    server.listen();
    g_server = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Likelihood-based phase I dose finding: simulation, calibration and live conduct"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config, out, skeleton = "0.25,0.35,0.45,0.55,0.65", model = "probit2", transcript;
    std::string host = "127.0.0.1", state = "jointcrm-state";
    int workers = 0, port = 8080;
    double a0 = 3.0;

    auto* sim = app.add_subcommand("simulate", "Run a simulation plan and write OC tables");
    sim->add_option("config", config, "TOML or JSON config")->required();
    sim->add_option("-o,--out", out, "Output directory (overrides the config)");
    sim->add_option("-w,--workers", workers, "Worker threads (default: JCRM_WORKERS or all cores)");

    auto* cal = app.add_subcommand("calibrate", "Grid-search dose labels for each non-empiric design");
    cal->add_option("config", config, "TOML or JSON config")->required();
    cal->add_option("-o,--out", out, "Output directory (overrides the config)");
    cal->add_option("-w,--workers", workers, "Worker threads (default: JCRM_WORKERS or all cores)");

    auto* lab = app.add_subcommand("labels", "Print backward-fitted dose labels");
    lab->add_option("--skeleton", skeleton, "Comma-separated prior toxicity probabilities");
    lab->add_option("--model", model, "probit2, probit1 or empiric");
    lab->add_option("--a0", a0, "Probit1 intercept");

    auto* rep = app.add_subcommand("replay", "Re-run a transcript and check its recorded decisions");
    rep->add_option("transcript", transcript, "JSON-lines transcript")->required();

    auto* srv = app.add_subcommand("serve", "Live conduct service");
    srv->add_option("--host", host, "Bind address");
    srv->add_option("--port", port, "Port (0 picks a free one)");
    srv->add_option("--state", state, "Directory holding session transcripts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return cmd_simulate(config, out, workers);
        if (*cal) return cmd_calibrate(config, out, workers);
        if (*lab) return cmd_labels(skeleton, model, a0);
        if (*rep) return cmd_replay(transcript);
        if (*srv) return cmd_serve(host, port, state);
    } catch (const SchemaError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const InvalidAssociation& e) {
        std::cerr << "invalid association parameters: " << e.what() << '\n';
        return kExitAssociation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
