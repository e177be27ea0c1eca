#include "doctest.h"

#include "jointcrm/io.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace jcrm;
namespace fs = std::filesystem;

namespace {

struct Sandbox {
    fs::path dir = fs::temp_directory_path() / ("jcrm-cli-" + std::to_string(::getpid()));
    Sandbox() {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return dir / name;
    }

    // Exit status and captured stdout of the CLI.
    std::pair<int, std::string> run(const std::string& args) const {
        const fs::path out = dir / "stdout.txt";
        const std::string cmd = std::string(JCRM_CLI) + " " + args + " > " + out.string() + " 2> " +
                                (dir / "stderr.txt").string();
        const int raw = std::system(cmd.c_str());
        return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, read(out)};
    }

    static std::string read(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
};

const char* kPlan = R"(
name = "tiny"
seed = 5
replications = 20
scenarios = ["S1", "S4"]

[[designs]]
method = "probit"
initial_k = 2

[[designs]]
method = "empiric"
initial_k = 2
)";

}  // namespace

TEST_CASE("labels command") {
    Sandbox sb;
    auto [code, out] = sb.run("labels --model probit1 --a0 0.5");
    CHECK(code == 0);
    CHECK(out.find("d1,0.25,-1.174490") != std::string::npos);
    CHECK(out.find("0.691") != std::string::npos);
    std::tie(code, out) = sb.run("labels --model empiric");
    CHECK(out.find("d5,0.65,0.650000") != std::string::npos);
    std::tie(code, out) = sb.run("labels");
    CHECK(out.find("d1,0.25,-0.674490") != std::string::npos);
    CHECK(sb.run("labels --skeleton 0.3,0.2").first == 2);
}

TEST_CASE("simulate writes deterministic outputs") {
    Sandbox sb;
    const auto cfg = sb.write("tiny.toml", kPlan);
    const auto out1 = sb.dir / "a", out2 = sb.dir / "b";
    CHECK(sb.run("simulate " + cfg.string() + " --out " + out1.string() + " --workers 1").first == 0);
    CHECK(sb.run("simulate " + cfg.string() + " --out " + out2.string() + " --workers 3").first == 0);
    const std::string csv = Sandbox::read(out1 / "oc_tiny.csv");
    CHECK(!csv.empty());
    CHECK(csv == Sandbox::read(out2 / "oc_tiny.csv"));
    CHECK(Sandbox::read(out1 / "oc_tiny.json") == Sandbox::read(out2 / "oc_tiny.json"));
    const Json m = Json::parse(Sandbox::read(out1 / "manifest_tiny.json"));
    CHECK(m["seed"] == 5);
    CHECK(m["config_hash"].get<std::string>().size() == 16);
    CHECK(csv.find("\r\n") != std::string::npos);
}

TEST_CASE("exit codes") {
    Sandbox sb;
    const auto unknown = sb.write("u.json", R"({"designs": [{}], "replicas": 3})");
    CHECK(sb.run("simulate " + unknown.string()).first == 2);
    const auto assoc = sb.write("a.toml", "designs = [{method = \"joint9d\"}]\n[generation]\nrho_b = 0.95\nrho_c = 0.05\n");
    CHECK(sb.run("simulate " + assoc.string()).first == 3);
    CHECK(Sandbox::read(sb.dir / "stderr.txt").find("invalid association") != std::string::npos);
    CHECK(sb.run("simulate " + (sb.dir / "missing.toml").string()).first == 2);
}

TEST_CASE("replay command") {
    Sandbox sb;
    DesignSpec d;
    TrialEngine e(d);
    e.submit({0, {0, 0, 0}, {}});
    e.submit({1, {0, 1, 0}, {}});
    const auto good = sb.write("t.jsonl", write_transcript(e));
    auto [code, out] = sb.run("replay " + good.string());
    CHECK(code == 0);
    CHECK(out.find("cohort 2 d2") != std::string::npos);

    std::string text = write_transcript(e);
    const auto pos = text.rfind("\"next_dose\":");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("\"next_dose\":2").size(), "\"next_dose\":4");
    const auto bad = sb.write("bad.jsonl", text);
    CHECK(sb.run("replay " + bad.string()).first == 1);
}
