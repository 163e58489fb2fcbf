// Exercises the installed binary through std::system: exit codes are the
// machine contract (0 clean, 1 regression, 2 error).
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kCli = PERFBRIDGE_CLI_PATH;

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run(const std::string& args, const std::string& workdir,
                  const std::string& env = "") {
    const std::string out_file = workdir + "/cmd_output.txt";
    const std::string command =
        "cd " + workdir + " && " + env + " " + kCli + " " + args + " > " + out_file +
        " 2>&1";
    const int status = std::system(command.c_str());
    CommandResult result;
    result.exit_code = WEXITSTATUS(status);
    std::ifstream in(out_file);
    std::stringstream buf;
    buf << in.rdbuf();
    result.output = buf.str();
    return result;
}

// one shared fixture directory per test binary run
struct Fixture {
    std::string dir;
    Fixture() {
        dir = (fs::temp_directory_path() / "perfbridge_cli_test").string();
        fs::remove_all(dir);
        fs::create_directories(dir);
        auto gen = run("generate --out-dir " + dir + "/fx --inject ms_b:f1:2.5", dir);
        REQUIRE(gen.exit_code == 0);
    }
    std::string fx(const std::string& name) const { return dir + "/fx/" + name; }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

std::string pipeline_args(const Fixture& f, const std::string& updated) {
    return "--baseline " + f.fx("baseline.csv") + " --updated " + updated +
           " --local-traces " + f.fx("local_traces.csv") + " --system-traces " +
           f.fx("system_traces.csv") + " --model " + f.fx("model.qpn") +
           " --duration 120 --warmup 12 --replications 2 --seed 5";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("generate writes the full fixture set") {
    auto& f = fixture();
    for (const char* name : {"baseline.csv", "updated.csv", "local_traces.csv",
                             "system_traces.csv", "model.qpn", "scenario.json"})
        CHECK(fs::exists(f.fx(name)));
}

TEST_CASE("detect: no-op change exits 0") {
    auto& f = fixture();
    auto r = run("detect " + pipeline_args(f, f.fx("baseline.csv")), f.dir);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("overall_regression: false") != std::string::npos);
}

TEST_CASE("detect: high-impact injection exits 1") {
    auto& f = fixture();
    auto r = run("detect " + pipeline_args(f, f.fx("updated.csv")), f.dir);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("overall_regression: true") != std::string::npos);
}

TEST_CASE("exit code 2 on input errors") {
    auto& f = fixture();
    SUBCASE("missing required flag") {
        auto r = run("detect --baseline " + f.fx("baseline.csv"), f.dir);
        CHECK(r.exit_code == 2);
    }
    SUBCASE("malformed model file") {
        const std::string bad = f.dir + "/bad.qpn";
        std::ofstream(bad) << "[places]\nplace q queueing subsystem=s demand.x=0\n";
        auto args = pipeline_args(f, f.fx("updated.csv"));
        args.replace(args.find(f.fx("model.qpn")), f.fx("model.qpn").size(), bad);
        auto r = run("detect " + args, f.dir);
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("error:") != std::string::npos);
    }
    SUBCASE("missing measurement file") {
        auto r = run("analyze-local --baseline nope.csv --updated nope.csv", f.dir);
        CHECK(r.exit_code == 2);
    }
    SUBCASE("unknown subcommand") {
        auto r = run("frobnicate", f.dir);
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("analyze-local flags the injected component") {
    auto& f = fixture();
    auto r = run("analyze-local --baseline " + f.fx("baseline.csv") + " --updated " +
                     f.fx("updated.csv") + " --format json",
                 f.dir);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"significant\": true") != std::string::npos);

    auto clean = run("analyze-local --baseline " + f.fx("baseline.csv") + " --updated " +
                         f.fx("baseline.csv") + " --format json",
                     f.dir);
    CHECK(clean.exit_code == 0);
    CHECK(clean.output.find("\"significant\": true") == std::string::npos);
}

TEST_CASE("propagate reports the slowed subsystem") {
    auto& f = fixture();
    auto r = run("propagate --baseline " + f.fx("baseline.csv") + " --updated " +
                     f.fx("updated.csv") + " --local-traces " + f.fx("local_traces.csv") +
                     " --system-traces " + f.fx("system_traces.csv"),
                 f.dir);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("ms_b") != std::string::npos);
}

TEST_CASE("seeded runs are byte-identical") {
    auto& f = fixture();
    const std::string args = "evaluate --duration 60 --warmup 6 --replications 1 "
                             "--seed 17 --format json --out ";
    auto r1 = run(args + f.dir + "/eval1.json", f.dir);
    auto r2 = run(args + f.dir + "/eval2.json", f.dir);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    const auto a = slurp(f.dir + "/eval1.json");
    const auto b = slurp(f.dir + "/eval2.json");
    CHECK(!a.empty());
    CHECK(a == b);
}

TEST_CASE("PERF_BRIDGE_SEED is the fallback seed") {
    auto& f = fixture();
    const std::string predict_args = "predict --model " + f.fx("model.qpn") +
                                     " --duration 50 --warmup 5 --replications 1 "
                                     "--format json";
    auto via_env = run(predict_args, f.dir, "PERF_BRIDGE_SEED=123");
    auto via_flag = run(predict_args + " --seed 123", f.dir);
    auto other = run(predict_args + " --seed 124", f.dir);
    REQUIRE(via_env.exit_code == 0);
    CHECK(via_env.output == via_flag.output);
    CHECK(via_env.output != other.output);
}

TEST_CASE("workload override changes the prediction") {
    auto& f = fixture();
    // same classes at three times the arrival rate
    std::string base_model = slurp(f.fx("model.qpn"));
    std::ofstream workload(f.dir + "/heavy.workload");
    std::istringstream in(base_model);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("class ", 0) != 0) continue;
        auto pos = line.find("rate=");
        auto end = line.find(' ', pos);
        const double rate = std::stod(line.substr(pos + 5, end - pos - 5));
        workload << line.substr(0, pos) << "rate=" << rate * 3.0
                 << line.substr(end) << "\n";
    }
    workload.close();

    const std::string predict_args = "predict --model " + f.fx("model.qpn") +
                                     " --duration 80 --warmup 8 --replications 1 "
                                     "--seed 3 --format json";
    auto plain = run(predict_args, f.dir);
    auto heavy = run(predict_args + " --workload " + f.dir + "/heavy.workload", f.dir);
    REQUIRE(plain.exit_code == 0);
    REQUIRE(heavy.exit_code == 0);
    CHECK(plain.output != heavy.output);

    auto detect_heavy = run("detect " + pipeline_args(f, f.fx("updated.csv")) +
                                " --workload " + f.dir + "/heavy.workload",
                            f.dir);
    CHECK(detect_heavy.exit_code == 1);
}

TEST_CASE("config file values apply when flags are absent") {
    auto& f = fixture();
    std::ofstream(f.dir + "/config.json") << R"({"seed": 123, "format": "json"})";
    const std::string predict_args = "predict --model " + f.fx("model.qpn") +
                                     " --duration 50 --warmup 5 --replications 1";
    auto via_config = run(predict_args + " --config config.json", f.dir);
    auto via_flags = run(predict_args + " --seed 123 --format json", f.dir);
    REQUIRE(via_config.exit_code == 0);
    CHECK(via_config.output == via_flags.output);

    // a flag beats the config file
    auto overridden = run(predict_args + " --config config.json --seed 7", f.dir);
    auto direct = run(predict_args + " --seed 7 --format json", f.dir);
    CHECK(overridden.output == direct.output);
}
