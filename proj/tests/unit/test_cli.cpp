#include "covnet/cli.hpp"
#include "covnet/graphs.hpp"
#include "covnet/io.hpp"
#include "covnet/simgen.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

using namespace covnet;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "covnet");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("covnet-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string simulate_example2(const TempDir& dir, int seed = 7, int replicates = 10) {
    const std::string out = dir / "sim";
    const Result r = cli({"simulate", "--example", "2", "--seed", std::to_string(seed), "--replicates",
                          std::to_string(replicates), "--out-dir", out});
    REQUIRE(r.code == kExitOk);
    return out;
}

Json strip_timestamp(Json j) {
    j.erase("generated_at");
    return j;
}

}  // namespace

TEST_CASE("simulate writes datasets, covariates, truth and parameters") {
    TempDir dir;
    const std::string sim = simulate_example2(dir, 7, 3);
    for (const char* f : {"data_r01.csv", "data_r02.csv", "data_r03.csv", "covariates.csv", "truth.csv", "params.json"}) {
        CHECK(fs::exists(fs::path(sim) / f));
    }
    CHECK_FALSE(fs::exists(fs::path(sim) / "data_r04.csv"));
    CHECK(read_text_file(fs::path(sim) / "truth.csv") == "from,to\nX1,X19\nX2,X19\nX19,X20\n");

    // loading recovers the generated values exactly
    const auto sims = gen_example2(7, 3);
    for (std::size_t r = 0; r < 3; ++r) {
        const Dataset d = read_dataset(fs::path(sim) / ("data_r0" + std::to_string(r + 1) + ".csv"));
        CHECK(d.values() == sims[r].data.values());
        CHECK(d.names() == sims[r].data.names());
    }
    CHECK(read_covariates(fs::path(sim) / "covariates.csv").values() == sims[0].covariates.values());

    const Json params = Json::parse(read_text_file(fs::path(sim) / "params.json"));
    CHECK(params["psi"].size() == 20);
    CHECK(params["gamma"][19].size() == 1);
    CHECK(params["b"][0].size() == 3);
}

TEST_CASE("learn produces DOT, edges and a consistent JSON report") {
    TempDir dir;
    const std::string sim = simulate_example2(dir, 7, 1);
    const Result r = cli({"learn", "--data", sim + "/data_r01.csv", "--covariates", sim + "/covariates.csv",
                          "--metric", "bgecm", "--upsilon", "1", "--truth", sim + "/truth.csv",
                          "--edges-out", dir / "edges.csv", "--dot-out", dir / "moral.dot",
                          "--json-out", dir / "report.json"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.empty());
    const std::string dot = read_text_file(dir / "moral.dot");
    CHECK(dot.rfind("graph G {\n", 0) == 0);

    const Json j = Json::parse(read_text_file(dir / "report.json"));
    CHECK(j["tool"] == "covnet");
    CHECK(j["version"] == kVersion);
    CHECK(j["config"]["metric"] == "bgecm");
    const double total = j["network"]["total_log_score"];
    CHECK(std::isfinite(total));
    double sum = j["network"]["log_prior"];
    for (const auto& f : j["network"]["families"]) sum += f["log_ml"].get<double>();
    CHECK(std::abs(sum - total) < 1e-9);
    CHECK(j["network"]["families"].size() == 20);
    CHECK(j["network"]["families"][0]["id"] == 1);
    CHECK(j.contains("accuracy"));
    CHECK(j["accuracy"]["mode"] == "skeleton");

    // edge list reloads into the reported graph
    const auto names = read_dataset(sim + "/data_r01.csv").names();
    const Dag learned(20, read_edge_list(dir / "edges.csv", names));
    CHECK(learned.edge_count() == j["network"]["edge_count"].get<std::size_t>());
    CHECK(dot == to_dot(moralize(learned), names));
}

TEST_CASE("identical learn runs give identical reports apart from the timestamp") {
    TempDir dir;
    const std::string sim = simulate_example2(dir, 3, 1);
    const std::vector<std::string> args{"learn", "--data", sim + "/data_r01.csv", "--covariates",
                                        sim + "/covariates.csv", "--metric", "residual", "--seed", "5"};
    const Result a = cli(args);
    const Result b = cli(args);
    REQUIRE(a.code == kExitOk);
    REQUIRE(b.code == kExitOk);
    CHECK(strip_timestamp(Json::parse(a.out)).dump() == strip_timestamp(Json::parse(b.out)).dump());
}

TEST_CASE("residual learning on the second example scores at least the truth") {
    TempDir dir;
    const std::string sim = simulate_example2(dir, 7, 3);
    for (int r = 1; r <= 3; ++r) {
        char name[32];
        std::snprintf(name, sizeof(name), "/data_r%02d.csv", r);
        const std::vector<std::string> common{"--data", sim + name, "--covariates", sim + "/covariates.csv",
                                              "--metric", "residual"};
        std::vector<std::string> learn{"learn", "--truth", sim + "/truth.csv"};
        learn.insert(learn.end(), common.begin(), common.end());
        std::vector<std::string> score{"score", "--graph", sim + "/truth.csv"};
        score.insert(score.end(), common.begin(), common.end());
        const Result a = cli(learn);
        const Result b = cli(score);
        REQUIRE(a.code == kExitOk);
        REQUIRE(b.code == kExitOk);
        const Json learned = Json::parse(a.out);
        CHECK(learned["network"]["total_log_score"].get<double>() >=
              Json::parse(b.out)["network"]["total_log_score"].get<double>());
        const Json& acc = learned["accuracy"];
        CHECK(acc["correct"].get<int>() + acc["missing"].get<int>() == 3);
    }
}

TEST_CASE("score and posterior commands") {
    TempDir dir;
    const std::string sim = simulate_example2(dir, 11, 1);
    const std::string data = sim + "/data_r01.csv";
    const std::string cov = sim + "/covariates.csv";
    const std::string truth = sim + "/truth.csv";

    const Result s = cli({"score", "--data", data, "--covariates", cov, "--metric", "bgecm", "--graph", truth});
    REQUIRE(s.code == kExitOk);
    const Json j = Json::parse(s.out);
    CHECK(j["network"]["edge_count"] == 3);

    const Result p = cli({"posterior", "--data", data, "--covariates", cov, "--metric", "bgecm", "--graph",
                          truth, "--out", dir / "post.csv", "--sd-out", dir / "sd.csv"});
    REQUIRE(p.code == kExitOk);
    const std::string csv = read_text_file(dir / "post.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "node,parents,gamma_mean,b_mean,psi_shape,psi_rate,psi_mean");
    int rows = 0;
    std::string row19;
    while (std::getline(lines, line)) {
        ++rows;
        if (line.rfind("X19,", 0) == 0) row19 = line;
    }
    CHECK(rows == 20);
    CHECK(row19.rfind("X19,X1;X2,", 0) == 0);
    const std::string sd = read_text_file(dir / "sd.csv");
    CHECK(sd.rfind("variable,sd,residual_se\nX1,", 0) == 0);

    const Result iid = cli({"posterior", "--data", data, "--graph", truth});
    REQUIRE(iid.code == kExitOk);
    CHECK(iid.out.find("X20,X19,") != std::string::npos);
}

TEST_CASE("moralize from an id edge list") {
    TempDir dir;
    write_text_file(dir / "g.csv", "from,to\n1,3\n2,3\n");
    const Result r = cli({"moralize", "--graph", dir / "g.csv", "--nodes", "3"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out == "graph G {\n  1;\n  2;\n  3;\n  1 -- 2;\n  1 -- 3;\n  2 -- 3;\n}\n");
}

TEST_CASE("generic simulation through the command line") {
    TempDir dir;
    write_text_file(dir / "g.csv", "from,to\n1,2\n");
    write_text_file(dir / "q.csv", "one,t\n1,0.1\n1,0.5\n1,-0.3\n1,2\n1,0.7\n");
    const Result r = cli({"simulate", "--graph", dir / "g.csv", "--covariates", dir / "q.csv", "--nodes", "2",
                          "--seed", "4", "--out-dir", dir / "out"});
    REQUIRE(r.code == kExitOk);
    const Dataset d = read_dataset(dir / "out/data_r01.csv");
    CHECK(d.n() == 5);
    CHECK(d.p() == 2);
}

TEST_CASE("exit codes") {
    TempDir dir;
    const std::string sim = simulate_example2(dir, 1, 1);
    const std::string data = sim + "/data_r01.csv";

    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"learn", "--bogus"}).code == kExitUsage);
    CHECK(cli({"learn", "--data", data, "--metric", "bdeu"}).code == kExitUsage);
    CHECK(cli({"--version"}).code == kExitOk);

    write_text_file(dir / "ragged.csv", "a,b\n1,2\n3\n");
    const Result ragged = cli({"learn", "--data", dir / "ragged.csv"});
    CHECK(ragged.code == kExitParse);
    CHECK(ragged.err.find("ragged.csv:3") != std::string::npos);
    write_text_file(dir / "text.csv", "a,b\n1,two\n");
    CHECK(cli({"learn", "--data", dir / "text.csv"}).code == kExitParse);

    write_text_file(dir / "rank.csv", "a,b\n1,2\n2,4\n3,6\n4,8\n5,10\n6,12\n7,14\n8,16\n9,18\n10,20\n");
    CHECK(cli({"learn", "--data", data, "--covariates", dir / "rank.csv", "--metric", "bgecm"}).code ==
          kExitConstraint);
    CHECK(cli({"learn", "--data", data, "--covariates", sim + "/covariates.csv", "--metric", "residual",
               "--max-parents", "7"})
              .code == kExitConstraint);
    CHECK(cli({"learn", "--data", data, "--covariates", sim + "/covariates.csv"}).code == kExitConstraint);
    CHECK(cli({"learn", "--data", data, "--metric", "bgecm"}).code == kExitConstraint);
    CHECK(cli({"learn", "--data", data, "--tau", "-1"}).code == kExitConstraint);
    write_text_file(dir / "cyclic.csv", "from,to\n1,2\n2,1\n");
    CHECK(cli({"score", "--data", data, "--graph", dir / "cyclic.csv"}).code == kExitConstraint);

    const Result missing = cli({"learn", "--data", dir / "absent.csv"});
    CHECK(missing.code == kExitIo);
    CHECK(missing.err.rfind("error: ", 0) == 0);
    CHECK(missing.err.find('\n') == missing.err.size() - 1);
    CHECK(cli({"learn", "--data", data, "--json-out", dir / "no/such/dir/r.json"}).code == kExitIo);
}

TEST_CASE("covariates without an intercept direction trigger a warning") {
    TempDir dir;
    const std::string sim = simulate_example2(dir, 2, 1);
    const Result r = cli({"score", "--data", sim + "/data_r01.csv", "--covariates", sim + "/covariates.csv",
                          "--metric", "bgecm", "--graph", sim + "/truth.csv"});
    CHECK(r.code == kExitOk);
    CHECK(r.err.find("warning") != std::string::npos);
}

TEST_CASE("the installed binary runs end to end") {
    TempDir dir;
    const std::string cmd = std::string(COVNET_CLI_PATH) + " simulate --example 1 --replicates 1 --out-dir " +
                            (dir / "e1") + " > " + (dir / "log.txt") + " 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    const std::string bad = std::string(COVNET_CLI_PATH) + " learn --data " + (dir / "none.csv") + " > " +
                            (dir / "log.txt") + " 2>&1";
    const int status = std::system(bad.c_str());
    CHECK(WEXITSTATUS(status) == kExitIo);
}
