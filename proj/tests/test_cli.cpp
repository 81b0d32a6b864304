#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "spinesim/cli.hpp"

using namespace spinesim;

namespace {

struct Result
{
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string temp_path(std::string const& name)
{
    return (std::filesystem::temp_directory_path() / ("spinesim_test_" + name)).string();
}

}  // namespace

TEST_CASE("usage errors exit with 1")
{
    CHECK(run({}).code == cli::usage_error);
    CHECK(run({"nonsense"}).code == cli::usage_error);
    CHECK(run({"simulate", "--reps", "abc"}).code == cli::usage_error);
    CHECK(run({"simulate", "--format", "xml"}).code == cli::usage_error);
    CHECK(run({"simulate", "--N", "0"}).code == cli::usage_error);
    CHECK(run({"spine", "--check", "bogus"}).code == cli::usage_error);
    CHECK(run({"verify-m2f", "--phi", "wobble(3)"}).code == cli::usage_error);
    CHECK(run({"selftest", "--only", "13"}).code == cli::usage_error);
    CHECK(run({"--help"}).code == cli::ok);
}

TEST_CASE("header records version, config and seed")
{
    const auto r = run({"simulate", "--R", "0", "--N", "10", "--reps", "500", "--seed", "42", "--threads", "2"});
    REQUIRE(r.code == cli::ok);
    std::istringstream in(r.out);
    std::string l1, l2, l3, l4, cols;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    std::getline(in, l4);
    std::getline(in, cols);
    CHECK(l1 == "# spinesim 1.0.0");
    CHECK(l2 == "# schema: simulate/1 point,statistic,estimate,se,count,reference");
    CHECK(l3 == "# seed: 42");
    const auto cfg = nlohmann::json::parse(l4.substr(10));
    CHECK(cfg["N"] == 10);
    CHECK(cfg["reps"] == 500);
    CHECK(cfg["seed"] == 42);
    CHECK_FALSE(cfg.contains("threads"));
    CHECK(cols == "point,statistic,estimate,se,count,reference");
    std::string row;
    std::getline(in, row);
    CHECK(row.rfind("R=0;N=10;t=1,survival,", 0) == 0);
}

TEST_CASE("JSONL output is one valid record per line")
{
    const auto r = run({"cpp-poly", "--k", "2", "--reps", "1000", "--format", "jsonl", "--assert"});
    REQUIRE(r.code == cli::ok);
    std::istringstream in(r.out);
    std::string line;
    std::vector<nlohmann::json> recs;
    while (std::getline(in, line))
        recs.push_back(nlohmann::json::parse(line));
    REQUIRE(recs.size() == 3);
    CHECK(recs[0]["record"] == "header");
    CHECK(recs[0]["version"] == "1.0.0");
    CHECK(recs[1]["record"] == "row");
    for (auto key : {"estimate", "se", "count"})
        CHECK(recs[1].contains(key));
    CHECK(recs[2]["record"] == "check");
    CHECK(recs[2]["pass"] == true);
}

TEST_CASE("config file: flags override it and unknown keys are rejected")
{
    const auto good = temp_path("good.json");
    std::ofstream(good) << R"({"R": 0, "N": 50, "reps": 300, "node-cap": 1000, "seed": 5})";
    const auto a = run({"simulate", "--config", good, "--N", "20"});
    REQUIRE(a.code == cli::ok);
    CHECK(a.out.find("\"N\":20") != std::string::npos);
    CHECK(a.out.find("\"node_cap\":1000") != std::string::npos);
    CHECK(a.out.find("# seed: 5") != std::string::npos);
    // The same settings given as flags record identically.
    const auto b = run({"simulate", "--R", "0", "--N", "20", "--reps", "300", "--node-cap", "1000", "--seed", "5"});
    CHECK(a.out == b.out);

    const auto bad = temp_path("bad.json");
    std::ofstream(bad) << R"({"R": 0, "replicates": 10})";
    const auto c = run({"simulate", "--config", bad});
    CHECK(c.code == cli::usage_error);
    CHECK(c.err.find("'replicates'") != std::string::npos);

    const auto typed = temp_path("typed.json");
    std::ofstream(typed) << R"({"N": "many"})";
    const auto d = run({"simulate", "--config", typed});
    CHECK(d.code == cli::usage_error);
    CHECK(d.err.find("'N'") != std::string::npos);

    const auto broken = temp_path("broken.json");
    std::ofstream(broken) << "{not json";
    CHECK(run({"simulate", "--config", broken}).code == cli::usage_error);
    for (auto const& p : {good, bad, typed, broken})
        std::remove(p.c_str());
}

TEST_CASE("many-to-few example and the mutation check")
{
    const auto ok = run({"verify-m2f", "--k", "2", "--N", "2", "--R", "0", "--reps", "100000", "--seed", "7", "--assert"});
    CHECK(ok.code == cli::ok);
    CHECK(ok.out.find(",rhs,2,0,100000,") != std::string::npos);
    const auto mutated = run({"verify-m2f", "--k", "2", "--N", "2", "--R", "0", "--reps", "100000", "--seed", "7",
                              "--assert", "--mutate"});
    CHECK(mutated.code == cli::assertion_failure);
    CHECK(mutated.out.find(",rhs,4,0,100000,") != std::string::npos);
}

TEST_CASE("assertion failures exit with 2")
{
    // The median ratio is far from 1 at R = 100.
    const auto r = run({"distance-agree", "--R", "100", "--reps", "500", "--assert"});
    CHECK(r.code == cli::assertion_failure);
    CHECK(r.err.find("median_at_largest_R") != std::string::npos);
    // Without --assert the same run only reports.
    CHECK(run({"distance-agree", "--R", "100", "--reps", "500"}).code == cli::ok);
}

TEST_CASE("output files are byte-identical across runs and thread counts")
{
    const auto f1 = temp_path("a.csv"), f2 = temp_path("b.csv");
    CHECK(run({"spine", "--check", "poisson", "--reps", "3000", "--seed", "3", "--threads", "1", "--out", f1}).code == 0);
    CHECK(run({"spine", "--check", "poisson", "--reps", "3000", "--seed", "3", "--threads", "4", "--out", f2}).code == 0);
    auto slurp = [](std::string const& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const auto a = slurp(f1);
    CHECK(!a.empty());
    CHECK(a == slurp(f2));
    const auto other_seed = run({"spine", "--check", "poisson", "--reps", "3000", "--seed", "4"});
    CHECK(other_seed.out != a);
    std::remove(f1.c_str());
    std::remove(f2.c_str());
}

TEST_CASE("selftest subset")
{
    const auto r = run({"selftest", "--only", "8", "--scale", "0.1"});
    CHECK(r.code == cli::ok);
    CHECK(r.out.find("# check criterion_8 CPP encoding bijection: pass") != std::string::npos);
}
