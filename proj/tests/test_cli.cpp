#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>
#include <string>

#include "qesolve/cli.hpp"
#include "qesolve/io.hpp"

using namespace qesolve;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run_cli(const std::vector<std::string> &args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("qesolve_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("instance files round-trip byte for byte", "[io][property]") {
    for (auto kind : {WeightKind::pm1, WeightKind::gaussian}) {
        const SKInstance inst = generate_sk(12, kind, 77);
        const std::string text = io::instance_to_json(inst);
        const SKInstance back = io::instance_from_json(text);
        CHECK(back == inst);
        CHECK(io::instance_to_json(back) == text);
    }
}

TEST_CASE("malformed instance files report every top-level problem", "[io]") {
    try {
        (void)io::instance_from_json(R"({"schema": "x", "n_vars": 1, "weight_kind": "bad"})");
        FAIL("expected a validation error");
    } catch (const ValidationError &e) {
        const std::string msg = e.what();
        CHECK(msg.find("schema") != std::string::npos);
        CHECK(msg.find("n_vars") != std::string::npos);
        CHECK(msg.find("weight kind") != std::string::npos);
        CHECK(msg.find("seed") != std::string::npos);
        CHECK(msg.find("weights") != std::string::npos);
    }
    const std::string head =
        R"({"schema": "qesolve.instance/1", "n_vars": 3, "weight_kind": "pm1", "seed": 0, )";
    CHECK_THROWS_AS(io::instance_from_json("not json"), ValidationError);
    CHECK_THROWS_AS(io::instance_from_json(head + R"("weights": [[0, 3, 1]]})"), ValidationError);
    CHECK_THROWS_AS(io::instance_from_json(head + R"("weights": [[1, 1, 1]]})"), ValidationError);
    CHECK_THROWS_AS(io::instance_from_json(head + R"("weights": [[0, 1, 1], [1, 0, 1]]})"),
                    ValidationError);
    CHECK_THROWS_AS(io::instance_from_json(head + R"("weights": [[0, 1]]})"), ValidationError);
    CHECK_NOTHROW(io::instance_from_json(head + R"("weights": [[2, 0, -0.5]]})"));
}

TEST_CASE("parameter strings round-trip", "[io]") {
    const std::vector<LayerParams> p{{0.1, -0.0123456789012345, 0.3}, {1e-17, 2.5, 0.0}};
    CHECK(io::params_from_string(io::params_to_string(p)) == p);
    CHECK(io::params_from_string("0.5:0.25")[0].gamma_bias == 0.0);
    CHECK_THROWS_AS(io::params_from_string("0.5"), ValidationError);
    CHECK_THROWS_AS(io::params_from_string("0.5:x"), ValidationError);
    CHECK_THROWS_AS(io::params_from_string(""), ValidationError);
}

TEST_CASE("CSV appends refuse mismatched headers", "[io]") {
    const fs::path dir = fresh_dir("csv");
    const fs::path f = dir / "t.csv";
    io::append_csv(f, {"a", "b"}, {{"1", "x,y"}});
    io::append_csv(f, {"a", "b"}, {{"2", "q\"r"}});
    CHECK(io::read_file(f) == "a,b\n1,\"x,y\"\n2,\"q\"\"r\"\n");
    CHECK_THROWS_AS(io::append_csv(f, {"a", "c"}, {}), RuntimeError);
    CHECK_THROWS_AS(io::append_csv(f, {"a", "b"}, {{"1"}}), ValidationError);
}

TEST_CASE("generate is deterministic per seed", "[cli]") {
    const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
    REQUIRE(run_cli({"generate", "--n", "8", "--count", "2", "--seed", "4", "--out", a}).code == 0);
    REQUIRE(run_cli({"generate", "--n", "8", "--count", "2", "--seed", "4", "--out", b}).code == 0);
    for (const char *name : {"sk_n8_pm1_000.json", "sk_n8_pm1_001.json"}) {
        CHECK(io::read_file(a / name) == io::read_file(b / name));
    }
    CHECK(io::read_file(a / "sk_n8_pm1_000.json") != io::read_file(a / "sk_n8_pm1_001.json"));
    CHECK(fs::exists(a / "generate.manifest.json"));
    REQUIRE(run_cli({"generate", "--fixture", "--out", a}).code == 0);
    CHECK(io::load_instance(a / "fixture_n4.json") == fixture_n4());
}

TEST_CASE("argument errors exit with status 2 and list every problem", "[cli]") {
    const Result r = run_cli({"solve", "--instance", "/nonexistent.json", "--p", "0",
                              "--mode", "bogus"});
    CHECK(r.code == 2);
    CHECK(r.err.find("not found") != std::string::npos);
    CHECK(r.err.find("--d") != std::string::npos);
    CHECK(r.err.find("--p") != std::string::npos);
    CHECK(r.err.find("mode") != std::string::npos);

    CHECK(run_cli({"solve", "--no-such-flag"}).code == 2);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
    CHECK(run_cli({"--version"}).code == 0);
}

TEST_CASE("unreadable inputs exit with a runtime status", "[cli]") {
    const fs::path dir = fresh_dir("bad");
    io::write_file(dir / "bad.json", "{ broken");
    const Result r = run_cli({"solve", "--instance", dir / "bad.json", "--d", "2", "--out",
                              dir / "s.csv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("bad.json") != std::string::npos);
    const Result rp = run_cli({"replay", "--manifest", dir / "none.json", "--out", dir / "x"});
    CHECK(rp.code == 3);
}

TEST_CASE("solve writes one row per depth and a manifest", "[cli]") {
    const fs::path dir = fresh_dir("solve");
    REQUIRE(run_cli({"generate", "--fixture", "--out", dir}).code == 0);
    const fs::path out = dir / "solve.csv";
    const Result r = run_cli({"solve", "--instance", dir / "fixture_n4.json", "--d", "2", "--p",
                              "2", "--hops", "2", "--local-evals", "40", "--out", out});
    REQUIRE(r.code == 0);
    const std::string csv = io::read_file(out);
    CHECK(csv.rfind("instance,n_vars,d,p,mode,shots,cost,shot_cost,c_star,c_star_method,"
                    "ratio,evals,rounded_cost,rounded_solution,params\n",
                    0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    const io::Manifest m = io::load_manifest(io::manifest_path(out));
    CHECK(m.command == "solve");
    CHECK(m.outputs == std::vector<std::string>{out.string()});
}

TEST_CASE("replay reproduces outputs byte for byte", "[cli]") {
    const fs::path dir = fresh_dir("replay");
    REQUIRE(run_cli({"generate", "--n", "8", "--seed", "2", "--out", dir}).code == 0);
    const std::string inst = (dir / "sk_n8_pm1_000.json").string();
    const fs::path first = dir / "first.csv", second = dir / "second.csv";
    REQUIRE(run_cli({"solve", "--instance", inst, "--d", "2", "--p", "2", "--hops", "2",
                     "--local-evals", "30", "--seed", "9", "--out", first})
                .code == 0);
    REQUIRE(run_cli({"replay", "--manifest", io::manifest_path(first), "--out", second}).code ==
            0);
    CHECK(io::read_file(first) == io::read_file(second));

    const fs::path l1 = dir / "land1.csv", l2 = dir / "land2.csv";
    REQUIRE(run_cli({"landscape", "--fixture", "--beta-points", "3", "--gamma-points", "4",
                     "--mode", "shots", "--shots", "200", "--seed", "5", "--out", l1})
                .code == 0);
    REQUIRE(run_cli({"replay", "--manifest", io::manifest_path(l1), "--out", l2}).code == 0);
    CHECK(io::read_file(l1) == io::read_file(l2));
}

TEST_CASE("compile-check reports the verification line", "[cli]") {
    const fs::path dir = fresh_dir("compile");
    const Result r = run_cli({"compile-check", "--fixture", "--beta", "0.3", "--gamma", "0.4",
                              "--bias", "0.1", "--emit", dir / "c.txt", "--out",
                              dir / "cc.csv"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("max_deviation < 1e-9", 0) == 0);
    const Circuit c = parse_circuit(io::read_file(dir / "c.txt"));
    for (const auto &g : c.gates) {
        CHECK(is_native(g.kind));
    }
    CHECK(run_cli({"compile-check", "--fixture", "--instance", "x.json"}).code == 2);
}

TEST_CASE("entropy and baseline commands produce their tables", "[cli]") {
    const fs::path dir = fresh_dir("tables");
    REQUIRE(run_cli({"entropy", "--n", "64", "--d-list", "1", "8", "--samples", "5", "--out",
                     dir / "e.csv"})
                .code == 0);
    const std::string e = io::read_file(dir / "e.csv");
    CHECK(std::count(e.begin(), e.end(), '\n') == 3);
    CHECK(run_cli({"entropy", "--n", "64", "--d-list", "3", "--out", dir / "bad.csv"}).code == 2);

    REQUIRE(run_cli({"generate", "--n", "16", "--out", dir}).code == 0);
    const Result b = run_cli({"baseline", "--instance", dir / "sk_n16_pm1_000.json", "--d", "4",
                              "--r-star", "1:0.4", "--out", dir / "b.csv"});
    CHECK(b.code == 0);
    CHECK(run_cli({"baseline", "--instance", dir / "sk_n16_pm1_000.json", "--d", "4",
                   "--r-star", "1:7", "--out", dir / "b2.csv"})
              .code == 2);
}

TEST_CASE("output paths fall back to the environment directory", "[cli]") {
    const fs::path dir = fresh_dir("env");
    ::setenv(cli::kOutDirEnv, dir.c_str(), 1);
    const Result r = run_cli({"landscape", "--fixture", "--beta-points", "2", "--gamma-points",
                              "2"});
    ::unsetenv(cli::kOutDirEnv);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "landscape.csv"));
}
