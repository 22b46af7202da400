#include "chainfuse/cli.hpp"
#include "chainfuse/evaluation.hpp"
#include "chainfuse/metrics.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace chainfuse;
using namespace chainfuse::testing;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("help lists every method and metric") {
    const auto r = cli({"--help"});
    CHECK(r.code == kExitOk);
    for (Method m : kAllMethods) CHECK(r.out.find(to_string(m)) != std::string::npos);
    for (Metric m : kAllMetrics) CHECK(r.out.find(to_string(m)) != std::string::npos);
    for (const char* sub : {"run", "bench", "phi", "stats", "info", "train", "predict"})
        CHECK(r.out.find(sub) != std::string::npos);
    const auto sub = cli({"run", "--help"});
    CHECK(sub.code == kExitOk);
    CHECK(sub.out.find("--ensemble-size") != std::string::npos);
    CHECK(sub.out.find("--phi-grid") != std::string::npos);
    CHECK(cli({"--version"}).out == std::string(version()) + "\n");
}

TEST_CASE("usage errors and runtime failures have distinct exit codes") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"run"}).code == kExitUsage);
    CHECK(cli({"run", "--arff", "a.arff", "--xml-labels", "a.xml", "--method", "rakel"}).code == kExitUsage);
    CHECK(cli({"run", "--arff", "a.arff", "--xml-labels", "a.xml", "--threshold", "2"}).code == kExitUsage);
    CHECK(cli({"phi", "--arff", "/nonexistent.arff", "--xml-labels", "/nonexistent.xml"}).code == kExitFailure);
    const auto dir = fresh_temp_dir("cli_missing");
    const auto r = cli({"run", "--arff", "/nonexistent.arff", "--xml-labels", "/nonexistent.xml", "-o", (dir / "o").string()});
    CHECK(r.code == kExitFailure);
    std::filesystem::remove_all(dir);
}

TEST_CASE("run is deterministic and reproducible from its manifest") {
    const auto dir = fresh_temp_dir("cli_run");
    write_dataset(make_synthetic(SyntheticShape{}, 70), dir, "syn");
    const std::vector<std::string> common{"run", "--arff", (dir / "syn.arff").string(), "--xml-labels",
                                          (dir / "syn.xml").string(), "--method", "meecc,uddtecc", "-c", "3",
                                          "-k", "3", "--seed", "9"};
    auto with_out = [&](const std::string& o) {
        auto a = common;
        a.push_back("-o");
        a.push_back((dir / o).string());
        return a;
    };
    const auto a = cli(with_out("a"));
    REQUIRE(a.code == kExitOk);
    REQUIRE(cli(with_out("b")).code == kExitOk);
    const auto csv = slurp(dir / "a" / "results.csv");
    CHECK(csv == slurp(dir / "b" / "results.csv"));
    CHECK(csv.find("syn,uddtecc,accuracy,f1,") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "a" / "manifest.json"));

    const auto m = cli({"run", "--manifest", (dir / "a" / "manifest.json").string(), "-o", (dir / "c").string()});
    REQUIRE(m.code == kExitOk);
    CHECK(slurp(dir / "c" / "results.csv") == csv);

    // Single-value grid: every fold reports that value.
    auto single = with_out("d");
    single[6] = "uddtecc";
    single.insert(single.end(), {"--phi-grid", "0.2"});
    REQUIRE(cli(single).code == kExitOk);
    CHECK(slurp(dir / "d" / "results.csv").find(",0.2;0.2;0.2,") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("results directory falls back to the environment variable") {
    const auto dir = fresh_temp_dir("cli_env");
    write_dataset(make_synthetic(SyntheticShape{}, 71), dir, "syn");
    setenv(kResultsDirEnv, (dir / "env_out").string().c_str(), 1);
    const auto r = cli({"run", "--arff", (dir / "syn.arff").string(), "--xml-labels", (dir / "syn.xml").string(),
                        "--method", "mvecc", "-c", "2", "-k", "2"});
    unsetenv(kResultsDirEnv);
    CHECK(r.code == kExitOk);
    CHECK(std::filesystem::exists(dir / "env_out" / "results.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("phi, info, stats, bench, train and predict") {
    const auto dir = fresh_temp_dir("cli_misc");
    const auto ds = make_synthetic(SyntheticShape{}, 72);
    write_dataset(ds, dir, "one");
    write_dataset(make_synthetic(SyntheticShape{}, 73), dir, "two");
    const std::string arff = (dir / "one.arff").string(), xml = (dir / "one.xml").string();

    const auto phi = cli({"phi", "--arff", arff, "--xml-labels", xml});
    REQUIRE(phi.code == kExitOk);
    CHECK(phi.out.rfind("label,y0,y1,y2,y3\n", 0) == 0);
    const auto abs_phi = cli({"phi", "--arff", arff, "--xml-labels", xml, "--abs"});
    CHECK(abs_phi.out.find(",-") == std::string::npos);

    const auto info = cli({"info", "--arff", arff, "--xml-labels", xml});
    CHECK(info.code == kExitOk);
    CHECK(info.out.find("instances: 200") != std::string::npos);

    const auto bench = cli({"bench", "--data-dir", dir.string(), "--method", "mvecc,meecc,dtecc", "--metrics",
                            "accuracy,hamming_loss", "-c", "2", "-k", "2", "-o", (dir / "bench").string()});
    REQUIRE(bench.code == kExitOk);
    CHECK(std::filesystem::exists(dir / "bench" / "accuracy" / "results.csv"));
    CHECK(std::filesystem::exists(dir / "bench" / "hamming_loss" / "results.csv"));

    const auto svg = (dir / "cd.svg").string();
    const auto stats = cli({"stats", "--results", (dir / "bench" / "accuracy" / "results.csv").string(), "--metric",
                            "accuracy", "--svg", svg});
    REQUIRE(stats.code == kExitOk);
    CHECK(stats.out.find("friedman: chi2=") != std::string::npos);
    CHECK(stats.out.find("average rank") != std::string::npos);
    CHECK(std::filesystem::exists(svg));
    CHECK(cli({"stats", "--results", (dir / "nope.csv").string()}).code == kExitFailure);
    CHECK(cli({"stats", "--results", svg, "--higher-is-better", "--lower-is-better"}).code == kExitUsage);

    const auto model = (dir / "model.json").string();
    REQUIRE(cli({"train", "--arff", arff, "--xml-labels", xml, "--method", "uddtecc", "-c", "3", "--phi", "0.5",
                 "--model", model})
                .code == kExitOk);
    const auto pred = cli({"predict", "--arff", arff, "--xml-labels", xml, "--model", model});
    REQUIRE(pred.code == kExitOk);
    std::size_t lines = 0;
    for (char ch : pred.out) lines += ch == '\n';
    CHECK(lines == ds.size() + 1);
    CHECK(pred.err.find("accuracy=") != std::string::npos);
    std::filesystem::remove_all(dir);
}
