#include <koopman/error.hpp>
#include <koopman/pipeline.hpp>

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace koopman;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config(const fs::path& out) {
    ExperimentConfig c;
    c.train_count = 30;
    c.test_stable = 4;
    c.test_unstable = 4;
    c.horizon = 40;
    c.total_observables = 6;
    c.train.epochs = 30;
    c.de_resolution = 40;
    c.boundary_resolution = 9;
    c.output_dir = out.string();
    return c;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("koopman_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(KOOPMAN_LIFT_BIN) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config round trip and defaults") {
    const ExperimentConfig def;
    const auto back = ExperimentConfig::from_json(def.to_json());
    CHECK(back.to_json() == def.to_json());
    CHECK(ExperimentConfig::from_json(nlohmann::json::object()).to_json() == def.to_json());
    CHECK(def.hash().size() == 16);

    ExperimentConfig moved = def;
    moved.output_dir = "elsewhere";
    CHECK(moved.hash() == def.hash());
    moved.master_seed = 2;
    CHECK(moved.hash() != def.hash());
}

TEST_CASE("config validation") {
    ExperimentConfig c;
    c.train_count = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.total_observables = 7;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.de_domain = "nowhere";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"seeds", {{"train_count", "many"}}}}), Error);
}

TEST_CASE("generated seeds are disjoint and labeled") {
    const auto g = generate_data(tiny_config(scratch("gen")));
    CHECK(g.train_seeds.size() == 30);
    CHECK(g.test.size() == 8);
    CHECK_NOTHROW(assert_disjoint_seeds(g.train_seeds, g.test_seeds));
    int unstable = 0;
    for (const auto& t : g.test) unstable += t.label == Label::unstable ? 1 : 0;
    CHECK(unstable == 4);
}

TEST_CASE("stages produce every artifact") {
    const fs::path out = scratch("stages");
    const auto cfg = tiny_config(out);
    cmd_gen(cfg, out);
    cmd_train(cfg, out);
    cmd_encode(cfg, out);
    const auto table = cmd_eval(cfg, out);
    CHECK(table.entries.size() == 5 * 2 * 2);
    const auto summary = cmd_boundary(cfg, out);
    CHECK(summary.size() >= 5);
    CHECK(summary.count("SSOG+DE") == 1);

    for (const char* f : {"train_pairs.csv", "test_trajectories.csv", "manifest.json", "checkpoint_u.json",
                          "checkpoint_s.json", "checkpoint_aggregate.json", "error_table.csv", "boundary_truth.csv",
                          "boundary_summary.csv"})
        CHECK_MESSAGE(fs::exists(out / f), f);
    const auto models = load_models(out);
    REQUIRE(models.size() == 5);
    for (const auto& m : models) CHECK(m.model.lifted_dim() == 8);

    for (const auto& e : fs::directory_iterator(out)) {
        if (e.path().extension() != ".csv") continue;
        const std::string body = slurp(e.path());
        CHECK_MESSAGE(body.rfind("# config_hash=" + cfg.hash(), 0) == 0, e.path().string());
    }
}

TEST_CASE("cli") {
    const fs::path dir = scratch("cli");
    SUBCASE("print-config dumps every section") {
        CHECK(run_cli("--print-config", dir / "cfg.json") == 0);
        const auto j = nlohmann::json::parse(slurp(dir / "cfg.json"));
        CHECK(ExperimentConfig::from_json(j).to_json() == ExperimentConfig{}.to_json());
    }
    SUBCASE("bad config exits nonzero with one error line") {
        std::ofstream(dir / "bad.json") << R"({"seeds": {"train_count": 0}})";
        CHECK(run_cli("gen --config " + (dir / "bad.json").string(), dir / "log.txt") != 0);
        const std::string log = slurp(dir / "log.txt");
        CHECK(log.rfind("error stage=gen kind=config", 0) == 0);
    }
    SUBCASE("missing inputs") {
        CHECK(run_cli("encode --out " + (dir / "empty").string(), dir / "log.txt") != 0);
        CHECK(slurp(dir / "log.txt").rfind("error stage=encode", 0) == 0);
    }
    SUBCASE("unknown subcommand") { CHECK(run_cli("frobnicate", dir / "log.txt") != 0); }
}

}
