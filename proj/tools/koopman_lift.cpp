// koopman-lift: gen | train | encode | eval | boundary
#include "koopman/error.hpp"
#include "koopman/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

std::string escape(std::string s) {
    std::string out;
    for (const char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c == '\n' ? ' ' : c;
    }
    return out;
}

int fail(const std::string& stage, const std::string& kind, const std::string& what) {
    std::cerr << "error stage=" << stage << " kind=" << kind << " message=\"" << escape(what) << "\"\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Koopman lifted-linear models by direct encoding with subspace-specific neural observables",
                 "koopman-lift"};
    app.require_subcommand(0, 1);
    bool print_config = false;
    app.add_flag("--print-config", print_config, "Print the effective configuration as JSON and exit");

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string stage;

    const auto add_stage = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "Experiment config (JSON); defaults when omitted");
        sub->add_option("--out", out_dir, "Output directory (overrides config output_dir)");
        sub->add_option("--seed", seed, "Master seed (overrides config master_seed)");
        sub->add_flag("--print-config", print_config, "Print the effective configuration and exit");
        sub->callback([&stage, name] { stage = name; });
    };
    add_stage("gen", "Simulate trajectories and write train/test datasets");
    add_stage("train", "Train the unstable, stable and aggregate observable networks");
    add_stage("encode", "Build SSOG, SSOG+DE, Aggregate, Aggregate+DE and EDMD models");
    add_stage("eval", "Rollout error table for every model");
    add_stage("boundary", "Instability quotient grids and ground truth");
    add_stage("all", "Run gen, train, encode, eval and boundary in order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("cli", "usage", e.what());
    }

    try {
        koopman::ExperimentConfig cfg =
            config_path.empty() ? koopman::ExperimentConfig{} : koopman::load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (seed) cfg.master_seed = *seed;
        cfg.validate();
        if (print_config) {
            std::cout << cfg.to_json().dump(2) << '\n';
            return 0;
        }
        if (stage.empty()) {
            std::cerr << app.help();
            return 1;
        }
        const std::filesystem::path out = cfg.output_dir;
        const bool all = stage == "all";
        if (all || stage == "gen") koopman::cmd_gen(cfg, out);
        if (all || stage == "train") koopman::cmd_train(cfg, out);
        if (all || stage == "encode") koopman::cmd_encode(cfg, out);
        if (all || stage == "eval") {
            const auto table = koopman::cmd_eval(cfg, out);
            for (const auto& e : table.entries)
                std::cout << e.model << ' ' << to_string(e.subspace) << " h=" << e.horizon << " mean_sse=" << e.mean_sse
                          << '\n';
        }
        if (all || stage == "boundary") {
            for (const auto& [name, s] : koopman::cmd_boundary(cfg, out))
                std::cout << name << " contrast=" << s.contrast << " accuracy=" << s.accuracy << '\n';
        }
    } catch (const koopman::Error& e) {
        return fail(stage, e.kind(), e.what());
    } catch (const std::exception& e) {
        return fail(stage, "internal", e.what());
    }
    return 0;
}
