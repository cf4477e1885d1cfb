#include "koopman/pipeline.hpp"

#include "koopman/csv.hpp"
#include "koopman/error.hpp"
#include "koopman/rng.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace koopman {

nlohmann::json ExperimentConfig::to_json() const {
    return {
        {"system", {{"name", system}, {"dt", dt}}},
        {"seeds",
         {{"box_lo", seed_box_lo},
          {"box_hi", seed_box_hi},
          {"train_count", train_count},
          {"test_stable", test_stable},
          {"test_unstable", test_unstable},
          {"horizon", horizon},
          {"divergence_bound", divergence_bound}}},
        {"observables", {{"total", total_observables}}},
        {"train", train.to_json()},
        {"encoding",
         {{"domain", de_domain},
          {"inflate", de_inflate},
          {"resolution", de_resolution},
          {"samples", de_samples},
          {"svd_tol", svd_tol}}},
        {"edmd", {{"omega", rbf_omega}, {"literal_sign", rbf_literal_sign}}},
        {"modal", {{"epsilon", modal_epsilon}}},
        {"eval", {{"horizons", eval_horizons}}},
        {"boundary", {{"resolution", boundary_resolution}}},
        {"threads", threads},
        {"output_dir", output_dir},
        {"master_seed", master_seed},
    };
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) try {
    ExperimentConfig c;
    const auto section = [&](const char* key) { return j.contains(key) ? j.at(key) : nlohmann::json::object(); };
    const auto sys = section("system");
    c.system = sys.value("name", c.system);
    c.dt = sys.value("dt", c.dt);
    const auto seeds = section("seeds");
    c.seed_box_lo = seeds.value("box_lo", c.seed_box_lo);
    c.seed_box_hi = seeds.value("box_hi", c.seed_box_hi);
    c.train_count = seeds.value("train_count", c.train_count);
    c.test_stable = seeds.value("test_stable", c.test_stable);
    c.test_unstable = seeds.value("test_unstable", c.test_unstable);
    c.horizon = seeds.value("horizon", c.horizon);
    c.divergence_bound = seeds.value("divergence_bound", c.divergence_bound);
    c.total_observables = section("observables").value("total", c.total_observables);
    if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
    const auto enc = section("encoding");
    c.de_domain = enc.value("domain", c.de_domain);
    c.de_inflate = enc.value("inflate", c.de_inflate);
    c.de_resolution = enc.value("resolution", c.de_resolution);
    c.de_samples = enc.value("samples", c.de_samples);
    c.svd_tol = enc.value("svd_tol", c.svd_tol);
    const auto edmd = section("edmd");
    c.rbf_omega = edmd.value("omega", c.rbf_omega);
    c.rbf_literal_sign = edmd.value("literal_sign", c.rbf_literal_sign);
    c.modal_epsilon = section("modal").value("epsilon", c.modal_epsilon);
    c.eval_horizons = section("eval").value("horizons", c.eval_horizons);
    c.boundary_resolution = section("boundary").value("resolution", c.boundary_resolution);
    c.threads = j.value("threads", c.threads);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.validate();
    return c;
} catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config has a malformed value: ") + e.what());
}

void ExperimentConfig::validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (system != "benchmark") fail("unknown system '" + system + "'");
    if (!(dt > 0)) fail("system.dt must be positive");
    if (seed_box_lo.size() != 2 || seed_box_hi.size() != 2) fail("seed box must be 2-dimensional");
    for (std::size_t i = 0; i < seed_box_lo.size(); ++i)
        if (!(seed_box_lo[i] < seed_box_hi[i])) fail("seed box needs lo < hi");
    if (train_count < 1) fail("seeds.train_count must be >= 1");
    if (test_stable < 1 || test_unstable < 1) fail("test counts must be >= 1");
    if (horizon < 1) fail("seeds.horizon must be >= 1");
    if (!(divergence_bound > 0)) fail("seeds.divergence_bound must be positive");
    if (total_observables < 2 || total_observables % 2 != 0) fail("observables.total must be even and >= 2");
    if (!(train.learning_rate > 0) || train.epochs < 1) fail("train needs learning_rate > 0 and epochs >= 1");
    if (de_domain != "seed-box" && de_domain != "data-bbox") fail("encoding.domain must be seed-box or data-bbox");
    if (de_resolution < 2) fail("encoding.resolution must be >= 2");
    if (!(svd_tol > 0 && svd_tol < 1)) fail("encoding.svd_tol must lie in (0, 1)");
    if (!(modal_epsilon > 0)) fail("modal.epsilon must be positive");
    if (eval_horizons.empty()) fail("eval.horizons must not be empty");
    for (const int h : eval_horizons)
        if (h < 1 || h > horizon) fail("eval horizons must lie in [1, seeds.horizon]");
    if (boundary_resolution < 2) fail("boundary.resolution must be >= 2");
}

std::string ExperimentConfig::hash() const {
    auto j = to_json();
    j.erase("output_dir");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

Box ExperimentConfig::seed_box() const {
    return {Eigen::Map<const Vector>(seed_box_lo.data(), static_cast<Eigen::Index>(seed_box_lo.size())),
            Eigen::Map<const Vector>(seed_box_hi.data(), static_cast<Eigen::Index>(seed_box_hi.size()))};
}

DynamicalSystem ExperimentConfig::make_system() const { return benchmark_system(dt); }

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return ExperimentConfig::from_json(j);
}

std::string model_file_stem(const std::string& name) {
    std::string s;
    for (const char c : name) s += c == '+' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot write " + p.string());
    return os;
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError("missing artifact " + p.string());
    return is;
}

std::ofstream open_csv(const fs::path& p, const ExperimentConfig& cfg) {
    auto os = open_out(p);
    os << "# config_hash=" << cfg.hash() << '\n';
    return os;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
    auto os = open_out(p);
    os << j.dump(1) << '\n';
}

nlohmann::json read_json(const fs::path& p) {
    auto is = open_in(p);
    nlohmann::json j;
    is >> j;
    return j;
}

nlohmann::json vectors_json(const std::vector<Vector>& vs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& v : vs) a.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    return a;
}

nlohmann::json box_json(const Box& b) {
    return {{"lo", std::vector<double>(b.lo.data(), b.lo.data() + b.lo.size())},
            {"hi", std::vector<double>(b.hi.data(), b.hi.data() + b.hi.size())}};
}

Box box_from_json(const nlohmann::json& j) {
    const auto lo = j.at("lo").get<std::vector<double>>();
    const auto hi = j.at("hi").get<std::vector<double>>();
    return {Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size())),
            Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()))};
}

TrainConfig effective_train_config(const ExperimentConfig& cfg) {
    TrainConfig t = cfg.train;
    t.seed = derive_seed(cfg.master_seed, "train");
    return t;
}

SnapshotDataset read_train_pairs(const fs::path& out) {
    auto is = open_in(out / artifacts::train_pairs);
    return read_pairs_csv(is);
}

std::string checkpoint_name(Subspace s) { return "checkpoint_" + to_string(s) + ".json"; }

CheckpointResolver resolver_for(const fs::path& out) {
    return [out](const std::string& ref) -> DictionaryPtr {
        const SubspaceModel m = checkpoint_from_json(read_json(out / ref));
        return std::make_shared<NeuralDictionary>(m.network, ref);
    };
}

}  // namespace

GenResult generate_data(const ExperimentConfig& cfg) {
    cfg.validate();
    const DynamicalSystem system = cfg.make_system();
    const Box box = cfg.seed_box();
    GenResult g;
    g.train_seeds = uniform_random(box, cfg.train_count, derive_seed(cfg.master_seed, "train-seeds"));
    g.train = build_dataset(system, g.train_seeds, cfg.horizon, cfg.divergence_bound).dataset;

    // Test seeds come from their own stream; draw until both label quotas fill.
    Rng rng(derive_seed(cfg.master_seed, "test-seeds"));
    int need_s = cfg.test_stable, need_u = cfg.test_unstable;
    const long max_draws = 1000L * (need_s + need_u);
    for (long draw = 0; (need_s > 0 || need_u > 0) && draw < max_draws; ++draw) {
        Vector x0(box.dim());
        for (Eigen::Index i = 0; i < box.dim(); ++i) x0(i) = rng.uniform(box.lo(i), box.hi(i));
        Trajectory t = simulate(system, x0, cfg.horizon, cfg.divergence_bound);
        int& need = t.label == Label::stable ? need_s : need_u;
        if (need == 0) continue;
        --need;
        g.test_seeds.push_back(x0);
        g.test.push_back(std::move(t));
    }
    if (need_s > 0 || need_u > 0) throw EmptyDatasetError("seed box does not yield both test labels");
    assert_disjoint_seeds(g.train_seeds, g.test_seeds);
    return g;
}

void cmd_gen(const ExperimentConfig& cfg, const fs::path& out) {
    fs::create_directories(out);
    const GenResult g = generate_data(cfg);
    {
        auto os = open_csv(out / artifacts::train_pairs, cfg);
        write_pairs_csv(os, g.train);
    }
    {
        const DynamicalSystem system = cfg.make_system();
        std::vector<Trajectory> train_traj;
        for (const auto& x0 : g.train_seeds) train_traj.push_back(simulate(system, x0, cfg.horizon, cfg.divergence_bound));
        auto os = open_csv(out / artifacts::train_trajectories, cfg);
        write_trajectories_csv(os, train_traj);
    }
    {
        auto os = open_csv(out / artifacts::test_trajectories, cfg);
        write_trajectories_csv(os, g.test);
    }
    nlohmann::json test_labels = nlohmann::json::array();
    for (const auto& t : g.test) test_labels.push_back(to_string(t.label));
    write_json(out / artifacts::manifest,
               {{"config_hash", cfg.hash()},
                {"config", cfg.to_json()},
                {"train_seeds", vectors_json(g.train_seeds)},
                {"test_seeds", vectors_json(g.test_seeds)},
                {"test_labels", test_labels},
                {"train_pairs", g.train.size()},
                {"train_pairs_stable", g.train.count(Label::stable)},
                {"train_pairs_unstable", g.train.count(Label::unstable)},
                {"seed_box", box_json(cfg.seed_box())},
                {"data_bounding_box", box_json(g.train.bounding_box)}});
}

void cmd_train(const ExperimentConfig& cfg, const fs::path& out) {
    const SnapshotDataset data = read_train_pairs(out);
    const TrainConfig tc = effective_train_config(cfg);
    const int half = cfg.total_observables / 2;
    const std::vector<std::pair<Subspace, int>> jobs = {
        {Subspace::unstable, half}, {Subspace::stable, half}, {Subspace::aggregate, cfg.total_observables}};
    for (const auto& [tag, m] : jobs) {
        const SnapshotDataset subset = tag == Subspace::aggregate ? data
                                       : tag == Subspace::stable  ? data.partition(Label::stable)
                                                                  : data.partition(Label::unstable);
        const SubspaceModel model = train_subspace_model(subset, m, tag, tc);
        auto j = checkpoint_to_json(model);
        j["config_hash"] = cfg.hash();
        write_json(out / checkpoint_name(tag), j);
        auto os = open_csv(out / ("loss_" + to_string(tag) + ".csv"), cfg);
        os << "epoch,loss\n";
        for (std::size_t e = 0; e < model.loss_history.size(); ++e)
            os << e + 1 << ',' << csv::format(model.loss_history[e]) << '\n';
    }
}

namespace {

IntegrationDomain de_domain(const ExperimentConfig& cfg, const nlohmann::json& manifest,
                            const DynamicalSystem& system) {
    const Box base = cfg.de_domain == "seed-box" ? cfg.seed_box() : box_from_json(manifest.at("data_bounding_box"));
    return resolve_domain(base.inflated(cfg.de_inflate), system, cfg.de_resolution, cfg.de_samples,
                          derive_seed(cfg.master_seed, "de-samples"));
}

void write_model(const fs::path& out, const std::string& name, const LiftedLinearModel& model,
                 const ExperimentConfig& cfg) {
    auto j = model_to_json(model);
    j["name"] = name;
    j["config_hash"] = cfg.hash();
    write_json(out / ("model_" + model_file_stem(name) + ".json"), j);
    auto os = open_csv(out / ("A_" + model_file_stem(name) + ".csv"), cfg);
    csv::write_matrix(os, model.a);
}

}  // namespace

void cmd_encode(const ExperimentConfig& cfg, const fs::path& out) {
    const nlohmann::json manifest = read_json(out / artifacts::manifest);
    const SnapshotDataset data = read_train_pairs(out);
    const DynamicalSystem system = cfg.make_system();
    const IntegrationDomain domain = de_domain(cfg, manifest, system);

    const SubspaceModel gu = checkpoint_from_json(read_json(out / checkpoint_name(Subspace::unstable)));
    const SubspaceModel gs = checkpoint_from_json(read_json(out / checkpoint_name(Subspace::stable)));
    const SubspaceModel ga = checkpoint_from_json(read_json(out / checkpoint_name(Subspace::aggregate)));

    const DictionaryPtr ssog =
        build_ssog(gu.network, gs.network, checkpoint_name(Subspace::unstable), checkpoint_name(Subspace::stable));
    const DictionaryPtr aggregate = std::make_shared<NeuralDictionary>(ga.network, checkpoint_name(Subspace::aggregate));

    write_model(out, "SSOG", edmd_fit(ssog, data, cfg.svd_tol), cfg);
    write_model(out, "SSOG+DE", relift_linear_layer(ssog, system, domain, cfg.svd_tol, cfg.threads), cfg);

    LiftedLinearModel learned;
    learned.dictionary = aggregate;
    learned.a = ga.linear;
    learned.provenance = Provenance::learned_linear_layer;
    learned.diagnostics = {{"final_loss", ga.loss_history.empty() ? 0.0 : ga.loss_history.back()}};
    write_model(out, "Aggregate", learned, cfg);
    write_model(out, "Aggregate+DE", direct_encode(aggregate, system, domain, cfg.svd_tol, cfg.threads), cfg);

    const int per_state = cfg.total_observables / data.dimension();
    const DictionaryPtr rbf = make_rbf_dictionary(data, per_state, cfg.rbf_omega, cfg.rbf_literal_sign);
    write_model(out, "EDMD", edmd_fit(rbf, data, cfg.svd_tol), cfg);
}

std::vector<NamedModel> load_models(const fs::path& out) {
    std::vector<NamedModel> models;
    const auto resolve = resolver_for(out);
    for (const auto& name : kModelNames) {
        const auto j = read_json(out / ("model_" + model_file_stem(name) + ".json"));
        models.push_back({name, model_from_json(j, resolve)});
    }
    return models;
}

ErrorTable cmd_eval(const ExperimentConfig& cfg, const fs::path& out) {
    const auto models = load_models(out);
    auto is = open_in(out / artifacts::test_trajectories);
    const auto test = read_trajectories_csv(is, cfg.dt);

    const nlohmann::json manifest = read_json(out / artifacts::manifest);
    std::vector<Vector> train_seeds, test_seeds;
    for (const auto& s : manifest.at("train_seeds")) {
        const auto v = s.get<std::vector<double>>();
        train_seeds.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    for (const auto& t : test) test_seeds.push_back(t.states.front());
    assert_disjoint_seeds(train_seeds, test_seeds);

    const ErrorTable table = evaluate_suite(models, test, cfg.eval_horizons);
    {
        auto os = open_csv(out / artifacts::error_table, cfg);
        write_error_table_csv(os, table);
    }
    {
        auto os = open_csv(out / artifacts::error_series, cfg);
        write_series_csv(os, table);
    }
    return table;
}

std::map<std::string, BoundarySummary> cmd_boundary(const ExperimentConfig& cfg, const fs::path& out) {
    const auto models = load_models(out);
    const DynamicalSystem system = cfg.make_system();
    const Box box = cfg.seed_box();
    std::map<std::string, BoundarySummary> summaries;

    const BoundaryField truth = ground_truth_field(system, box, cfg.boundary_resolution, cfg.horizon);
    {
        auto os = open_csv(out / "boundary_truth.csv", cfg);
        write_boundary_csv(os, truth);
    }
    summaries["GroundTruth"] = *truth.summary;

    for (const auto& nm : models) {
        const ModalDecomposition decomp = eigendecompose(nm.model.a, cfg.modal_epsilon);
        const BoundaryField field = boundary_grid(decomp, *nm.model.dictionary, box, cfg.boundary_resolution, truth.truth);
        const std::string stem = model_file_stem(nm.name);
        {
            auto os = open_csv(out / ("boundary_" + stem + ".csv"), cfg);
            os << "# left_basis=orthonormalized_unstable\n";
            write_boundary_csv(os, field);
        }
        {
            auto os = open_csv(out / ("eigenvalues_" + stem + ".csv"), cfg);
            write_eigenvalues_csv(os, decomp);
        }
        summaries[nm.name] = *field.summary;
    }

    auto os = open_csv(out / artifacts::boundary_summary, cfg);
    os << "model,mean_xi_stable,mean_xi_unstable,contrast,accuracy,undefined_nodes\n";
    std::vector<std::string> order{"GroundTruth"};
    order.insert(order.end(), kModelNames.begin(), kModelNames.end());
    for (const auto& name : order) {
        const auto& s = summaries.at(name);
        os << name << ',' << csv::format(s.mean_xi_stable) << ',' << csv::format(s.mean_xi_unstable) << ','
           << csv::format(s.contrast) << ',' << csv::format(s.accuracy) << ',' << s.undefined_nodes << '\n';
    }
    return summaries;
}

}  // namespace koopman
