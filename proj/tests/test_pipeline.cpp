#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "uqnn/jsonio.hpp"
#include "uqnn/pipeline.hpp"

using namespace uqnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RunConfig tiny_config(const fs::path& out) {
    RunConfig cfg;
    cfg.n_x = 9;
    cfg.n_y = 9;
    cfg.layers = 2;
    cfg.width = 8;
    cfg.epochs = 4;
    cfg.batch = 64;
    cfg.samples = 800;
    cfg.mc_samples = 4000;
    cfg.beta = 0.3;
    cfg.seed = 7;
    cfg.mu = "sample:3";
    cfg.out = out.string();
    cfg.components = {1, 5, 9};
    cfg.resolution = 64;
    return cfg;
}

} // namespace

TEST_CASE("config parsing applies overrides and reports every bad field") {
    TempDir dir("uqnn_cfg_test");
    const fs::path cfg_path = dir.path / "run.cfg";
    {
        std::ofstream out(cfg_path);
        out << "# comment line\n";
        out << "operator = nonlinear\n";
        out << "beta = 1.5\n";
        out << "components = 2,4\n";
        out << "seed = 99\n";
    }
    const RunConfig cfg = load_config(cfg_path.string());
    CHECK(cfg.operator_tag == "nonlinear");
    CHECK(cfg.beta == 1.5);
    CHECK(cfg.seed == 99);
    CHECK(cfg.components == std::vector<std::size_t>{2, 4});
    CHECK(cfg.width == 32); // untouched default

    {
        std::ofstream out(cfg_path);
        out << "operator = cubic\n";
        out << "alpha = 7\n";
        out << "bogus_key = 1\n";
        out << "beta = -2\n";
    }
    try {
        load_config(cfg_path.string());
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("operator") != std::string::npos);
        CHECK(msg.find("alpha") != std::string::npos);
        CHECK(msg.find("bogus_key") != std::string::npos);
        CHECK(msg.find("beta") != std::string::npos);
    }
}

TEST_CASE("mu resolution modes") {
    RunConfig cfg;
    cfg.n_x = 5;
    cfg.mu = "zeros";
    CHECK(resolve_mu(cfg) == Vector(5, 0.0));
    cfg.mu = "sample:11";
    const Vector a = resolve_mu(cfg);
    const Vector b = resolve_mu(cfg);
    CHECK(a == b);
    CHECK(a != Vector(5, 0.0));

    TempDir dir("uqnn_mu_test");
    const fs::path mu_path = dir.path / "mu.csv";
    std::ofstream(mu_path) << "1.0,2.0,3.0,4.0,5.0\n";
    cfg.mu = mu_path.string();
    CHECK(resolve_mu(cfg) == Vector{1.0, 2.0, 3.0, 4.0, 5.0});
}

TEST_CASE("component resolution") {
    RunConfig cfg;
    CHECK(resolve_components(cfg, 31) == std::vector<std::size_t>{0, 6, 12, 18, 24, 30});
    cfg.components = {13, 25};
    CHECK(resolve_components(cfg, 31) == std::vector<std::size_t>{12, 24});
    cfg.components = {32};
    CHECK_THROWS_AS(resolve_components(cfg, 31), ValidationError);
}

TEST_CASE("full pipeline on a tiny problem produces consistent artifacts") {
    TempDir dir("uqnn_pipeline_test");
    RunConfig cfg = tiny_config(dir.path);

    const std::string data_path = run_generate_data(cfg);
    CHECK(fs::exists(data_path));
    const Dataset ds = load_dataset(data_path);
    CHECK(ds.size() == 800);

    const std::string net_path = run_train(cfg, data_path);
    const FeedForwardNet net = load_network(net_path);
    CHECK(net.depth() == 2);

    const std::string model_path = run_propagate(cfg, net_path);
    const SensitivityModel model = load_sensitivity(model_path);
    CHECK(model.n_y() == 9);
    const MomentSummary moments = load_moments((dir.path / "moments.json").string());
    CHECK(moments.mean == model.center);

    const auto pdf_paths = run_pdf(cfg, model_path);
    REQUIRE(pdf_paths.size() == 3);
    Vector cdf_col;
    const Curve curve = load_curve_csv(pdf_paths[0], &cdf_col);
    CHECK(curve.x.size() == 64);
    CHECK(cdf_col.back() == doctest::Approx(1.0).epsilon(1e-6));

    const std::string copula_path = run_copula(cfg, model_path);
    const CopulaModel copula = load_copula(copula_path);
    CHECK(copula.dim() == 9);

    const std::string samples_path = run_sample(cfg, copula_path);
    const Ensemble draws = load_ensemble_csv(samples_path);
    CHECK(draws.size() == cfg.mc_samples);

    const std::string bounds_path = run_bounds(cfg, net_path);
    const auto bounds_json = nlohmann::json::parse(read_text_file(bounds_path));
    CHECK(bounds_json.at("deterministic_bound").size() == 9);
    CHECK(bounds_json.at("bernstein").size() == cfg.deltas.size());

    const std::string compare_path = run_compare(cfg, net_path);
    const auto compare_json = nlohmann::json::parse(read_text_file(compare_path));
    CHECK(compare_json.at("components").size() == 3);
    for (const auto& row : compare_json.at("components")) {
        CHECK(row.at("l1").get<double>() >= 0.0);
        CHECK(row.at("ks").get<double>() >= 0.0);
    }

    // Manifest lists every artifact exactly once.
    const auto manifest = nlohmann::json::parse(read_text_file((dir.path / "manifest.json").string()));
    std::size_t dataset_entries = 0;
    for (const auto& entry : manifest.at("artifacts"))
        if (entry.at("file") == "dataset.csv") ++dataset_entries;
    CHECK(dataset_entries == 1);
}

TEST_CASE("compare output is byte-identical across reruns") {
    TempDir dir("uqnn_pipeline_det");
    RunConfig cfg = tiny_config(dir.path);
    const std::string data_path = run_generate_data(cfg);
    const std::string net_path = run_train(cfg, data_path);
    run_compare(cfg, net_path);
    const std::string first = read_text_file((dir.path / "compare.json").string());
    run_compare(cfg, net_path);
    const std::string second = read_text_file((dir.path / "compare.json").string());
    CHECK(first == second);
}

TEST_CASE("pdf command emits a point-mass marker at beta = 0") {
    TempDir dir("uqnn_pipeline_pointmass");
    RunConfig cfg = tiny_config(dir.path);
    cfg.beta = 0.0;
    const std::string data_path = run_generate_data(cfg);
    const std::string net_path = run_train(cfg, data_path);
    const std::string model_path = run_propagate(cfg, net_path);
    const auto pdf_paths = run_pdf(cfg, model_path);
    REQUIRE(pdf_paths.size() == 3);
    for (const auto& p : pdf_paths) {
        CHECK(p.find("pointmass") != std::string::npos);
        const auto marker = nlohmann::json::parse(read_text_file(p));
        CHECK(marker.contains("point_mass_at"));
    }
}

TEST_CASE("missing artifact paths raise parse errors with the path") {
    RunConfig cfg;
    cfg.out = (fs::temp_directory_path() / "uqnn_missing").string();
    try {
        run_train(cfg, "/nonexistent/dataset.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/dataset.csv") != std::string::npos);
    }
    fs::remove_all(cfg.out);
}

TEST_CASE("cli binary runs the chain end to end") {
    TempDir dir("uqnn_cli_test");
    const std::string cli = UQNN_CLI_PATH;
    const std::string out_flag = " --out " + dir.path.string();
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + out_flag + " 2>/dev/null >/dev/null";
        return std::system(cmd.c_str());
    };
    CHECK(run("generate-data --operator linear --count 400 --nx 7 --ny 7 --seed 5") == 0);
    CHECK(run("train --layers 1 --width 6 --epochs 2 --batch 64 --seed 5") == 0);
    CHECK(run("propagate --beta 0.2 --mu zeros") == 0);
    CHECK(run("pdf --beta 0.2 --components 1,4") == 0);
    CHECK(run("copula --beta 0.2") == 0);
    CHECK(run("sample -n 500 --seed 9") == 0);
    CHECK(run("bounds --beta 0.2 -n 2000 --mu zeros") == 0);
    CHECK(run("compare --beta 0.2 -n 2000 --mu zeros --components 1,7") == 0);
    CHECK(fs::exists(dir.path / "manifest.json"));
    CHECK(fs::exists(dir.path / "compare.json"));

    // Unknown files exit nonzero.
    const int bad = std::system((cli + " train --data /nope.csv" + out_flag +
                                 " 2>/dev/null >/dev/null")
                                    .c_str());
    CHECK(bad != 0);
}
