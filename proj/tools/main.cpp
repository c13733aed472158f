#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "uqnn/pipeline.hpp"

namespace {

std::string default_artifact(const uqnn::RunConfig& cfg, const char* name) {
    return (std::filesystem::path(cfg.out) / name).string();
}

} // namespace

int main(int argc, char** argv) {
    // The config file, when given, seeds the defaults; explicit flags
    // override its values.
    uqnn::RunConfig cfg;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                cfg = uqnn::load_config(argv[i + 1]);
            } catch (const uqnn::Error& e) {
                std::fprintf(stderr, "error: %s\n", e.what());
                return 1;
            }
        }
    }

    CLI::App app{"Uncertainty propagation for leaky-ReLU operator networks"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "Key = value config file");

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", cfg.seed, "RNG seed");
        cmd->add_option("--out", cfg.out, "Output directory");
        cmd->add_option("--beta", cfg.beta, "Perturbation amplitude");
        cmd->add_option("--mu", cfg.mu, "Mean input: zeros | sample:<seed> | csv path");
        cmd->add_option("--components", cfg.components, "1-based output components")
            ->delimiter(',');
    };

    auto* gen = app.add_subcommand("generate-data", "Sample operator input-output pairs");
    gen->add_option("--operator", cfg.operator_tag, "linear | nonlinear");
    gen->add_option("--count", cfg.samples, "Number of samples");
    gen->add_option("--nx", cfg.n_x, "Input grid size");
    gen->add_option("--ny", cfg.n_y, "Output grid size");
    gen->add_option("--amplitude", cfg.amplitude, "Input sampler std dev");
    add_common(gen);

    std::string data_path, net_path, model_path, copula_path;

    auto* train = app.add_subcommand("train", "Fit a net to a dataset with ADAM");
    train->add_option("--data", data_path, "Dataset file (default <out>/dataset.csv)");
    train->add_option("--layers", cfg.layers, "Hidden layers");
    train->add_option("--width", cfg.width, "Neurons per layer");
    train->add_option("--epochs", cfg.epochs, "Training epochs");
    train->add_option("--batch", cfg.batch, "Minibatch size");
    train->add_option("--lr", cfg.learning_rate, "Learning rate");
    train->add_option("--alpha", cfg.alpha, "Leak slope");
    train->add_option("--architecture", cfg.architecture, "mlp | resnet");
    add_common(train);

    auto* prop = app.add_subcommand("propagate", "Linearize and export moments");
    prop->add_option("--net", net_path, "Weight file (default <out>/net.json)");
    add_common(prop);

    auto* pdf = app.add_subcommand("pdf", "Export marginal PDF/CDF curves");
    pdf->add_option("--model", model_path, "Sensitivity file (default <out>/sensitivity.json)");
    pdf->add_option("--resolution", cfg.resolution, "Curve points");
    add_common(pdf);

    auto* cop = app.add_subcommand("copula", "Fit the Gaussian copula surrogate");
    cop->add_option("--model", model_path, "Sensitivity file (default <out>/sensitivity.json)");
    add_common(cop);

    auto* smp = app.add_subcommand("sample", "Draw joint samples from a copula");
    smp->add_option("--copula", copula_path, "Copula file (default <out>/copula.json)");
    smp->add_option("-n,--count", cfg.mc_samples, "Number of draws");
    add_common(smp);

    auto* bnd = app.add_subcommand("bounds", "Deterministic and Bernstein error bounds");
    bnd->add_option("--net", net_path, "Weight file (default <out>/net.json)");
    bnd->add_option("--deltas", cfg.deltas, "Failure probabilities")->delimiter(',');
    bnd->add_option("-n,--count", cfg.mc_samples, "Coverage-check draws");
    add_common(bnd);

    auto* cmp = app.add_subcommand("compare", "Analytic-vs-Monte-Carlo report");
    cmp->add_option("--net", net_path, "Weight file (default <out>/net.json)");
    cmp->add_option("-n,--count", cfg.mc_samples, "Monte Carlo draws");
    add_common(cmp);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            std::printf("wrote %s\n", uqnn::run_generate_data(cfg).c_str());
        } else if (train->parsed()) {
            if (data_path.empty()) data_path = default_artifact(cfg, "dataset.csv");
            std::printf("wrote %s\n", uqnn::run_train(cfg, data_path).c_str());
        } else if (prop->parsed()) {
            if (net_path.empty()) net_path = default_artifact(cfg, "net.json");
            std::printf("wrote %s\n", uqnn::run_propagate(cfg, net_path).c_str());
        } else if (pdf->parsed()) {
            if (model_path.empty()) model_path = default_artifact(cfg, "sensitivity.json");
            for (const auto& p : uqnn::run_pdf(cfg, model_path))
                std::printf("wrote %s\n", p.c_str());
        } else if (cop->parsed()) {
            if (model_path.empty()) model_path = default_artifact(cfg, "sensitivity.json");
            std::printf("wrote %s\n", uqnn::run_copula(cfg, model_path).c_str());
        } else if (smp->parsed()) {
            if (copula_path.empty()) copula_path = default_artifact(cfg, "copula.json");
            std::printf("wrote %s\n", uqnn::run_sample(cfg, copula_path).c_str());
        } else if (bnd->parsed()) {
            if (net_path.empty()) net_path = default_artifact(cfg, "net.json");
            std::printf("wrote %s\n", uqnn::run_bounds(cfg, net_path).c_str());
        } else if (cmp->parsed()) {
            if (net_path.empty()) net_path = default_artifact(cfg, "net.json");
            std::printf("wrote %s\n", uqnn::run_compare(cfg, net_path).c_str());
        }
    } catch (const uqnn::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
    return 0;
}
