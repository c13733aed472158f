#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uqnn/copula.hpp"
#include "uqnn/mc.hpp"

namespace uqnn {

/// Perturbation amplitudes used throughout the experiments.
inline const std::vector<double> kBetaSweep = {0.1, 0.5, 1.0, 1.5, 2.0, 3.0};

/// Flat, typed run configuration. Parsed from a key = value file; command
/// line flags override file values. Echoed into every output artifact.
struct RunConfig {
    std::string operator_tag = "linear";
    std::size_t n_x = 31;
    std::size_t n_y = 31;
    std::size_t layers = 3;
    std::size_t width = 32;
    double alpha = 0.01;
    std::string architecture = "mlp";
    std::size_t epochs = 100;
    std::size_t batch = 256;
    double learning_rate = 3e-3;
    std::size_t samples = 50000;   // dataset size
    double amplitude = 1.0;        // training input std dev
    std::string mu = "sample:7";   // "zeros" | "sample:<seed>" | csv path
    double beta = 0.1;
    std::vector<double> deltas = {0.5, 0.1, 0.01};
    std::size_t mc_samples = 100000;
    std::uint64_t seed = 1234;
    std::string out = "run";
    std::vector<std::size_t> components; // 1-based; empty = spread over the grid
    std::size_t resolution = 512;        // pdf curve points

    /// Config echo as a JSON object (no trailing newline).
    std::string echo_json() const;
};

/// Parse a flat key = value config file. Collects every offending field
/// into a single ValidationError message.
RunConfig load_config(const std::string& path, RunConfig base = RunConfig());

/// Resolve the mu specification to a vector of length n_x.
Vector resolve_mu(const RunConfig& cfg);

/// Components to report on: the configured 1-based list converted to
/// 0-based, or six components spread across the output grid.
std::vector<std::size_t> resolve_components(const RunConfig& cfg, std::size_t n_y);

// Command runners. Each writes metadata-stamped artifacts into cfg.out,
// records them in manifest.json, and returns the primary artifact path.
std::string run_generate_data(const RunConfig& cfg);
std::string run_train(const RunConfig& cfg, const std::string& dataset_path);
std::string run_propagate(const RunConfig& cfg, const std::string& net_path);
std::vector<std::string> run_pdf(const RunConfig& cfg, const std::string& sensitivity_path);
std::string run_copula(const RunConfig& cfg, const std::string& sensitivity_path);
std::string run_sample(const RunConfig& cfg, const std::string& copula_path);
std::string run_bounds(const RunConfig& cfg, const std::string& net_path);
std::string run_compare(const RunConfig& cfg, const std::string& net_path);

// Artifact helpers shared by runners and tests.
void save_moments(const MomentSummary& moments, const std::string& path,
                  const std::string& metadata_json = "{}");
MomentSummary load_moments(const std::string& path);

void save_curve_csv(const Curve& pdf_curve, const Vector& cdf_values, const std::string& path,
                    const std::string& metadata_header = "");
Curve load_curve_csv(const std::string& path, Vector* cdf_values = nullptr);

} // namespace uqnn
