#include "uqnn/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uqnn/error_bounds.hpp"
#include "uqnn/jsonio.hpp"
#include "uqnn/rng.hpp"

namespace fs = std::filesystem;

namespace uqnn {

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) ss << ',';
        ss << v[i];
    }
    return ss.str();
}

std::string join_doubles(const std::vector<double>& v) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) ss << ',';
        ss << format_double(v[i]);
    }
    return ss.str();
}

} // namespace

std::string RunConfig::echo_json() const {
    std::ostringstream ss;
    ss << "{\"operator\": \"" << operator_tag << "\", \"n_x\": " << n_x << ", \"n_y\": " << n_y
       << ", \"layers\": " << layers << ", \"width\": " << width
       << ", \"alpha\": " << format_double(alpha) << ", \"architecture\": \"" << architecture
       << "\", \"epochs\": " << epochs << ", \"batch\": " << batch
       << ", \"learning_rate\": " << format_double(learning_rate) << ", \"samples\": " << samples
       << ", \"amplitude\": " << format_double(amplitude) << ", \"mu\": \"" << mu
       << "\", \"beta\": " << format_double(beta) << ", \"deltas\": [" << join_doubles(deltas)
       << "], \"mc_samples\": " << mc_samples << ", \"seed\": " << seed << ", \"out\": \"" << out
       << "\", \"components\": [" << join_sizes(components) << "], \"resolution\": " << resolution
       << ", \"rng\": \"" << kRngName << "\"}";
    return ss.str();
}

namespace {

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoull(item));
    }
    return out;
}

} // namespace

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);

    std::vector<std::string> problems;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            if (key == "operator") base.operator_tag = value;
            else if (key == "n_x") base.n_x = std::stoull(value);
            else if (key == "n_y") base.n_y = std::stoull(value);
            else if (key == "layers") base.layers = std::stoull(value);
            else if (key == "width") base.width = std::stoull(value);
            else if (key == "alpha") base.alpha = std::stod(value);
            else if (key == "architecture") base.architecture = value;
            else if (key == "epochs") base.epochs = std::stoull(value);
            else if (key == "batch") base.batch = std::stoull(value);
            else if (key == "learning_rate") base.learning_rate = std::stod(value);
            else if (key == "samples") base.samples = std::stoull(value);
            else if (key == "amplitude") base.amplitude = std::stod(value);
            else if (key == "mu") base.mu = value;
            else if (key == "beta") base.beta = std::stod(value);
            else if (key == "deltas") base.deltas = parse_double_list(value);
            else if (key == "mc_samples") base.mc_samples = std::stoull(value);
            else if (key == "seed") base.seed = std::stoull(value);
            else if (key == "out") base.out = value;
            else if (key == "components") base.components = parse_size_list(value);
            else if (key == "resolution") base.resolution = std::stoull(value);
            else problems.push_back("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        } catch (const std::exception&) {
            problems.push_back("line " + std::to_string(line_no) + ": bad value for '" + key +
                               "': '" + value + "'");
        }
    }

    // Semantic checks, reported together.
    if (base.operator_tag != "linear" && base.operator_tag != "nonlinear")
        problems.push_back("operator: must be linear or nonlinear, got '" + base.operator_tag + "'");
    if (base.architecture != "mlp" && base.architecture != "resnet")
        problems.push_back("architecture: must be mlp or resnet, got '" + base.architecture + "'");
    if (!(base.alpha > 0.0 && base.alpha < 1.0)) problems.push_back("alpha: must lie in (0,1)");
    if (base.beta < 0.0) problems.push_back("beta: must be >= 0");
    if (base.n_x < 2 || base.n_y < 2) problems.push_back("n_x/n_y: must be >= 2");
    for (double d : base.deltas)
        if (!(d > 0.0 && d < 1.0)) problems.push_back("deltas: entries must lie in (0,1)");

    if (!problems.empty()) {
        std::string msg = "config " + path + " has " + std::to_string(problems.size()) +
                          " invalid field(s):";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ValidationError(msg);
    }
    return base;
}

Vector resolve_mu(const RunConfig& cfg) {
    if (cfg.mu == "zeros") return Vector(cfg.n_x, 0.0);
    if (cfg.mu.rfind("sample:", 0) == 0) {
        const std::uint64_t mu_seed = std::stoull(cfg.mu.substr(7));
        const CounterRng rng(mu_seed);
        Vector mu(cfg.n_x);
        for (std::size_t i = 0; i < cfg.n_x; ++i) mu[i] = cfg.amplitude * rng.normal(i);
        return mu;
    }
    // Otherwise a CSV file with a single row.
    const std::string text = read_text_file(cfg.mu);
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty() && line[0] != '#') break;
    Vector mu = parse_csv_row(line, 1);
    if (mu.size() != cfg.n_x)
        throw ValidationError("mu file " + cfg.mu + ": expected " + std::to_string(cfg.n_x) +
                              " entries, got " + std::to_string(mu.size()));
    return mu;
}

std::vector<std::size_t> resolve_components(const RunConfig& cfg, std::size_t n_y) {
    std::vector<std::size_t> comps;
    if (cfg.components.empty()) {
        // Six components spread across the grid.
        const std::size_t count = std::min<std::size_t>(6, n_y);
        for (std::size_t i = 0; i < count; ++i)
            comps.push_back(i * (n_y - 1) / (count > 1 ? count - 1 : 1));
    } else {
        for (std::size_t c : cfg.components) {
            if (c < 1 || c > n_y)
                throw ValidationError("components: g_" + std::to_string(c) +
                                      " out of range 1.." + std::to_string(n_y));
            comps.push_back(c - 1);
        }
    }
    return comps;
}

namespace {

std::string out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out);
    return (fs::path(cfg.out) / name).string();
}

void record_artifact(const RunConfig& cfg, const std::string& command,
                     const std::vector<std::string>& files) {
    const std::string manifest_path = out_path(cfg, "manifest.json");
    nlohmann::json manifest;
    if (fs::exists(manifest_path)) {
        try {
            manifest = nlohmann::json::parse(read_text_file(manifest_path));
        } catch (const std::exception&) {
            manifest = nlohmann::json::object();
        }
    }
    if (!manifest.contains("artifacts")) manifest["artifacts"] = nlohmann::json::array();
    for (const auto& f : files) {
        nlohmann::json entry;
        entry["command"] = command;
        entry["file"] = fs::path(f).filename().string();
        // Replace a stale entry for the same file.
        auto& arr = manifest["artifacts"];
        arr.erase(std::remove_if(arr.begin(), arr.end(),
                                 [&](const nlohmann::json& e) {
                                     return e.value("file", "") == entry["file"];
                                 }),
                  arr.end());
        arr.push_back(entry);
    }
    std::ofstream out(manifest_path, std::ios::binary);
    out << manifest.dump(2) << '\n';
}

std::string meta_json(const RunConfig& cfg, const std::string& command) {
    return "{\"command\": \"" + command + "\", \"config\": " + cfg.echo_json() + "}";
}

GllGrid grid_for(const RunConfig& cfg) { return gll_grid(cfg.n_x); }

Vector y_nodes_for(const RunConfig& cfg) {
    return cfg.n_y == cfg.n_x ? gll_grid(cfg.n_x).nodes : gll_grid(cfg.n_y).nodes;
}

} // namespace

std::string run_generate_data(const RunConfig& cfg) {
    const GllGrid grid = grid_for(cfg);
    const Vector y_nodes = y_nodes_for(cfg);
    const Dataset ds = generate_dataset(cfg.samples, parse_operator_tag(cfg.operator_tag), grid,
                                        y_nodes, cfg.seed, cfg.amplitude);
    const std::string path = out_path(cfg, "dataset.csv");
    save_dataset(ds, path);
    record_artifact(cfg, "generate-data", {path});
    return path;
}

std::string run_train(const RunConfig& cfg, const std::string& dataset_path) {
    const Dataset ds = load_dataset(dataset_path);
    TrainConfig tc;
    tc.layers = cfg.layers;
    tc.width = cfg.width;
    tc.epochs = cfg.epochs;
    tc.batch = cfg.batch;
    tc.learning_rate = cfg.learning_rate;
    tc.alpha = cfg.alpha;
    tc.arch = parse_arch(cfg.architecture);
    tc.seed = cfg.seed;
    const TrainResult result = train_adam(ds, tc);

    std::ostringstream meta;
    meta << "{\"command\": \"train\", \"config\": " << cfg.echo_json()
         << ", \"train\": {\"split\": \"90/10\", \"stopping\": \"fixed-epochs\", "
            "\"final_loss\": " << format_double(result.epoch_loss.back())
         << ", \"first_loss\": " << format_double(result.epoch_loss.front())
         << ", \"validation_rmse\": " << format_double(result.validation_rmse) << "}}";
    const std::string path = out_path(cfg, "net.json");
    save_network(result.net, path, meta.str());
    record_artifact(cfg, "train", {path});
    return path;
}

std::string run_propagate(const RunConfig& cfg_in, const std::string& net_path) {
    const FeedForwardNet net = load_network(net_path);
    RunConfig cfg = cfg_in;
    cfg.n_x = net.n_x();
    cfg.n_y = net.n_y();
    const Vector mu = resolve_mu(cfg);
    const SensitivityModel model = sensitivity(net, mu, cfg.beta);
    const std::string path = out_path(cfg, "sensitivity.json");
    save_sensitivity(model, path, meta_json(cfg, "propagate"));
    const MomentSummary moments = analytic_moments(model);
    const std::string moments_path = out_path(cfg, "moments.json");
    save_moments(moments, moments_path, meta_json(cfg, "propagate"));
    record_artifact(cfg, "propagate", {path, moments_path});
    return path;
}

std::vector<std::string> run_pdf(const RunConfig& cfg, const std::string& sensitivity_path) {
    const SensitivityModel model = load_sensitivity(sensitivity_path);
    const auto comps = resolve_components(cfg, model.n_y());
    std::vector<std::string> written;
    for (std::size_t j : comps) {
        const MarginalLaw law = make_marginal(model, j);
        const std::string tag = "g" + std::to_string(j + 1);
        if (law.degenerate()) {
            // Point mass: no density curve exists; emit a marker artifact.
            const std::string path = out_path(cfg, "pdf_" + tag + "_pointmass.json");
            std::ofstream out(path, std::ios::binary);
            out << "{\"component\": " << (j + 1)
                << ", \"point_mass_at\": " << format_double(law.center())
                << ", \"metadata\": " << meta_json(cfg, "pdf") << "}\n";
            written.push_back(path);
            continue;
        }
        const std::size_t res = std::max<std::size_t>(cfg.resolution, 2);
        Curve curve;
        curve.x.resize(res);
        curve.y.resize(res);
        Vector cdf_vals(res);
        const double lo = law.center() - law.support_radius();
        const double step = 2.0 * law.support_radius() / static_cast<double>(res - 1);
        for (std::size_t i = 0; i < res; ++i) curve.x[i] = lo + step * static_cast<double>(i);
#pragma omp parallel for schedule(dynamic, 8)
        for (long long i = 0; i < static_cast<long long>(res); ++i) {
            curve.y[i] = law.pdf(curve.x[i]);
            cdf_vals[i] = law.cdf(curve.x[i]);
        }
        const std::string path = out_path(cfg, "pdf_" + tag + ".csv");
        save_curve_csv(curve, cdf_vals, path,
                       "# component = " + std::to_string(j + 1) + "\n# metadata = " +
                           meta_json(cfg, "pdf"));
        written.push_back(path);
    }
    record_artifact(cfg, "pdf", written);
    return written;
}

std::string run_copula(const RunConfig& cfg, const std::string& sensitivity_path) {
    const SensitivityModel model = load_sensitivity(sensitivity_path);
    const CopulaModel copula = build_copula(model);
    const std::string path = out_path(cfg, "copula.json");
    save_copula(copula, path, meta_json(cfg, "copula"));
    record_artifact(cfg, "copula", {path});
    return path;
}

std::string run_sample(const RunConfig& cfg, const std::string& copula_path) {
    const CopulaModel copula = load_copula(copula_path);
    const Matrix draws = sample(copula, cfg.mc_samples, cfg.seed);
    const std::string path = out_path(cfg, "samples.csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "# command = sample\n# seed = " << cfg.seed << "\n# rng = " << kRngName << "\n";
    for (std::size_t k = 0; k < draws.rows(); ++k) write_csv_row(out, draws.row_vector(k));
    record_artifact(cfg, "sample", {path});
    return path;
}

std::string run_bounds(const RunConfig& cfg_in, const std::string& net_path) {
    const FeedForwardNet net = load_network(net_path);
    RunConfig cfg = cfg_in;
    cfg.n_x = net.n_x();
    cfg.n_y = net.n_y();
    const Vector mu = resolve_mu(cfg);
    const std::size_t n_y = net.n_y();
    const std::size_t n_x = net.n_x();

    Vector det_bound(n_y);
    for (std::size_t i = 0; i < n_y; ++i) det_bound[i] = deterministic_bound(net, mu, cfg.beta, i);

    // Empirical coverage of the ||z||^2 threshold.
    const Matrix z = sample_perturbations(n_x, cfg.beta, cfg.mc_samples, cfg.seed);
    std::ostringstream bern;
    bern << '[';
    for (std::size_t d = 0; d < cfg.deltas.size(); ++d) {
        const double delta = cfg.deltas[d];
        const double threshold = bernstein_z2_threshold(n_x, cfg.beta, delta);
        std::size_t exceed = 0;
        for (std::size_t k = 0; k < z.rows(); ++k) {
            double norm_sq = 0.0;
            const double* row = z.row(k);
            for (std::size_t i = 0; i < n_x; ++i) norm_sq += row[i] * row[i];
            if (norm_sq > threshold) ++exceed;
        }
        Vector prob_bound(n_y);
        for (std::size_t i = 0; i < n_y; ++i) {
            const double k_coeff =
                det_bound[i] / (std::sqrt(static_cast<double>(n_x)) * std::max(cfg.beta, 1e-300));
            prob_bound[i] = bernstein_bound(n_x, cfg.beta, delta, k_coeff);
        }
        if (d) bern << ',';
        bern << "{\"delta\": " << format_double(delta)
             << ", \"z2_threshold\": " << format_double(threshold)
             << ", \"empirical_exceed_fraction\": "
             << format_double(static_cast<double>(exceed) / static_cast<double>(z.rows()))
             << ", \"error_bound\": ";
        std::ostringstream tmp;
        write_json_vector(tmp, prob_bound);
        bern << tmp.str() << '}';
    }
    bern << ']';

    const std::string path = out_path(cfg, "bounds.json");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "{\n  \"beta\": " << format_double(cfg.beta) << ",\n  \"deterministic_bound\": ";
    write_json_vector(out, det_bound);
    out << ",\n  \"bernstein\": " << bern.str() << ",\n  \"metadata\": "
        << meta_json(cfg, "bounds") << "\n}\n";
    record_artifact(cfg, "bounds", {path});
    return path;
}

std::string run_compare(const RunConfig& cfg_in, const std::string& net_path) {
    const FeedForwardNet net = load_network(net_path);
    RunConfig cfg = cfg_in;
    cfg.n_x = net.n_x();
    cfg.n_y = net.n_y();
    const Vector mu = resolve_mu(cfg);
    const SensitivityModel model = sensitivity(net, mu, cfg.beta);
    const MomentSummary analytic = analytic_moments(model);

    const Matrix z = sample_perturbations(net.n_x(), cfg.beta, cfg.mc_samples, cfg.seed);
    const Ensemble ens = push_forward(net, mu, z);
    const MomentSummary empirical = empirical_moments(ens.samples);

    const auto comps = resolve_components(cfg, net.n_y());
    std::ostringstream rows;
    rows << '[';
    for (std::size_t c = 0; c < comps.size(); ++c) {
        const std::size_t j = comps[c];
        const MarginalLaw law = make_marginal(model, j);
        const Vector column = [&] {
            Vector col(ens.size());
            for (std::size_t k = 0; k < ens.size(); ++k) col[k] = ens.samples(k, j);
            return col;
        }();

        double l1 = -1.0, ks = -1.0;
        if (!law.degenerate()) {
            const Curve hist = histogram_pdf(column);
            Curve analytic_curve;
            analytic_curve.x = hist.x;
            analytic_curve.y.resize(hist.x.size());
            for (std::size_t i = 0; i < hist.x.size(); ++i)
                analytic_curve.y[i] = law.pdf(hist.x[i]);
            l1 = l1_distance(analytic_curve, hist);
            ks = ks_statistic(column, [&](double g) { return law.cdf(g); });
        }

        // Standard errors of the MC mean and variance estimates.
        const double var = empirical.covariance(j, j);
        double m4 = 0.0;
        for (std::size_t k = 0; k < ens.size(); ++k) {
            const double d = column[k] - empirical.mean[j];
            m4 += d * d * d * d;
        }
        m4 /= static_cast<double>(ens.size());
        const double se_mean = std::sqrt(var / static_cast<double>(ens.size()));
        const double se_var =
            std::sqrt(std::max(m4 - var * var, 0.0) / static_cast<double>(ens.size()));

        if (c) rows << ',';
        rows << "{\"component\": " << (j + 1) << ", \"l1\": " << format_double(l1)
             << ", \"ks\": " << format_double(ks)
             << ", \"mean_analytic\": " << format_double(analytic.mean[j])
             << ", \"mean_mc\": " << format_double(empirical.mean[j])
             << ", \"mean_se\": " << format_double(se_mean)
             << ", \"var_analytic\": " << format_double(analytic.covariance(j, j))
             << ", \"var_mc\": " << format_double(var)
             << ", \"var_se\": " << format_double(se_var) << '}';
    }
    rows << ']';

    double corr_delta = 0.0;
    for (std::size_t i = 0; i < net.n_y(); ++i)
        for (std::size_t j = 0; j < net.n_y(); ++j)
            corr_delta = std::max(corr_delta, std::fabs(analytic.correlation(i, j) -
                                                        empirical.correlation(i, j)));

    const std::string path = out_path(cfg, "compare.json");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "{\n  \"beta\": " << format_double(cfg.beta) << ",\n  \"mc_samples\": "
        << cfg.mc_samples << ",\n  \"net_fingerprint\": \"" << ens.net_fingerprint
        << "\",\n  \"components\": " << rows.str()
        << ",\n  \"correlation_max_abs_delta\": " << format_double(corr_delta)
        << ",\n  \"metadata\": " << meta_json(cfg, "compare") << "\n}\n";
    record_artifact(cfg, "compare", {path});
    return path;
}

void save_moments(const MomentSummary& moments, const std::string& path,
                  const std::string& metadata_json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "{\n  \"mean\": ";
    write_json_vector(out, moments.mean);
    out << ",\n  \"covariance\": ";
    write_json_matrix(out, moments.covariance);
    out << ",\n  \"correlation\": ";
    write_json_matrix(out, moments.correlation);
    out << ",\n  \"metadata\": " << metadata_json << "\n}\n";
}

MomentSummary load_moments(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const std::exception& e) {
        throw ParseError(path + ": bad JSON: " + e.what());
    }
    MomentSummary out;
    try {
        out.mean = j.at("mean").get<Vector>();
        const auto read_matrix = [&](const char* key) {
            const auto& arr = j.at(key);
            Matrix m(arr.size(), arr.empty() ? 0 : arr.front().size());
            for (std::size_t r = 0; r < arr.size(); ++r)
                for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = arr[r][c].get<double>();
            return m;
        };
        out.covariance = read_matrix("covariance");
        out.correlation = read_matrix("correlation");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return out;
}

void save_curve_csv(const Curve& pdf_curve, const Vector& cdf_values, const std::string& path,
                    const std::string& metadata_header) {
    if (pdf_curve.x.size() != pdf_curve.y.size() ||
        (!cdf_values.empty() && cdf_values.size() != pdf_curve.x.size()))
        throw DimensionError("save_curve_csv: column length mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    if (!metadata_header.empty()) out << metadata_header << '\n';
    out << "g,pdf,cdf\n";
    for (std::size_t i = 0; i < pdf_curve.x.size(); ++i) {
        out << format_double(pdf_curve.x[i]) << ',' << format_double(pdf_curve.y[i]) << ','
            << format_double(cdf_values.empty() ? 0.0 : cdf_values[i]) << '\n';
    }
}

Curve load_curve_csv(const std::string& path, Vector* cdf_values) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    Curve curve;
    if (cdf_values) cdf_values->clear();
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true; // skip the g,pdf,cdf header
            continue;
        }
        const Vector row = parse_csv_row(line, line_no);
        if (row.size() != 3)
            throw ParseError(path + " line " + std::to_string(line_no) +
                             ": expected 3 columns, got " + std::to_string(row.size()));
        curve.x.push_back(row[0]);
        curve.y.push_back(row[1]);
        if (cdf_values) cdf_values->push_back(row[2]);
    }
    if (curve.x.empty()) throw ParseError(path + ": no data rows");
    return curve;
}

} // namespace uqnn
