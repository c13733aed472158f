#include "uqnn/linearize.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "uqnn/jsonio.hpp"

namespace uqnn {

namespace {

constexpr double kKinkGuard = 1e-12;

Vector slopes_at(const Vector& h, double alpha, bool* kink_seen) {
    Vector d(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (kink_seen && std::fabs(h[i]) < kKinkGuard) *kink_seen = true;
        d[i] = leaky_relu_prime(h[i], alpha);
    }
    return d;
}

Matrix scale_rows(const Vector& d, const Matrix& w) {
    Matrix out = w;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double* row = out.row(i);
        for (std::size_t j = 0; j < w.cols(); ++j) row[j] *= d[i];
    }
    return out;
}

Matrix jacobian_impl(const FeedForwardNet& net, const Vector& mu, bool face_split_form,
                     bool* kink_seen) {
    const ForwardTrace trace = forward_trace(net, mu);
    Matrix chain;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const Vector d = slopes_at(trace.preactivations[l], net.alpha, kink_seen);
        Matrix factor;
        if (face_split_form) {
            // phi'(h) as an N x 1 matrix; its face-splitting product with
            // W_n is exactly diag(phi'(h)) W_n.
            Matrix dcol(d.size(), 1);
            for (std::size_t i = 0; i < d.size(); ++i) dcol(i, 0) = d[i];
            factor = face_split(dcol, net.layers[l].weights);
        } else {
            factor = scale_rows(d, net.layers[l].weights);
        }
        chain = (l == 0) ? std::move(factor) : matmul(factor, chain);
    }
    return chain;
}

} // namespace

Matrix jacobian_chain(const FeedForwardNet& net, const Vector& mu) {
    return jacobian_impl(net, mu, false, nullptr);
}

Matrix jacobian_chain_face_split(const FeedForwardNet& net, const Vector& mu) {
    return jacobian_impl(net, mu, true, nullptr);
}

bool SensitivityModel::uniform_beta() const {
    for (double b : beta)
        if (b != beta.front()) return false;
    return true;
}

SensitivityModel sensitivity(const FeedForwardNet& net, const Vector& mu, double beta_scalar) {
    if (beta_scalar < 0.0) throw ValidationError("sensitivity: beta must be >= 0");
    return sensitivity(net, mu, Vector(net.n_x(), beta_scalar));
}

SensitivityModel sensitivity(const FeedForwardNet& net, const Vector& mu, const Vector& beta) {
    if (mu.size() != net.n_x()) throw DimensionError("sensitivity: mu length mismatch");
    if (beta.size() != net.n_x()) throw DimensionError("sensitivity: beta length mismatch");
    for (double b : beta)
        if (!(b >= 0.0)) throw ValidationError("sensitivity: beta must be >= 0");

    SensitivityModel model;
    model.beta = beta;
    model.arch = net.arch;
    model.center = forward(net, mu); // includes +mu for resnet
    const Matrix chain = jacobian_impl(net, mu, false, &model.kink_flag);
    model.coefficients = matmul(net.output_matrix, chain);
    if (net.arch == Arch::Resnet)
        for (std::size_t j = 0; j < model.coefficients.rows(); ++j)
            model.coefficients(j, j) += 1.0;
    return model;
}

Vector linear_predict(const SensitivityModel& model, const Vector& z) {
    if (z.size() != model.n_x()) throw DimensionError("linear_predict: z length mismatch");
    Vector out = matvec(model.coefficients, z);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += model.center[i];
    return out;
}

void save_sensitivity(const SensitivityModel& model, const std::string& path,
                      const std::string& metadata_json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "{\n  \"m\": ";
    write_json_vector(out, model.center);
    out << ",\n  \"Q\": ";
    write_json_matrix(out, model.coefficients);
    out << ",\n  \"beta\": ";
    if (model.uniform_beta()) out << format_double(model.beta.empty() ? 0.0 : model.beta.front());
    else write_json_vector(out, model.beta);
    out << ",\n  \"architecture_tag\": \"" << to_string(model.arch) << "\",\n  \"flags\": {\"kink\": "
        << (model.kink_flag ? "true" : "false") << "},\n  \"metadata\": " << metadata_json
        << "\n}\n";
}

SensitivityModel load_sensitivity(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const std::exception& e) {
        throw ParseError(path + ": bad JSON: " + e.what());
    }
    SensitivityModel model;
    try {
        model.center = j.at("m").get<Vector>();
        const auto& q = j.at("Q");
        model.coefficients = Matrix(q.size(), q.empty() ? 0 : q.front().size());
        for (std::size_t i = 0; i < q.size(); ++i)
            for (std::size_t k = 0; k < model.coefficients.cols(); ++k)
                model.coefficients(i, k) = q[i][k].get<double>();
        if (j.at("beta").is_number())
            model.beta.assign(model.coefficients.cols(), j.at("beta").get<double>());
        else
            model.beta = j.at("beta").get<Vector>();
        model.arch = parse_arch(j.value("architecture_tag", "mlp"));
        model.kink_flag = j.at("flags").value("kink", false);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (model.center.size() != model.coefficients.rows() ||
        model.beta.size() != model.coefficients.cols())
        throw ParseError(path + ": inconsistent m/Q/beta shapes");
    return model;
}

} // namespace uqnn
