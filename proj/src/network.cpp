#include "uqnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "uqnn/jsonio.hpp"
#include "uqnn/rng.hpp"

namespace uqnn {

const char* to_string(Arch arch) { return arch == Arch::Mlp ? "mlp" : "resnet"; }

Arch parse_arch(const std::string& s) {
    if (s == "mlp") return Arch::Mlp;
    if (s == "resnet") return Arch::Resnet;
    throw ValidationError("unknown architecture tag: '" + s + "'");
}

void FeedForwardNet::validate() const {
    if (layers.empty()) throw ValidationError("net: no layers");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("net: alpha must lie in (0,1), got " + std::to_string(alpha));
    const std::size_t n = layers.front().weights.rows();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& lay = layers[l];
        if (lay.weights.rows() != n)
            throw DimensionError("net: layer " + std::to_string(l) + " width mismatch");
        if (l > 0 && lay.weights.cols() != n)
            throw DimensionError("net: layer " + std::to_string(l) + " input width mismatch");
        if (lay.bias.size() != n)
            throw DimensionError("net: layer " + std::to_string(l) + " bias length mismatch");
    }
    if (output_matrix.cols() != n) throw DimensionError("net: output matrix column mismatch");
    if (arch == Arch::Resnet && output_matrix.rows() != layers.front().weights.cols())
        throw DimensionError("net: resnet requires n_y == n_x for the skip connection");
    for (const auto& lay : layers) {
        for (std::size_t i = 0; i < lay.weights.rows() * lay.weights.cols(); ++i)
            if (!std::isfinite(lay.weights.data()[i]))
                throw ValidationError("net: non-finite weight");
        for (double b : lay.bias)
            if (!std::isfinite(b)) throw ValidationError("net: non-finite bias");
    }
}

Vector forward(const FeedForwardNet& net, const Vector& f) {
    if (f.size() != net.n_x())
        throw DimensionError("forward: input length " + std::to_string(f.size()) + " vs n_x " +
                             std::to_string(net.n_x()));
    Vector state = f;
    for (const auto& layer : net.layers) {
        Vector h = matvec(layer.weights, state);
        for (std::size_t i = 0; i < h.size(); ++i) {
            h[i] += layer.bias[i];
            h[i] = leaky_relu(h[i], net.alpha);
        }
        state = std::move(h);
    }
    Vector g = matvec(net.output_matrix, state);
    if (net.arch == Arch::Resnet)
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += f[i];
    return g;
}

ForwardTrace forward_trace(const FeedForwardNet& net, const Vector& f) {
    if (f.size() != net.n_x())
        throw DimensionError("forward_trace: input length mismatch");
    ForwardTrace trace;
    trace.preactivations.reserve(net.depth());
    trace.activations.reserve(net.depth());
    const Vector* state = &f;
    for (const auto& layer : net.layers) {
        Vector h = matvec(layer.weights, *state);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] += layer.bias[i];
        Vector r(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) r[i] = leaky_relu(h[i], net.alpha);
        trace.preactivations.push_back(std::move(h));
        trace.activations.push_back(std::move(r));
        state = &trace.activations.back();
    }
    trace.output = matvec(net.output_matrix, *state);
    if (net.arch == Arch::Resnet)
        for (std::size_t i = 0; i < trace.output.size(); ++i) trace.output[i] += f[i];
    return trace;
}

FeedForwardNet init_net(std::size_t n_x, std::size_t n_y, std::size_t width, std::size_t depth,
                        double alpha, Arch arch, std::uint64_t seed) {
    if (depth < 1 || width < 1 || n_x < 1 || n_y < 1)
        throw ValidationError("init_net: all dimensions must be positive");
    FeedForwardNet net;
    net.alpha = alpha;
    net.arch = arch;
    std::uint64_t counter = 0;
    const CounterRng rng(seed, 0x11);
    auto fill = [&](Matrix& m, std::size_t fan_in) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < m.rows() * m.cols(); ++i)
            m.data()[i] = rng.uniform_sym(counter++, limit);
    };
    for (std::size_t l = 0; l < depth; ++l) {
        DenseLayer layer;
        layer.weights = Matrix(width, l == 0 ? n_x : width);
        fill(layer.weights, layer.weights.cols());
        layer.bias.assign(width, 0.0);
        net.layers.push_back(std::move(layer));
    }
    net.output_matrix = Matrix(n_y, width);
    fill(net.output_matrix, width);
    net.validate();
    return net;
}

namespace {

std::size_t param_count(const FeedForwardNet& net) {
    std::size_t count = 0;
    for (const auto& layer : net.layers)
        count += layer.weights.rows() * layer.weights.cols() + layer.bias.size();
    return count + net.output_matrix.rows() * net.output_matrix.cols();
}

// Per-sample squared-error loss and gradient accumulation (flattened in
// layer order: W1,b1,...,WL,bL,A). Loss is ||g - t||^2 / n_y.
double accumulate_sample_gradient(const FeedForwardNet& net, const Vector& input,
                                  const Vector& target, Vector& grad) {
    const ForwardTrace trace = forward_trace(net, input);
    const std::size_t n_y = net.n_y();
    Vector dg(n_y);
    double loss = 0.0;
    for (std::size_t i = 0; i < n_y; ++i) {
        const double diff = trace.output[i] - target[i];
        loss += diff * diff;
        dg[i] = 2.0 * diff / static_cast<double>(n_y);
    }
    loss /= static_cast<double>(n_y);

    // Offset of A inside the flat gradient vector.
    std::size_t a_off = 0;
    for (const auto& layer : net.layers)
        a_off += layer.weights.rows() * layer.weights.cols() + layer.bias.size();

    const std::size_t depth = net.depth();
    const Vector& r_last = trace.activations[depth - 1];
    const std::size_t width = r_last.size();
    for (std::size_t i = 0; i < n_y; ++i) {
        double* row = grad.data() + a_off + i * width;
        for (std::size_t j = 0; j < width; ++j) row[j] += dg[i] * r_last[j];
    }

    // d(loss)/d(r_L)
    Vector dr(width, 0.0);
    for (std::size_t i = 0; i < n_y; ++i)
        for (std::size_t j = 0; j < width; ++j) dr[j] += net.output_matrix(i, j) * dg[i];

    for (std::size_t l = depth; l-- > 0;) {
        const auto& layer = net.layers[l];
        const Vector& h = trace.preactivations[l];
        Vector dh(h.size());
        for (std::size_t i = 0; i < h.size(); ++i)
            dh[i] = dr[i] * leaky_relu_prime(h[i], net.alpha);

        std::size_t off = 0;
        for (std::size_t k = 0; k < l; ++k)
            off += net.layers[k].weights.rows() * net.layers[k].weights.cols() +
                   net.layers[k].bias.size();

        const Vector& below = (l == 0) ? input : trace.activations[l - 1];
        const std::size_t in_dim = below.size();
        for (std::size_t i = 0; i < dh.size(); ++i) {
            double* row = grad.data() + off + i * in_dim;
            for (std::size_t j = 0; j < in_dim; ++j) row[j] += dh[i] * below[j];
        }
        double* bias_grad = grad.data() + off + dh.size() * in_dim;
        for (std::size_t i = 0; i < dh.size(); ++i) bias_grad[i] += dh[i];

        if (l > 0) {
            Vector dr_below(in_dim, 0.0);
            for (std::size_t i = 0; i < dh.size(); ++i) {
                const double* wrow = layer.weights.row(i);
                for (std::size_t j = 0; j < in_dim; ++j) dr_below[j] += wrow[j] * dh[i];
            }
            dr = std::move(dr_below);
        }
    }
    return loss;
}

constexpr std::size_t kGradChunk = 64;

struct GradLoss {
    Vector grad;
    double loss = 0.0;
};

// Chunked batch gradient. Chunk sums are accumulated serially inside each
// chunk and merged in chunk order, so the result does not depend on the
// number of threads.
GradLoss batch_gradient_impl(const FeedForwardNet& net, const Dataset& data,
                             const std::vector<std::size_t>& batch, bool parallel) {
    const std::size_t n_params = param_count(net);
    const std::size_t n_chunks = (batch.size() + kGradChunk - 1) / kGradChunk;
    std::vector<Vector> chunk_grads(n_chunks);
    Vector chunk_loss(n_chunks, 0.0);

#pragma omp parallel for schedule(static) if (parallel)
    for (long long c = 0; c < static_cast<long long>(n_chunks); ++c) {
        Vector grad(n_params, 0.0);
        double loss = 0.0;
        const std::size_t begin = static_cast<std::size_t>(c) * kGradChunk;
        const std::size_t end = std::min(begin + kGradChunk, batch.size());
        for (std::size_t k = begin; k < end; ++k)
            loss += accumulate_sample_gradient(net, data.inputs[batch[k]],
                                               data.outputs[batch[k]], grad);
        chunk_grads[c] = std::move(grad);
        chunk_loss[c] = loss;
    }

    GradLoss out;
    out.grad.assign(n_params, 0.0);
    for (std::size_t c = 0; c < n_chunks; ++c) {
        for (std::size_t i = 0; i < n_params; ++i) out.grad[i] += chunk_grads[c][i];
        out.loss += chunk_loss[c];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& g : out.grad) g *= inv;
    out.loss *= inv;
    return out;
}

void apply_flat_update(FeedForwardNet& net, const Vector& step) {
    std::size_t off = 0;
    for (auto& layer : net.layers) {
        double* w = layer.weights.data();
        const std::size_t wn = layer.weights.rows() * layer.weights.cols();
        for (std::size_t i = 0; i < wn; ++i) w[i] += step[off + i];
        off += wn;
        for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] += step[off + i];
        off += layer.bias.size();
    }
    double* a = net.output_matrix.data();
    const std::size_t an = net.output_matrix.rows() * net.output_matrix.cols();
    for (std::size_t i = 0; i < an; ++i) a[i] += step[off + i];
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed,
                                          std::uint64_t stream) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const CounterRng rng(seed, stream);
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.bits(i) % i]);
    return idx;
}

} // namespace

Vector batch_gradient(const FeedForwardNet& net, const Dataset& data,
                      const std::vector<std::size_t>& batch_indices) {
    return batch_gradient_impl(net, data, batch_indices, true).grad;
}

Vector batch_gradient_serial(const FeedForwardNet& net, const Dataset& data,
                             const std::vector<std::size_t>& batch_indices) {
    return batch_gradient_impl(net, data, batch_indices, false).grad;
}

TrainResult train_adam(const Dataset& data, const TrainConfig& config) {
    if (data.size() == 0) throw ValidationError("train_adam: empty dataset");
    if (config.epochs < 1 || config.batch < 1 || config.learning_rate <= 0.0)
        throw ValidationError("train_adam: epochs, batch, and learning rate must be positive");

    TrainResult result;
    result.net = init_net(data.n_x, data.n_y, config.width, config.layers, config.alpha,
                          config.arch, config.seed);

    // Deterministic 90/10-style split: shuffle once, tail is validation.
    std::vector<std::size_t> order = shuffled_indices(data.size(), config.seed, 0xA0);
    const std::size_t n_train = std::max<std::size_t>(
        1, static_cast<std::size_t>(static_cast<double>(data.size()) *
                                    (1.0 - config.validation_fraction)));
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> val_idx(order.begin() + n_train, order.end());

    const std::size_t n_params = param_count(result.net);
    Vector m(n_params, 0.0), v(n_params, 0.0), step(n_params, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double beta1_pow = 1.0, beta2_pow = 1.0;

    result.epoch_loss.reserve(config.epochs);
    double lr = config.learning_rate;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (epoch > 0) lr *= config.lr_decay;
        std::vector<std::size_t> perm =
            shuffled_indices(train_idx.size(), config.seed, 0xE0 + epoch);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < train_idx.size(); start += config.batch) {
            const std::size_t end = std::min(start + config.batch, train_idx.size());
            std::vector<std::size_t> batch(end - start);
            for (std::size_t i = start; i < end; ++i) batch[i - start] = train_idx[perm[i]];

            GradLoss gl = batch_gradient_impl(result.net, data, batch, true);
            if (!std::isfinite(gl.loss))
                throw TrainingError("train_adam: loss is not finite at epoch " +
                                    std::to_string(epoch));
            epoch_loss += gl.loss;
            ++n_batches;

            beta1_pow *= beta1;
            beta2_pow *= beta2;
            for (std::size_t i = 0; i < n_params; ++i) {
                m[i] = beta1 * m[i] + (1.0 - beta1) * gl.grad[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * gl.grad[i] * gl.grad[i];
                const double m_hat = m[i] / (1.0 - beta1_pow);
                const double v_hat = v[i] / (1.0 - beta2_pow);
                step[i] = -lr * m_hat / (std::sqrt(v_hat) + eps);
            }
            apply_flat_update(result.net, step);
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(n_batches));
    }

    double err2 = 0.0, ref2 = 0.0;
    const auto& eval_idx = val_idx.empty() ? train_idx : val_idx;
    for (std::size_t k : eval_idx) {
        const Vector pred = forward(result.net, data.inputs[k]);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - data.outputs[k][i];
            err2 += d * d;
            ref2 += data.outputs[k][i] * data.outputs[k][i];
        }
    }
    result.validation_rmse = std::sqrt(err2 / std::max(ref2, 1e-300));
    return result;
}

namespace {

void write_network_json(std::ostream& os, const FeedForwardNet& net,
                        const std::string& metadata_json) {
    os << "{\n  \"alpha\": " << format_double(net.alpha) << ",\n  \"architecture_tag\": \""
       << to_string(net.arch) << "\",\n  \"dims\": {\"n_x\": " << net.n_x()
       << ", \"n_y\": " << net.n_y() << ", \"width\": " << net.width()
       << ", \"layers\": " << net.depth() << "},\n  \"layers\": [\n";
    for (std::size_t l = 0; l < net.depth(); ++l) {
        os << "    {\"W\": ";
        write_json_matrix(os, net.layers[l].weights);
        os << ", \"b\": ";
        write_json_vector(os, net.layers[l].bias);
        os << (l + 1 < net.depth() ? "},\n" : "}\n");
    }
    os << "  ],\n  \"A\": ";
    write_json_matrix(os, net.output_matrix);
    os << ",\n  \"metadata\": " << metadata_json << "\n}\n";
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw ParseError(what + ": expected an array of rows");
    Matrix m(j.size(), j.front().size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != m.cols()) throw ParseError(what + ": ragged row " + std::to_string(i));
        for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

} // namespace

void save_network(const FeedForwardNet& net, const std::string& path,
                  const std::string& metadata_json) {
    net.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    write_network_json(out, net, metadata_json);
}

FeedForwardNet load_network(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const std::exception& e) {
        throw ParseError(path + ": bad JSON: " + e.what());
    }
    FeedForwardNet net;
    try {
        net.alpha = j.at("alpha").get<double>();
        net.arch = parse_arch(j.at("architecture_tag").get<std::string>());
        for (const auto& layer_json : j.at("layers")) {
            DenseLayer layer;
            layer.weights = matrix_from_json(layer_json.at("W"), path + ": layer W");
            layer.bias = layer_json.at("b").get<Vector>();
            net.layers.push_back(std::move(layer));
        }
        net.output_matrix = matrix_from_json(j.at("A"), path + ": A");

        const auto& dims = j.at("dims");
        if (dims.at("n_x").get<std::size_t>() != net.n_x() ||
            dims.at("n_y").get<std::size_t>() != net.n_y() ||
            dims.at("width").get<std::size_t>() != net.width() ||
            dims.at("layers").get<std::size_t>() != net.depth())
            throw ParseError(path + ": dims field disagrees with stored arrays");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        net.validate();
    } catch (const Error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return net;
}

std::string network_fingerprint(const FeedForwardNet& net) {
    std::ostringstream ss;
    write_network_json(ss, net, "{}");
    return fnv1a_hex(ss.str());
}

} // namespace uqnn
