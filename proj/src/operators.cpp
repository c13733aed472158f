#include "uqnn/operators.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "uqnn/jsonio.hpp"
#include "uqnn/rng.hpp"

namespace uqnn {

const char* to_string(OperatorTag tag) {
    return tag == OperatorTag::Linear ? "linear" : "nonlinear";
}

OperatorTag parse_operator_tag(const std::string& s) {
    if (s == "linear") return OperatorTag::Linear;
    if (s == "nonlinear") return OperatorTag::Nonlinear;
    throw ValidationError("unknown operator tag: '" + s + "'");
}

namespace {

Vector assemble(const Vector& f, const GllGrid& grid, const Vector& y_nodes, bool nonlinear) {
    if (f.size() != grid.n)
        throw DimensionError("operator: input length " + std::to_string(f.size()) +
                             " vs grid size " + std::to_string(grid.n));
    const Vector df = matvec(grid.diff_matrix, f);
    double moment = 0.0;   // integral of f
    double weighted = 0.0; // integral of (f) f' cos x
    for (std::size_t i = 0; i < grid.n; ++i) {
        moment += grid.quad_weights[i] * f[i];
        const double factor = nonlinear ? f[i] * df[i] : df[i];
        weighted += grid.quad_weights[i] * factor * std::cos(grid.nodes[i]);
    }
    Vector g(y_nodes.size());
    for (std::size_t j = 0; j < y_nodes.size(); ++j) {
        const double y = y_nodes[j];
        g[j] = moment * y + weighted * std::sin(M_PI * y * y);
    }
    return g;
}

} // namespace

Vector apply_linear_operator(const Vector& f, const GllGrid& grid, const Vector& y_nodes) {
    return assemble(f, grid, y_nodes, false);
}

Vector apply_nonlinear_operator(const Vector& f, const GllGrid& grid, const Vector& y_nodes) {
    return assemble(f, grid, y_nodes, true);
}

Vector apply_operator(OperatorTag tag, const Vector& f, const GllGrid& grid,
                      const Vector& y_nodes) {
    return tag == OperatorTag::Linear ? apply_linear_operator(f, grid, y_nodes)
                                      : apply_nonlinear_operator(f, grid, y_nodes);
}

Dataset generate_dataset(std::size_t count, OperatorTag tag, const GllGrid& grid,
                         const Vector& y_nodes, std::uint64_t seed, double amplitude) {
    if (count < 1) throw ValidationError("generate_dataset: count must be >= 1");
    Dataset ds;
    ds.operator_tag = tag;
    ds.seed = seed;
    ds.n_x = grid.n;
    ds.n_y = y_nodes.size();
    ds.amplitude = amplitude;
    ds.inputs.resize(count);
    ds.outputs.resize(count);

    const CounterRng rng(seed);
#pragma omp parallel for schedule(static)
    for (long long k = 0; k < static_cast<long long>(count); ++k) {
        Vector f(ds.n_x);
        const std::uint64_t base = static_cast<std::uint64_t>(k) * ds.n_x;
        for (std::size_t i = 0; i < ds.n_x; ++i)
            f[i] = amplitude * rng.normal(base + i);
        ds.outputs[k] = apply_operator(tag, f, grid, y_nodes);
        ds.inputs[k] = std::move(f);
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << "{\"operator_tag\":\"" << to_string(ds.operator_tag) << "\",\"n_x\":" << ds.n_x
        << ",\"n_y\":" << ds.n_y << ",\"count\":" << ds.size() << ",\"seed\":" << ds.seed
        << ",\"amplitude\":" << format_double(ds.amplitude) << ",\"rng\":\"" << kRngName
        << "\"}\n";
    for (std::size_t k = 0; k < ds.size(); ++k) {
        write_csv_row(out, ds.inputs[k]);
        write_csv_row(out, ds.outputs[k]);
    }
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw ParseError(path + ": missing header line");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(header);
    } catch (const std::exception& e) {
        throw ParseError(path + " line 1: bad JSON header: " + e.what());
    }

    Dataset ds;
    try {
        ds.operator_tag = parse_operator_tag(j.at("operator_tag").get<std::string>());
        ds.n_x = j.at("n_x").get<std::size_t>();
        ds.n_y = j.at("n_y").get<std::size_t>();
        ds.seed = j.at("seed").get<std::uint64_t>();
        ds.amplitude = j.value("amplitude", 1.0);
        const std::size_t count = j.at("count").get<std::size_t>();
        ds.inputs.reserve(count);
        ds.outputs.reserve(count);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + " line 1: header field error: " + e.what());
    }

    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Vector row = parse_csv_row(line, line_no);
        if (ds.inputs.size() == ds.outputs.size()) {
            if (row.size() != ds.n_x)
                throw ParseError(path + " line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(ds.n_x) + " input columns, got " +
                                 std::to_string(row.size()));
            ds.inputs.push_back(std::move(row));
        } else {
            if (row.size() != ds.n_y)
                throw ParseError(path + " line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(ds.n_y) + " output columns, got " +
                                 std::to_string(row.size()));
            ds.outputs.push_back(std::move(row));
        }
    }
    if (ds.inputs.size() != ds.outputs.size())
        throw ParseError(path + ": dangling input row without output row");
    return ds;
}

} // namespace uqnn
