// Timing comparison of the OpenMP kernels against their serial reference
// implementations. Not a correctness test; the equivalence checks live in
// the unit tests.

#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include "uqnn/copula.hpp"
#include "uqnn/error_bounds.hpp"
#include "uqnn/marginal.hpp"
#include "uqnn/mc.hpp"
#include "uqnn/network.hpp"
#include "uqnn/rng.hpp"

using namespace uqnn;

namespace {

double time_of(const std::function<void()>& fn, int repeats = 3) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        const auto stop = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(stop - start).count());
    }
    return best;
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s serial %8.3f ms   openmp %8.3f ms   speedup %.2fx\n", name,
                serial * 1e3, parallel * 1e3, serial / parallel);
}

} // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());

    const GllGrid grid = gll_grid(31);
    const FeedForwardNet net = init_net(31, 31, 32, 3, 0.01, Arch::Mlp, 1);
    Vector mu(31);
    const CounterRng rng(2);
    for (std::size_t i = 0; i < 31; ++i) mu[i] = rng.normal(i);

    {
        const std::size_t n = 200000;
        const double s = time_of([&] { sample_perturbations_serial(31, 1.0, n, 3); });
        const double p = time_of([&] { sample_perturbations(31, 1.0, n, 3); });
        report("sample_perturbations", s, p);
    }

    const Matrix z = sample_perturbations(31, 0.5, 100000, 4);
    {
        const double s = time_of([&] { push_forward_serial(net, mu, z); });
        const double p = time_of([&] { push_forward(net, mu, z); });
        report("push_forward", s, p);
    }

    {
        const Dataset ds = generate_dataset(20000, OperatorTag::Linear, grid, grid.nodes, 5);
        std::vector<std::size_t> batch(ds.size());
        for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
        const double s = time_of([&] { batch_gradient_serial(net, ds, batch); });
        const double p = time_of([&] { batch_gradient(net, ds, batch); });
        report("batch_gradient", s, p);
    }

    {
        const SensitivityModel model = sensitivity(net, mu, 0.5);
        const Vector q = model.coefficients.row_vector(15);
        const double s =
            time_of([&] { MarginalLaw(model.center[15], q, model.beta, false); }, 2);
        const double p =
            time_of([&] { MarginalLaw(model.center[15], q, model.beta, true); }, 2);
        report("marginal cdf grid", s, p);
    }

    {
        const double s = time_of([&] { error_statistics_serial(net, mu, 1.5, 20000, 6); });
        const double p = time_of([&] { error_statistics(net, mu, 1.5, 20000, 6); });
        report("error_statistics", s, p);
    }

    {
        const SensitivityModel model = sensitivity(net, mu, 0.5);
        const CopulaModel copula = build_copula(model);
        const double s = time_of([&] { sample_serial(copula, 50000, 7); }, 2);
        const double p = time_of([&] { sample(copula, 50000, 7); }, 2);
        report("copula sampling", s, p);
    }
    return 0;
}
