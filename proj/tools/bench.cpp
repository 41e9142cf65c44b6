#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iostream>
#include <vector>

#include "CLI11.hpp"

#include "ers/kernels.hpp"
#include "ers/losses.hpp"
#include "ers/rng.hpp"
#include "ers/tape.hpp"
#include "ers/tensor.hpp"

namespace kernels = ers::kernels;
using ers::Rng;
using ers::Tensor;

namespace {

double best_ms(const std::function<void()>& fn, std::size_t repeats) {
    fn();  // warm-up
    double best = 1e300;
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(
            best,
            std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor t = Tensor::zeros({rows, cols});
    for (auto& v : t.values) v = rng.normal();
    return t;
}

// Runs `fn` in both execution modes and prints timings plus whether the two
// results are bitwise identical. Returns false on a mismatch.
bool compare(const std::string& name, std::size_t repeats,
             const std::function<void()>& fn,
             const std::function<bool()>& snapshot_equal) {
    kernels::set_exec_mode(kernels::Exec::serial);
    const double serial = best_ms(fn, repeats);
    const bool serial_ok = snapshot_equal();  // records the serial result
    kernels::set_exec_mode(kernels::Exec::parallel);
    const double parallel = best_ms(fn, repeats);
    const bool identical = serial_ok && snapshot_equal();
    std::cout << name << ": serial " << serial << " ms, parallel " << parallel
              << " ms, speedup " << serial / parallel << "x, identical "
              << (identical ? "yes" : "NO") << "\n";
    return identical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs parallel kernel benchmark"};
    std::size_t size = 384;
    std::size_t repeats = 3;
    app.add_option("--size", size, "matmul dimension");
    app.add_option("--repeats", repeats, "timed repetitions (best kept)");
    CLI11_PARSE(app, argc, argv);

    Rng rng(7, "bench");
    bool all_identical = true;

    {
        const Tensor a = random_matrix(size, size, rng);
        const Tensor b = random_matrix(size, size, rng);
        std::vector<double> c(size * size);
        std::vector<double> reference;
        const auto run = [&] {
            kernels::matmul(a.values.data(), b.values.data(), c.data(), size,
                            size, size);
        };
        const auto snapshot = [&] {
            if (reference.empty()) {
                reference = c;
                return true;
            }
            return reference == c;
        };
        all_identical &= compare("matmul " + std::to_string(size) + "^3",
                                 repeats, run, snapshot);
    }
    {
        const std::size_t n = 3000, d = 32, k = 10;
        Tensor emb = random_matrix(n, d, rng);
        std::vector<double> unit(n * d);
        kernels::l2norm_rows(emb.values.data(), unit.data(), n, d);
        std::vector<std::uint32_t> idx;
        std::vector<std::uint32_t> reference;
        const auto run = [&] { idx = kernels::top_k_by_dot(unit.data(), n, d, k); };
        const auto snapshot = [&] {
            if (reference.empty()) {
                reference = idx;
                return true;
            }
            return reference == idx;
        };
        all_identical &= compare("knn 3000x32 k=10", repeats, run, snapshot);
    }
    {
        // Clustering loss forward + backward on one large batch.
        const std::size_t batch = 512, classes = 10, k = 5;
        const Tensor anchors = random_matrix(batch, classes, rng);
        const Tensor neighbors = random_matrix(batch * k, classes, rng);
        const ers::model::LambdaVector lambdas{2.0, 5.0, 4.0, 8.0};
        double total = 0.0;
        double reference = 0.0;
        bool have_reference = false;
        const auto run = [&] {
            ers::autodiff::Tape tape;
            const auto a =
                tape.softmax_rows(tape.leaf(anchors, true));
            const auto nb =
                tape.softmax_rows(tape.leaf(neighbors, true));
            const auto terms =
                ers::model::scan_loss_graph(tape, a, nb, k, lambdas);
            const auto grads = tape.backward(terms.total);
            total = tape.value(terms.total).values[0];
            (void)grads;
        };
        const auto snapshot = [&] {
            if (!have_reference) {
                reference = total;
                have_reference = true;
                return true;
            }
            return reference == total;
        };
        all_identical &=
            compare("scan loss fwd+bwd 512x10 k=5", repeats, run, snapshot);
    }

    if (!all_identical) {
        std::cout << "MISMATCH: serial and parallel paths disagree\n";
        return 2;
    }
    return 0;
}
