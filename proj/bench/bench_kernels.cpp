// Compares the OpenMP kernels against the serial reference implementations
// and reports speedups. Usage: repstab_bench [n d]

#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "repstab/brainprep.hpp"
#include "repstab/encode.hpp"
#include "repstab/parallel.hpp"
#include "repstab/reference.hpp"
#include "repstab/simcore.hpp"
#include "repstab/synth.hpp"

using namespace repstab;

namespace {

double now() {
#ifdef _OPENMP
    return omp_get_wtime();
#else
    return static_cast<double>(clock()) / CLOCKS_PER_SEC;
#endif
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double d = std::fabs(a(i, j) - b(i, j));
            if (d > worst) worst = d;
        }
    return worst;
}

RepresentationSet make_set(std::uint64_t seed, std::size_t n, std::size_t d) {
    Rng rng(seed);
    RepresentationSet reps;
    reps.values = random_matrix(rng, n, d);
    reps.meta.stimulus_ids = make_default_ids(n);
    return reps;
}

} // namespace

int main(int argc, char** argv) {
    std::size_t n = 1000, d = 1024;
    if (argc == 3) {
        n = static_cast<std::size_t>(std::atoll(argv[1]));
        d = static_cast<std::size_t>(std::atoll(argv[2]));
    }
    std::printf("threads available: %d\n\n", max_threads());

    // Cosine similarity: parallel kernel vs serial brute force.
    {
        const RepresentationSet reps = make_set(1, n, d);
        double t0 = now();
        const SimilarityMatrix sim = cosine_similarity_matrix(reps);
        const double parallel_s = now() - t0;

        t0 = now();
        const Matrix serial = ref::cosine_similarity_matrix(reps.values);
        const double serial_s = now() - t0;

        std::printf("cosine_similarity %zux%zu  parallel %.3fs  serial %.3fs  speedup %.2fx  "
                    "max|diff| %.2e\n",
                    n, d, parallel_s, serial_s, serial_s / parallel_s,
                    max_abs_diff(sim.values, serial));
    }

    // RSA end to end (two cosine matrices + triangles + Pearson).
    {
        const RepresentationSet a = make_set(2, n / 2, d / 2);
        RepresentationSet b = make_set(3, n / 2, d / 2);
        b.meta.stimulus_ids = a.meta.stimulus_ids;
        double t0 = now();
        const double fast = rsa(a, b).value;
        const double parallel_s = now() - t0;
        t0 = now();
        const double slow = ref::rsa(a.values, b.values);
        const double serial_s = now() - t0;
        std::printf("rsa %zux%zu            parallel %.3fs  serial %.3fs  speedup %.2fx  "
                    "|diff| %.2e\n",
                    n / 2, d / 2, parallel_s, serial_s, serial_s / parallel_s,
                    std::fabs(fast - slow));
    }

    // High-pass drift removal: worker cap 1 vs all workers.
    {
        Rng rng(4);
        ScanSeries series;
        series.values = random_matrix(rng, 350, 10000);
        series.region_of_voxel.assign(10000, "r");
        series.subject_id = "bench";

        set_max_threads(1);
        double t0 = now();
        const ScanSeries one = highpass_dct(series, 0.005);
        const double serial_s = now() - t0;

        set_max_threads(0);
#ifdef _OPENMP
        omp_set_num_threads(omp_get_num_procs());
#endif
        t0 = now();
        const ScanSeries many = highpass_dct(series, 0.005);
        const double parallel_s = now() - t0;
        std::printf("highpass 350x10000     parallel %.3fs  1-thread %.3fs  speedup %.2fx  "
                    "max|diff| %.2e\n",
                    parallel_s, serial_s, serial_s / parallel_s,
                    max_abs_diff(one.values, many.values));
    }

    // Ridge fit: Cholesky path vs explicit normal-equations elimination.
    {
        Rng rng(5);
        const Matrix x = random_matrix(rng, 300, 128);
        const Matrix y = random_matrix(rng, 300, 512);
        double t0 = now();
        const EncodingModel model = ridge_fit(x, y, 0.5);
        const double parallel_s = now() - t0;
        t0 = now();
        const ref::RidgeSolution serial = ref::ridge_normal_equations(x, y, 0.5);
        const double serial_s = now() - t0;
        std::printf("ridge_fit 300x128->512 parallel %.3fs  serial %.3fs  speedup %.2fx  "
                    "max|diff| %.2e\n",
                    parallel_s, serial_s, serial_s / parallel_s,
                    max_abs_diff(model.weights, serial.weights));
    }
    return 0;
}
