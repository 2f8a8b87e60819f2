// Compare the OpenMP kernels against their serial reference implementations:
// pulse simulation, model-curve grid evaluation, and the per-bin negativity
// reconstruction.  Prints wall times and speedups; the equality checks double
// as a smoke test that both paths compute the same thing.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qdpair/cascade_model.hpp"
#include "qdpair/montecarlo.hpp"
#include "qdpair/poincare.hpp"
#include "qdpair/tomography.hpp"

using namespace qdp;

namespace {

template <typename F>
double timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled; both paths run serially\n");
#endif

    const CascadeParams cascade;  // defaults are the reference parameters
    DetectionConfig det;
    det.n_pulses = 400000;
    det.prep_prob = 1.0;
    det.eta_xx = 0.3;
    det.eta_x = 0.3;

    // --- simulation -----------------------------------------------------
    TimeTagStream tags_par, tags_ser;
    const double t_sim_par = timed([&] { tags_par = simulate(cascade, det); });
    const double t_sim_ser = timed([&] { tags_ser = simulate_serial(cascade, det); });
    const bool sim_match = tags_par == tags_ser;
    std::printf("simulate          %8.3f s parallel  %8.3f s serial  x%.2f  %s\n", t_sim_par,
                t_sim_ser, t_sim_ser / t_sim_par, sim_match ? "identical" : "MISMATCH");

    // --- model grid -----------------------------------------------------
    std::vector<double> grid;
    for (double t = -2000.0; t <= 2000.0; t += 0.01) grid.push_back(t);
    const PoincareCoord d = basis_coords(Pol::D), a = basis_coords(Pol::A);
    std::vector<double> g_par, g_ser;
    const double t_grid_par = timed([&] { g_par = eval_model_grid(d, a, grid, cascade); });
    const double t_grid_ser = timed([&] { g_ser = eval_model_grid_serial(d, a, grid, cascade); });
    double grid_diff = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid_diff = std::max(grid_diff, std::abs(g_par[i] - g_ser[i]));
    std::printf("eval_model_grid   %8.3f s parallel  %8.3f s serial  x%.2f  max diff %.3g\n",
                t_grid_par, t_grid_ser, t_grid_ser / t_grid_par, grid_diff);

    // --- negativity series ------------------------------------------------
    // build a tomogram from analytic expectation counts so the benchmark
    // isolates the reconstruction kernels
    TomogramCounts tg;
    tg.start_ps = 0;
    tg.bin_width_ps = 40;
    tg.n_bins = 16;
    for (int c = 0; c < 36; ++c) {
        const Pol b1 = static_cast<Pol>(c / kNumPol), b2 = static_cast<Pol>(c % kNumPol);
        tg.counts[c].resize(tg.n_bins);
        for (std::size_t k = 0; k < tg.n_bins; ++k) {
            const double t = tg.bin_start(k) + 0.5 * tg.bin_width_ps;
            tg.counts[c][k] = static_cast<std::uint64_t>(
                1e7 * tg.bin_width_ps * model_coincidence(b1, b2, t, cascade));
        }
    }
    for (auto& p : tg.pulses_per_setting) p = 1000000;

    NegativitySeries s_par, s_ser;
    const double t_neg_par =
        timed([&] { s_par = negativity_vs_delay(tg, 40, 0, 640, 16, 5); });
    const double t_neg_ser =
        timed([&] { s_ser = negativity_vs_delay_serial(tg, 40, 0, 640, 16, 5); });
    double neg_diff = 0.0;
    for (std::size_t k = 0; k < s_par.two_n.size(); ++k)
        if (!s_par.low_stats[k])
            neg_diff = std::max(neg_diff, std::abs(s_par.two_n[k] - s_ser.two_n[k]));
    std::printf("negativity_series %8.3f s parallel  %8.3f s serial  x%.2f  max diff %.3g\n",
                t_neg_par, t_neg_ser, t_neg_ser / t_neg_par, neg_diff);

    return 0;
}
