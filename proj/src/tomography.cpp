#include "qdpair/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qdpair/rng.hpp"

namespace qdp {

int setting_axis(Pol p) {
    switch (setting_of(p)) {
        case Pol::H: return 0;
        case Pol::D: return 1;
        case Pol::R: return 2;
        default: return -1;  // unreachable
    }
}

std::uint64_t TomogramCounts::aggregate(int combo, std::size_t lo_bin,
                                        std::size_t hi_bin) const {
    std::uint64_t s = 0;
    for (std::size_t k = lo_bin; k < hi_bin && k < n_bins; ++k) s += counts[combo][k];
    return s;
}

std::array<double, 36> TomogramCounts::window_counts(std::int64_t lo_ps,
                                                     std::int64_t hi_ps) const {
    std::array<double, 36> out{};
    for (std::size_t k = 0; k < n_bins; ++k) {
        const std::int64_t b = bin_start(k);
        if (b < lo_ps || b >= hi_ps) continue;
        for (int c = 0; c < 36; ++c) out[c] += static_cast<double>(counts[c][k]);
    }
    return out;
}

TomogramCounts assemble_tomogram(const std::vector<TomogramInput>& inputs,
                                 std::int64_t window_ps, std::int64_t bin_width_ps) {
    std::array<const TimeTagStream*, 9> by_setting{};
    for (const auto& in : inputs) {
        if (setting_of(in.first) != in.first || setting_of(in.second) != in.second)
            throw std::invalid_argument(
                "assemble_tomogram: settings must be given as H, D or R");
        auto*& slot = by_setting[setting_index(in.first, in.second)];
        if (slot) throw std::invalid_argument("assemble_tomogram: duplicate setting");
        slot = in.tags;
    }
    for (const auto* s : by_setting)
        if (!s) throw std::invalid_argument("assemble_tomogram: all 9 settings required");

    TomogramCounts tg;
    tg.start_ps = -window_ps;
    tg.bin_width_ps = bin_width_ps;
    static const Pol kSettings[3] = {Pol::H, Pol::D, Pol::R};
    // The four detector pairings of one setting measure the four state
    // combinations (I,J), (I,J-perp), (I-perp,J), (I-perp,J-perp).
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int s1 = 0; s1 < 3; ++s1)
        for (int s2 = 0; s2 < 3; ++s2) {
            const Pol i = kSettings[s1], j = kSettings[s2];
            const TimeTagStream& tags = *by_setting[3 * s1 + s2];
            const std::array<std::pair<Channel, Pol>, 2> xx{
                {{Channel::XX_T, i}, {Channel::XX_R, orthogonal(i)}}};
            const std::array<std::pair<Channel, Pol>, 2> x{
                {{Channel::X_T, j}, {Channel::X_R, orthogonal(j)}}};
            for (const auto& [ch_a, pol_a] : xx)
                for (const auto& [ch_b, pol_b] : x) {
                    Histogram h = cross_correlate(tags, ch_a, ch_b, window_ps, bin_width_ps);
                    auto& dst = tg.counts[combo_index(pol_a, pol_b)];
                    dst = std::move(h.counts);
                }
            std::uint64_t syncs = 0;
            for (const auto& t : tags)
                if (t.channel == Channel::SYNC) ++syncs;
            tg.pulses_per_setting[3 * s1 + s2] = syncs;
        }
    tg.n_bins = tg.counts[0].size();
    return tg;
}

namespace {

constexpr double kProbClamp = 1e-12;

struct ComboTable {
    std::array<Vec4, 36> kets;       // |I> (x) |J| for every combination
    std::array<int, 36> setting;     // setting_index of each combination
    ComboTable() {
        for (int b1 = 0; b1 < kNumPol; ++b1)
            for (int b2 = 0; b2 < kNumPol; ++b2) {
                const Pol p1 = static_cast<Pol>(b1), p2 = static_cast<Pol>(b2);
                kets[combo_index(p1, p2)] = kron(ket(p1), ket(p2));
                setting[combo_index(p1, p2)] = setting_index(p1, p2);
            }
    }
};

const ComboTable& combos() {
    static const ComboTable t;
    return t;
}

// rho = T^dagger T / tr from 16 packed reals: params 0-3 the (real) diagonal,
// then re/im pairs for the six below-diagonal entries.
Mat4 t_from_params(const double* q) {
    Mat4 t;
    t(0, 0) = q[0];
    t(1, 1) = q[1];
    t(2, 2) = q[2];
    t(3, 3) = q[3];
    int k = 4;
    for (int i = 1; i < 4; ++i)
        for (int j = 0; j < i; ++j) {
            t(i, j) = cplx(q[k], q[k + 1]);
            k += 2;
        }
    return t;
}

void params_from_t(const Mat4& t, double* q) {
    q[0] = t(0, 0).real();
    q[1] = t(1, 1).real();
    q[2] = t(2, 2).real();
    q[3] = t(3, 3).real();
    int k = 4;
    for (int i = 1; i < 4; ++i)
        for (int j = 0; j < i; ++j) {
            q[k] = t(i, j).real();
            q[k + 1] = t(i, j).imag();
            k += 2;
        }
}

struct Objective {
    const std::array<double, 36>& n;
    std::array<double, 9> setting_total{};
    mutable std::uint64_t evals = 0;

    explicit Objective(const std::array<double, 36>& counts) : n(counts) {
        for (int c = 0; c < 36; ++c) setting_total[combos().setting[c]] += n[c];
    }

    // negative Poisson log-likelihood (dropping the n! terms) plus a tiny
    // penalty pinning the scale gauge that the trace normalization leaves flat
    double operator()(const double* q) const {
        ++evals;
        const Mat4 t = t_from_params(q);
        const Mat4 rho_un = mul(dagger(t), t);
        const double tr = trace(rho_un).real();
        if (!(tr > 1e-30) || !std::isfinite(tr)) return 1e300;
        double nll = 0.0;
        for (int c = 0; c < 36; ++c) {
            const double ns = setting_total[combos().setting[c]];
            if (ns == 0.0) continue;
            const Vec4& psi = combos().kets[c];
            double p = inner(psi, mul(rho_un, psi)).real() / tr;
            p = std::max(p, kProbClamp);
            const double mu = ns * p;
            nll += mu - n[c] * std::log(mu);
        }
        const double excess = tr - 1.0;
        return nll + excess * excess;
    }
};

struct NmResult {
    std::array<double, 16> x;
    double f;
    std::uint64_t iters = 0;
};

// Nelder-Mead with standard coefficients; runs until the simplex collapses
// (relative spread < rel_tol) or the iteration budget is spent.
NmResult nelder_mead(const Objective& obj, const std::array<double, 16>& x0, double step,
                     int max_iters, double rel_tol) {
    constexpr int n = 16;
    std::array<std::array<double, 16>, 17> pts;
    std::array<double, 17> f;
    pts[0] = x0;
    f[0] = obj(x0.data());
    for (int i = 0; i < n; ++i) {
        pts[i + 1] = x0;
        pts[i + 1][i] += step;
        f[i + 1] = obj(pts[i + 1].data());
    }
    std::array<int, 17> ord;
    for (int i = 0; i <= n; ++i) ord[i] = i;
    NmResult res{};
    std::uint64_t it = 0;
    for (; it < static_cast<std::uint64_t>(max_iters); ++it) {
        std::sort(ord.begin(), ord.end(), [&](int a, int b) { return f[a] < f[b]; });
        const int best = ord[0], worst = ord[n], second = ord[n - 1];
        if (std::abs(f[worst] - f[best]) <=
            rel_tol * (std::abs(f[best]) + std::abs(f[worst]) + 1e-300))
            break;
        std::array<double, 16> centro{};
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < 16; ++k) centro[k] += pts[ord[i]][k];
        for (double& c : centro) c /= n;

        auto blend = [&](double coef) {
            std::array<double, 16> x;
            for (int k = 0; k < 16; ++k)
                x[k] = centro[k] + coef * (pts[worst][k] - centro[k]);
            return x;
        };
        const auto refl = blend(-1.0);
        const double fr = obj(refl.data());
        if (fr < f[best]) {
            const auto exp_ = blend(-2.0);
            const double fe = obj(exp_.data());
            if (fe < fr) {
                pts[worst] = exp_;
                f[worst] = fe;
            } else {
                pts[worst] = refl;
                f[worst] = fr;
            }
        } else if (fr < f[second]) {
            pts[worst] = refl;
            f[worst] = fr;
        } else {
            const bool outside = fr < f[worst];
            const auto con = blend(outside ? -0.5 : 0.5);
            const double fc = obj(con.data());
            if (fc < std::min(fr, f[worst])) {
                pts[worst] = con;
                f[worst] = fc;
            } else {
                // shrink toward the best vertex
                for (int i = 1; i <= n; ++i) {
                    const int v = ord[i];
                    for (int k = 0; k < 16; ++k)
                        pts[v][k] = pts[best][k] + 0.5 * (pts[v][k] - pts[best][k]);
                    f[v] = obj(pts[v].data());
                }
            }
        }
    }
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return f[a] < f[b]; });
    res.x = pts[ord[0]];
    res.f = f[ord[0]];
    res.iters = it;
    return res;
}

// 2x2 (row-major) Kronecker helper for the linear-inversion seed.
using M2 = std::array<cplx, 4>;
Mat4 kron2(const M2& a, const M2& b) {
    Mat4 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q)
                    r(2 * i + p, 2 * j + q) = a[2 * i + j] * b[2 * p + q];
    return r;
}

// Pauli expectation estimates -> rho, projected onto the physical cone.
Mat4 linear_inversion_seed(const std::array<double, 36>& n) {
    static const M2 sig[4] = {{1, 0, 0, 1},
                              {0, 1, 1, 0},
                              {0, cplx(0, -1), cplx(0, 1), 0},
                              {1, 0, 0, -1}};
    // outcome signs: axis 0 (H-setting) H:+1 V:-1; axis 1: D:+1 A:-1;
    // axis 2: L:+1 R:-1 (sigma_y)
    auto sign_of = [](Pol p) {
        switch (p) {
            case Pol::H: case Pol::D: case Pol::L: return 1.0;
            default: return -1.0;
        }
    };
    auto pauli_of_axis = [](int axis) { return axis == 0 ? 3 : axis; };  // H->z, D->x, R->y

    double e[4][4] = {};
    double weight[4][4] = {};
    e[0][0] = 1.0;
    weight[0][0] = 1.0;
    static const Pol kStates[6] = {Pol::H, Pol::V, Pol::D, Pol::A, Pol::R, Pol::L};
    for (int a1 = 0; a1 < 3; ++a1)
        for (int a2 = 0; a2 < 3; ++a2) {
            double total = 0.0, ee = 0.0, e1 = 0.0, e2 = 0.0;
            for (const Pol p1 : kStates)
                for (const Pol p2 : kStates) {
                    if (setting_axis(p1) != a1 || setting_axis(p2) != a2) continue;
                    const double c = n[combo_index(p1, p2)];
                    total += c;
                    ee += sign_of(p1) * sign_of(p2) * c;
                    e1 += sign_of(p1) * c;
                    e2 += sign_of(p2) * c;
                }
            if (total <= 0.0) continue;
            const int m1 = pauli_of_axis(a1), m2 = pauli_of_axis(a2);
            e[m1][m2] += ee / total;
            weight[m1][m2] += 1.0;
            e[m1][0] += e1 / total;
            weight[m1][0] += 1.0;
            e[0][m2] += e2 / total;
            weight[0][m2] += 1.0;
        }
    Mat4 rho;
    for (int m1 = 0; m1 < 4; ++m1)
        for (int m2 = 0; m2 < 4; ++m2) {
            if (weight[m1][m2] == 0.0) continue;
            const double coef = e[m1][m2] / weight[m1][m2] / 4.0;
            rho = rho + coef * kron2(sig[m1], sig[m2]);
        }
    // clamp to PSD and renormalize
    const auto es = eigen_hermitian(rho);
    Mat4 proj;
    double tr = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double lam = std::max(es.values[k], 0.0);
        tr += lam;
        if (lam > 0.0) proj = proj + cplx(lam, 0.0) * outer(es.vectors[k]);
    }
    if (tr <= 0.0) return 0.25 * Mat4::identity();
    proj = (1.0 / tr) * proj;
    // small ridge keeps the Cholesky-like factorization well defined
    proj = 0.999 * proj + cplx(0.00025, 0.0) * Mat4::identity();
    return proj;
}

MleResult finalize(const Objective& obj, const NmResult& best) {
    const Mat4 t = t_from_params(best.x.data());
    Mat4 rho = mul(dagger(t), t);
    const double tr = trace(rho).real();
    rho = (1.0 / tr) * rho;
    // scrub rounding asymmetry so DensityMatrix validation is about physics
    for (int i = 0; i < 4; ++i) {
        rho(i, i) = cplx(rho(i, i).real(), 0.0);
        for (int j = i + 1; j < 4; ++j) {
            const cplx m = 0.5 * (rho(i, j) + std::conj(rho(j, i)));
            rho(i, j) = m;
            rho(j, i) = std::conj(m);
        }
    }
    MleResult out;
    out.rho = DensityMatrix::from_matrix(rho);
    out.log_likelihood = -best.f;
    out.objective_evals = obj.evals;
    return out;
}

}  // namespace

MleResult mle_reconstruct(const std::array<double, 36>& counts, const MleOptions& opts) {
    for (const double c : counts)
        if (!(c >= 0.0) || !std::isfinite(c))
            throw std::invalid_argument("mle_reconstruct: counts must be finite and >= 0");
    Objective obj(counts);
    if (std::all_of(obj.setting_total.begin(), obj.setting_total.end(),
                    [](double v) { return v == 0.0; }))
        throw std::invalid_argument("mle_reconstruct: no counts in any setting");

    std::vector<std::array<double, 16>> starts;
    if (opts.warm_start) {
        std::array<double, 16> q;
        params_from_t(lower_factor(*opts.warm_start), q.data());
        starts.push_back(q);
    } else {
        std::array<double, 16> q;
        params_from_t(lower_factor(linear_inversion_seed(counts)), q.data());
        starts.push_back(q);
        PulseRng rng(opts.seed, 0xB00);
        for (int s = 0; s < opts.random_starts; ++s) {
            for (auto& v : q) v = 0.35 * rng.gaussian();
            for (int d = 0; d < 4; ++d) q[d] = std::abs(q[d]) + 0.2;
            starts.push_back(q);
        }
    }

    NmResult best{};
    best.f = std::numeric_limits<double>::infinity();
    for (const auto& q0 : starts) {
        // full run, then fresh simplexes around the incumbent: a restart
        // rebuilds a healthy simplex where the old one degenerated
        NmResult r = nelder_mead(obj, q0, opts.warm_start ? 0.02 : 0.15,
                                 opts.max_iters_per_start, opts.rel_tol);
        for (const double step : {1e-3, 1e-5}) {
            const NmResult r2 =
                nelder_mead(obj, r.x, step, opts.max_iters_per_start / 4, opts.rel_tol);
            if (r2.f <= r.f) r = r2;
        }
        if (r.f < best.f) best = r;
    }
    MleResult out = finalize(obj, best);
    out.converged = std::isfinite(best.f);
    return out;
}

namespace {

NegativitySeries negativity_series_impl(const TomogramCounts& tg, std::int64_t out_bin_ps,
                                        std::int64_t lo_ps, std::int64_t hi_ps,
                                        int n_bootstrap, std::uint64_t seed,
                                        bool parallel) {
    if (out_bin_ps < tg.bin_width_ps || out_bin_ps % tg.bin_width_ps != 0)
        throw std::invalid_argument(
            "negativity_vs_delay: output bin must be a multiple of the tomogram bin");
    NegativitySeries s;
    s.bin_width_ps = out_bin_ps;
    for (std::int64_t b = lo_ps; b + out_bin_ps <= hi_ps; b += out_bin_ps)
        s.bin_start_ps.push_back(b);
    const std::size_t nb = s.bin_start_ps.size();
    s.two_n.assign(nb, std::numeric_limits<double>::quiet_NaN());
    s.sigma.assign(nb, std::numeric_limits<double>::quiet_NaN());
    s.total_counts.assign(nb, 0);
    s.low_stats.assign(nb, true);

    // totals and low-statistics flags first (serial: vector<bool> packs bits,
    // so flag writes must not race with the parallel loop below)
    for (std::size_t k = 0; k < nb; ++k) {
        const auto n = tg.window_counts(s.bin_start_ps[k], s.bin_start_ps[k] + out_bin_ps);
        double total = 0.0;
        for (const double v : n) total += v;
        s.total_counts[k] = static_cast<std::uint64_t>(std::llround(total));
        s.low_stats[k] = total < 100.0;
    }

    auto run_bin = [&](std::size_t k) {
        if (s.low_stats[k]) return;  // flagged, no estimate
        const std::int64_t lo = s.bin_start_ps[k];
        const auto n = tg.window_counts(lo, lo + out_bin_ps);
        MleOptions opts;
        opts.seed = seed + k;
        const MleResult point = mle_reconstruct(n, opts);
        s.two_n[k] = negativity2n(point.rho);
        if (n_bootstrap < 1) {
            s.sigma[k] = 0.0;
            return;
        }
        // parametric bootstrap: Poisson-resample the observed counts and
        // re-reconstruct, warm-started from the point estimate
        double sum = 0.0, sum2 = 0.0;
        for (int rep = 0; rep < n_bootstrap; ++rep) {
            PulseRng rng(seed ^ 0x5eedb00561ull, k * 131071 + rep);
            std::array<double, 36> resampled;
            for (int c = 0; c < 36; ++c)
                resampled[c] = static_cast<double>(rng.poisson(n[c]));
            MleOptions bopts;
            bopts.warm_start = point.rho.rho;
            bopts.max_iters_per_start = 4000;
            const double v = negativity2n(mle_reconstruct(resampled, bopts).rho);
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / n_bootstrap;
        s.sigma[k] = std::sqrt(std::max(0.0, sum2 / n_bootstrap - mean * mean));
    };

    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long k = 0; k < static_cast<long>(nb); ++k) run_bin(static_cast<std::size_t>(k));
    } else {
        for (std::size_t k = 0; k < nb; ++k) run_bin(k);
    }
    return s;
}

}  // namespace

NegativitySeries negativity_vs_delay(const TomogramCounts& tg, std::int64_t out_bin_ps,
                                     std::int64_t lo_ps, std::int64_t hi_ps,
                                     int n_bootstrap, std::uint64_t seed) {
    return negativity_series_impl(tg, out_bin_ps, lo_ps, hi_ps, n_bootstrap, seed, true);
}

NegativitySeries negativity_vs_delay_serial(const TomogramCounts& tg,
                                            std::int64_t out_bin_ps, std::int64_t lo_ps,
                                            std::int64_t hi_ps, int n_bootstrap,
                                            std::uint64_t seed) {
    return negativity_series_impl(tg, out_bin_ps, lo_ps, hi_ps, n_bootstrap, seed, false);
}

MleResult window_average_matrix(const TomogramCounts& tg, std::int64_t lo_ps,
                                std::int64_t hi_ps) {
    return mle_reconstruct(tg.window_counts(lo_ps, hi_ps));
}

double series_average(const NegativitySeries& s) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < s.two_n.size(); ++k) {
        if (s.low_stats[k]) continue;
        num += static_cast<double>(s.total_counts[k]) * s.two_n[k];
        den += static_cast<double>(s.total_counts[k]);
    }
    if (den == 0.0)
        throw std::invalid_argument("series_average: no usable bins");
    return num / den;
}

}  // namespace qdp
