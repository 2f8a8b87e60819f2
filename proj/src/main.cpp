// qdpair: simulate and analyze time-tagged photon pairs from a biexciton-
// exciton cascade.  Subcommands cover simulation, correlation, tomography,
// negativity tracking, curve fits, hyperspectral maps, and a full report
// pipeline.  Exit codes: 0 ok, 2 usage, 3 input/config error, 4 fit or
// reconstruction did not converge.

#include <array>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdpair/cascade_model.hpp"
#include "qdpair/correlator.hpp"
#include "qdpair/fitters.hpp"
#include "qdpair/hyperspectral.hpp"
#include "qdpair/io.hpp"
#include "qdpair/montecarlo.hpp"
#include "qdpair/poincare.hpp"
#include "qdpair/special.hpp"
#include "qdpair/tomography.hpp"
#include "qdpair/twoqubit.hpp"

namespace {

using namespace qdp;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kInputError = 3;
constexpr int kNoConverge = 4;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// every key doubles as a --key flag; all values are strings until used
struct KeySpec {
    const char* key;
    const char* def;
    const char* help;
};

const std::vector<KeySpec> kKeys = {
    {"t1_x_ps", "320", "exciton lifetime (ps)"},
    {"t1_xx_ps", "222.7", "biexciton lifetime (ps)"},
    {"fss_uev", "5.79", "fine-structure splitting (ueV)"},
    {"jitter_1p_fwhm_ps", "89", "single-photon timing jitter FWHM (ps)"},
    {"rep_period_ps", "13157.9", "excitation repetition period (ps)"},
    {"n_pulses", "1000000", "pulses per simulated acquisition"},
    {"eta_xx", "0.1", "XX-arm detection efficiency"},
    {"eta_x", "0.1", "X-arm detection efficiency"},
    {"prep_prob", "1", "per-pulse cascade preparation probability"},
    {"pulse_power_uw", "0", "if > 0, derive prep_prob from the Rabi curve at this power (uW)"},
    {"pi_power_uw", "0.65", "pi-pulse power for the Rabi mapping (uW)"},
    {"dark_rate_hz", "0", "dark-count rate per detector (Hz)"},
    {"projection_accuracy", "1", "polarization projection accuracy (0.5 = fully depolarized)"},
    {"two_photon_prob", "0", "residual multiphoton emission probability"},
    {"basis_first", "H", "XX-arm analyzer state for single-setting runs (H/V/D/A/R/L)"},
    {"basis_second", "H", "X-arm analyzer state for single-setting runs"},
    {"settings", "", "comma list of two-letter analyzer settings (e.g. HH,HD); empty = single"},
    {"seed", "1", "master RNG seed"},
    {"window_ps", "2000", "correlation window half-width (ps)"},
    {"bin_width_ps", "1", "histogram / tomogram bin width (ps)"},
    {"ch_a", "XX_T", "first correlator channel"},
    {"ch_b", "X_T", "second correlator channel"},
    {"fold", "", "sync-fold this channel instead of cross-correlating"},
    {"g2_side_peaks", "0", "if > 0, report pulsed g2(0) from this many side peaks per side"},
    {"delay_bin_out_ps", "40", "negativity series bin width (ps)"},
    {"series_lo_ps", "0", "negativity series start delay (ps)"},
    {"series_hi_ps", "1120", "negativity series end delay (ps)"},
    {"window_lo_ps", "0", "averaged-window lower delay (ps)"},
    {"window_hi_ps", "320", "averaged-window upper delay (ps)"},
    {"bootstrap", "0", "bootstrap replicas for negativity errors (0 = off)"},
    {"fit_lo_ps", "0", "lifetime fit window start; lo = hi = 0 means full histogram"},
    {"fit_hi_ps", "0", "lifetime fit window end"},
    {"fit_jitter", "false", "float the jitter FWHM in lifetime fits"},
    {"noise_sigma_uev", "0", "per-point measurement sigma for FSS fits (0 = unweighted)"},
    {"band_lo_nm", "779", "spectral band lower edge (nm)"},
    {"band_hi_nm", "781", "spectral band upper edge (nm)"},
    {"wavelength_nm", "780", "wavelength for the diffraction-limit line (nm)"},
    {"numerical_aperture", "0.6", "objective numerical aperture"},
    {"out_dir", ".", "output directory"},
    {"deterministic", "false", "omit timestamps so reruns are byte-identical"},
};

struct Resolved {
    std::map<std::string, std::string> kv;
    std::string hash;

    const std::string& str(const std::string& key) const { return kv.at(key); }

    double num(const std::string& key) const {
        const std::string& v = kv.at(key);
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != v.size() || v.empty())
            throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
        return x;
    }

    std::int64_t i64(const std::string& key) const {
        const double x = num(key);
        if (x != std::floor(x)) throw ConfigError("config key '" + key + "': not an integer");
        return static_cast<std::int64_t>(x);
    }

    bool flag(const std::string& key) const {
        const std::string& v = kv.at(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
    }
};

// defaults <- config file <- command-line flags, then hash the result
Resolved resolve(const std::string& config_path,
                 const std::map<std::string, std::string>& flag_vals) {
    Resolved r;
    for (const auto& k : kKeys) r.kv[k.key] = k.def;
    if (!config_path.empty()) {
        for (const auto& [k, v] : read_config_file(config_path)) {
            if (!r.kv.count(k)) throw ConfigError("unknown config key '" + k + "'");
            r.kv[k] = v;
        }
    }
    for (const auto& [k, v] : flag_vals) r.kv[k] = v;
    r.hash = config_hash(r.kv);
    return r;
}

CascadeParams cascade_of(const Resolved& r) {
    CascadeParams p;
    p.t1_x_ps = r.num("t1_x_ps");
    p.t1_xx_ps = r.num("t1_xx_ps");
    p.fss_uev = r.num("fss_uev");
    p.jitter_1p_fwhm_ps = r.num("jitter_1p_fwhm_ps");
    p.validate();
    return p;
}

DetectionConfig detection_of(const Resolved& r) {
    DetectionConfig d;
    d.rep_period_ps = r.num("rep_period_ps");
    d.n_pulses = static_cast<std::uint64_t>(r.i64("n_pulses"));
    d.prep_prob = r.num("prep_prob");
    d.eta_xx = r.num("eta_xx");
    d.eta_x = r.num("eta_x");
    d.dark_rate_hz = r.num("dark_rate_hz");
    d.projection_accuracy = r.num("projection_accuracy");
    d.two_photon_prob = r.num("two_photon_prob");
    d.seed = static_cast<std::uint64_t>(r.i64("seed"));
    const std::string& b1 = r.str("basis_first");
    const std::string& b2 = r.str("basis_second");
    if (b1.size() != 1 || b2.size() != 1)
        throw ConfigError("basis_first/basis_second must be one of H,V,D,A,R,L");
    d.basis_first = parse_pol(b1[0]);
    d.basis_second = parse_pol(b2[0]);
    const double power = r.num("pulse_power_uw");
    if (power > 0.0) d.prep_prob = rabi_rate(power, r.num("pi_power_uw"), 1.0);
    return d;
}

MetaLines meta_of(const Resolved& r) {
    MetaLines m = {{"config_hash", r.hash}};
    if (!r.flag("deterministic")) {
        const std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        m.emplace_back("created", buf);
    }
    return m;
}

fs::path out_path(const Resolved& r, const std::string& name) {
    fs::path dir(r.str("out_dir"));
    fs::create_directories(dir);
    return dir / name;
}

std::vector<std::pair<Pol, Pol>> parse_settings(const std::string& spec) {
    std::vector<std::pair<Pol, Pol>> out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        if (tok.size() != 2) throw ConfigError("settings entry '" + tok + "' is not two letters");
        out.emplace_back(parse_pol(tok[0]), parse_pol(tok[1]));
    }
    if (out.empty()) throw ConfigError("settings list is empty");
    return out;
}

std::string tag_file_name(Pol a, Pol b) {
    return std::string("tags_") + pol_label(a) + pol_label(b) + ".qtt1";
}

const char* kNineSettings = "HH,HD,HR,DH,DD,DR,RH,RD,RR";

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Resolved& r) {
    const CascadeParams cascade = cascade_of(r);
    DetectionConfig det = detection_of(r);

    std::vector<std::pair<Pol, Pol>> settings;
    const std::string& setting_spec = r.str("settings");
    if (setting_spec.empty()) {
        settings.emplace_back(det.basis_first, det.basis_second);
    } else {
        settings = parse_settings(setting_spec);
    }

    const std::uint64_t base_seed = det.seed;
    for (std::size_t i = 0; i < settings.size(); ++i) {
        det.basis_first = settings[i].first;
        det.basis_second = settings[i].second;
        det.seed = base_seed + i;  // distinct, reproducible stream per setting
        det.validate();
        const TimeTagStream tags = simulate(cascade, det);
        const fs::path path = out_path(r, tag_file_name(det.basis_first, det.basis_second));
        write_tags_qtt1(path.string(), tags);
        std::cout << path.string() << ": " << tags.size() << " tags\n";
    }

    // config echo for provenance
    std::ofstream os(out_path(r, "simulate_config.txt"));
    os << "# hash=" << r.hash << "\n";
    for (const auto& [k, v] : meta_of(r))
        if (k != "config_hash") os << "# " << k << "=" << v << "\n";
    for (const auto& [k, v] : r.kv) os << k << "=" << v << "\n";
    return kOk;
}

// --------------------------------------------------------------- correlate

int cmd_correlate(const Resolved& r, const std::string& input, std::string output) {
    const TimeTagStream tags = read_tags(input);
    if (tags.empty()) throw std::runtime_error(input + ": no tags");

    Histogram h;
    const std::string& fold = r.str("fold");
    if (!fold.empty()) {
        h = sync_histogram(tags, parse_channel(fold), r.num("rep_period_ps"),
                           r.i64("bin_width_ps"));
        if (output.empty()) output = out_path(r, "folded.csv").string();
    } else {
        h = cross_correlate(tags, parse_channel(r.str("ch_a")), parse_channel(r.str("ch_b")),
                            r.i64("window_ps"), r.i64("bin_width_ps"));
        if (output.empty()) output = out_path(r, "correlation.csv").string();
    }
    write_histogram_csv(output, h, meta_of(r));
    std::cout << output << ": " << h.counts.size() << " bins, " << h.total() << " counts\n";

    const int side = int(r.i64("g2_side_peaks"));
    if (side > 0) {
        const G2Result g2 = g2_pulsed(h, r.num("rep_period_ps"), side);
        std::printf("g2(0) = %.6g +/- %.2g  (central %llu, side mean %.6g over %d peaks)\n",
                    g2.g2, g2.sigma, static_cast<unsigned long long>(g2.central), g2.side_mean,
                    g2.n_side);
    }
    return kOk;
}

// -------------------------------------------------------------------- tomo

TomogramCounts assemble_from_dir(const Resolved& r, const std::string& in_dir) {
    const auto settings = parse_settings(kNineSettings);
    std::vector<TomogramInput> inputs;
    std::vector<TimeTagStream> streams;
    streams.reserve(settings.size());
    for (const auto& [a, b] : settings) {
        const fs::path path = fs::path(in_dir) / tag_file_name(a, b);
        if (!fs::exists(path))
            throw std::runtime_error("missing tag file " + path.string() +
                                     " (expected the nine analyzer settings)");
        streams.push_back(read_tags(path.string()));
    }
    for (std::size_t i = 0; i < settings.size(); ++i)
        inputs.push_back({settings[i].first, settings[i].second, &streams[i]});
    return assemble_tomogram(inputs, r.i64("window_ps"), r.i64("bin_width_ps"));
}

int cmd_tomo(const Resolved& r, const std::string& in_dir) {
    const TomogramCounts t = assemble_from_dir(r, in_dir);
    const fs::path path = out_path(r, "tomogram.csv");
    write_tomogram_csv(path.string(), t, meta_of(r));
    std::uint64_t total = 0;
    for (int c = 0; c < 36; ++c) total += t.aggregate(c, 0, t.n_bins);
    std::cout << path.string() << ": " << t.n_bins << " bins, " << total << " coincidences\n";
    return kOk;
}

// -------------------------------------------------------------- negativity

DensityMatrixRecord record_of(const MleResult& mle, const TomogramCounts& t, std::int64_t lo,
                              std::int64_t hi, const Resolved& r) {
    const auto w = t.window_counts(lo, hi);
    double n = 0.0;
    for (double c : w) n += c;
    DensityMatrixRecord rec;
    rec.rho = mle.rho.rho;
    rec.window_lo_ps = double(lo);
    rec.window_hi_ps = double(hi);
    rec.coincidences = n;
    rec.meta = meta_of(r);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", negativity2n(mle.rho));
    rec.meta.emplace_back("two_n", buf);
    rec.meta.emplace_back("mle_converged", mle.converged ? "true" : "false");
    return rec;
}

int cmd_negativity(const Resolved& r, const std::string& input) {
    const TomogramCounts t = read_tomogram_csv(input);

    const NegativitySeries s =
        negativity_vs_delay(t, r.i64("delay_bin_out_ps"), r.i64("series_lo_ps"),
                            r.i64("series_hi_ps"), int(r.i64("bootstrap")),
                            static_cast<std::uint64_t>(r.i64("seed")));
    const fs::path series_path = out_path(r, "negativity.csv");
    write_negativity_csv(series_path.string(), s, meta_of(r));

    const std::int64_t wlo = r.i64("window_lo_ps"), whi = r.i64("window_hi_ps");
    const MleResult wm = window_average_matrix(t, wlo, whi);
    const DensityMatrixRecord rec = record_of(wm, t, wlo, whi, r);
    const fs::path rho_path = out_path(r, "rho_window.json");
    write_density_matrix(rho_path.string(), rec);

    std::cout << series_path.string() << ": " << s.bin_start_ps.size() << " bins\n";
    std::printf("window [%lld, %lld) ps: 2n = %.4f over %.0f coincidences\n",
                static_cast<long long>(wlo), static_cast<long long>(whi),
                negativity2n(wm.rho), rec.coincidences);
    std::printf("series average over bins in the window: 2n = %.4f\n", series_average(s));
    if (!wm.converged) {
        std::cerr << "window reconstruction did not converge\n";
        return kNoConverge;
    }
    return kOk;
}

// --------------------------------------------------------------------- fit

void write_fit_csv(const std::string& path, const FitResult& fit, const MetaLines& meta) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", fit.chi2_reduced);
    os << "# chi2_reduced=" << buf << ", iterations=" << fit.iterations
       << ", converged=" << (fit.converged ? "true" : "false") << "\n";
    os << "param,value,sigma\n";
    for (std::size_t i = 0; i < fit.params.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", fit.params[i]);
        os << fit.names[i] << "," << buf;
        std::snprintf(buf, sizeof buf, "%.17g", fit.sigmas[i]);
        os << "," << buf << "\n";
    }
}

void print_fit(const FitResult& fit) {
    for (std::size_t i = 0; i < fit.params.size(); ++i)
        std::printf("%s = %.6g +/- %.2g\n", fit.names[i].c_str(), fit.params[i], fit.sigmas[i]);
    std::printf("chi2_reduced = %.4g, iterations = %d, converged = %s\n", fit.chi2_reduced,
                fit.iterations, fit.converged ? "yes" : "no");
}

// rows of "a,b" doubles; '#' comments and a non-numeric header row are skipped
std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::size_t ncols) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        const auto a = line.find_first_not_of(" \t\r\n");
        if (a == std::string::npos || line[a] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        bool numeric = true;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(tok, &used));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) continue;  // header row
        if (row.size() != ncols)
            throw std::runtime_error(path + ": expected " + std::to_string(ncols) + " columns");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no numeric rows");
    return rows;
}

int cmd_fit(const Resolved& r, const std::string& kind, const std::string& input) {
    if (kind == "lifetime-x" || kind == "lifetime-xx") {
        const Histogram h = read_histogram_csv(input);
        double lo = r.num("fit_lo_ps"), hi = r.num("fit_hi_ps");
        if (lo == 0.0 && hi == 0.0) {
            lo = double(h.start_ps);
            hi = double(h.bin_start(h.counts.size()));
        }
        const LifetimeKind lk = kind == "lifetime-x" ? LifetimeKind::X : LifetimeKind::XX;
        const FitResult fit = fit_lifetime(h, lk, cascade_of(r), lo, hi, r.flag("fit_jitter"));
        print_fit(fit);
        write_fit_csv(out_path(r, "fit_" + kind + ".csv").string(), fit, meta_of(r));
        return fit.converged ? kOk : kNoConverge;
    }
    if (kind == "fss") {
        std::vector<FssScanRow> rows;
        for (const auto& row : read_numeric_csv(input, 3)) rows.push_back({row[0], row[1], row[2]});
        const FitResult fit = fit_fss(rows, r.num("noise_sigma_uev"));
        print_fit(fit);
        write_fit_csv(out_path(r, "fit_fss.csv").string(), fit, meta_of(r));
        return fit.converged ? kOk : kNoConverge;
    }
    if (kind == "rabi") {
        std::vector<RabiRow> rows;
        for (const auto& row : read_numeric_csv(input, 2)) rows.push_back({row[0], row[1]});
        const double rep_rate_hz = 1e12 / r.num("rep_period_ps");
        const RabiFit rf = fit_rabi(rows, rep_rate_hz);
        print_fit(rf.fit);
        std::printf("pulse energy at pi: %.3g J\n", rf.pulse_energy_j_at_pi);
        if (!rf.scan_covers_pi_power)
            std::printf("note: the scan never reaches the fitted pi power\n");
        write_fit_csv(out_path(r, "fit_rabi.csv").string(), rf.fit, meta_of(r));
        return rf.fit.converged ? kOk : kNoConverge;
    }
    if (kind == "psf") {
        FocalMap map;
        {
            std::ifstream probe(input, std::ios::binary);
            char magic[5] = {};
            probe.read(magic, 5);
            if (probe && std::string(magic, 5) == "QDHC1") {
                const HyperspectralCube cube = read_cube(input);
                map = band_integrate(cube, r.num("band_lo_nm"), r.num("band_hi_nm"));
            } else {
                map = read_map_csv(input);
            }
        }
        const PsfFit psf = fit_psf(map);
        std::printf("horizontal FWHM = %.4g um, vertical FWHM = %.4g um\n",
                    kFwhmPerSigma * psf.horizontal.params[2],
                    kFwhmPerSigma * psf.vertical.params[2]);
        std::printf("mean FWHM = %.1f +/- %.1f nm at (%.3g, %.3g) um\n", 1e3 * psf.fwhm_um,
                    1e3 * psf.fwhm_sigma_um, psf.peak_x_um, psf.peak_y_um);
        const double limit_nm =
            diffraction_limit_fwhm(r.num("wavelength_nm"), r.num("numerical_aperture"));
        std::printf("diffraction limit 0.51*lambda/NA = %.0f nm; fitted FWHM is %s it\n",
                    limit_nm, 1e3 * psf.fwhm_um <= limit_nm ? "below" : "above");
        write_fit_csv(out_path(r, "fit_psf_horizontal.csv").string(), psf.horizontal, meta_of(r));
        write_fit_csv(out_path(r, "fit_psf_vertical.csv").string(), psf.vertical, meta_of(r));
        return (psf.horizontal.converged && psf.vertical.converged) ? kOk : kNoConverge;
    }
    std::cerr << "unknown fit kind '" << kind
              << "' (expected lifetime-x, lifetime-xx, fss, rabi, psf)\n";
    return kUsage;
}

// --------------------------------------------------------------- hyper-map

int cmd_hyper_map(const Resolved& r, const std::string& input, std::string output) {
    const HyperspectralCube cube = read_cube(input);
    const FocalMap map = band_integrate(cube, r.num("band_lo_nm"), r.num("band_hi_nm"));
    if (output.empty()) output = out_path(r, "band_map.csv").string();
    write_map_csv(output, map, meta_of(r));
    std::cout << output << ": " << map.x_um.size() << " x " << map.y_um.size() << " pixels\n";
    return kOk;
}

// ------------------------------------------------------------------ report

int cmd_report(const Resolved& r, const std::string& in_dir) {
    const CascadeParams cascade = cascade_of(r);
    const double rep_period = r.num("rep_period_ps");
    const std::int64_t bw = r.i64("bin_width_ps");
    const MetaLines meta = meta_of(r);

    // load the nine setting streams
    const auto settings = parse_settings(kNineSettings);
    std::vector<TimeTagStream> streams;
    std::uint64_t photon_tags = 0, sync_tags = 0;
    for (const auto& [a, b] : settings) {
        const fs::path path = fs::path(in_dir) / tag_file_name(a, b);
        if (!fs::exists(path))
            throw std::runtime_error("missing tag file " + path.string() +
                                     " (expected the nine analyzer settings)");
        streams.push_back(read_tags(path.string()));
        for (const TimeTag& tag : streams.back())
            (tag.channel == Channel::SYNC ? sync_tags : photon_tags) += 1;
    }
    if (photon_tags == 0) throw std::runtime_error("no photon tags in " + in_dir);

    // sync-folded decay histograms summed over settings and detector pairs
    Histogram hx, hxx;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        for (Channel ch : {Channel::XX_T, Channel::XX_R, Channel::X_T, Channel::X_R}) {
            const Histogram h = sync_histogram(streams[i], ch, rep_period, bw);
            Histogram& acc = (ch == Channel::XX_T || ch == Channel::XX_R) ? hxx : hx;
            if (acc.counts.empty()) {
                acc = h;
            } else {
                for (std::size_t k = 0; k < h.counts.size(); ++k) acc.counts[k] += h.counts[k];
            }
        }
    }
    write_histogram_csv(out_path(r, "lifetime_xx.csv").string(), hxx, meta);
    write_histogram_csv(out_path(r, "lifetime_x.csv").string(), hx, meta);

    FitResult fit_xx, fit_x;
    bool fits_ok = true;
    try {
        fit_xx = fit_lifetime(hxx, LifetimeKind::XX, cascade, 0.0,
                              double(hxx.bin_start(hxx.counts.size())));
        fit_x = fit_lifetime(hx, LifetimeKind::X, cascade, 0.0,
                             double(hx.bin_start(hx.counts.size())));
        fits_ok = fit_xx.converged && fit_x.converged;
    } catch (const std::exception& e) {
        std::cerr << "lifetime fits skipped: " << e.what() << "\n";
        fits_ok = false;
    }

    // tomogram, then the 36-panel overlay of data vs model vs theory
    std::vector<TomogramInput> inputs;
    for (std::size_t i = 0; i < settings.size(); ++i)
        inputs.push_back({settings[i].first, settings[i].second, &streams[i]});
    const TomogramCounts t = assemble_tomogram(inputs, r.i64("window_ps"), bw);
    write_tomogram_csv(out_path(r, "tomogram.csv").string(), t, meta);

    std::array<std::uint64_t, 9> setting_counts{};
    for (int c = 0; c < 36; ++c) {
        const Pol b1 = static_cast<Pol>(c / kNumPol), b2 = static_cast<Pol>(c % kNumPol);
        setting_counts[setting_index(b1, b2)] += t.aggregate(c, 0, t.n_bins);
    }
    std::uint64_t coincidences = 0;
    for (auto c : setting_counts) coincidences += c;

    {
        std::ofstream os(out_path(r, "overlay.csv"));
        for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
        os << "combo,delay_ps,counts,model,theory\n";
        char buf[64];
        for (int c = 0; c < 36; ++c) {
            const Pol b1 = static_cast<Pol>(c / kNumPol), b2 = static_cast<Pol>(c % kNumPol);
            const double scale =
                double(setting_counts[setting_index(b1, b2)]) * double(bw);
            for (std::size_t k = 0; k < t.n_bins; ++k) {
                const double dt = double(t.bin_start(k)) + 0.5 * double(bw);
                const double model = scale * model_coincidence(b1, b2, dt, cascade);
                const double theory =
                    dt >= 0.0 ? scale * theory_coincidence(b1, b2, dt, cascade) : 0.0;
                os << pol_label(b1) << "-" << pol_label(b2) << "," << dt;
                std::snprintf(buf, sizeof buf, ",%llu,%.9g,%.9g",
                              static_cast<unsigned long long>(t.counts[c][k]), model, theory);
                os << buf << "\n";
            }
        }
    }

    // density matrices at the peak and over the configured window
    const std::int64_t peak_half = std::max<std::int64_t>(2, bw);
    const MleResult peak_mle = window_average_matrix(t, -peak_half, peak_half);
    write_density_matrix(out_path(r, "rho_peak.json").string(),
                         record_of(peak_mle, t, -peak_half, peak_half, r));
    const std::int64_t wlo = r.i64("window_lo_ps"), whi = r.i64("window_hi_ps");
    const MleResult win_mle = window_average_matrix(t, wlo, whi);
    write_density_matrix(out_path(r, "rho_window.json").string(),
                         record_of(win_mle, t, wlo, whi, r));

    // negativity series
    const NegativitySeries series =
        negativity_vs_delay(t, r.i64("delay_bin_out_ps"), r.i64("series_lo_ps"),
                            r.i64("series_hi_ps"), int(r.i64("bootstrap")),
                            static_cast<std::uint64_t>(r.i64("seed")));
    write_negativity_csv(out_path(r, "negativity.csv").string(), series, meta);
    double window_series_avg = std::numeric_limits<double>::quiet_NaN();
    try {
        NegativitySeries in_window = series;  // keep only bins inside the window
        for (std::size_t k = 0; k < in_window.bin_start_ps.size(); ++k) {
            const std::int64_t b = in_window.bin_start_ps[k];
            if (b < wlo || b + in_window.bin_width_ps > whi) in_window.low_stats[k] = true;
        }
        window_series_avg = series_average(in_window);
    } catch (const std::exception&) {
        // no usable bins in the window; reported as nan
    }

    // plain-text summary; pulse totals come from the sync tags when present,
    // else from the configured n_pulses
    const double total_pulses = sync_tags > 0
                                    ? double(sync_tags)
                                    : double(settings.size()) * double(r.i64("n_pulses"));
    const double wall_s = total_pulses * rep_period * 1e-12;
    const double combined_rate = double(photon_tags) / wall_s;
    const double rep_rate = 1e12 / rep_period;
    {
        std::ofstream os(out_path(r, "summary.txt"));
        char buf[256];
        os << "config hash: " << r.hash << "\n";
        os << "settings: " << settings.size() << ", pulses per setting: "
           << std::uint64_t(total_pulses / double(settings.size()) + 0.5) << "\n";
        os << "photon tags: " << photon_tags << ", coincidences in tomogram: " << coincidences
           << "\n";
        std::snprintf(buf, sizeof buf,
                      "per-pulse efficiency: %.3g (combined rate %.4g Hz / rep rate %.4g Hz)\n",
                      combined_rate / rep_rate, combined_rate, rep_rate);
        os << buf;
        if (fits_ok) {
            std::snprintf(buf, sizeof buf, "lifetime XX: %.4g +/- %.2g ps\n", fit_xx.params[0],
                          fit_xx.sigmas[0]);
            os << buf;
            std::snprintf(buf, sizeof buf, "lifetime X: %.4g +/- %.2g ps\n", fit_x.params[0],
                          fit_x.sigmas[0]);
            os << buf;
        } else {
            os << "lifetime fits unavailable\n";
        }
        std::snprintf(buf, sizeof buf, "peak window [%lld, %lld) ps: 2n = %.4f\n",
                      static_cast<long long>(-peak_half), static_cast<long long>(peak_half),
                      negativity2n(peak_mle.rho));
        os << buf;
        std::snprintf(buf, sizeof buf, "window [%lld, %lld) ps: matrix 2n = %.4f, "
                      "series average 2n = %.4f\n",
                      static_cast<long long>(wlo), static_cast<long long>(whi),
                      negativity2n(win_mle.rho), window_series_avg);
        os << buf;
    }
    std::ifstream echo(out_path(r, "summary.txt"));
    std::cout << echo.rdbuf();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-dot photon-pair simulation and analysis"};
    app.require_subcommand(1);

    std::map<std::string, std::string> flags;
    std::string config_path, input, output, in_dir = ".", fit_kind;

    auto add_keys = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key=value configuration file");
        for (const auto& k : kKeys) {
            const std::string name = std::string("--") + k.key;
            sub->add_option_function<std::string>(
                name, [&flags, key = std::string(k.key)](const std::string& v) { flags[key] = v; },
                k.help);
        }
    };

    CLI::App* sim = app.add_subcommand("simulate", "generate time-tag files");
    add_keys(sim);

    CLI::App* corr = app.add_subcommand("correlate", "histogram delays between two channels");
    corr->add_option("--input", input, "time-tag file (QTT1 or CSV)")->required();
    corr->add_option("--output", output, "histogram CSV path");
    add_keys(corr);

    CLI::App* tomo = app.add_subcommand("tomo", "assemble the 36-combination tomogram");
    tomo->add_option("--in-dir", in_dir, "directory with the nine tags_XY.qtt1 files");
    add_keys(tomo);

    CLI::App* neg = app.add_subcommand("negativity", "negativity series from a tomogram");
    neg->add_option("--input", input, "tomogram CSV")->required();
    add_keys(neg);

    CLI::App* fit = app.add_subcommand("fit", "least-squares fits");
    fit->add_option("kind", fit_kind, "lifetime-x | lifetime-xx | fss | rabi | psf")->required();
    fit->add_option("--input", input, "input data file")->required();
    add_keys(fit);

    CLI::App* hyper = app.add_subcommand("hyper-map", "band-integrate a hyperspectral cube");
    hyper->add_option("--input", input, "cube file")->required();
    hyper->add_option("--output", output, "map CSV path");
    add_keys(hyper);

    CLI::App* report = app.add_subcommand("report", "full analysis pipeline on nine settings");
    report->add_option("--in-dir", in_dir, "directory with the nine tags_XY.qtt1 files");
    add_keys(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        const Resolved r = resolve(config_path, flags);
        if (sim->parsed()) return cmd_simulate(r);
        if (corr->parsed()) return cmd_correlate(r, input, output);
        if (tomo->parsed()) return cmd_tomo(r, in_dir);
        if (neg->parsed()) return cmd_negativity(r, input);
        if (fit->parsed()) return cmd_fit(r, fit_kind, input);
        if (hyper->parsed()) return cmd_hyper_map(r, input, output);
        if (report->parsed()) return cmd_report(r, in_dir);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kUsage;
}
