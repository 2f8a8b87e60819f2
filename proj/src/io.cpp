#include "qdpair/io.hpp"

#include <algorithm>
#include <array>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qdpair/poincare.hpp"

namespace qdp {
namespace {

constexpr char kTagMagic[8] = {'Q', 'T', 'T', '1', '\0', '\0', '\0', '\0'};

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_meta(std::ofstream& os, const MetaLines& meta) {
    for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
}

// strip spaces around a token
std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
    return out;
}

// parse "# bin_width_ps=8, start_ps=-1600" style comment headers
std::map<std::string, std::string> parse_comment_kv(const std::string& line) {
    std::map<std::string, std::string> kv;
    std::string body = line.substr(1);  // drop '#'
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        kv[trim(tok.substr(0, eq))] = trim(tok.substr(eq + 1));
    }
    return kv;
}

}  // namespace

void write_tags_qtt1(const std::string& path, const TimeTagStream& tags) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_tags_qtt1: cannot open " + path);
    os.write(kTagMagic, sizeof(kTagMagic));
    for (const TimeTag& tag : tags) {
        unsigned char rec[16] = {};
        rec[0] = static_cast<unsigned char>(tag.channel);
        std::uint64_t u = static_cast<std::uint64_t>(tag.t_ps);
        for (int i = 0; i < 8; ++i) rec[8 + i] = static_cast<unsigned char>(u >> (8 * i));
        os.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    }
    if (!os) throw std::runtime_error("write_tags_qtt1: write failed for " + path);
}

TimeTagStream read_tags_qtt1(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_tags_qtt1: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kTagMagic, sizeof(magic)) != 0)
        throw std::runtime_error("read_tags_qtt1: bad magic in " + path);
    TimeTagStream tags;
    unsigned char rec[16];
    while (is.read(reinterpret_cast<char*>(rec), sizeof(rec))) {
        if (rec[0] > 4) throw std::runtime_error("read_tags_qtt1: bad channel code in " + path);
        std::uint64_t u = 0;
        for (int i = 0; i < 8; ++i) u |= std::uint64_t(rec[8 + i]) << (8 * i);
        tags.push_back({static_cast<std::int64_t>(u), static_cast<Channel>(rec[0])});
    }
    if (is.gcount() != 0) throw std::runtime_error("read_tags_qtt1: truncated record in " + path);
    return tags;
}

void write_tags_csv(const std::string& path, const TimeTagStream& tags) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_tags_csv: cannot open " + path);
    os << "channel,timestamp_ps\n";
    for (const TimeTag& tag : tags) os << channel_name(tag.channel) << "," << tag.t_ps << "\n";
    if (!os) throw std::runtime_error("write_tags_csv: write failed for " + path);
}

TimeTagStream read_tags_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_tags_csv: cannot open " + path);
    TimeTagStream tags;
    std::string line;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto cols = split_csv(line);
        if (cols.size() != 2)
            throw std::runtime_error("read_tags_csv: expected 'channel,timestamp_ps' in " + path);
        if (cols[1] == "timestamp_ps") continue;  // header row
        tags.push_back({std::stoll(cols[1]), parse_channel(cols[0])});
    }
    return tags;
}

TimeTagStream read_tags(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_tags: cannot open " + path);
    char magic[8] = {};
    is.read(magic, sizeof(magic));
    is.close();
    if (std::memcmp(magic, kTagMagic, sizeof(magic)) == 0) return read_tags_qtt1(path);
    return read_tags_csv(path);
}

void write_histogram_csv(const std::string& path, const Histogram& h, const MetaLines& meta) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_histogram_csv: cannot open " + path);
    os << "# bin_width_ps=" << h.bin_width_ps << ", start_ps=" << h.start_ps << "\n";
    write_meta(os, meta);
    os << "bin_start_ps,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k)
        os << h.bin_start(k) << "," << h.counts[k] << "\n";
    if (!os) throw std::runtime_error("write_histogram_csv: write failed for " + path);
}

Histogram read_histogram_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_histogram_csv: cannot open " + path);
    Histogram h;
    bool have_header = false;
    std::string line;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto kv = parse_comment_kv(line);
            if (kv.count("bin_width_ps") && kv.count("start_ps")) {
                h.bin_width_ps = std::stoll(kv.at("bin_width_ps"));
                h.start_ps = std::stoll(kv.at("start_ps"));
                have_header = true;
            }
            continue;
        }
        const auto cols = split_csv(line);
        if (cols.size() != 2)
            throw std::runtime_error("read_histogram_csv: expected 'bin_start_ps,count' in " +
                                     path);
        if (cols[1] == "count") continue;  // column header
        h.counts.push_back(std::stoull(cols[1]));
    }
    if (!have_header)
        throw std::runtime_error("read_histogram_csv: missing bin_width_ps/start_ps header in " +
                                 path);
    return h;
}

void write_density_matrix(const std::string& path, const DensityMatrixRecord& rec) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_density_matrix: cannot open " + path);
    os << "{\n";
    os << "  \"basis\": [\"HH\", \"HV\", \"VH\", \"VV\"],\n";
    os << "  \"window_ps\": [" << fmt17(rec.window_lo_ps) << ", " << fmt17(rec.window_hi_ps)
       << "],\n";
    os << "  \"coincidences\": " << fmt17(rec.coincidences) << ",\n";
    if (!rec.meta.empty()) {
        os << "  \"meta\": {";
        for (std::size_t i = 0; i < rec.meta.size(); ++i) {
            if (i) os << ", ";
            os << "\"" << rec.meta[i].first << "\": \"" << rec.meta[i].second << "\"";
        }
        os << "},\n";
    }
    os << "  \"rho\": [\n";
    for (int r = 0; r < 4; ++r) {
        os << "    [";
        for (int c = 0; c < 4; ++c) {
            const cplx v = rec.rho(r, c);
            os << "[" << fmt17(v.real()) << ", " << fmt17(v.imag()) << "]";
            if (c < 3) os << ", ";
        }
        os << (r < 3 ? "],\n" : "]\n");
    }
    os << "  ]\n}\n";
    if (!os) throw std::runtime_error("write_density_matrix: write failed for " + path);
}

DensityMatrixRecord read_density_matrix(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_density_matrix: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("read_density_matrix: " + path + ": " + e.what());
    }
    DensityMatrixRecord rec;
    const auto& w = j.at("window_ps");
    rec.window_lo_ps = w.at(0).get<double>();
    rec.window_hi_ps = w.at(1).get<double>();
    rec.coincidences = j.at("coincidences").get<double>();
    if (j.contains("meta"))
        for (const auto& [k, v] : j.at("meta").items())
            rec.meta.emplace_back(k, v.get<std::string>());
    const auto& rho = j.at("rho");
    if (rho.size() != 4) throw std::runtime_error("read_density_matrix: rho must be 4x4");
    for (int r = 0; r < 4; ++r) {
        const auto& row = rho.at(r);
        if (row.size() != 4) throw std::runtime_error("read_density_matrix: rho must be 4x4");
        for (int c = 0; c < 4; ++c)
            rec.rho(r, c) = cplx(row.at(c).at(0).get<double>(), row.at(c).at(1).get<double>());
    }
    return rec;
}

void write_tomogram_csv(const std::string& path, const TomogramCounts& t, const MetaLines& meta) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_tomogram_csv: cannot open " + path);
    os << "# bin_width_ps=" << t.bin_width_ps << ", start_ps=" << t.start_ps << "\n";
    os << "# pulses_per_setting=";
    for (int s = 0; s < 9; ++s) os << (s ? ";" : "") << t.pulses_per_setting[s];
    os << "\n";
    write_meta(os, meta);
    os << "delay_ps";
    for (int c = 0; c < 36; ++c)
        os << "," << pol_label(static_cast<Pol>(c / kNumPol)) << "-"
           << pol_label(static_cast<Pol>(c % kNumPol));
    os << "\n";
    for (std::size_t k = 0; k < t.n_bins; ++k) {
        os << t.bin_start(k);
        for (int c = 0; c < 36; ++c) os << "," << t.counts[c][k];
        os << "\n";
    }
    if (!os) throw std::runtime_error("write_tomogram_csv: write failed for " + path);
}

TomogramCounts read_tomogram_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_tomogram_csv: cannot open " + path);
    TomogramCounts t;
    bool have_header = false, have_columns = false;
    std::array<int, 36> col_to_combo{};  // file column order -> combo index
    std::string line;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto kv = parse_comment_kv(line);
            if (kv.count("bin_width_ps") && kv.count("start_ps")) {
                t.bin_width_ps = std::stoll(kv.at("bin_width_ps"));
                t.start_ps = std::stoll(kv.at("start_ps"));
                have_header = true;
            }
            if (kv.count("pulses_per_setting")) {
                std::stringstream ss(kv.at("pulses_per_setting"));
                std::string tok;
                for (int s = 0; s < 9 && std::getline(ss, tok, ';'); ++s)
                    t.pulses_per_setting[s] = std::stoull(tok);
            }
            continue;
        }
        const auto cols = split_csv(line);
        if (cols.size() != 37)
            throw std::runtime_error("read_tomogram_csv: expected 37 columns in " + path);
        if (cols[0] == "delay_ps") {  // column header names the combos
            for (int c = 0; c < 36; ++c) {
                const std::string& lab = cols[c + 1];
                if (lab.size() != 3 || lab[1] != '-')
                    throw std::runtime_error("read_tomogram_csv: bad combo label " + lab);
                col_to_combo[c] = combo_index(parse_pol(lab[0]), parse_pol(lab[2]));
            }
            have_columns = true;
            continue;
        }
        if (!have_columns)
            throw std::runtime_error("read_tomogram_csv: missing column header in " + path);
        for (int c = 0; c < 36; ++c)
            t.counts[col_to_combo[c]].push_back(std::stoull(cols[c + 1]));
        ++t.n_bins;
    }
    if (!have_header)
        throw std::runtime_error("read_tomogram_csv: missing bin_width_ps/start_ps header in " +
                                 path);
    return t;
}

void write_negativity_csv(const std::string& path, const NegativitySeries& s,
                          const MetaLines& meta) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_negativity_csv: cannot open " + path);
    os << "# bin_width_ps=" << s.bin_width_ps << "\n";
    write_meta(os, meta);
    os << "delay_ps,two_n,sigma\n";
    for (std::size_t k = 0; k < s.bin_start_ps.size(); ++k) {
        if (s.low_stats[k]) continue;  // nothing trustworthy to report
        os << s.bin_start_ps[k] << "," << fmt17(s.two_n[k]) << "," << fmt17(s.sigma[k]) << "\n";
    }
    if (!os) throw std::runtime_error("write_negativity_csv: write failed for " + path);
}

void write_map_csv(const std::string& path, const FocalMap& map, const MetaLines& meta) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_map_csv: cannot open " + path);
    write_meta(os, meta);
    os << "x_um,y_um,value\n";
    for (std::size_t iy = 0; iy < map.y_um.size(); ++iy)
        for (std::size_t ix = 0; ix < map.x_um.size(); ++ix)
            os << fmt17(map.x_um[ix]) << "," << fmt17(map.y_um[iy]) << ","
               << fmt17(map.value[iy * map.x_um.size() + ix]) << "\n";
    if (!os) throw std::runtime_error("write_map_csv: write failed for " + path);
}

FocalMap read_map_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_map_csv: cannot open " + path);
    std::vector<std::array<double, 3>> rows;
    std::string line;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto cols = split_csv(line);
        if (cols.size() != 3)
            throw std::runtime_error("read_map_csv: expected 'x_um,y_um,value' in " + path);
        if (cols[2] == "value") continue;  // header row
        rows.push_back({std::stod(cols[0]), std::stod(cols[1]), std::stod(cols[2])});
    }
    if (rows.empty()) throw std::runtime_error("read_map_csv: no data in " + path);

    FocalMap map;
    for (const auto& r : rows) {
        map.x_um.push_back(r[0]);
        map.y_um.push_back(r[1]);
    }
    auto uniq = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(map.x_um);
    uniq(map.y_um);
    const std::size_t nx = map.x_um.size(), ny = map.y_um.size();
    if (rows.size() != nx * ny)
        throw std::runtime_error("read_map_csv: incomplete grid in " + path);
    auto index_of = [](const std::vector<double>& v, double x) {
        return std::size_t(std::lower_bound(v.begin(), v.end(), x) - v.begin());
    };
    map.value.assign(nx * ny, 0.0);
    for (const auto& r : rows)
        map.value[index_of(map.y_um, r[1]) * nx + index_of(map.x_um, r[0])] = r[2];
    return map;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_config_file: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("read_config_file: " + path + ":" +
                                     std::to_string(lineno) + ": expected key=value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::string config_hash(const std::map<std::string, std::string>& kv) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a offset basis
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& [k, v] : kv) {  // std::map iterates in sorted key order
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

}  // namespace qdp
