#pragma once
// File formats: QTT1/CSV time tags, histogram and tomogram CSV, density-matrix
// JSON with bit-exact doubles, negativity-series and focal-map CSV, and the
// flat key=value run-configuration files with their provenance hash.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qdpair/correlator.hpp"
#include "qdpair/fitters.hpp"
#include "qdpair/linalg.hpp"
#include "qdpair/montecarlo.hpp"
#include "qdpair/tomography.hpp"

namespace qdp {

// Extra "# key=value" provenance lines (config hash, creation time, ...)
// carried in text outputs; order preserved.
using MetaLines = std::vector<std::pair<std::string, std::string>>;

// --- time tags ---------------------------------------------------------
// Binary: 8-byte magic "QTT1\0\0\0\0", then per record a u8 channel code
// (0 XX_T, 1 XX_R, 2 X_T, 3 X_R, 4 SYNC), 7 reserved zero bytes, and the
// timestamp as little-endian i64 picoseconds.
void write_tags_qtt1(const std::string& path, const TimeTagStream& tags);
TimeTagStream read_tags_qtt1(const std::string& path);

// Text alternative, one "channel_label,timestamp_ps" row per tag; an optional
// header row and "#" comments are skipped on input.
void write_tags_csv(const std::string& path, const TimeTagStream& tags);
TimeTagStream read_tags_csv(const std::string& path);

// Dispatch on the QTT1 magic, falling back to CSV.
TimeTagStream read_tags(const std::string& path);

// --- histograms --------------------------------------------------------
// "# bin_width_ps=..., start_ps=..." then "bin_start_ps,count" rows.
void write_histogram_csv(const std::string& path, const Histogram& h,
                         const MetaLines& meta = {});
Histogram read_histogram_csv(const std::string& path);

// --- density matrices --------------------------------------------------
struct DensityMatrixRecord {
    Mat4 rho;
    double window_lo_ps = 0.0;
    double window_hi_ps = 0.0;
    double coincidences = 0.0;  // total counts behind the reconstruction
    MetaLines meta;
};

// JSON document: 4x4 nested arrays of [re, im] pairs, row-major in the basis
// order HH, HV, VH, VV, plus the delay window and coincidence count.  Doubles
// are written with 17 significant digits so a write/read round trip is
// bit-exact.
void write_density_matrix(const std::string& path, const DensityMatrixRecord& rec);
DensityMatrixRecord read_density_matrix(const std::string& path);

// --- tomograms ---------------------------------------------------------
// Rows = delay bins, columns = the 36 combinations labeled "XX-X" by state
// letters (e.g. "D-A"), in combo_index order; pulse exposures per setting
// ride along as a comment line.
void write_tomogram_csv(const std::string& path, const TomogramCounts& t,
                        const MetaLines& meta = {});
TomogramCounts read_tomogram_csv(const std::string& path);

// --- negativity series -------------------------------------------------
// "delay_ps,two_n,sigma" rows; low-statistics bins are omitted.
void write_negativity_csv(const std::string& path, const NegativitySeries& s,
                          const MetaLines& meta = {});

// --- focal maps --------------------------------------------------------
// Long-format "x_um,y_um,value" rows; the reader rebuilds the grid and
// requires every (x, y) cell to be present exactly once.
void write_map_csv(const std::string& path, const FocalMap& map, const MetaLines& meta = {});
FocalMap read_map_csv(const std::string& path);

// --- run configuration -------------------------------------------------
// Flat "key=value" text; blank lines and "#" comments ignored; later
// duplicates win.  Throws std::runtime_error on unreadable files or lines
// without '='.
std::map<std::string, std::string> read_config_file(const std::string& path);

// FNV-1a 64-bit over the canonical "key=value\n" serialization in sorted key
// order; hex string.  Identifies a resolved configuration in output headers.
std::string config_hash(const std::map<std::string, std::string>& kv);

}  // namespace qdp
