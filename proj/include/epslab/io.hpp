#ifndef EPSLAB_IO_HPP
#define EPSLAB_IO_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "epslab/attractor.hpp"
#include "epslab/dynamics.hpp"

namespace epslab {

/// Deterministic CSV writer: doubles in round-trip precision (%.17g), no
/// locale dependence, '\n' line endings.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void raw_row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::size_t columns_;
    std::string path_;
};

std::string format_double(double v);

/// Binary snapshot container (documented in the README):
///   magic "EPSL", version u32, grid hash u64, eps f64, dt f64,
///   snapshot count u64, field length u64, has_v u8, 7 pad bytes;
///   then per snapshot: t f64, u as little-endian f64[n], and v as f64[n]
///   when has_v = 1.
struct SnapshotFile {
    std::uint64_t grid_hash = 0;
    double eps = 0;
    double dt = 0;
    bool has_v = true;
    std::vector<Snapshot> snapshots;
};

void write_snapshots(const std::string& path, const SnapshotFile& file);
SnapshotFile read_snapshots(const std::string& path);

SnapshotFile to_snapshot_file(const Trajectory& traj, std::uint64_t grid_hash);
SnapshotFile to_snapshot_file(const AttractorApproximation& set);

} // namespace epslab

#endif
