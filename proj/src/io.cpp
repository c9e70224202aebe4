#include "epslab/io.hpp"

#include <cstdio>
#include <cstring>

#include "epslab/errors.hpp"

namespace epslab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()), path_(path) {
    if (!out_) throw config_error("csv: cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_)
        throw config_error("csv: row width mismatch in '" + path_ + "'");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out_ << ',';
        out_ << format_double(values[i]);
    }
    out_ << '\n';
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw config_error("csv: row width mismatch in '" + path_ + "'");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

namespace {

constexpr char kMagic[4] = {'E', 'P', 'S', 'L'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
void get(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
}

} // namespace

void write_snapshots(const std::string& path, const SnapshotFile& file) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("snapshots: cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, file.grid_hash);
    put(out, file.eps);
    put(out, file.dt);
    const std::uint64_t count = file.snapshots.size();
    const std::uint64_t n = count ? static_cast<std::uint64_t>(file.snapshots[0].u.size()) : 0;
    put(out, count);
    put(out, n);
    const std::uint8_t has_v = file.has_v ? 1 : 0;
    put(out, has_v);
    const char pad[7] = {0};
    out.write(pad, 7);
    for (const auto& sn : file.snapshots) {
        if (static_cast<std::uint64_t>(sn.u.size()) != n ||
            (file.has_v && static_cast<std::uint64_t>(sn.v.size()) != n))
            throw config_error("snapshots: inconsistent field sizes");
        put(out, sn.t);
        out.write(reinterpret_cast<const char*>(sn.u.data()),
                  static_cast<std::streamsize>(n * sizeof(double)));
        if (file.has_v)
            out.write(reinterpret_cast<const char*>(sn.v.data()),
                      static_cast<std::streamsize>(n * sizeof(double)));
    }
    if (!out) throw config_error("snapshots: short write to '" + path + "'");
}

SnapshotFile read_snapshots(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("snapshots: cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw config_error("snapshots: '" + path + "' is not a snapshot file");
    std::uint32_t version = 0;
    get(in, version);
    if (version != kVersion)
        throw config_error("snapshots: unsupported version " + std::to_string(version));
    SnapshotFile file;
    get(in, file.grid_hash);
    get(in, file.eps);
    get(in, file.dt);
    std::uint64_t count = 0, n = 0;
    get(in, count);
    get(in, n);
    std::uint8_t has_v = 0;
    get(in, has_v);
    file.has_v = has_v != 0;
    char pad[7];
    in.read(pad, 7);
    file.snapshots.resize(count);
    for (auto& sn : file.snapshots) {
        get(in, sn.t);
        sn.u.resize(static_cast<Eigen::Index>(n));
        in.read(reinterpret_cast<char*>(sn.u.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (file.has_v) {
            sn.v.resize(static_cast<Eigen::Index>(n));
            in.read(reinterpret_cast<char*>(sn.v.data()),
                    static_cast<std::streamsize>(n * sizeof(double)));
        }
    }
    if (!in) throw config_error("snapshots: truncated file '" + path + "'");
    return file;
}

SnapshotFile to_snapshot_file(const Trajectory& traj, std::uint64_t grid_hash) {
    SnapshotFile f;
    f.grid_hash = grid_hash;
    f.eps = traj.eps;
    f.dt = traj.dt;
    f.has_v = traj.kind == FlowKind::hyperbolic;
    f.snapshots = traj.snapshots;
    return f;
}

SnapshotFile to_snapshot_file(const AttractorApproximation& set) {
    SnapshotFile f;
    f.grid_hash = set.grid_hash;
    f.eps = set.eps;
    f.dt = set.dt;
    f.has_v = true; // lifted sets carry the lifted second component
    f.snapshots = set.points;
    return f;
}

} // namespace epslab
