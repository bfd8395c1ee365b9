#include "mtmfg/artifacts.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace mtmfg {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'M', 'F', 'G', 'B'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void write_grid_binary(const fs::path& path, const SpaceGrid& grid, const TimeGrid& tgrid,
                       const std::vector<std::vector<double>>& slices) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCategory::kIo, "cannot open for writing: " + path.string());
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(grid.dim));
    put_u32(out, static_cast<std::uint32_t>(grid.nx));
    put_u32(out, static_cast<std::uint32_t>(grid.ny));
    put_u32(out, static_cast<std::uint32_t>(slices.size()));
    put_f64(out, grid.origin.x);
    put_f64(out, grid.origin.y);
    put_f64(out, grid.dx);
    put_f64(out, 0.0);  // t0
    put_f64(out, tgrid.dt);
    for (const auto& slice : slices) {
        require(static_cast<int>(slice.size()) == grid.count(), ErrorCategory::kInternal,
                "grid dump slice size mismatch");
        for (double v : slice) put_f64(out, v);
    }
    require(out.good(), ErrorCategory::kIo, "write failed: " + path.string());
}

GridFile read_grid_binary(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCategory::kIo, "cannot open for reading: " + path.string());
    char magic[4];
    in.read(magic, 4);
    require(std::memcmp(magic, kMagic, 4) == 0, ErrorCategory::kIo,
            "bad magic in grid file: " + path.string());
    const std::uint32_t version = get_u32(in);
    require(version == kVersion, ErrorCategory::kIo, "unsupported grid file version");
    GridFile f;
    f.grid.dim = static_cast<int>(get_u32(in));
    f.grid.nx = static_cast<int>(get_u32(in));
    f.grid.ny = static_cast<int>(get_u32(in));
    const std::uint32_t nslices = get_u32(in);
    f.grid.origin.x = get_f64(in);
    f.grid.origin.y = get_f64(in);
    f.grid.dx = get_f64(in);
    get_f64(in);  // t0
    f.tgrid.dt = get_f64(in);
    f.tgrid.nt = static_cast<int>(nslices) - 1;
    f.slices.assign(nslices, std::vector<double>(f.grid.count(), 0.0));
    for (auto& slice : f.slices)
        for (double& v : slice) v = get_f64(in);
    require(in.good(), ErrorCategory::kIo, "truncated grid file: " + path.string());
    return f;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& tr, int dim) {
    std::ofstream out(path);
    require(out.good(), ErrorCategory::kIo, "cannot open for writing: " + path.string());
    out.precision(17);
    out << (dim == 1 ? "t,x,ux\n" : "t,x,y,ux,uy\n");
    for (std::size_t i = 0; i < tr.positions.size(); ++i) {
        const double t = tr.t0 + static_cast<double>(i) * tr.dt;
        const Vec2 u = i < tr.controls.size() ? tr.controls[i] : Vec2{0.0, 0.0};
        if (dim == 1)
            out << t << ',' << tr.positions[i].x << ',' << u.x << '\n';
        else
            out << t << ',' << tr.positions[i].x << ',' << tr.positions[i].y << ',' << u.x << ','
                << u.y << '\n';
    }
    require(out.good(), ErrorCategory::kIo, "write failed: " + path.string());
}

void write_ensemble_csv(const fs::path& path, const ParticleEnsemble& e, int dim) {
    std::ofstream out(path);
    require(out.good(), ErrorCategory::kIo, "cannot open for writing: " + path.string());
    out.precision(17);
    out << (dim == 1 ? "x,weight\n" : "x,y,weight\n");
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (dim == 1)
            out << e.positions[i].x << ',' << e.weights[i] << '\n';
        else
            out << e.positions[i].x << ',' << e.positions[i].y << ',' << e.weights[i] << '\n';
    }
    require(out.good(), ErrorCategory::kIo, "write failed: " + path.string());
}

std::vector<double> rasterize_density(const ParticleEnsemble& e, const SpaceGrid& grid,
                                      double bandwidth) {
    std::vector<double> raster(grid.count(), 0.0);
    const double h = std::max(bandwidth, grid.dx);
    const double inv_h2 = 1.0 / (h * h);
    for (int idx = 0; idx < grid.count(); ++idx) {
        const Vec2 x = grid.point(idx);
        double s = 0.0;
        for (std::size_t p = 0; p < e.size(); ++p) {
            const double r2 = (x - e.positions[p]).norm2() * inv_h2;
            if (r2 < 9.0) s += e.weights[p] * std::exp(-0.5 * r2);
        }
        raster[idx] = s / (grid.dim == 1 ? h * 2.5066282746310002 : h * h * 6.283185307179586);
    }
    return raster;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    require(out.good(), ErrorCategory::kIo, "cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    require(out.good(), ErrorCategory::kIo, "write failed: " + path.string());
}

StagedDir::StagedDir(const fs::path& final_path) : final_(final_path) {
    require(!fs::exists(final_), ErrorCategory::kIo,
            "output directory already exists: " + final_.string());
    staging_ = final_;
    staging_ += ".staging";
    std::error_code ec;
    fs::remove_all(staging_, ec);
    fs::create_directories(staging_);
    require(fs::exists(staging_), ErrorCategory::kIo,
            "cannot create staging directory: " + staging_.string());
}

StagedDir::~StagedDir() {
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }
}

void StagedDir::commit() {
    std::error_code ec;
    fs::rename(staging_, final_, ec);
    require(!ec, ErrorCategory::kIo,
            "cannot finalize output directory: " + ec.message());
    committed_ = true;
}

}  // namespace mtmfg
