#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mtmfg/hjb.hpp"
#include "mtmfg/transport.hpp"

namespace mtmfg {

/// Binary space-time grid file (docs/formats.md): "MFGB" magic, version,
/// dims, origin/spacing/time header, then row-major float64 slices,
/// little-endian throughout.
void write_grid_binary(const std::filesystem::path& path, const SpaceGrid& grid,
                       const TimeGrid& tgrid, const std::vector<std::vector<double>>& slices);

struct GridFile {
    SpaceGrid grid;
    TimeGrid tgrid;
    std::vector<std::vector<double>> slices;
};
GridFile read_grid_binary(const std::filesystem::path& path);

/// Trajectory CSV (t, x[, y], ux[, uy]) with a JSON sidecar (tau, audits).
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr, int dim);

/// Ensemble snapshot CSV: x[, y], weight.
void write_ensemble_csv(const std::filesystem::path& path, const ParticleEnsemble& e, int dim);

/// Kernel-smoothed density raster of an ensemble on the grid (single slice).
std::vector<double> rasterize_density(const ParticleEnsemble& e, const SpaceGrid& grid,
                                      double bandwidth);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

/// Staged artifact directory: everything is written into a temporary sibling
/// and atomically renamed into place on commit, so no partial run output is
/// ever observable under the final name.
class StagedDir {
  public:
    explicit StagedDir(const std::filesystem::path& final_path);
    ~StagedDir();

    const std::filesystem::path& path() const { return staging_; }
    void commit();

  private:
    std::filesystem::path final_;
    std::filesystem::path staging_;
    bool committed_{false};
};

}  // namespace mtmfg
