#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "situ3d/errors.hpp"
#include "situ3d/geometry.hpp"

namespace situ3d::vox {

using geom::Vec3;

// Scene point cloud with per-point color and semantic category.
// Category -1 marks unlabeled points (floor, walls).
struct PointCloud {
    Eigen::Matrix<double, Eigen::Dynamic, 3> points;
    Eigen::Matrix<double, Eigen::Dynamic, 3> colors; // in [0, 1]
    Eigen::VectorXi categories;

    Eigen::Index size() const { return points.rows(); }
    void validate() const;
    Vec3 min_corner() const;
    Vec3 max_corner() const;
};

struct VoxelKey {
    int i = 0, j = 0, k = 0;
    auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelCell {
    std::int64_t count = 0;
    Vec3 color_sum = Vec3::Zero();
    double height_sum = 0.0;
    std::map<int, std::int64_t> category_hist; // label -> point count, unlabeled excluded

    Vec3 mean_color() const { return color_sum / static_cast<double>(count); }
    double mean_height() const { return height_sum / static_cast<double>(count); }
    // Majority label, ties broken toward the lower id; -1 when all unlabeled.
    int majority_category() const;
};

struct VoxelGrid {
    double voxel_size = 0.0;
    Vec3 origin = Vec3::Zero(); // lattice-aligned floor of the cloud min corner
    int n_categories = 0;
    Vec3 cloud_min = Vec3::Zero();
    Vec3 cloud_max = Vec3::Zero();
    std::map<VoxelKey, VoxelCell> cells;

    // [log1p(count), mean rgb, mean height, category one-hot]
    Eigen::VectorXd cell_feature(const VoxelCell& c) const;
    int feature_dim() const { return 5 + n_categories; }
};

VoxelGrid voxelize(const PointCloud& pc, double voxel_size, int n_categories);

struct BevColumn {
    Eigen::VectorXd feature;
    Vec3 anchor = Vec3::Zero(); // column center x/y, mean of occupied voxel heights
    std::int64_t occupancy = 0; // total points in the column
};

struct ColumnKey {
    int i = 0, j = 0;
    auto operator<=>(const ColumnKey&) const = default;
};

struct BevMap {
    double pitch = 0.0;
    Vec3 origin = Vec3::Zero();
    int feature_dim = 0;
    Vec3 cloud_min = Vec3::Zero();
    Vec3 cloud_max = Vec3::Zero();
    std::map<ColumnKey, BevColumn> columns;
};

/// Collapse the grid onto the ground plane, averaging features over z.
BevMap bev_project(const VoxelGrid& grid);

// Fixed-budget anchored token set. Exactly n_tokens rows; mask marks the
// real (non padding) ones.
struct TokenSet {
    Eigen::Matrix<double, Eigen::Dynamic, 3> anchors;
    Eigen::MatrixXd features;
    std::vector<std::uint8_t> mask;
    double pitch = 0.0; // anchor grid spacing, equals the voxel size
    Vec3 scene_min = Vec3::Zero();
    Vec3 scene_max = Vec3::Zero();

    int count() const { return static_cast<int>(anchors.rows()); }
    int n_real() const;
};

/// Keep the n_tokens highest-occupancy columns (ties toward lexicographically
/// smaller (i, j)), padding with masked zero tokens when fewer exist.
TokenSet sample_tokens(const BevMap& bev, int n_tokens, std::uint64_t seed);

// Text cloud file: "situ3d-cloud v1" header, point count, field list, then
// one "x y z r g b category" row per point.
void write_cloud(const std::string& path, const PointCloud& pc);
PointCloud read_cloud(const std::string& path);

} // namespace situ3d::vox
