#include "situ3d/voxtok.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace situ3d::vox {

void PointCloud::validate() const {
    if (points.rows() == 0) throw EmptyCloud("point cloud has no points");
    if (!points.allFinite()) throw NonFinite("point cloud has non-finite coordinates");
    if (colors.rows() != points.rows() || categories.size() != points.rows())
        throw ShapeMismatch("point cloud attribute row counts differ from point count");
}

Vec3 PointCloud::min_corner() const { return points.colwise().minCoeff().transpose(); }
Vec3 PointCloud::max_corner() const { return points.colwise().maxCoeff().transpose(); }

int VoxelCell::majority_category() const {
    int best = -1;
    std::int64_t best_count = 0;
    for (const auto& [label, n] : category_hist) {
        if (n > best_count) {
            best = label;
            best_count = n;
        }
    }
    return best;
}

Eigen::VectorXd VoxelGrid::cell_feature(const VoxelCell& c) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(feature_dim());
    f(0) = std::log1p(static_cast<double>(c.count));
    f.segment<3>(1) = c.mean_color();
    f(4) = c.mean_height();
    const int label = c.majority_category();
    if (label >= 0 && label < n_categories) f(5 + label) = 1.0;
    return f;
}

VoxelGrid voxelize(const PointCloud& pc, double voxel_size, int n_categories) {
    pc.validate();
    if (voxel_size <= 0.0) throw DegenerateInput("voxel size must be positive");

    VoxelGrid grid;
    grid.voxel_size = voxel_size;
    grid.n_categories = n_categories;
    grid.cloud_min = pc.min_corner();
    grid.cloud_max = pc.max_corner();
    grid.origin = (grid.cloud_min / voxel_size).array().floor() * voxel_size;

    for (Eigen::Index p = 0; p < pc.size(); ++p) {
        const Vec3 rel = (pc.points.row(p).transpose() - grid.origin) / voxel_size;
        const VoxelKey key{static_cast<int>(std::floor(rel.x())),
                           static_cast<int>(std::floor(rel.y())),
                           static_cast<int>(std::floor(rel.z()))};
        VoxelCell& cell = grid.cells[key];
        cell.count += 1;
        cell.color_sum += pc.colors.row(p).transpose();
        cell.height_sum += pc.points(p, 2);
        const int label = pc.categories(p);
        if (label >= 0) cell.category_hist[label] += 1;
    }
    return grid;
}

BevMap bev_project(const VoxelGrid& grid) {
    if (grid.cells.empty()) throw EmptyCloud("voxel grid has no occupied cells");

    BevMap bev;
    bev.pitch = grid.voxel_size;
    bev.origin = grid.origin;
    bev.feature_dim = grid.feature_dim();
    bev.cloud_min = grid.cloud_min;
    bev.cloud_max = grid.cloud_max;

    std::map<ColumnKey, std::pair<Eigen::VectorXd, std::int64_t>> sums; // feature sum, voxel count
    std::map<ColumnKey, double> height_sums;
    for (const auto& [key, cell] : grid.cells) {
        const ColumnKey col{key.i, key.j};
        auto [it, fresh] = sums.try_emplace(col, Eigen::VectorXd::Zero(bev.feature_dim), 0);
        it->second.first += grid.cell_feature(cell);
        it->second.second += 1;
        height_sums[col] += cell.mean_height();
        bev.columns[col].occupancy += cell.count;
    }
    for (auto& [col, column] : bev.columns) {
        const auto& [feature_sum, n_voxels] = sums.at(col);
        column.feature = feature_sum / static_cast<double>(n_voxels);
        column.anchor = Vec3(grid.origin.x() + (col.i + 0.5) * grid.voxel_size,
                             grid.origin.y() + (col.j + 0.5) * grid.voxel_size,
                             height_sums.at(col) / static_cast<double>(n_voxels));
    }
    return bev;
}

int TokenSet::n_real() const {
    int n = 0;
    for (const auto m : mask) n += m ? 1 : 0;
    return n;
}

TokenSet sample_tokens(const BevMap& bev, int n_tokens, std::uint64_t /*seed*/) {
    if (n_tokens < 1) throw DegenerateInput("token budget must be at least 1");

    std::vector<std::pair<ColumnKey, std::int64_t>> ranked;
    ranked.reserve(bev.columns.size());
    for (const auto& [key, column] : bev.columns) ranked.emplace_back(key, column.occupancy);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > n_tokens) ranked.resize(n_tokens);
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    TokenSet tokens;
    tokens.pitch = bev.pitch;
    tokens.scene_min = bev.cloud_min;
    tokens.scene_max = bev.cloud_max;
    tokens.anchors.setZero(n_tokens, 3);
    tokens.features.setZero(n_tokens, bev.feature_dim);
    tokens.mask.assign(static_cast<std::size_t>(n_tokens), 0);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const BevColumn& column = bev.columns.at(ranked[r].first);
        tokens.anchors.row(static_cast<Eigen::Index>(r)) = column.anchor.transpose();
        tokens.features.row(static_cast<Eigen::Index>(r)) = column.feature.transpose();
        tokens.mask[r] = 1;
    }
    return tokens;
}

void write_cloud(const std::string& path, const PointCloud& pc) {
    pc.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open cloud file for writing: " + path);
    out << "situ3d-cloud v1\n";
    out << "points " << pc.size() << "\n";
    out << "fields x y z r g b category\n";
    char buf[256];
    for (Eigen::Index i = 0; i < pc.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %d\n",
                      pc.points(i, 0), pc.points(i, 1), pc.points(i, 2), pc.colors(i, 0),
                      pc.colors(i, 1), pc.colors(i, 2), pc.categories(i));
        out << buf;
    }
    if (!out) throw IoError("failed writing cloud file: " + path);
}

PointCloud read_cloud(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open cloud file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "situ3d-cloud v1")
        throw SchemaError(path + ": missing 'situ3d-cloud v1' header");
    Eigen::Index n = 0;
    {
        if (!std::getline(in, line)) throw SchemaError(path + ": missing point count line");
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag >> n) || tag != "points" || n < 1)
            throw SchemaError(path + ": bad point count line '" + line + "'");
    }
    if (!std::getline(in, line) || line != "fields x y z r g b category")
        throw SchemaError(path + ": bad field list line");

    PointCloud pc;
    pc.points.resize(n, 3);
    pc.colors.resize(n, 3);
    pc.categories.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw SchemaError(path + ": truncated point rows");
        std::istringstream ls(line);
        double x, y, z, r, g, b;
        int cat;
        if (!(ls >> x >> y >> z >> r >> g >> b >> cat))
            throw SchemaError(path + ": bad point row " + std::to_string(i));
        pc.points.row(i) << x, y, z;
        pc.colors.row(i) << r, g, b;
        pc.categories(i) = cat;
    }
    pc.validate();
    return pc;
}

} // namespace situ3d::vox
