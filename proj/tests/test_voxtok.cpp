#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "situ3d/rng.hpp"
#include "situ3d/voxtok.hpp"

using namespace situ3d;
using vox::PointCloud;

namespace {

PointCloud make_cloud(const std::vector<std::array<double, 3>>& pts, int category = -1) {
    PointCloud pc;
    const auto n = static_cast<Eigen::Index>(pts.size());
    pc.points.resize(n, 3);
    pc.colors.resize(n, 3);
    pc.categories.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pts[static_cast<std::size_t>(i)];
        pc.points.row(i) << p[0], p[1], p[2];
        pc.colors.row(i) << 0.5, 0.5, 0.5;
        pc.categories(i) = category;
    }
    return pc;
}

PointCloud random_cloud(int n, double extent, Rng& rng) {
    PointCloud pc;
    pc.points.resize(n, 3);
    pc.colors.resize(n, 3);
    pc.categories.resize(n);
    for (int i = 0; i < n; ++i) {
        pc.points.row(i) << rng.uniform(0.0, extent), rng.uniform(0.0, extent),
            rng.uniform(0.0, extent);
        pc.colors.row(i) << rng.uniform(), rng.uniform(), rng.uniform();
        pc.categories(i) = static_cast<int>(rng.uniform_int(-1, 3));
    }
    return pc;
}

} // namespace

TEST_CASE("voxelize basic cell assignment") {
    SUBCASE("three points in one cube") {
        const auto pc = make_cloud({{0.001, 0.001, 0.001}, {0.015, 0.01, 0.005}, {0.01, 0.019, 0.0}});
        const auto grid = vox::voxelize(pc, 0.02, 4);
        CHECK(grid.cells.size() == 1);
        CHECK(grid.cells.begin()->second.count == 3);
    }
    SUBCASE("floor rule splits x=0 and x=0.03 at size 0.02") {
        const auto pc = make_cloud({{0.0, 0.0, 0.0}, {0.03, 0.0, 0.0}});
        const auto grid = vox::voxelize(pc, 0.02, 4);
        CHECK(grid.cells.size() == 2);
    }
    SUBCASE("empty cloud throws") {
        PointCloud pc;
        pc.points.resize(0, 3);
        pc.colors.resize(0, 3);
        pc.categories.resize(0);
        CHECK_THROWS_AS(vox::voxelize(pc, 0.02, 4), EmptyCloud);
    }
}

TEST_CASE("voxelize matches a brute-force index set on 10k random points") {
    Rng rng(17);
    const auto pc = random_cloud(10000, 1.0, rng);
    const double size = 0.05;
    const auto grid = vox::voxelize(pc, size, 4);

    // independent index computation straight from the definition
    std::set<std::tuple<int, int, int>> expected;
    const geom::Vec3 origin = (pc.min_corner() / size).array().floor() * size;
    for (Eigen::Index i = 0; i < pc.size(); ++i) {
        expected.insert({static_cast<int>(std::floor((pc.points(i, 0) - origin.x()) / size)),
                         static_cast<int>(std::floor((pc.points(i, 1) - origin.y()) / size)),
                         static_cast<int>(std::floor((pc.points(i, 2) - origin.z()) / size))});
    }
    CHECK(grid.cells.size() == expected.size());
    std::int64_t total = 0;
    for (const auto& [key, cell] : grid.cells) {
        CHECK(expected.count({key.i, key.j, key.k}) == 1);
        total += cell.count;
    }
    CHECK(total == pc.size());
}

TEST_CASE("voxelize translation covariance") {
    // The lattice-aligned origin absorbs exact-multiple shifts: indices stay
    // fixed while every absolute cell position moves by the same integers.
    Rng rng(19);
    const auto pc = random_cloud(500, 2.0, rng);
    const double size = 0.25; // binary-exact so the shift is an exact multiple
    const auto grid = vox::voxelize(pc, size, 4);

    PointCloud shifted = pc;
    shifted.points.col(0).array() += 3 * size;
    shifted.points.col(1).array() -= 2 * size;
    const auto grid2 = vox::voxelize(shifted, size, 4);
    CHECK(grid2.origin.x() == doctest::Approx(grid.origin.x() + 3 * size).epsilon(1e-12));
    CHECK(grid2.origin.y() == doctest::Approx(grid.origin.y() - 2 * size).epsilon(1e-12));
    CHECK(grid2.cells.size() == grid.cells.size());
    for (const auto& [key, cell] : grid.cells) {
        REQUIRE(grid2.cells.count(key) == 1);
        CHECK(grid2.cells.at(key).count == cell.count);
    }
}

TEST_CASE("bev_project column averaging") {
    SUBCASE("two voxels in one column average their features") {
        const auto pc = make_cloud({{0.01, 0.01, 0.01}, {0.01, 0.01, 0.05}}, 1);
        const auto grid = vox::voxelize(pc, 0.02, 4);
        REQUIRE(grid.cells.size() == 2);
        const auto bev = vox::bev_project(grid);
        REQUIRE(bev.columns.size() == 1);
        Eigen::VectorXd expected = Eigen::VectorXd::Zero(grid.feature_dim());
        for (const auto& [key, cell] : grid.cells) expected += grid.cell_feature(cell);
        expected /= 2.0;
        CHECK((bev.columns.begin()->second.feature - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("single-voxel column is the identity") {
        const auto pc = make_cloud({{0.01, 0.01, 0.01}}, 2);
        const auto grid = vox::voxelize(pc, 0.02, 4);
        const auto bev = vox::bev_project(grid);
        CHECK((bev.columns.begin()->second.feature -
               grid.cell_feature(grid.cells.begin()->second))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    }
}

TEST_CASE("bev_project matches brute-force per-column averages") {
    Rng rng(23);
    const auto pc = random_cloud(4000, 1.5, rng);
    const auto grid = vox::voxelize(pc, 0.1, 4);
    const auto bev = vox::bev_project(grid);

    std::map<std::pair<int, int>, std::vector<const vox::VoxelCell*>> columns;
    for (const auto& [key, cell] : grid.cells) columns[{key.i, key.j}].push_back(&cell);
    REQUIRE(bev.columns.size() == columns.size());
    for (const auto& [col, cells] : columns) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(grid.feature_dim());
        double zmin = 1e30, zmax = -1e30, zmean = 0.0;
        for (const auto* cell : cells) {
            mean += grid.cell_feature(*cell);
            zmin = std::min(zmin, cell->mean_height());
            zmax = std::max(zmax, cell->mean_height());
            zmean += cell->mean_height();
        }
        mean /= static_cast<double>(cells.size());
        zmean /= static_cast<double>(cells.size());
        const auto& column = bev.columns.at(vox::ColumnKey{col.first, col.second});
        CHECK((column.feature - mean).cwiseAbs().maxCoeff() < 1e-7);
        // anchor inside the column footprint, z within occupied range
        CHECK(column.anchor.z() == doctest::Approx(zmean));
        CHECK(column.anchor.z() >= zmin - 1e-9);
        CHECK(column.anchor.z() <= zmax + 1e-9);
        const double x0 = grid.origin.x() + col.first * grid.voxel_size;
        CHECK(column.anchor.x() >= x0 - 1e-9);
        CHECK(column.anchor.x() <= x0 + grid.voxel_size + 1e-9);
    }
}

TEST_CASE("sample_tokens budget and padding") {
    SUBCASE("pads when columns are scarce") {
        Rng rng(29);
        const auto pc = random_cloud(50, 0.4, rng); // few columns at coarse pitch
        const auto bev = vox::bev_project(vox::voxelize(pc, 0.2, 4));
        REQUIRE(bev.columns.size() < 16);
        const auto tokens = vox::sample_tokens(bev, 16, 1);
        CHECK(tokens.count() == 16);
        CHECK(tokens.n_real() == static_cast<int>(bev.columns.size()));
        for (int i = tokens.n_real(); i < tokens.count(); ++i) {
            CHECK(tokens.mask[static_cast<std::size_t>(i)] == 0);
            CHECK(tokens.features.row(i).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    SUBCASE("selects top occupancy columns when over budget") {
        Rng rng(31);
        const auto pc = random_cloud(20000, 3.0, rng);
        const auto bev = vox::bev_project(vox::voxelize(pc, 0.15, 4));
        REQUIRE(bev.columns.size() > 256);
        const auto tokens = vox::sample_tokens(bev, 256, 1);
        CHECK(tokens.count() == 256);
        CHECK(tokens.n_real() == 256);

        // brute-force sort oracle: chosen occupancies must dominate the rest
        std::vector<std::int64_t> occupancies;
        for (const auto& [key, col] : bev.columns) occupancies.push_back(col.occupancy);
        std::sort(occupancies.rbegin(), occupancies.rend());
        const std::int64_t cutoff = occupancies[255];
        std::int64_t worst_chosen = 1'000'000'000;
        for (int i = 0; i < 256; ++i) {
            // find the column for this anchor and compare occupancy
            const vox::ColumnKey key{
                static_cast<int>(std::floor((tokens.anchors(i, 0) - bev.origin.x()) / bev.pitch)),
                static_cast<int>(std::floor((tokens.anchors(i, 1) - bev.origin.y()) / bev.pitch))};
            worst_chosen = std::min(worst_chosen, bev.columns.at(key).occupancy);
        }
        CHECK(worst_chosen >= cutoff);
    }
    SUBCASE("deterministic across calls") {
        Rng rng(37);
        const auto pc = random_cloud(3000, 1.0, rng);
        const auto bev = vox::bev_project(vox::voxelize(pc, 0.1, 4));
        const auto a = vox::sample_tokens(bev, 64, 5);
        const auto b = vox::sample_tokens(bev, 64, 5);
        CHECK(a.anchors == b.anchors);
        CHECK(a.features == b.features);
        CHECK(a.mask == b.mask);
    }
}

TEST_CASE("cloud file round trip and errors") {
    Rng rng(41);
    const auto pc = random_cloud(200, 1.0, rng);
    const auto path = std::filesystem::temp_directory_path() / "situ3d_test_cloud.txt";
    vox::write_cloud(path.string(), pc);
    const auto back = vox::read_cloud(path.string());
    CHECK(back.points == pc.points);
    CHECK(back.colors == pc.colors);
    CHECK(back.categories == pc.categories);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(vox::read_cloud("/nonexistent/file.cloud"), IoError);
}
