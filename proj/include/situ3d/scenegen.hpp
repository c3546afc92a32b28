#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "situ3d/geometry.hpp"
#include "situ3d/rng.hpp"
#include "situ3d/voxtok.hpp"

namespace situ3d::scene {

using geom::SituationVector;
using geom::Vec3;

inline constexpr int kNumCategories = 12;
inline constexpr int kNumColors = 8;

const std::array<std::string, kNumCategories>& category_names();
const std::array<std::string, kNumCategories>& category_plurals();
const std::array<std::string, kNumColors>& color_names();
const std::array<Vec3, kNumColors>& color_values();

int category_id(const std::string& name);
int color_id(const std::string& name);

struct SceneObject {
    int category = 0;
    int color = 0;
    Vec3 center = Vec3::Zero(); // center of the box; bottom face rests on the floor
    Vec3 extent = Vec3::Zero(); // full axis lengths before the yaw is applied
    double yaw = 0.0;

    std::array<Eigen::Vector2d, 4> footprint_corners() const;
    std::string description() const; // "red chair"
};

struct SceneConfig {
    double room_min = 4.0;
    double room_max = 6.0;
    double wall_height_min = 2.6;
    double wall_height_max = 3.0;
    int objects_min = 3;
    int objects_max = 6;
    double point_density = 400.0; // points per square meter
    double wall_margin = 0.35;
    double clearance = 0.25; // minimum gap between object footprints
};

struct Scene {
    int id = 0;
    double room_w = 0.0, room_l = 0.0, room_h = 0.0; // room spans [0,w] x [0,l]
    std::vector<SceneObject> objects;
    vox::PointCloud cloud;

    bool inside_room(const Eigen::Vector2d& p, double margin = 0.0) const;
    bool inside_any_footprint(const Eigen::Vector2d& p, double inflate = 0.0) const;
};

Scene generate_scene(const SceneConfig& config, std::uint64_t seed);

/// Point cloud only (floor, walls, object faces); used by generate_scene.
vox::PointCloud sample_scene_cloud(const Scene& scene, double density, Rng& rng);

enum class QuestionFamily { Side, Direction, Counting, Nearest, Attribute, Reach };

// One situated QA item. The answer is always what the geometric oracle
// computes for (scene, gt, question).
struct Episode {
    int scene_id = 0;
    std::string situation;
    std::string question;
    std::string answer;
    SituationVector gt;
    QuestionFamily family = QuestionFamily::Side;

    std::string question_type() const; // first word: What/Is/How/Can/Which/Other
};

std::string question_type_of(const std::string& question);

struct EpisodeConfig {
    double beside_distance = 0.5;
    double angle_margin_deg = 10.0;
    double distance_margin = 0.1;
    double reach_distance = 1.0;
    double cone_half_angle_deg = 45.0;
};

Episode generate_episode(const Scene& scene, std::uint64_t seed,
                         const EpisodeConfig& config = {});

// Annotation records: one JSON object per line with fields scene_id,
// situation, question, answers, position {x,y,z} and rotation, where the
// rotation is either a {w,x,y,z} quaternion or a {yaw} angle. Headings are
// projected onto the ground plane on load.
void write_annotations(const std::string& path, const std::vector<Episode>& episodes);
std::vector<Episode> load_annotations(const std::string& path);

// scenes.jsonl record: {id, room{w,l,h}, split, objects[...]}.
void write_scenes(const std::string& path, const std::vector<Scene>& scenes,
                  const std::vector<std::string>& splits);
std::vector<std::pair<Scene, std::string>> load_scenes(const std::string& path);

/// Deterministic word list covering every template, category, color and digit.
std::vector<std::string> vocabulary_words();

} // namespace situ3d::scene
