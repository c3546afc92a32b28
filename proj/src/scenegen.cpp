#include "situ3d/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace situ3d::scene {

using json = nlohmann::json;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

const std::array<std::string, kNumCategories>& category_names() {
    static const std::array<std::string, kNumCategories> names = {
        "chair", "table", "bed", "sofa", "lamp", "shelf",
        "cabinet", "desk", "plant", "television", "stool", "box"};
    return names;
}

const std::array<std::string, kNumCategories>& category_plurals() {
    static const std::array<std::string, kNumCategories> plurals = {
        "chairs", "tables", "beds", "sofas", "lamps", "shelves",
        "cabinets", "desks", "plants", "televisions", "stools", "boxes"};
    return plurals;
}

const std::array<std::string, kNumColors>& color_names() {
    static const std::array<std::string, kNumColors> names = {
        "red", "green", "blue", "yellow", "white", "black", "brown", "gray"};
    return names;
}

const std::array<Vec3, kNumColors>& color_values() {
    static const std::array<Vec3, kNumColors> values = {
        Vec3(0.85, 0.15, 0.15), Vec3(0.18, 0.65, 0.22), Vec3(0.16, 0.30, 0.80),
        Vec3(0.90, 0.85, 0.20), Vec3(0.95, 0.95, 0.95), Vec3(0.08, 0.08, 0.08),
        Vec3(0.48, 0.30, 0.16), Vec3(0.55, 0.55, 0.55)};
    return values;
}

int category_id(const std::string& name) {
    const auto& names = category_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw SchemaError("unknown category name: " + name);
    return static_cast<int>(it - names.begin());
}

int color_id(const std::string& name) {
    const auto& names = color_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw SchemaError("unknown color name: " + name);
    return static_cast<int>(it - names.begin());
}

std::array<Eigen::Vector2d, 4> SceneObject::footprint_corners() const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const double hx = extent.x() / 2.0, hy = extent.y() / 2.0;
    std::array<Eigen::Vector2d, 4> corners;
    const std::array<Eigen::Vector2d, 4> local = {
        Eigen::Vector2d(hx, hy), Eigen::Vector2d(-hx, hy), Eigen::Vector2d(-hx, -hy),
        Eigen::Vector2d(hx, -hy)};
    for (std::size_t i = 0; i < 4; ++i) {
        corners[i] = Eigen::Vector2d(center.x() + c * local[i].x() - s * local[i].y(),
                                     center.y() + s * local[i].x() + c * local[i].y());
    }
    return corners;
}

std::string SceneObject::description() const {
    return color_names()[static_cast<std::size_t>(color)] + " " +
           category_names()[static_cast<std::size_t>(category)];
}

namespace {

// Base full extents per category, jittered +-20% at placement time.
const std::array<Vec3, kNumCategories>& base_extents() {
    static const std::array<Vec3, kNumCategories> extents = {
        Vec3(0.45, 0.45, 0.90), Vec3(1.10, 0.80, 0.75), Vec3(1.50, 2.00, 0.55),
        Vec3(1.80, 0.85, 0.80), Vec3(0.30, 0.30, 1.50), Vec3(0.80, 0.30, 1.80),
        Vec3(0.90, 0.45, 1.10), Vec3(1.20, 0.60, 0.75), Vec3(0.35, 0.35, 1.00),
        Vec3(1.00, 0.12, 0.60), Vec3(0.35, 0.35, 0.45), Vec3(0.50, 0.50, 0.50)};
    return extents;
}

bool point_in_footprint(const SceneObject& obj, const Eigen::Vector2d& p, double inflate) {
    const double c = std::cos(obj.yaw), s = std::sin(obj.yaw);
    const double dx = p.x() - obj.center.x(), dy = p.y() - obj.center.y();
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    return std::abs(lx) <= obj.extent.x() / 2.0 + inflate &&
           std::abs(ly) <= obj.extent.y() / 2.0 + inflate;
}

// Separating-axis test over both rectangles' edge normals.
bool footprints_overlap(const SceneObject& a, const SceneObject& b, double clearance) {
    const auto ca = a.footprint_corners();
    const auto cb = b.footprint_corners();
    const std::array<double, 4> axis_angles = {a.yaw, a.yaw + kPi / 2.0, b.yaw, b.yaw + kPi / 2.0};
    for (const double ang : axis_angles) {
        const Eigen::Vector2d axis(std::cos(ang), std::sin(ang));
        double amin = 1e30, amax = -1e30, bmin = 1e30, bmax = -1e30;
        for (const auto& p : ca) {
            const double v = axis.dot(p);
            amin = std::min(amin, v);
            amax = std::max(amax, v);
        }
        for (const auto& p : cb) {
            const double v = axis.dot(p);
            bmin = std::min(bmin, v);
            bmax = std::max(bmax, v);
        }
        if (amax + clearance < bmin || bmax + clearance < amin) return false;
    }
    return true;
}

double ray_exit_distance(const SceneObject& obj, const Eigen::Vector2d& dir_world) {
    const double c = std::cos(obj.yaw), s = std::sin(obj.yaw);
    const double dx = c * dir_world.x() + s * dir_world.y();
    const double dy = -s * dir_world.x() + c * dir_world.y();
    double t = 1e30;
    if (std::abs(dx) > 1e-12) t = std::min(t, (obj.extent.x() / 2.0) / std::abs(dx));
    if (std::abs(dy) > 1e-12) t = std::min(t, (obj.extent.y() / 2.0) / std::abs(dy));
    return t;
}

void append_rect_points(std::vector<Vec3>& pts, std::vector<Vec3>& cols, std::vector<int>& cats,
                        const Vec3& origin, const Vec3& u, const Vec3& v, double area,
                        double density, const Vec3& color, int category, Rng& rng) {
    const auto n = static_cast<std::int64_t>(std::llround(density * area));
    for (std::int64_t i = 0; i < n; ++i) {
        const double a = rng.uniform();
        const double b = rng.uniform();
        pts.push_back(origin + a * u + b * v);
        cols.push_back(color);
        cats.push_back(category);
    }
}

} // namespace

bool Scene::inside_room(const Eigen::Vector2d& p, double margin) const {
    return p.x() >= margin && p.x() <= room_w - margin && p.y() >= margin &&
           p.y() <= room_l - margin;
}

bool Scene::inside_any_footprint(const Eigen::Vector2d& p, double inflate) const {
    for (const auto& obj : objects)
        if (point_in_footprint(obj, p, inflate)) return true;
    return false;
}

vox::PointCloud sample_scene_cloud(const Scene& scene, double density, Rng& rng) {
    std::vector<Vec3> pts;
    std::vector<Vec3> cols;
    std::vector<int> cats;
    const Vec3 floor_color(0.80, 0.80, 0.80);
    const Vec3 wall_color(0.92, 0.92, 0.92);
    const double w = scene.room_w, l = scene.room_l, h = scene.room_h;

    append_rect_points(pts, cols, cats, Vec3(0, 0, 0), Vec3(w, 0, 0), Vec3(0, l, 0), w * l,
                       density, floor_color, -1, rng);
    append_rect_points(pts, cols, cats, Vec3(0, 0, 0), Vec3(w, 0, 0), Vec3(0, 0, h), w * h,
                       density, wall_color, -1, rng);
    append_rect_points(pts, cols, cats, Vec3(0, l, 0), Vec3(w, 0, 0), Vec3(0, 0, h), w * h,
                       density, wall_color, -1, rng);
    append_rect_points(pts, cols, cats, Vec3(0, 0, 0), Vec3(0, l, 0), Vec3(0, 0, h), l * h,
                       density, wall_color, -1, rng);
    append_rect_points(pts, cols, cats, Vec3(w, 0, 0), Vec3(0, l, 0), Vec3(0, 0, h), l * h,
                       density, wall_color, -1, rng);

    for (const auto& obj : scene.objects) {
        const double c = std::cos(obj.yaw), s = std::sin(obj.yaw);
        const Vec3 ux(c, s, 0), uy(-s, c, 0), uz(0, 0, 1);
        const double ex = obj.extent.x(), ey = obj.extent.y(), ez = obj.extent.z();
        const Vec3 base = obj.center - (ex / 2.0) * ux - (ey / 2.0) * uy - Vec3(0, 0, ez / 2.0);
        const Vec3 color = color_values()[static_cast<std::size_t>(obj.color)];
        // top face plus the four sides; the bottom rests on the floor
        append_rect_points(pts, cols, cats, base + ez * uz, ex * ux, ey * uy, ex * ey, density,
                           color, obj.category, rng);
        append_rect_points(pts, cols, cats, base, ex * ux, ez * uz, ex * ez, density, color,
                           obj.category, rng);
        append_rect_points(pts, cols, cats, base + ey * uy, ex * ux, ez * uz, ex * ez, density,
                           color, obj.category, rng);
        append_rect_points(pts, cols, cats, base, ey * uy, ez * uz, ey * ez, density, color,
                           obj.category, rng);
        append_rect_points(pts, cols, cats, base + ex * ux, ey * uy, ez * uz, ey * ez, density,
                           color, obj.category, rng);
    }

    vox::PointCloud pc;
    const auto n = static_cast<Eigen::Index>(pts.size());
    pc.points.resize(n, 3);
    pc.colors.resize(n, 3);
    pc.categories.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        pc.points.row(i) = pts[static_cast<std::size_t>(i)].transpose();
        pc.colors.row(i) = cols[static_cast<std::size_t>(i)].transpose();
        pc.categories(i) = cats[static_cast<std::size_t>(i)];
    }
    return pc;
}

Scene generate_scene(const SceneConfig& config, std::uint64_t seed) {
    if (config.room_min <= 0 || config.room_max < config.room_min || config.objects_min < 2 ||
        config.objects_max < config.objects_min || config.point_density <= 0)
        throw ConfigError("invalid scene generation config");

    Rng rng(seed);
    Scene scene;
    scene.id = static_cast<int>(seed);
    scene.room_w = rng.uniform(config.room_min, config.room_max);
    scene.room_l = rng.uniform(config.room_min, config.room_max);
    scene.room_h = rng.uniform(config.wall_height_min, config.wall_height_max);

    const auto n_objects =
        static_cast<int>(rng.uniform_int(config.objects_min, config.objects_max));
    for (int k = 0; k < n_objects; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
            SceneObject obj;
            obj.category = static_cast<int>(rng.uniform_int(0, kNumCategories - 1));
            obj.color = static_cast<int>(rng.uniform_int(0, kNumColors - 1));
            const Vec3 base = base_extents()[static_cast<std::size_t>(obj.category)];
            obj.extent = base * rng.uniform(0.8, 1.2);
            obj.yaw = rng.uniform(0.0, 2.0 * kPi);
            const double reach = std::hypot(obj.extent.x(), obj.extent.y()) / 2.0;
            const double mx = config.wall_margin + reach;
            if (scene.room_w - mx <= mx || scene.room_l - mx <= mx) continue;
            obj.center = Vec3(rng.uniform(mx, scene.room_w - mx),
                              rng.uniform(mx, scene.room_l - mx), obj.extent.z() / 2.0);
            bool collides = false;
            for (const auto& other : scene.objects)
                collides = collides || footprints_overlap(obj, other, config.clearance);
            if (!collides) {
                scene.objects.push_back(obj);
                placed = true;
            }
        }
        if (!placed)
            throw PlacementFailure("could not place object " + std::to_string(k) + " for seed " +
                                   std::to_string(seed));
    }

    Rng cloud_rng = rng.fork(1);
    scene.cloud = sample_scene_cloud(scene, config.point_density, cloud_rng);
    return scene;
}

std::string question_type_of(const std::string& question) {
    const auto space = question.find(' ');
    const std::string first = question.substr(0, space);
    for (const char* known : {"What", "Is", "How", "Can", "Which"})
        if (first == known) return first;
    return "Other";
}

std::string Episode::question_type() const { return question_type_of(question); }

namespace {

struct RealignedObject {
    int index;
    Eigen::Vector2d xy;
    double dist;
};

std::vector<RealignedObject> realigned_objects(const Scene& scene, const SituationVector& gt) {
    std::vector<RealignedObject> out;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const Vec3 r = geom::realign_point(scene.objects[i].center, gt);
        out.push_back({static_cast<int>(i), Eigen::Vector2d(r.x(), r.y()),
                       std::hypot(r.x(), r.y())});
    }
    return out;
}

// Object indices whose (color, category) pair is unique in the scene.
std::vector<int> uniquely_describable(const Scene& scene) {
    std::vector<int> out;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        bool unique = true;
        for (std::size_t j = 0; j < scene.objects.size(); ++j) {
            if (i == j) continue;
            unique = unique && !(scene.objects[i].category == scene.objects[j].category &&
                                 scene.objects[i].color == scene.objects[j].color);
        }
        if (unique) out.push_back(static_cast<int>(i));
    }
    return out;
}

std::optional<SituationVector> build_gt(const Scene& scene, int a, int b,
                                        const EpisodeConfig& cfg) {
    const Eigen::Vector2d ac = scene.objects[static_cast<std::size_t>(a)].center.head<2>();
    const Eigen::Vector2d bc = scene.objects[static_cast<std::size_t>(b)].center.head<2>();
    Eigen::Vector2d dir = bc - ac;
    if (dir.norm() < 0.5) return std::nullopt;
    dir.normalize();
    const double t = ray_exit_distance(scene.objects[static_cast<std::size_t>(a)], dir);
    const Eigen::Vector2d pos = ac + (t + cfg.beside_distance) * dir;
    if (!scene.inside_room(pos, 0.2)) return std::nullopt;
    if (scene.inside_any_footprint(pos, 0.05)) return std::nullopt;
    const Eigen::Vector2d h = bc - pos;
    if (h.norm() < 0.3) return std::nullopt;
    const double yaw = std::atan2(-h.x(), h.y());
    return SituationVector::from_yaw(Vec3(pos.x(), pos.y(), 0.0), yaw);
}

struct DirectionSpec {
    const char* phrase;
    Eigen::Vector2d axis;
};

const std::array<DirectionSpec, 4>& direction_specs() {
    static const std::array<DirectionSpec, 4> specs = {
        DirectionSpec{"in front of me", Eigen::Vector2d(0, 1)},
        DirectionSpec{"behind me", Eigen::Vector2d(0, -1)},
        DirectionSpec{"on my left", Eigen::Vector2d(-1, 0)},
        DirectionSpec{"on my right", Eigen::Vector2d(1, 0)}};
    return specs;
}

double bearing_deg(const Eigen::Vector2d& v, const Eigen::Vector2d& axis) {
    const double cosang = v.normalized().dot(axis);
    return std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / kPi;
}

} // namespace

Episode generate_episode(const Scene& scene, std::uint64_t seed, const EpisodeConfig& cfg) {
    if (scene.objects.size() < 2) throw DegenerateInput("episodes need at least 2 objects");
    Rng rng(seed ^ 0x5e63a5u);

    const std::vector<int> unique = uniquely_describable(scene);

    for (int attempt = 0; attempt < 300; ++attempt) {
        if (unique.size() < 2) break;
        const int a = unique[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(unique.size()) - 1))];
        int b = a;
        while (b == a)
            b = unique[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(unique.size()) - 1))];

        const auto gt = build_gt(scene, a, b, cfg);
        if (!gt) continue;

        Episode ep;
        ep.scene_id = scene.id;
        ep.gt = *gt;
        ep.situation = "I am standing beside the " +
                       scene.objects[static_cast<std::size_t>(a)].description() +
                       " facing the " +
                       scene.objects[static_cast<std::size_t>(b)].description() + ".";

        const auto objs = realigned_objects(scene, ep.gt);
        const auto family = static_cast<QuestionFamily>(rng.uniform_int(0, 5));

        switch (family) {
            case QuestionFamily::Side: {
                const int c = unique[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(unique.size()) - 1))];
                const auto& r = objs[static_cast<std::size_t>(c)];
                if (std::abs(r.xy.x()) < cfg.distance_margin) continue;
                const bool ask_left = rng.bernoulli(0.5);
                const bool on_that_side = ask_left ? r.xy.x() < 0 : r.xy.x() > 0;
                ep.question = "Is the " +
                              scene.objects[static_cast<std::size_t>(c)].description() +
                              (ask_left ? " on my left?" : " on my right?");
                ep.answer = on_that_side ? "yes" : "no";
                ep.family = family;
                return ep;
            }
            case QuestionFamily::Direction: {
                const auto& spec = direction_specs()[static_cast<std::size_t>(
                    rng.uniform_int(0, 3))];
                int best = -1;
                double best_d = 1e30, second_d = 1e30;
                int second = -1;
                for (const auto& r : objs) {
                    if (bearing_deg(r.xy, spec.axis) > cfg.cone_half_angle_deg) continue;
                    if (r.dist < best_d) {
                        second_d = best_d;
                        second = best;
                        best_d = r.dist;
                        best = r.index;
                    } else if (r.dist < second_d) {
                        second_d = r.dist;
                        second = r.index;
                    }
                }
                if (best < 0) continue;
                const auto& rb = objs[static_cast<std::size_t>(best)];
                if (bearing_deg(rb.xy, spec.axis) >
                    cfg.cone_half_angle_deg - cfg.angle_margin_deg)
                    continue;
                if (second >= 0 && second_d - best_d < cfg.distance_margin &&
                    scene.objects[static_cast<std::size_t>(second)].category !=
                        scene.objects[static_cast<std::size_t>(best)].category)
                    continue;
                ep.question = std::string("Which object is ") + spec.phrase + "?";
                ep.answer = category_names()[static_cast<std::size_t>(
                    scene.objects[static_cast<std::size_t>(best)].category)];
                ep.family = family;
                return ep;
            }
            case QuestionFamily::Counting: {
                const auto cat = static_cast<int>(rng.uniform_int(0, kNumCategories - 1));
                int count = 0;
                for (const auto& obj : scene.objects) count += obj.category == cat ? 1 : 0;
                ep.question = "How many " + category_plurals()[static_cast<std::size_t>(cat)] +
                              " are in the room?";
                ep.answer = std::to_string(count);
                ep.family = family;
                return ep;
            }
            case QuestionFamily::Nearest: {
                int best = -1, second = -1;
                double best_d = 1e30, second_d = 1e30;
                for (const auto& r : objs) {
                    if (r.dist < best_d) {
                        second_d = best_d;
                        second = best;
                        best_d = r.dist;
                        best = r.index;
                    } else if (r.dist < second_d) {
                        second_d = r.dist;
                        second = r.index;
                    }
                }
                if (best < 0) continue;
                if (second >= 0 && second_d - best_d < cfg.distance_margin &&
                    scene.objects[static_cast<std::size_t>(second)].category !=
                        scene.objects[static_cast<std::size_t>(best)].category)
                    continue;
                ep.question = "What is the object closest to me?";
                ep.answer = category_names()[static_cast<std::size_t>(
                    scene.objects[static_cast<std::size_t>(best)].category)];
                ep.family = family;
                return ep;
            }
            case QuestionFamily::Attribute: {
                const bool ask_left = rng.bernoulli(0.5);
                // Side membership is by sign alone; the margin only gates the
                // referenced object so both oracles agree on the semantics.
                std::vector<int> side_objs;
                for (const auto& r : objs) {
                    if ((ask_left && r.xy.x() < 0) || (!ask_left && r.xy.x() > 0))
                        side_objs.push_back(r.index);
                }
                std::vector<int> candidates;
                for (const int idx : side_objs) {
                    int same = 0;
                    for (const int jdx : side_objs)
                        same += scene.objects[static_cast<std::size_t>(jdx)].category ==
                                        scene.objects[static_cast<std::size_t>(idx)].category
                                    ? 1
                                    : 0;
                    if (same == 1 &&
                        std::abs(objs[static_cast<std::size_t>(idx)].xy.x()) >=
                            cfg.distance_margin)
                        candidates.push_back(idx);
                }
                if (candidates.empty()) continue;
                const int c = candidates[static_cast<std::size_t>(rng.uniform_int(
                    0, static_cast<std::int64_t>(candidates.size()) - 1))];
                const auto& obj = scene.objects[static_cast<std::size_t>(c)];
                ep.question = "What color is the " +
                              category_names()[static_cast<std::size_t>(obj.category)] +
                              (ask_left ? " on my left?" : " on my right?");
                ep.answer = color_names()[static_cast<std::size_t>(obj.color)];
                ep.family = family;
                return ep;
            }
            case QuestionFamily::Reach: {
                const int c = unique[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(unique.size()) - 1))];
                const auto& r = objs[static_cast<std::size_t>(c)];
                if (std::abs(r.dist - cfg.reach_distance) < cfg.distance_margin) continue;
                ep.question = "Can I reach the " +
                              scene.objects[static_cast<std::size_t>(c)].description() +
                              " within one meter?";
                ep.answer = r.dist <= cfg.reach_distance ? "yes" : "no";
                ep.family = family;
                return ep;
            }
        }
    }
    throw AmbiguousEpisode("no unambiguous episode found for scene " +
                           std::to_string(scene.id) + " seed " + std::to_string(seed));
}

void write_annotations(const std::string& path, const std::vector<Episode>& episodes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open annotation file for writing: " + path);
    for (const auto& ep : episodes) {
        const geom::Quaternion q = ep.gt.quaternion();
        json record;
        record["scene_id"] = ep.scene_id;
        record["situation"] = ep.situation;
        record["question"] = ep.question;
        record["answers"] = json::array({ep.answer});
        record["position"] = {{"x", ep.gt.pos().x()}, {"y", ep.gt.pos().y()},
                              {"z", ep.gt.pos().z()}};
        record["rotation"] = {{"w", q.w}, {"x", q.x}, {"y", q.y}, {"z", q.z}};
        out << record.dump() << "\n";
    }
    if (!out) throw IoError("failed writing annotation file: " + path);
}

namespace {

double require_number(const json& rec, const char* field, const char* sub, int line) {
    if (!rec.contains(sub) || !rec[sub].is_number())
        throw SchemaError("annotation line " + std::to_string(line) + ": missing numeric field " +
                          std::string(field) + "." + sub);
    return rec[sub].get<double>();
}

} // namespace

std::vector<Episode> load_annotations(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open annotation file: " + path);
    std::vector<Episode> episodes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw SchemaError("annotation line " + std::to_string(line_no) + ": " + e.what());
        }
        for (const char* field : {"scene_id", "situation", "question", "answers", "position",
                                  "rotation"}) {
            if (!rec.contains(field))
                throw SchemaError("annotation line " + std::to_string(line_no) +
                                  ": missing field " + field);
        }
        Episode ep;
        if (!rec["scene_id"].is_number_integer())
            throw SchemaError("annotation line " + std::to_string(line_no) +
                              ": scene_id must be an integer");
        ep.scene_id = rec["scene_id"].get<int>();
        if (!rec["situation"].is_string() || !rec["question"].is_string())
            throw SchemaError("annotation line " + std::to_string(line_no) +
                              ": situation and question must be strings");
        ep.situation = rec["situation"].get<std::string>();
        ep.question = rec["question"].get<std::string>();
        if (!rec["answers"].is_array() || rec["answers"].empty() ||
            !rec["answers"][0].is_string())
            throw SchemaError("annotation line " + std::to_string(line_no) +
                              ": answers must be a non-empty string array");
        ep.answer = rec["answers"][0].get<std::string>();

        const json& pos = rec["position"];
        const Vec3 p(require_number(pos, "position", "x", line_no),
                     require_number(pos, "position", "y", line_no),
                     require_number(pos, "position", "z", line_no));
        const json& rot = rec["rotation"];
        double yaw = 0.0;
        if (rot.contains("yaw")) {
            if (!rot["yaw"].is_number())
                throw SchemaError("annotation line " + std::to_string(line_no) +
                                  ": rotation.yaw must be a number");
            yaw = rot["yaw"].get<double>();
        } else {
            const geom::Quaternion q{require_number(rot, "rotation", "w", line_no),
                                     require_number(rot, "rotation", "x", line_no),
                                     require_number(rot, "rotation", "y", line_no),
                                     require_number(rot, "rotation", "z", line_no)};
            geom::Quaternion qn = q;
            try {
                qn = q.normalized();
                yaw = geom::yaw_of(qn.to_matrix());
            } catch (const Error& e) {
                throw SchemaError("annotation line " + std::to_string(line_no) +
                                  ": bad rotation quaternion (" + e.what() + ")");
            }
        }
        ep.gt = SituationVector::from_yaw(p, yaw);
        episodes.push_back(std::move(ep));
    }
    return episodes;
}

void write_scenes(const std::string& path, const std::vector<Scene>& scenes,
                  const std::vector<std::string>& splits) {
    if (scenes.size() != splits.size()) throw LengthMismatch("scenes and splits differ in length");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open scene file for writing: " + path);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const Scene& s = scenes[i];
        json objects = json::array();
        for (const auto& obj : s.objects) {
            objects.push_back(
                {{"category", category_names()[static_cast<std::size_t>(obj.category)]},
                 {"color", color_names()[static_cast<std::size_t>(obj.color)]},
                 {"center", {obj.center.x(), obj.center.y(), obj.center.z()}},
                 {"extent", {obj.extent.x(), obj.extent.y(), obj.extent.z()}},
                 {"yaw", obj.yaw}});
        }
        json rec = {{"id", s.id},
                    {"room", {{"w", s.room_w}, {"l", s.room_l}, {"h", s.room_h}}},
                    {"split", splits[i]},
                    {"objects", objects}};
        out << rec.dump() << "\n";
    }
    if (!out) throw IoError("failed writing scene file: " + path);
}

std::vector<std::pair<Scene, std::string>> load_scenes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scene file: " + path);
    std::vector<std::pair<Scene, std::string>> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw SchemaError("scene line " + std::to_string(line_no) + ": " + e.what());
        }
        Scene s;
        s.id = rec.at("id").get<int>();
        s.room_w = rec.at("room").at("w").get<double>();
        s.room_l = rec.at("room").at("l").get<double>();
        s.room_h = rec.at("room").at("h").get<double>();
        for (const auto& o : rec.at("objects")) {
            SceneObject obj;
            obj.category = category_id(o.at("category").get<std::string>());
            obj.color = color_id(o.at("color").get<std::string>());
            obj.center = Vec3(o.at("center")[0].get<double>(), o.at("center")[1].get<double>(),
                              o.at("center")[2].get<double>());
            obj.extent = Vec3(o.at("extent")[0].get<double>(), o.at("extent")[1].get<double>(),
                              o.at("extent")[2].get<double>());
            obj.yaw = o.at("yaw").get<double>();
            s.objects.push_back(obj);
        }
        out.emplace_back(std::move(s), rec.at("split").get<std::string>());
    }
    return out;
}

std::vector<std::string> vocabulary_words() {
    std::vector<std::string> words = {
        "i",    "am",    "standing", "beside", "the",   "facing", "is",     "on",
        "my",   "left",  "right",    "which",  "object", "in",    "front",  "of",
        "me",   "behind", "how",     "many",   "are",   "room",   "what",   "color",
        "closest", "to", "can",      "reach",  "within", "one",   "meter"};
    for (const auto& c : category_names()) words.push_back(c);
    for (const auto& c : category_plurals()) words.push_back(c);
    for (const auto& c : color_names()) words.push_back(c);
    return words;
}

} // namespace situ3d::scene
