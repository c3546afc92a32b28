#include "support/independent_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace situ3d::testsupport {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Signed angle from the agent heading to the object, CCW positive, degrees.
// Positive angles are on the agent's left.
double signed_bearing_deg(const scene::Scene& sc, const geom::SituationVector& gt, int idx) {
    const double hx = gt.rot()(0, 1); // heading = R * (0,1,0)
    const double hy = gt.rot()(1, 1);
    const double vx = sc.objects[static_cast<std::size_t>(idx)].center.x() - gt.pos().x();
    const double vy = sc.objects[static_cast<std::size_t>(idx)].center.y() - gt.pos().y();
    return std::atan2(hx * vy - hy * vx, hx * vx + hy * vy) * 180.0 / kPi;
}

double distance_to(const scene::Scene& sc, const geom::SituationVector& gt, int idx) {
    const double vx = sc.objects[static_cast<std::size_t>(idx)].center.x() - gt.pos().x();
    const double vy = sc.objects[static_cast<std::size_t>(idx)].center.y() - gt.pos().y();
    return std::hypot(vx, vy);
}

std::vector<std::string> words_of(const std::string& text) {
    std::string cleaned;
    for (const char ch : text) {
        if (ch == '?' || ch == '.' || ch == ',') continue;
        cleaned.push_back(ch);
    }
    std::istringstream ss(cleaned);
    std::vector<std::string> words;
    std::string w;
    while (ss >> w) words.push_back(w);
    return words;
}

std::optional<int> find_color(const std::vector<std::string>& words) {
    for (const auto& w : words) {
        const auto& names = scene::color_names();
        const auto it = std::find(names.begin(), names.end(), w);
        if (it != names.end()) return static_cast<int>(it - names.begin());
    }
    return std::nullopt;
}

std::optional<int> find_category(const std::vector<std::string>& words) {
    for (const auto& w : words) {
        const auto& names = scene::category_names();
        const auto it = std::find(names.begin(), names.end(), w);
        if (it != names.end()) return static_cast<int>(it - names.begin());
    }
    return std::nullopt;
}

std::optional<int> find_plural_category(const std::vector<std::string>& words) {
    for (const auto& w : words) {
        const auto& plurals = scene::category_plurals();
        const auto it = std::find(plurals.begin(), plurals.end(), w);
        if (it != plurals.end()) return static_cast<int>(it - plurals.begin());
    }
    return std::nullopt;
}

std::optional<int> object_by_desc(const scene::Scene& sc, int color, int category) {
    std::optional<int> found;
    for (std::size_t i = 0; i < sc.objects.size(); ++i) {
        if (sc.objects[i].color == color && sc.objects[i].category == category) {
            if (found) return std::nullopt; // not unique
            found = static_cast<int>(i);
        }
    }
    return found;
}

bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

} // namespace

std::optional<std::string> independent_answer(const scene::Scene& sc,
                                              const geom::SituationVector& gt,
                                              const std::string& question) {
    const std::vector<std::string> words = words_of(question);
    if (words.empty()) return std::nullopt;

    if (words[0] == "Is") {
        // "Is the <color> <category> on my left|right?"
        const auto color = find_color(words);
        const auto category = find_category(words);
        if (!color || !category) return std::nullopt;
        const auto idx = object_by_desc(sc, *color, *category);
        if (!idx) return std::nullopt;
        const double bearing = signed_bearing_deg(sc, gt, *idx);
        const bool on_left = bearing > 0.0;
        if (contains(question, "left")) return on_left ? "yes" : "no";
        if (contains(question, "right")) return on_left ? "no" : "yes";
        return std::nullopt;
    }

    if (words[0] == "Which") {
        // "Which object is <in front of me|behind me|on my left|on my right>?"
        double center = 0.0;
        if (contains(question, "front")) center = 0.0;
        else if (contains(question, "behind")) center = 180.0;
        else if (contains(question, "left")) center = 90.0;
        else if (contains(question, "right")) center = -90.0;
        else return std::nullopt;
        int best = -1;
        double best_d = 1e30;
        for (std::size_t i = 0; i < sc.objects.size(); ++i) {
            double delta = signed_bearing_deg(sc, gt, static_cast<int>(i)) - center;
            while (delta > 180.0) delta -= 360.0;
            while (delta < -180.0) delta += 360.0;
            if (std::abs(delta) > 45.0) continue;
            const double d = distance_to(sc, gt, static_cast<int>(i));
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        if (best < 0) return std::nullopt;
        return scene::category_names()[static_cast<std::size_t>(
            sc.objects[static_cast<std::size_t>(best)].category)];
    }

    if (words[0] == "How") {
        const auto category = find_plural_category(words);
        if (!category) return std::nullopt;
        int count = 0;
        for (const auto& obj : sc.objects) count += obj.category == *category ? 1 : 0;
        return std::to_string(count);
    }

    if (words[0] == "What" && contains(question, "closest")) {
        int best = -1;
        double best_d = 1e30;
        for (std::size_t i = 0; i < sc.objects.size(); ++i) {
            const double d = distance_to(sc, gt, static_cast<int>(i));
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        if (best < 0) return std::nullopt;
        return scene::category_names()[static_cast<std::size_t>(
            sc.objects[static_cast<std::size_t>(best)].category)];
    }

    if (words[0] == "What" && words.size() > 1 && words[1] == "color") {
        // "What color is the <category> on my left|right?"
        const auto category = find_category(words);
        if (!category) return std::nullopt;
        const bool want_left = contains(question, "left");
        std::optional<int> found;
        for (std::size_t i = 0; i < sc.objects.size(); ++i) {
            if (sc.objects[i].category != *category) continue;
            const bool on_left = signed_bearing_deg(sc, gt, static_cast<int>(i)) > 0.0;
            if (on_left != want_left) continue;
            if (found) return std::nullopt; // not unique on that side
            found = static_cast<int>(i);
        }
        if (!found) return std::nullopt;
        return scene::color_names()[static_cast<std::size_t>(
            sc.objects[static_cast<std::size_t>(*found)].color)];
    }

    if (words[0] == "Can") {
        const auto color = find_color(words);
        const auto category = find_category(words);
        if (!color || !category) return std::nullopt;
        const auto idx = object_by_desc(sc, *color, *category);
        if (!idx) return std::nullopt;
        return distance_to(sc, gt, *idx) <= 1.0 ? "yes" : "no";
    }

    return std::nullopt;
}

} // namespace situ3d::testsupport
