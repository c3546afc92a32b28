#include "situ3d/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace situ3d::eval {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

const std::vector<double> kLocThresholds = {0.25, 0.5, 1.0, 2.0};
const std::vector<double> kRotThresholds = {5.0, 15.0, 30.0, 60.0};
const std::vector<std::string> kQuestionTypes = {"What", "Is", "How", "Can", "Which", "Other"};

double localization_accuracy(const std::vector<SituationVector>& preds,
                             const std::vector<SituationVector>& gts, double threshold_m) {
    if (preds.size() != gts.size()) throw LengthMismatch("prediction/gt count mismatch");
    if (preds.empty()) throw LengthMismatch("no predictions to score");
    int hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double dx = preds[i].pos().x() - gts[i].pos().x();
        const double dy = preds[i].pos().y() - gts[i].pos().y();
        hits += std::hypot(dx, dy) <= threshold_m ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double orientation_accuracy(const std::vector<SituationVector>& preds,
                            const std::vector<SituationVector>& gts, double threshold_deg) {
    if (preds.size() != gts.size()) throw LengthMismatch("prediction/gt count mismatch");
    if (preds.empty()) throw LengthMismatch("no predictions to score");
    int hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        hits += geom::angular_error_deg(preds[i].yaw(), gts[i].yaw()) <= threshold_deg ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

EmResult em_at_1(const std::vector<Eigen::VectorXd>& pred_logits,
                 const std::vector<std::string>& gt_answers,
                 const std::vector<std::string>& question_types,
                 const std::vector<std::string>& answer_vocab) {
    if (pred_logits.size() != gt_answers.size() || gt_answers.size() != question_types.size())
        throw LengthMismatch("em_at_1 input lengths differ");

    EmResult result;
    std::map<std::string, int> hits;
    for (const auto& t : kQuestionTypes) {
        hits[t] = 0;
        result.count_by_type[t] = 0;
    }
    int total_hits = 0;
    for (std::size_t i = 0; i < pred_logits.size(); ++i) {
        std::string type = question_types[i];
        if (result.count_by_type.find(type) == result.count_by_type.end()) type = "Other";
        result.count_by_type[type] += 1;

        bool known = false;
        for (const auto& a : answer_vocab) known = known || a == gt_answers[i];
        if (!known) {
            result.n_unknown_answers += 1;
            continue; // counted as a miss
        }
        if (pred_logits[i].size() != static_cast<Eigen::Index>(answer_vocab.size()))
            throw LengthMismatch("logit length does not match the answer vocabulary");
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < pred_logits[i].size(); ++j)
            if (pred_logits[i](j) > pred_logits[i](best)) best = j;
        if (answer_vocab[static_cast<std::size_t>(best)] == gt_answers[i]) {
            hits[type] += 1;
            total_hits += 1;
        }
    }
    result.overall = pred_logits.empty()
                         ? 0.0
                         : static_cast<double>(total_hits) / static_cast<double>(pred_logits.size());
    for (const auto& t : kQuestionTypes) {
        const int n = result.count_by_type[t];
        result.by_type[t] = n == 0 ? 0.0 : static_cast<double>(hits[t]) / static_cast<double>(n);
    }
    return result;
}

std::vector<SituationVector> random_situation_baseline(const Eigen::Vector2d& lo,
                                                       const Eigen::Vector2d& hi,
                                                       std::uint64_t seed, int n) {
    if (n < 1) throw LengthMismatch("baseline needs at least one sample");
    Rng rng(seed);
    std::vector<SituationVector> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(lo.x(), hi.x());
        const double y = rng.uniform(lo.y(), hi.y());
        const double yaw = rng.uniform(-kPi, kPi);
        out.push_back(SituationVector::from_yaw(geom::Vec3(x, y, 0.0), yaw));
    }
    return out;
}

std::string MetricsReport::to_text() const {
    std::string out = "situ3d-report v1\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "n %d\n", n);
    out += buf;
    std::snprintf(buf, sizeof(buf), "unknown_answers %d\n", n_unknown_answers);
    out += buf;
    for (const auto& [thr, acc] : loc_acc) {
        std::snprintf(buf, sizeof(buf), "loc_acc %.2f %.4f\n", thr, acc);
        out += buf;
    }
    for (const auto& [thr, acc] : rot_acc) {
        std::snprintf(buf, sizeof(buf), "rot_acc %.0f %.4f\n", thr, acc);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "em1_overall %.4f\n", em1_overall);
    out += buf;
    for (const auto& t : kQuestionTypes) {
        const auto fit = em1_by_type.find(t);
        const auto cit = count_by_type.find(t);
        std::snprintf(buf, sizeof(buf), "em1_type %s %.4f %d\n", t.c_str(),
                      fit == em1_by_type.end() ? 0.0 : fit->second,
                      cit == count_by_type.end() ? 0 : cit->second);
        out += buf;
    }
    return out;
}

void MetricsReport::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    double prev = -1.0;
    for (const auto& [thr, acc] : loc_acc) {
        if (!in_unit(acc) || acc < prev)
            throw LengthMismatch("localization accuracy is not monotone in the threshold");
        prev = acc;
    }
    prev = -1.0;
    for (const auto& [thr, acc] : rot_acc) {
        if (!in_unit(acc) || acc < prev)
            throw LengthMismatch("orientation accuracy is not monotone in the threshold");
        prev = acc;
    }
    if (!in_unit(em1_overall)) throw LengthMismatch("EM@1 out of range");
    int total = 0;
    for (const auto& [type, count] : count_by_type) total += count;
    if (total != n) throw LengthMismatch("per-type counts do not sum to the total");
}

MetricsReport evaluate_model(const net::SituNet& model, const net::Dataset& data,
                             net::Mode mode) {
    if (data.test.empty()) throw ConfigError("evaluation split is empty");
    std::vector<SituationVector> preds, gts;
    std::vector<Eigen::VectorXd> logits;
    std::vector<std::string> answers, types;
    for (const auto& ep : data.test) {
        const net::SceneInput& scene = data.scenes[static_cast<std::size_t>(ep.scene_index)];
        const net::ModePrediction pred =
            net::run_mode(model, scene, ep, mode, data.answer_vocab);
        preds.push_back(pred.situation);
        gts.push_back(ep.gt);
        logits.push_back(pred.answer_logits);
        answers.push_back(ep.answer_text);
        types.push_back(ep.question_type);
    }

    MetricsReport report;
    report.n = static_cast<int>(data.test.size());
    for (const double thr : kLocThresholds)
        report.loc_acc[thr] = localization_accuracy(preds, gts, thr);
    for (const double thr : kRotThresholds)
        report.rot_acc[thr] = orientation_accuracy(preds, gts, thr);
    const EmResult em = em_at_1(logits, answers, types, data.answer_vocab);
    report.em1_overall = em.overall;
    report.em1_by_type = em.by_type;
    report.count_by_type = em.count_by_type;
    report.n_unknown_answers = em.n_unknown_answers;
    report.validate();
    return report;
}

std::string AblationTable::to_text() const {
    std::string out = "situ3d-ablation v1\n";
    out += "mode seed acc@0.5m acc@1.0m acc@15deg acc@30deg em1\n";
    char buf[240];
    std::vector<std::string> seen_modes;
    for (const auto& cell : cells) {
        std::snprintf(buf, sizeof(buf), "%s %llu %.4f %.4f %.4f %.4f %.4f\n", cell.mode.c_str(),
                      static_cast<unsigned long long>(cell.seed), cell.report.loc_acc.at(0.5),
                      cell.report.loc_acc.at(1.0), cell.report.rot_acc.at(15.0),
                      cell.report.rot_acc.at(30.0), cell.report.em1_overall);
        out += buf;
        if (std::find(seen_modes.begin(), seen_modes.end(), cell.mode) == seen_modes.end())
            seen_modes.push_back(cell.mode);
    }
    for (const auto& mode : seen_modes) {
        std::snprintf(buf, sizeof(buf), "mean %s acc@1.0m %.4f em1 %.4f\n", mode.c_str(),
                      mean_loc_acc(mode, 1.0), mean_em1(mode));
        out += buf;
    }
    return out;
}

double AblationTable::mean_loc_acc(const std::string& mode, double threshold) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& cell : cells) {
        if (cell.mode != mode) continue;
        sum += cell.report.loc_acc.at(threshold);
        n += 1;
    }
    if (n == 0) throw LengthMismatch("no ablation cells for mode " + mode);
    return sum / n;
}

double AblationTable::mean_em1(const std::string& mode) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& cell : cells) {
        if (cell.mode != mode) continue;
        sum += cell.report.em1_overall;
        n += 1;
    }
    if (n == 0) throw LengthMismatch("no ablation cells for mode " + mode);
    return sum / n;
}

std::pair<double, double> AblationTable::em1_stats(
    const std::string& mode, const std::vector<std::string>& types) const {
    std::vector<double> values;
    for (const auto& cell : cells) {
        if (cell.mode != mode) continue;
        double hits = 0.0, count = 0.0;
        for (const auto& t : types) {
            const int c = cell.report.count_by_type.at(t);
            hits += cell.report.em1_by_type.at(t) * c;
            count += c;
        }
        values.push_back(count == 0.0 ? 0.0 : hits / count);
    }
    if (values.empty()) throw LengthMismatch("no ablation cells for mode " + mode);
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (const double v : values) var += (v - mean) * (v - mean);
    var = values.size() > 1 ? var / static_cast<double>(values.size() - 1) : 0.0;
    return {mean, std::sqrt(var)};
}

AblationTable run_ablation_suite(const net::Dataset& data, const std::vector<net::Mode>& modes,
                                 const std::vector<std::uint64_t>& seeds,
                                 const net::ModelConfig& model_config,
                                 const net::TrainSettings& base_settings) {
    AblationTable table;
    for (const std::uint64_t seed : seeds) {
        for (const net::Mode mode : modes) {
            net::ModelConfig mc = model_config;
            mc.init_seed = seed;
            net::SituNet model(mc);
            net::TrainSettings settings = base_settings;
            settings.mode = mode;
            settings.seed = seed;
            net::train_model(model, data, settings);
            AblationCell cell;
            cell.mode = net::mode_name(mode);
            cell.seed = seed;
            cell.report = evaluate_model(model, data, mode);
            table.cells.push_back(std::move(cell));
        }
    }
    return table;
}

} // namespace situ3d::eval
