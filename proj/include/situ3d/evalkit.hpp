#pragma once

#include <map>
#include <string>
#include <vector>

#include "situ3d/geometry.hpp"
#include "situ3d/trainer.hpp"

namespace situ3d::eval {

using geom::SituationVector;

extern const std::vector<double> kLocThresholds;     // meters
extern const std::vector<double> kRotThresholds;     // degrees
extern const std::vector<std::string> kQuestionTypes; // fixed report order

struct MetricsReport {
    std::map<double, double> loc_acc; // threshold (m) -> fraction
    std::map<double, double> rot_acc; // threshold (deg) -> fraction
    double em1_overall = 0.0;
    std::map<std::string, double> em1_by_type;
    std::map<std::string, int> count_by_type;
    int n = 0;
    int n_unknown_answers = 0;

    std::string to_text() const;
    void validate() const; // range and monotonicity invariants
};

/// Fraction of predictions within `threshold_m` of ground truth on the x-y plane.
double localization_accuracy(const std::vector<SituationVector>& preds,
                             const std::vector<SituationVector>& gts, double threshold_m);

double orientation_accuracy(const std::vector<SituationVector>& preds,
                            const std::vector<SituationVector>& gts, double threshold_deg);

struct EmResult {
    double overall = 0.0;
    std::map<std::string, double> by_type;
    std::map<std::string, int> count_by_type;
    int n_unknown_answers = 0;
};

// Exact-match of the argmax answer, with the What/Is/How/Can/Which/Other
// breakdown. Ground-truth answers outside the vocabulary count as misses
// and are flagged.
EmResult em_at_1(const std::vector<Eigen::VectorXd>& pred_logits,
                 const std::vector<std::string>& gt_answers,
                 const std::vector<std::string>& question_types,
                 const std::vector<std::string>& answer_vocab);

/// Uniform position within the given x-y bounds, uniform heading.
std::vector<SituationVector> random_situation_baseline(const Eigen::Vector2d& lo,
                                                       const Eigen::Vector2d& hi,
                                                       std::uint64_t seed, int n);

/// Run the model over the test split under `mode` and aggregate all metrics.
MetricsReport evaluate_model(const net::SituNet& model, const net::Dataset& data,
                             net::Mode mode);

struct AblationCell {
    std::string mode;
    std::uint64_t seed = 0;
    MetricsReport report;
};

struct AblationTable {
    std::vector<AblationCell> cells;

    std::string to_text() const;
    double mean_loc_acc(const std::string& mode, double threshold) const;
    double mean_em1(const std::string& mode) const;
    /// Mean and standard deviation of EM@1 restricted to the given types.
    std::pair<double, double> em1_stats(const std::string& mode,
                                        const std::vector<std::string>& types) const;
};

// Trains one model per (mode, seed) cell on the dataset's train split and
// evaluates on its test split.
AblationTable run_ablation_suite(const net::Dataset& data, const std::vector<net::Mode>& modes,
                                 const std::vector<std::uint64_t>& seeds,
                                 const net::ModelConfig& model_config,
                                 const net::TrainSettings& base_settings);

} // namespace situ3d::eval
