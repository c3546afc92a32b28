#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "situ3d/nn/gradcheck.hpp"
#include "situ3d/sittarget.hpp"

using namespace situ3d;
using geom::SituationVector;
using geom::Vec3;
using sit::AnchorTargets;

namespace {

vox::TokenSet grid_tokens(int side, double pitch, int n_pad = 0) {
    vox::TokenSet tokens;
    const int n = side * side + n_pad;
    tokens.anchors.setZero(n, 3);
    tokens.features.setZero(n, 4);
    tokens.mask.assign(static_cast<std::size_t>(n), 0);
    tokens.pitch = pitch;
    int r = 0;
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j, ++r) {
            tokens.anchors.row(r) << (i + 0.5) * pitch, (j + 0.5) * pitch, 0.1;
            tokens.mask[static_cast<std::size_t>(r)] = 1;
        }
    }
    tokens.scene_min = Vec3(0, 0, 0);
    tokens.scene_max = Vec3(side * pitch, side * pitch, 0.2);
    return tokens;
}

vox::TokenSet random_tokens(int n, double extent, Rng& rng) {
    vox::TokenSet tokens;
    tokens.anchors.setZero(n, 3);
    tokens.features.setZero(n, 4);
    tokens.mask.assign(static_cast<std::size_t>(n), 1);
    tokens.pitch = 0.3;
    for (int i = 0; i < n; ++i)
        tokens.anchors.row(i) << rng.uniform(0.0, extent), rng.uniform(0.0, extent),
            rng.uniform(0.0, 0.3);
    tokens.scene_min = Vec3(0, 0, 0);
    tokens.scene_max = Vec3(extent, extent, 0.3);
    return tokens;
}

} // namespace

TEST_CASE("gaussian_targets closed forms") {
    SUBCASE("anchor exactly at the pose gets likelihood one") {
        auto tokens = grid_tokens(3, 1.0);
        const SituationVector gt =
            SituationVector::from_yaw(Vec3(tokens.anchors(4, 0), tokens.anchors(4, 1), 0), 0.3);
        const auto targets = sit::gaussian_targets(tokens, gt, 0.5, 1.0);
        CHECK(targets.likelihood(4) == doctest::Approx(1.0));
        CHECK(targets.likelihood.maxCoeff() == doctest::Approx(1.0));
    }
    SUBCASE("anchor at distance sigma_eff scores exp(-1/2) after normalization") {
        vox::TokenSet tokens;
        tokens.anchors.setZero(2, 3);
        tokens.anchors.row(0) << 0.0, 0.0, 0.0;
        tokens.anchors.row(1) << 0.8, 0.0, 0.0; // exactly sigma_eff away
        tokens.features.setZero(2, 4);
        tokens.mask = {1, 1};
        tokens.pitch = 0.4;
        const SituationVector gt = SituationVector::from_yaw(Vec3(0, 0, 0), 0.0);
        const auto targets = sit::gaussian_targets(tokens, gt, 0.4, 2.0);
        CHECK(targets.likelihood(0) == doctest::Approx(1.0));
        CHECK(targets.likelihood(1) == doctest::Approx(std::exp(-0.5)));
    }
    SUBCASE("padding rows stay at zero") {
        auto tokens = grid_tokens(2, 1.0, 3);
        const SituationVector gt = SituationVector::from_yaw(Vec3(0.5, 0.5, 0), 0.0);
        const auto targets = sit::gaussian_targets(tokens, gt, 1.0, 1.0);
        for (int i = 4; i < 7; ++i) {
            CHECK(targets.likelihood(i) == 0.0);
            CHECK(targets.rot_mask[static_cast<std::size_t>(i)] == 0);
        }
    }
}

TEST_CASE("gaussian_targets argmax equals brute-force nearest anchor") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto tokens = random_tokens(40, 5.0, rng);
        const SituationVector gt = SituationVector::from_yaw(
            Vec3(rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0), 0.0), rng.uniform(-3.0, 3.0));
        const auto targets = sit::gaussian_targets(tokens, gt, 0.6, 2.0);

        int nearest = 0;
        double best = 1e30;
        for (int i = 0; i < 40; ++i) {
            const double d = std::hypot(tokens.anchors(i, 0) - gt.pos().x(),
                                        tokens.anchors(i, 1) - gt.pos().y());
            if (d < best) {
                best = d;
                nearest = i;
            }
        }
        int argmax = 0;
        targets.likelihood.maxCoeff(&argmax);
        CHECK(argmax == nearest);
        CHECK(targets.likelihood(argmax) == doctest::Approx(1.0));
    }
}

TEST_CASE("enlarging sigma never moves the argmax") {
    Rng rng(7);
    auto tokens = random_tokens(30, 4.0, rng);
    const SituationVector gt = SituationVector::from_yaw(Vec3(1.7, 2.2, 0), 0.5);
    int base_argmax = 0;
    sit::gaussian_targets(tokens, gt, 0.5, 1.0).likelihood.maxCoeff(&base_argmax);
    for (const double enlarge : {1.5, 2.0, 4.0, 8.0}) {
        int argmax = 0;
        sit::gaussian_targets(tokens, gt, 0.5, enlarge).likelihood.maxCoeff(&argmax);
        CHECK(argmax == base_argmax);
    }
}

TEST_CASE("likelihood is non-increasing with distance") {
    Rng rng(9);
    auto tokens = random_tokens(50, 5.0, rng);
    const SituationVector gt = SituationVector::from_yaw(Vec3(2.0, 2.5, 0), -0.4);
    const auto targets = sit::gaussian_targets(tokens, gt, 0.7, 2.0);
    std::vector<std::pair<double, double>> pairs; // (distance, likelihood)
    for (int i = 0; i < 50; ++i)
        pairs.emplace_back(std::hypot(tokens.anchors(i, 0) - gt.pos().x(),
                                      tokens.anchors(i, 1) - gt.pos().y()),
                           targets.likelihood(i));
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i)
        CHECK(pairs[i].second <= pairs[i - 1].second + 1e-12);
}

TEST_CASE("situation_loss values") {
    auto tokens = grid_tokens(2, 1.0);
    const SituationVector gt = SituationVector::from_yaw(Vec3(0.5, 0.5, 0), 0.9);
    const auto targets = sit::gaussian_targets(tokens, gt, 1.0, 1.0);

    SUBCASE("optimum: logit targets and exact rotation give the soft-label entropy") {
        Eigen::MatrixXd pred(4, 7);
        for (int i = 0; i < 4; ++i) {
            const double p = targets.likelihood(i);
            const double clamped = std::min(std::max(p, 1e-15), 1.0 - 1e-15);
            pred(i, 0) = std::log(clamped / (1.0 - clamped));
            pred(i, 0) = std::min(std::max(pred(i, 0), -40.0), 40.0);
            pred.row(i).segment<6>(1) = targets.rot6d.row(i);
        }
        double entropy = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double p = targets.likelihood(i);
            if (p > 0.0 && p < 1.0)
                entropy += -(p * std::log(p) + (1 - p) * std::log(1 - p)) / 4.0;
        }
        const double loss = sit::situation_loss_value(pred, targets, tokens.mask, 1.0);
        CHECK(loss == doctest::Approx(entropy).epsilon(1e-6));
    }

    SUBCASE("all-zero prediction matches a hand-computed value") {
        const Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(4, 7);
        // BCE at logit 0 is log(2) regardless of the target
        double expected = std::log(2.0);
        // every anchor is rotation-supervised here (soft labels all >= 0.5)
        double l1 = 0.0;
        int n_rot = 0;
        for (int i = 0; i < 4; ++i) {
            if (!targets.rot_mask[static_cast<std::size_t>(i)]) continue;
            l1 += targets.rot6d.row(i).cwiseAbs().sum() / 6.0;
            n_rot += 1;
        }
        REQUIRE(n_rot > 0);
        expected += l1 / n_rot;
        const double loss = sit::situation_loss_value(pred, targets, tokens.mask, 1.0);
        CHECK(loss == doctest::Approx(expected).epsilon(1e-9));
    }

    SUBCASE("rotation term is minimized exactly at the target vectors") {
        Rng rng(11);
        Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(4, 7);
        for (int i = 0; i < 4; ++i) pred.row(i).segment<6>(1) = targets.rot6d.row(i);
        const double at_target = sit::situation_loss_value(pred, targets, tokens.mask, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::MatrixXd jittered = pred;
            for (int i = 0; i < 4; ++i)
                for (int j = 1; j < 7; ++j) jittered(i, j) += rng.uniform(-0.3, 0.3);
            CHECK(sit::situation_loss_value(jittered, targets, tokens.mask, 1.0) >=
                  at_target - 1e-12);
        }
    }
}

TEST_CASE("situation_loss gradient passes central differences") {
    Rng rng(13);
    auto tokens = random_tokens(12, 3.0, rng);
    const SituationVector gt = SituationVector::from_yaw(Vec3(1.0, 1.5, 0), 0.7);
    const auto targets = sit::gaussian_targets(tokens, gt, 0.5, 2.0);

    nn::ParameterSet ps;
    nn::Param& pred = ps.create("pred", 12, 7);
    for (int i = 0; i < pred.value.size(); ++i) pred.value(i) = rng.uniform(-1.5, 1.5);

    auto loss = [&] {
        nn::Graph g;
        const nn::Tensor out =
            sit::situation_loss(g, g.param(ps.at("pred")), targets, tokens.mask, 1.3);
        g.backward(out);
        return out.item();
    };
    auto fwd = [&] {
        nn::Graph g;
        return sit::situation_loss(g, g.param(ps.at("pred")), targets, tokens.mask, 1.3).item();
    };
    const auto report = nn::grad_check(ps, loss, fwd);
    CHECK_MESSAGE(report.pass(), report.summary());
}

TEST_CASE("decode_situation basics") {
    auto tokens = grid_tokens(3, 1.0);
    SUBCASE("peak token wins") {
        Eigen::MatrixXd pred = Eigen::MatrixXd::Constant(9, 7, -10.0);
        pred.col(1).setConstant(1.0);
        pred.col(5).setConstant(1.0); // valid 6D identity-ish
        pred(5, 0) = 10.0;
        const SituationVector s =
            sit::decode_situation(pred, tokens.anchors, tokens.mask);
        CHECK(s.pos().x() == doctest::Approx(tokens.anchors(5, 0)));
        CHECK(s.pos().y() == doctest::Approx(tokens.anchors(5, 1)));
        CHECK(s.pos().z() == doctest::Approx(tokens.anchors(5, 2)));
    }
    SUBCASE("ties resolve to the lowest index") {
        Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(9, 7);
        pred.col(1).setConstant(1.0);
        pred.col(5).setConstant(1.0);
        const SituationVector s = sit::decode_situation(pred, tokens.anchors, tokens.mask);
        CHECK(s.pos().x() == doctest::Approx(tokens.anchors(0, 0)));
        CHECK(s.pos().y() == doctest::Approx(tokens.anchors(0, 1)));
    }
    SUBCASE("gt rotation encoded at the peak round-trips") {
        const double yaw = 1.234;
        Eigen::MatrixXd pred = Eigen::MatrixXd::Constant(9, 7, -5.0);
        pred.col(1).setConstant(1.0);
        pred.col(5).setConstant(1.0);
        pred(3, 0) = 5.0;
        pred.row(3).segment<6>(1) = geom::matrix_to_rot6d(geom::rot_z(yaw)).transpose();
        const SituationVector s = sit::decode_situation(pred, tokens.anchors, tokens.mask);
        CHECK(std::abs(s.yaw() - yaw) < 1e-6);
    }
    SUBCASE("no real tokens") {
        Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(4, 7);
        auto padded = grid_tokens(2, 1.0);
        padded.mask.assign(4, 0);
        CHECK_THROWS_AS(sit::decode_situation(pred, padded.anchors, padded.mask), NoRealTokens);
    }
}

TEST_CASE("inject gaussian targets and decode recovers the pose") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const double pitch = rng.uniform(0.2, 0.6);
        const int side = 2 + static_cast<int>(rng.uniform_int(0, 6));
        auto tokens = grid_tokens(side, pitch);
        const double span = side * pitch;
        const SituationVector gt = SituationVector::from_yaw(
            Vec3(rng.uniform(0.0, span), rng.uniform(0.0, span), 0.0),
            rng.uniform(-3.1, 3.1));
        const auto targets =
            sit::gaussian_targets(tokens, gt, 2.0 * pitch, 2.0);

        Eigen::MatrixXd pred(tokens.count(), 7);
        for (int i = 0; i < tokens.count(); ++i) {
            const double p = std::min(std::max(targets.likelihood(i), 1e-12), 1.0 - 1e-12);
            pred(i, 0) = std::log(p / (1.0 - p));
            pred.row(i).segment<6>(1) = targets.rot6d.row(i);
        }
        const SituationVector decoded =
            sit::decode_situation(pred, tokens.anchors, tokens.mask);
        const double err = std::hypot(decoded.pos().x() - gt.pos().x(),
                                      decoded.pos().y() - gt.pos().y());
        CHECK(err <= pitch * std::sqrt(2.0) / 2.0 + 1e-9);
        CHECK(std::abs(geom::wrap_angle(decoded.yaw() - gt.yaw())) < 1e-6);
    }
}
