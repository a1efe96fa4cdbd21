#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "comfort/mlp.hpp"
#include "comfort/testing/oracles.hpp"

using namespace comfort;

namespace {

// Small labeled split shared by the training tests.
const DatasetSplit& toy_split() {
    static const DatasetSplit split = split_and_normalize(generate_dataset(250, 7).records, 0.8, 7);
    return split;
}

MlpModel toy_model(std::uint64_t seed = 7) {
    auto m = init_model(kDefaultHiddenWidths, seed);
    m.norm = toy_split().stats;
    return m;
}

std::string saved(const MlpModel& m) {
    std::ostringstream out;
    save_model(out, m);
    return out.str();
}

MlpModel loaded(const std::string& text) {
    std::istringstream in(text);
    return load_model(in, "mem");
}

}  // namespace

TEST(InitModel, DeterministicPerSeed) {
    EXPECT_EQ(init_model(kDefaultHiddenWidths, 3), init_model(kDefaultHiddenWidths, 3));
    EXPECT_NE(init_model(kDefaultHiddenWidths, 3), init_model(kDefaultHiddenWidths, 4));
}

TEST(InitModel, DefaultShapeAndParameterCount) {
    const auto m = init_model(kDefaultHiddenWidths, 1);
    EXPECT_EQ(m.layer_dims(), (std::vector<std::size_t>{2, 16, 16, 16, 16, 1}));
    // 2*16+16 + 3*(16*16+16) + 16+1
    EXPECT_EQ(m.parameter_count(), 881u);
    EXPECT_TRUE(m.has_standard_depth());
    EXPECT_NO_THROW(m.validate());
}

TEST(InitModel, ScaledUniformBounds) {
    const auto m = init_model({8, 4, 4, 2}, 9);
    for (const auto& l : m.layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.inputs));
        for (double w : l.weights) EXPECT_LE(std::abs(w), bound);
        for (double b : l.biases) EXPECT_LE(std::abs(b), bound);
    }
}

TEST(InitModel, RejectsZeroWidth) { EXPECT_THROW(init_model({16, 0, 16, 16}, 1), InvalidArgument); }

TEST(Forward, ZeroNetworkIsOneHalf) {
    const auto m = make_model_shape(kDefaultHiddenWidths);
    EXPECT_EQ(forward(m, {0.3, 0.9}), 0.5);
    EXPECT_EQ(forward(m, {-100.0, 7.0}), 0.5);
}

TEST(Forward, SingleUnitChainMatchesHandComposition) {
    const std::array<std::size_t, 4> ones{1, 1, 1, 1};
    auto m = make_model_shape(ones);
    m.layers[0].weights = {0.3, -0.2};
    m.layers[0].biases = {0.1};
    for (int i = 1; i <= 3; ++i) {
        m.layers[i].weights = {2.0};
        m.layers[i].biases = {-0.1};
    }
    m.layers[4].weights = {1.5};
    m.layers[4].biases = {-0.5};

    const double h1 = std::max(0.0, 0.3 * 0.5 - 0.2 * 0.25 + 0.1);  // 0.2
    const double h2 = std::max(0.0, 2.0 * h1 - 0.1);                 // 0.3
    const double h3 = std::max(0.0, 2.0 * h2 - 0.1);                 // 0.5
    const double h4 = std::max(0.0, 2.0 * h3 - 0.1);                 // 0.9
    const double expected = 1.0 / (1.0 + std::exp(-(1.5 * h4 - 0.5)));
    EXPECT_NEAR(forward(m, {0.5, 0.25}), expected, 1e-12);

    // Negative pre-activation is cut by the ReLU.
    EXPECT_NEAR(forward(m, {0.0, 1.0}), 1.0 / (1.0 + std::exp(0.5)), 1e-12);
}

TEST(Forward, OutputStaysInsideUnitInterval) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> in(-5.0, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        auto m = init_model(kDefaultHiddenWidths, trial);
        for (auto& l : m.layers)
            for (auto& w : l.weights) w *= 0.5 + trial * 0.1;
        for (int k = 0; k < 40; ++k) {
            const double y = forward(m, {in(rng), in(rng)});
            ASSERT_GE(y, 0.0);
            ASSERT_LE(y, 1.0);
            ASSERT_TRUE(std::isfinite(y));
        }
    }
}

TEST(Gradient, BackpropMatchesFiniteDifferences) {
    auto m = init_model({3, 3, 3, 3}, 21);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::array<double, 2>> x(5);
    std::vector<double> y(5);
    for (int i = 0; i < 5; ++i) {
        x[i] = {u(rng), u(rng)};
        y[i] = u(rng);
    }
    Gradients g;
    const double loss = loss_and_gradient(m, x, y, g);
    EXPECT_NEAR(loss, comfort::testing::mse_loss(m, x, y), 1e-15);

    const auto analytic = comfort::testing::flatten(g);
    const auto numeric = comfort::testing::finite_difference_gradient(m, x, y, 1e-5);
    ASSERT_EQ(analytic.size(), numeric.size());
    ASSERT_EQ(analytic.size(), m.parameter_count());
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i)
        worst = std::max(worst, comfort::testing::relative_error(analytic[i], numeric[i], 1e-7));
    EXPECT_LT(worst, 1e-4);
}

TEST(Train, LossDecreasesOnToyProblem) {
    TrainConfig cfg;
    cfg.epochs = 50;
    const auto r = train(toy_model(), toy_split().train, cfg);
    ASSERT_EQ(r.loss_history.size(), 50u);
    EXPECT_LT(r.loss_history.back(), r.loss_history.front());
    EXPECT_FALSE(r.diverged);
}

TEST(Train, DeterministicGivenSeeds) {
    TrainConfig cfg;
    cfg.epochs = 5;
    const auto a = train(toy_model(), toy_split().train, cfg);
    const auto b = train(toy_model(), toy_split().train, cfg);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.loss_history, b.loss_history);
    cfg.seed = 8;
    EXPECT_NE(train(toy_model(), toy_split().train, cfg).model, a.model);
}

TEST(Train, OversizedStepIsFlaggedAsDiverged) {
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 1e3;
    try {
        const auto r = train(toy_model(), toy_split().train, cfg);
        EXPECT_TRUE(r.diverged);
        EXPECT_GT(r.loss_history.back(), r.loss_history.front());
    } catch (const DivergedTraining&) {
        SUCCEED();
    }
}

TEST(Train, NonFiniteLossAborts) {
    auto m = toy_model();
    NormalizedSplit bad = toy_split().train;
    bad.targets[3] = NAN;
    TrainConfig cfg;
    cfg.epochs = 2;
    EXPECT_THROW(train(m, bad, cfg), DivergedTraining);
}

TEST(Train, RejectsInvalidConfig) {
    TrainConfig cfg;
    cfg.epochs = 0;
    EXPECT_THROW(train(toy_model(), toy_split().train, cfg), InvalidArgument);
    cfg = {};
    cfg.batch_size = 0;
    EXPECT_THROW(train(toy_model(), toy_split().train, cfg), InvalidArgument);
    cfg = {};
    cfg.adam_beta1 = 1.0;
    EXPECT_THROW(train(toy_model(), toy_split().train, cfg), InvalidArgument);
    EXPECT_THROW(train(toy_model(), NormalizedSplit{}, TrainConfig{}), InvalidArgument);
}

TEST(Metrics, PerfectPrediction) {
    const std::vector<double> t{0.1, 0.4, 0.9};
    const auto m = compute_metrics(t, t);
    EXPECT_EQ(m, (Metrics{0.0, 0.0, 1.0}));
}

TEST(Metrics, MeanPredictorHasZeroR2) {
    const std::vector<double> t{0.1, 0.4, 0.7};
    const std::vector<double> p(3, 0.4);
    const auto m = compute_metrics(p, t);
    EXPECT_NEAR(m.r_squared, 0.0, 1e-15);
    EXPECT_NEAR(m.mse, 0.06, 1e-15);
    EXPECT_NEAR(m.mae, 0.2, 1e-15);
}

TEST(Metrics, ConstantTargetsLeaveR2Undefined) {
    const std::vector<double> t(4, 0.3);
    EXPECT_THROW(compute_metrics(t, t), UndefinedR2);
}

TEST(Metrics, InvariantsOnRandomPredictions) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(20), t(20);
        for (int i = 0; i < 20; ++i) {
            p[i] = u(rng);
            t[i] = u(rng);
        }
        const auto m = compute_metrics(p, t);
        EXPECT_GE(m.mse, 0.0);
        EXPECT_GE(m.mae, 0.0);
        EXPECT_LE(m.r_squared, 1.0);
        EXPECT_LE(m.mae * m.mae, m.mse + 1e-15);
    }
}

TEST(PredictPmv, FlagsInputsOutsideTrainingBox) {
    const auto m = toy_model();
    EXPECT_TRUE(predict_pmv(m, 60.0, 50.0).out_of_domain);
    EXPECT_TRUE(predict_pmv(m, 25.0, 101.0).out_of_domain);
    EXPECT_FALSE(predict_pmv(m, 25.0, 50.0).out_of_domain);
}

TEST(PredictPmv, DenormalizesIntoClampRange) {
    const auto m = toy_model();
    const auto p = predict_pmv(m, 25.0, 50.0);
    EXPECT_NEAR(p.pmv, -4.0 + 8.0 * p.normalized_output, 1e-12);
    EXPECT_GT(p.pmv, -4.0);
    EXPECT_LT(p.pmv, 4.0);
}

TEST(WeightFile, RoundTripPreservesModelAndMetrics) {
    TrainConfig cfg;
    cfg.epochs = 3;
    const auto trained = train(toy_model(), toy_split().train, cfg).model;
    const auto back = loaded(saved(trained));
    EXPECT_EQ(back, trained);
    EXPECT_EQ(evaluate(back, toy_split().test), evaluate(trained, toy_split().test));
    EXPECT_EQ(saved(back), saved(trained));
}

TEST(WeightFile, DocumentedLayout) {
    const std::string text = saved(toy_model());
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    ASSERT_GE(lines.size(), 12u);
    EXPECT_EQ(lines[0], "comfort-mlp");
    EXPECT_EQ(lines[1], "version 1");
    EXPECT_EQ(lines[2], "layer_dims 2 16 16 16 16 1");
    EXPECT_EQ(lines[3], "activations relu relu relu relu sigmoid");
    EXPECT_EQ(lines[4].rfind("input_temp_min ", 0), 0u);
    EXPECT_EQ(lines[10], "layer 1 16 2");
    EXPECT_EQ(lines.back(), "end");
}

TEST(WeightFile, TruncatedFileIsRejected) {
    const std::string text = saved(toy_model());
    for (std::size_t cut : {text.size() / 4, text.size() / 2, text.size() - 5}) {
        EXPECT_THROW(loaded(text.substr(0, text.rfind('\n', cut))), ParseError) << cut;
    }
}

TEST(WeightFile, ShapeMismatchNamesTheLayer) {
    std::string text = saved(toy_model());
    const auto pos = text.find("layer 3 16 16");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 13, "layer 3 15 16");
    try {
        loaded(text);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("layer 3"), std::string::npos) << e.what();
    }
}

TEST(WeightFile, ShortWeightRowNamesTheLayer) {
    std::string text = saved(toy_model());
    const auto layer = text.find("layer 2 16 16\n");
    const auto row_end = text.find('\n', layer + 14);
    const auto last_space = text.rfind(' ', row_end);
    text.erase(last_space, row_end - last_space);
    try {
        loaded(text);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("layer 2"), std::string::npos) << e.what();
        EXPECT_GT(e.line(), 10u);
    }
}

TEST(WeightFile, RejectsUnknownVersionAndGarbage) {
    std::string text = saved(toy_model());
    text.replace(text.find("version 1"), 9, "version 9");
    EXPECT_THROW(loaded(text), ParseError);
    EXPECT_THROW(loaded("hello world\n"), ParseError);
    EXPECT_THROW(loaded(""), ParseError);

    std::string nan_text = saved(toy_model());
    const auto w = nan_text.find("\nw ") + 3;
    nan_text.replace(w, nan_text.find(' ', w) - w, "nan");
    EXPECT_THROW(loaded(nan_text), ParseError);
}
