#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "apsafe/nn/model_io.hpp"
#include "apsafe/nn/network.hpp"
#include "apsafe/nn/scaler.hpp"
#include "apsafe/nn/train.hpp"
#include "support.hpp"

using namespace apsafe;
using namespace apsafe::nn;

namespace {

Network hand_221() {
    Layer l1{(Eigen::MatrixXd(2, 2) << 1, -1, 0, 1).finished(), Eigen::VectorXd::Zero(2), Activation::ReLU};
    Layer l2{(Eigen::MatrixXd(1, 2) << 1, 1).finished(), Eigen::VectorXd::Zero(1), Activation::Identity};
    return Network({l1, l2}, MinMaxScaler::identity(2));
}

}  // namespace

TEST(Forward, ZeroWeightsGiveFinalBiases) {
    auto net = Network::zeros({36, 8, 8, 6});
    auto layers = net.layers();
    for (int j = 0; j < 6; ++j) layers.back().biases[j] = 100.0 + j;
    Network n2(layers, MinMaxScaler::identity(36));
    std::mt19937_64 rng(1);
    auto y = n2.forward(testsupport::uniform_vec(36, rng, 0, 400));
    for (int j = 0; j < 6; ++j) EXPECT_EQ(y[j], 100.0 + j);
}

TEST(Forward, HandNet221) {
    auto net = hand_221();
    auto y = net.forward((Eigen::VectorXd(2) << 1, 2).finished());
    EXPECT_DOUBLE_EQ(y[0], 2.0);
    EXPECT_DOUBLE_EQ(net.forward_scaled((Eigen::VectorXd(2) << 1, 2).finished())[0], 2.0);
}

TEST(Forward, MatchesNaiveOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        auto net = testsupport::random_net({36, 8, 8, 6}, rng);
        auto x = testsupport::uniform_vec(36, rng);
        auto y = net.forward_scaled(x);
        auto ref = testsupport::naive_forward(net, std::vector<double>(x.data(), x.data() + x.size()));
        for (int j = 0; j < 6; ++j) ASSERT_NEAR(y[j], ref[static_cast<std::size_t>(j)], 1e-9);
    }
}

TEST(Forward, RawAndScaledAgree) {
    std::mt19937_64 rng(8);
    auto base = testsupport::random_net({3, 4, 2}, rng);
    MinMaxScaler sc({40, 0, 0}, {400, 10, 80});
    Network net(base.layers(), sc);
    auto x = (Eigen::VectorXd(3) << 220, 3, 15).finished();
    auto a = net.forward(x);
    auto b = net.forward_scaled(sc.apply(x));
    EXPECT_EQ(a, b);
}

TEST(Forward, Errors) {
    auto net = hand_221();
    EXPECT_THROW(net.forward(Eigen::VectorXd::Zero(3)), DimensionError);
    Network unfitted(net.layers(), MinMaxScaler{});
    EXPECT_THROW(unfitted.forward(Eigen::VectorXd::Zero(2)), Error);
    auto layers = net.layers();
    layers[0].weights(0, 0) = NAN;
    EXPECT_THROW(Network(layers, MinMaxScaler::identity(2)), ValidationError);
    layers = net.layers();
    layers[1].activation = Activation::ReLU;
    EXPECT_THROW(Network(layers, MinMaxScaler::identity(2)), ValidationError);
}

TEST(Scaler, MidpointAndOutOfRange) {
    MinMaxScaler sc({40}, {400});
    EXPECT_DOUBLE_EQ(sc.apply(0, 220), 0.5);
    EXPECT_NEAR(sc.apply(0, 420), 1.0556, 5e-5);
    EXPECT_DOUBLE_EQ(sc.apply(0, 420), 380.0 / 360.0);
}

TEST(Scaler, FitMapsTrainingRangeToUnitInterval) {
    std::mt19937_64 rng(3);
    Eigen::MatrixXd rows(50, 4);
    for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = std::uniform_real_distribution<double>(-50, 300)(rng);
    auto sc = MinMaxScaler::fit(rows);
    auto scaled = sc.apply_rows(rows);
    EXPECT_GE(scaled.minCoeff(), 0.0);
    EXPECT_LE(scaled.maxCoeff(), 1.0);
    for (Eigen::Index j = 0; j < 4; ++j) {
        EXPECT_EQ(scaled.col(j).minCoeff(), 0.0);
        EXPECT_EQ(scaled.col(j).maxCoeff(), 1.0);
    }
}

TEST(Scaler, RoundtripWithin1e9) {
    std::mt19937_64 rng(4);
    MinMaxScaler sc({-3, 40, 0}, {5, 400, 0.5});
    for (int i = 0; i < 10000; ++i) {
        auto x = testsupport::uniform_vec(3, rng, -1000, 1000);
        auto back = sc.invert(sc.apply(x));
        for (int k = 0; k < 3; ++k) ASSERT_NEAR(back[k], x[k], 1e-9 * std::max(1.0, std::abs(x[k])));
    }
}

TEST(Scaler, RejectsDegenerateFeatures) {
    Eigen::MatrixXd rows(3, 2);
    rows << 1, 5, 2, 5, 3, 5;
    EXPECT_THROW(MinMaxScaler::fit(rows), ValidationError);
    EXPECT_THROW(MinMaxScaler({1}, {1}), ValidationError);
}

TEST(Gradients, MatchCentralDifferences) {
    std::mt19937_64 rng(11);
    auto net = testsupport::random_net({6, 4, 3}, rng);
    auto layers = net.layers();
    const double h = 1e-4;
    int checked = 0;
    while (checked < 100) {
        Eigen::MatrixXd x = testsupport::uniform_vec(6, rng);
        Eigen::MatrixXd y = testsupport::uniform_vec(3, rng);
        Eigen::VectorXd pre = layers[0].weights * x + layers[0].biases;
        if (pre.cwiseAbs().minCoeff() <= 1e-2) continue;
        ++checked;
        auto g = mse_gradients(layers, x, y);
        auto check = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + h;
            const double up = mse(layers, x, y);
            param = saved - h;
            const double down = mse(layers, x, y);
            param = saved;
            const double numeric = (up - down) / (2 * h);
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            EXPECT_LE(std::abs(numeric - analytic) / denom, 1e-3);
        };
        for (std::size_t l = 0; l < layers.size(); ++l) {
            for (Eigen::Index i = 0; i < layers[l].weights.size(); ++i)
                check(layers[l].weights.data()[i], g.weights[l].data()[i]);
            for (Eigen::Index i = 0; i < layers[l].biases.size(); ++i) check(layers[l].biases[i], g.biases[l][i]);
        }
    }
}

TEST(Forward, PiecewiseLinearOnFixedPattern) {
    std::mt19937_64 rng(12);
    int checked = 0;
    for (int trial = 0; trial < 2000 && checked < 200; ++trial) {
        auto net = testsupport::random_net({5, 6, 6, 3}, rng);
        auto a = testsupport::uniform_vec(5, rng);
        Eigen::VectorXd b = a + 1e-3 * testsupport::uniform_vec(5, rng);
        auto pattern = [&](const Eigen::VectorXd& x) {
            std::vector<bool> p;
            Eigen::VectorXd v = x;
            for (const auto& l : net.layers()) {
                Eigen::VectorXd z = l.weights * v + l.biases;
                if (l.activation == Activation::ReLU)
                    for (auto s : z) p.push_back(s > 0);
                v = l.activation == Activation::ReLU ? relu(z) : z;
            }
            return p;
        };
        auto pa = pattern(a);
        bool stable = true;
        for (int k = 1; k <= 20 && stable; ++k) stable = pattern(a + (b - a) * (k / 20.0)) == pa;
        if (!stable) continue;
        ++checked;
        const double lam = 0.37;
        auto lhs = net.forward_scaled(lam * a + (1 - lam) * b);
        Eigen::VectorXd rhs = lam * net.forward_scaled(a) + (1 - lam) * net.forward_scaled(b);
        for (int j = 0; j < 3; ++j) ASSERT_NEAR(lhs[j], rhs[j], 1e-7);
    }
    EXPECT_EQ(checked, 200);
}

TEST(Train, ConstantTargetReachesSubMgdlRmse) {
    std::mt19937_64 rng(5);
    Eigen::MatrixXd x(200, 36), y = Eigen::MatrixXd::Constant(200, 6, 100.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std::uniform_real_distribution<double>(0, 300)(rng);
    TrainingConfig cfg;
    cfg.epochs = 200;
    auto result = train(x, y, cfg);
    EXPECT_LT(std::sqrt(result.history.back().train_loss), 1.0);
    EXPECT_EQ(result.history.size(), 200u);
}

TEST(Train, LinearDatasetLossDecreasesSteadily) {
    std::mt19937_64 rng(6);
    Eigen::MatrixXd x(50, 36), y(50, 6);
    Eigen::MatrixXd w = Eigen::MatrixXd::Random(36, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std::uniform_real_distribution<double>(0, 1)(rng);
    y = x * w;
    TrainingConfig cfg;
    cfg.epochs = 100;
    cfg.seed = 3;
    auto result = train(x, y, cfg);
    int down = 0, total = 0;
    for (std::size_t e = 6; e < result.history.size(); ++e, ++total)
        if (result.history[e].train_loss < result.history[e - 1].train_loss) ++down;
    EXPECT_GE(down, static_cast<int>(std::ceil(0.9 * total)));
}

TEST(Train, DeterministicForFixedSeed) {
    std::mt19937_64 rng(9);
    Eigen::MatrixXd x(120, 36), y(120, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std::uniform_real_distribution<double>(0, 1)(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = std::uniform_real_distribution<double>(50, 250)(rng);
    TrainingConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 42;
    auto a = train(x, y, cfg);
    auto b = train(x, y, cfg);
    EXPECT_EQ(a.history, b.history);
    EXPECT_EQ(a.network, b.network);
    cfg.seed = 43;
    auto c = train(x, y, cfg);
    EXPECT_NE(a.history, c.history);
}

TEST(Train, Errors) {
    TrainingConfig cfg;
    EXPECT_THROW(train(Eigen::MatrixXd(0, 36), Eigen::MatrixXd(0, 6), cfg), ValidationError);
    EXPECT_THROW(train(data::Dataset{}, cfg), ValidationError);
    cfg.validation_fraction = 0.5;
    EXPECT_THROW(cfg.validate(), ValidationError);
    std::mt19937_64 rng(2);
    Eigen::MatrixXd x(20, 36);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std::uniform_real_distribution<double>(0, 1)(rng);
    Eigen::MatrixXd y = Eigen::MatrixXd::Constant(20, 6, 1e300);
    TrainingConfig ok;
    ok.epochs = 3;
    try {
        train(x, y, ok);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.epoch(), 0u);
    }
}

TEST(ModelIo, RoundtripIsBitExact) {
    std::mt19937_64 rng(10);
    auto base = testsupport::random_net({36, 8, 8, 6}, rng);
    Eigen::MatrixXd rows(10, 36);
    for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = std::uniform_real_distribution<double>(0, 400)(rng);
    Network net(base.layers(), MinMaxScaler::fit(rows));
    auto path = std::filesystem::temp_directory_path() / "apsafe_model_roundtrip.json";
    save_model(net, path);
    auto back = load_model(path);
    EXPECT_EQ(back, net);
    EXPECT_EQ(model_hash(back), model_hash(net));
    std::filesystem::remove(path);
}

TEST(ModelIo, MalformedInputs) {
    auto text = model_to_string(hand_221());
    EXPECT_THROW(model_from_string(text.substr(0, text.size() / 2)), ParseError);
    auto j = model_to_json(hand_221());
    j["version"] = 2;
    EXPECT_THROW(model_from_json(j), UnsupportedVersion);
    j = model_to_json(hand_221());
    j["layers"][0]["b"] = {0.0};
    EXPECT_THROW(model_from_json(j), DimensionError);
    j = model_to_json(hand_221());
    j["dims"] = {2, 3, 1};
    EXPECT_THROW(model_from_json(j), DimensionError);
    auto bad = text;
    auto pos = bad.find("\"b\":[0.0");
    if (pos == std::string::npos) pos = bad.find("\"b\":[0");
    ASSERT_NE(pos, std::string::npos);
    bad.replace(pos, 5, "\"b\":[1e999");
    EXPECT_THROW(model_from_string(bad), Error);
}
