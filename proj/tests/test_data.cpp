#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "apsafe/data/dataset.hpp"
#include "apsafe/data/dataset_io.hpp"
#include "apsafe/data/metrics.hpp"
#include "apsafe/nn/network.hpp"
#include "support.hpp"

using namespace apsafe;
using namespace apsafe::data;

namespace {

sim::SimTrace ramp_trace(const std::string& id, std::size_t rows, double offset = 0.0) {
    sim::SimTrace t;
    t.patient_id = id;
    for (std::size_t i = 0; i < rows; ++i)
        t.rows.push_back({5.0 * static_cast<double>(i), offset + static_cast<double>(i), 0.01 * static_cast<double>(i % 7),
                          i % 50 == 0 ? 30.0 : 0.0});
    return t;
}

nn::Network constant_net(double value) {
    auto net = nn::Network::zeros({36, 4, 6});
    auto layers = net.layers();
    layers.back().biases.setConstant(value);
    return nn::Network(layers, nn::MinMaxScaler::identity(36));
}

Dataset targets_only(const std::vector<std::array<double, 6>>& targets) {
    Dataset ds;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        Window w;
        w.targets = targets[i];
        ds.add(w, {"p", i});
    }
    return ds;
}

}  // namespace

TEST(Windows, Counts) {
    EXPECT_EQ(make_windows(ramp_trace("a", 11521)).size(), 11504u);
    EXPECT_EQ(make_windows(ramp_trace("a", 17)).size(), 0u);
    EXPECT_EQ(make_windows(ramp_trace("a", 18)).size(), 1u);
    EXPECT_EQ(make_windows(ramp_trace("a", 0)).size(), 0u);
}

TEST(Windows, LayoutAndContiguity) {
    auto ds = make_windows(ramp_trace("a", 40));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& w = ds[i];
        for (std::size_t t = 0; t < kInputSteps; ++t) EXPECT_EQ(w.inputs[t][kBg], static_cast<double>(i + t));
        // input timestep 12 (index 11) immediately precedes target 1
        EXPECT_EQ(w.targets[0], w.inputs[11][kBg] + 1.0);
        for (std::size_t j = 0; j < kOutputSteps; ++j) EXPECT_EQ(w.targets[j], static_cast<double>(i + 12 + j));
        auto x = w.flat_inputs();
        EXPECT_EQ(x[input_index(kBg, 0)], w.inputs[0][kBg]);
        EXPECT_EQ(x[input_index(kInsulin, 11)], w.inputs[11][kInsulin]);
        EXPECT_EQ(x[input_index(kMeal, 11)], w.inputs[11][kMeal]);
        EXPECT_EQ(x[35], w.inputs[11][kMeal]);
        EXPECT_EQ(ds.provenance()[i].first_row, i);
    }
}

TEST(Windows, NeverMixPatients) {
    auto ds = make_dataset({ramp_trace("a", 30, 0.0), ramp_trace("b", 25, 1000.0)});
    EXPECT_EQ(ds.size(), 13u + 8u);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const bool is_b = ds.provenance()[i].patient_id == "b";
        for (const auto& step : ds[i].inputs) EXPECT_EQ(step[kBg] >= 1000.0, is_b);
        for (double y : ds[i].targets) EXPECT_EQ(y >= 1000.0, is_b);
    }
}

TEST(Split, SizesPartitionDeterminism) {
    auto ds = make_windows(ramp_trace("a", 27));
    ASSERT_EQ(ds.size(), 10u);
    auto [tr, te] = split(ds, 0.8, 5);
    EXPECT_EQ(tr.size(), 8u);
    EXPECT_EQ(te.size(), 2u);
    std::multiset<std::size_t> rows;
    for (const auto& p : tr.provenance()) rows.insert(p.first_row);
    for (const auto& p : te.provenance()) rows.insert(p.first_row);
    EXPECT_EQ(rows, (std::multiset<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
    auto [tr2, te2] = split(ds, 0.8, 5);
    EXPECT_EQ(tr, tr2);
    EXPECT_EQ(te, te2);
    EXPECT_THROW(split(Dataset{}, 0.8, 1), ValidationError);
}

TEST(Split, ByPatient) {
    auto ds = make_dataset({ramp_trace("a", 30), ramp_trace("b", 25)});
    auto [rest, held] = split_by_patient(ds, "b");
    EXPECT_EQ(held.size(), 8u);
    EXPECT_EQ(rest.size(), 13u);
    EXPECT_THROW(split_by_patient(ds, "zzz"), ValidationError);
}

TEST(Rmse, HandFixtures) {
    EXPECT_EQ(rmse(constant_net(100.0), targets_only({{100, 100, 100, 100, 100, 100}})), 0.0);
    EXPECT_DOUBLE_EQ(rmse(constant_net(100.0), targets_only({{90, 110, 90, 110, 90, 110}, {110, 90, 110, 90, 110, 90}})),
                     10.0);
    // residuals 1..6, zeros, and six 3s: (91 + 0 + 54) / 18
    auto ds = targets_only({{101, 102, 103, 104, 105, 106}, {100, 100, 100, 100, 100, 100}, {97, 97, 97, 97, 97, 97}});
    EXPECT_NEAR(rmse(constant_net(100.0), ds), std::sqrt(145.0 / 18.0), 1e-12);
    auto per = rmse_per_horizon(constant_net(100.0), ds);
    EXPECT_NEAR(per[0], std::sqrt((1.0 + 9.0) / 3.0), 1e-12);
    EXPECT_NEAR(per[5], std::sqrt((36.0 + 9.0) / 3.0), 1e-12);
    EXPECT_THROW(rmse(constant_net(100.0), Dataset{}), ValidationError);
}

TEST(Rmse, PoolingLaw) {
    std::mt19937_64 rng(3);
    auto net = testsupport::random_net({36, 8, 8, 6}, rng);
    auto d1 = make_windows(ramp_trace("a", 60));
    auto d2 = make_windows(ramp_trace("b", 45, 50.0));
    Dataset both = d1;
    both.append(d2);
    const double r = rmse(net, both), r1 = rmse(net, d1), r2 = rmse(net, d2);
    const double lhs = r * r * static_cast<double>(both.size());
    const double rhs = r1 * r1 * static_cast<double>(d1.size()) + r2 * r2 * static_cast<double>(d2.size());
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(lhs)));
}

TEST(CheckMlRq1, StrictThreshold) {
    auto ds = targets_only({{100, 100, 100, 100, 100, 100}});
    auto pass = check_ml_rq1(constant_net(103.03), ds);
    EXPECT_NEAR(pass.value, 3.03, 1e-9);
    EXPECT_TRUE(pass.pass);
    auto fail = check_ml_rq1(constant_net(112.0), ds);
    EXPECT_EQ(fail.value, 12.0);
    EXPECT_FALSE(fail.pass);
    EXPECT_THROW(check_ml_rq1(constant_net(100.0), Dataset{}), ValidationError);
    auto j = pass.to_json();
    EXPECT_EQ(j["kind"], "rmse");
    EXPECT_EQ(j["threshold"], 12.0);
    EXPECT_EQ(j["dataset_hash"], ds.hash());
    EXPECT_EQ(RmseEvidence::from_json(j).value, pass.value);
}

TEST(DatasetCache, CsvRoundtrip) {
    auto ds = make_dataset({ramp_trace("a", 30), ramp_trace("b", 25, 0.1)});
    std::stringstream ss;
    write_dataset_csv(ss, ds);
    auto back = read_dataset_csv(ss);
    EXPECT_EQ(back, ds);
    EXPECT_EQ(back.hash(), ds.hash());
    std::stringstream bad("# windows,1\nnope\n");
    EXPECT_THROW(read_dataset_csv(bad), ParseError);
}
