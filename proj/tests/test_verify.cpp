#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "apsafe/prop/dsl.hpp"
#include "apsafe/verify/exact.hpp"
#include "apsafe/verify/falsify.hpp"
#include "apsafe/verify/lp.hpp"
#include "apsafe/verify/verifier.hpp"
#include "cases.hpp"
#include "support.hpp"

using namespace apsafe::verify;
namespace nn = apsafe::nn;
namespace prop = apsafe::prop;
namespace util = apsafe::util;
using apsafe::CapacityError;
using apsafe::DimensionError;
using apsafe::ParseError;
using apsafe::ValidationError;

namespace {

Box random_box(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Eigen::VectorXd lo(static_cast<Eigen::Index>(n)), hi(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        lo[i] = a;
        hi[i] = b;
    }
    return Box(lo, hi);
}

Eigen::VectorXd sample_in(const Box& b, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd x(b.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * u(rng);
    return x;
}

// Neuron values of every layer (pre-activation) at x.
std::vector<Eigen::VectorXd> pre_activations(const nn::Network& net, const Eigen::VectorXd& x) {
    std::vector<Eigen::VectorXd> out;
    Eigen::VectorXd a = x;
    for (const auto& l : net.layers()) {
        Eigen::VectorXd z = l.weights * a + l.biases;
        out.push_back(z);
        a = l.activation == nn::Activation::ReLU ? nn::relu(z) : z;
    }
    return out;
}

bool contains(const BoundsResult& b, const std::vector<Eigen::VectorXd>& z) {
    for (std::size_t k = 0; k < z.size(); ++k)
        for (Eigen::Index i = 0; i < z[k].size(); ++i)
            if (z[k][i] < b.lo[k][i] || z[k][i] > b.hi[k][i]) return false;
    return true;
}

// 36-2-6 net computing BG_out[5] = |x0 - x1|, all other outputs zero.
nn::Network abs_diff_net() {
    nn::Layer h;
    h.weights = Eigen::MatrixXd::Zero(2, 36);
    h.weights(0, 0) = 1;
    h.weights(0, 1) = -1;
    h.weights(1, 0) = -1;
    h.weights(1, 1) = 1;
    h.biases = Eigen::VectorXd::Zero(2);
    nn::Layer o;
    o.weights = Eigen::MatrixXd::Zero(6, 2);
    o.weights(5, 0) = o.weights(5, 1) = 1;
    o.biases = Eigen::VectorXd::Zero(6);
    o.activation = nn::Activation::Identity;
    return nn::Network({h, o}, nn::MinMaxScaler::identity(36));
}

nn::Network constant_net(double bias) {
    auto net = nn::Network::zeros({36, 4, 6});
    auto layers = net.layers();
    layers.back().biases.setConstant(bias);
    return nn::Network(layers, nn::MinMaxScaler::identity(36));
}

// Property text with one statement per line.
prop::Property dsl(const std::string& id, const std::string& body) {
    std::string text = "property " + id + " {\n";
    for (char c : body) text += c == '\n' ? std::string(";\n") : std::string(1, c);
    return prop::parse_dsl(text + "}\n");
}

VerifierConfig fast_config() {
    VerifierConfig c;
    c.falsify_samples = 500;
    c.falsify_descent_steps = 50;
    return c;
}

}  // namespace

TEST(Lp, TrivialCases) {
    LpProblem p{Eigen::VectorXd::Constant(1, -10), Eigen::VectorXd::Constant(1, 10), {}, std::nullopt};
    p.rows = {{Eigen::VectorXd::Ones(1), Sense::GE, 0.0}, {Eigen::VectorXd::Ones(1), Sense::LE, 1.0}};
    EXPECT_TRUE(lp_feasible(p).feasible);
    p.rows = {{Eigen::VectorXd::Ones(1), Sense::GE, 1.0}, {Eigen::VectorXd::Ones(1), Sense::LE, 0.0}};
    EXPECT_FALSE(lp_feasible(p).feasible);
    p.rows = {{Eigen::VectorXd::Ones(1), Sense::EQ, 0.25}};
    auto r = lp_feasible(p);
    ASSERT_TRUE(r.feasible);
    EXPECT_NEAR(r.x[0], 0.25, 1e-9);
}

TEST(Lp, MaximizesOverTriangle) {
    // x, y in [0, 1], x + y <= 1.5, maximize 2x + y -> (1, 0.5), value 2.5
    LpProblem p{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2), {}, Eigen::Vector2d(2, 1)};
    p.rows = {{Eigen::Vector2d(1, 1), Sense::LE, 1.5}};
    auto r = lp_solve(p);
    ASSERT_TRUE(r.feasible);
    EXPECT_NEAR(r.objective, 2.5, 1e-9);
    EXPECT_NEAR(r.x[1], 0.5, 1e-9);
}

TEST(Lp, PinnedVariablesAndDimensionErrors) {
    LpProblem p{Eigen::Vector2d(0.3, 0), Eigen::Vector2d(0.3, 1), {{Eigen::Vector2d(1, 1), Sense::GE, 1.2}}, std::nullopt};
    auto r = lp_feasible(p);
    ASSERT_TRUE(r.feasible);
    EXPECT_EQ(r.x[0], 0.3);
    p.rows[0].b = 1.4;
    EXPECT_FALSE(lp_feasible(p).feasible);
    p.rows[0].a = Eigen::VectorXd::Ones(3);
    EXPECT_THROW(lp_feasible(p), DimensionError);
}

// Feasibility against dense sampling; optimum against brute-force vertex
// enumeration in 2-D.
TEST(Lp, RandomPolytopesAgainstVertices) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    int feasible = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const Box box = random_box(2, rng, 2.0);
        LpProblem p{box.lo, box.hi, {}, Eigen::Vector2d(n(rng), n(rng))};
        const int m = 1 + trial % 5;
        for (int i = 0; i < m; ++i) {
            Eigen::Vector2d a(n(rng), n(rng));
            const Eigen::VectorXd c = sample_in(box, rng);
            p.rows.push_back({a, i % 2 ? Sense::GE : Sense::LE, a.dot(c) + 0.3 * n(rng)});
        }
        // candidate vertices: pairwise intersections of all lines incl. box edges
        std::vector<std::pair<Eigen::Vector2d, double>> lines;
        for (const auto& r : p.rows) lines.push_back({r.a, r.b});
        lines.push_back({Eigen::Vector2d(1, 0), box.lo[0]});
        lines.push_back({Eigen::Vector2d(1, 0), box.hi[0]});
        lines.push_back({Eigen::Vector2d(0, 1), box.lo[1]});
        lines.push_back({Eigen::Vector2d(0, 1), box.hi[1]});
        auto ok = [&](const Eigen::Vector2d& x) {
            if (!box.contains(x, 1e-9)) return false;
            for (const auto& r : p.rows) {
                const double v = r.a.dot(x) - r.b;
                if ((r.sense == Sense::LE && v > 1e-9) || (r.sense == Sense::GE && v < -1e-9)) return false;
            }
            return true;
        };
        bool any = false;
        double best = -1e300;
        for (std::size_t i = 0; i < lines.size(); ++i)
            for (std::size_t j = i + 1; j < lines.size(); ++j) {
                Eigen::Matrix2d M;
                M << lines[i].first.transpose(), lines[j].first.transpose();
                if (std::abs(M.determinant()) < 1e-12) continue;
                const Eigen::Vector2d x = M.fullPivLu().solve(Eigen::Vector2d(lines[i].second, lines[j].second));
                if (!ok(x)) continue;
                any = true;
                best = std::max(best, p.maximize->dot(x));
            }
        const auto r = lp_solve(p);
        ASSERT_EQ(r.feasible, any) << "trial " << trial;
        if (!any) continue;
        ++feasible;
        EXPECT_TRUE(ok(r.x));
        EXPECT_NEAR(r.objective, best, 1e-6) << "trial " << trial;
    }
    EXPECT_GT(feasible, 100);
}

TEST(Lp, HigherDimensionalFeasibilityAgainstSampling) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Box box = random_box(6, rng);
        LpProblem p{box.lo, box.hi, {}, std::nullopt};
        for (int i = 0; i < 8; ++i) {
            Eigen::VectorXd a(6);
            for (auto& v : a) v = n(rng);
            p.rows.push_back({a, Sense::LE, a.dot(box.center()) + 0.5 * n(rng)});
        }
        bool sampled = false;
        for (int s = 0; s < 20000 && !sampled; ++s) {
            const auto x = sample_in(box, rng);
            bool all = true;
            for (const auto& r : p.rows) all = all && r.a.dot(x) <= r.b;
            sampled = all;
        }
        const auto r = lp_feasible(p);
        if (sampled) {
            EXPECT_TRUE(r.feasible) << "trial " << trial;
        }
        if (r.feasible) {
            EXPECT_TRUE(box.contains(r.x));
            for (const auto& row : p.rows) EXPECT_LE(row.a.dot(r.x), row.b + 1e-6);
        }
    }
}

TEST(Bounds, PointBoxCollapses) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        auto net = testsupport::random_net({5, 7, 6, 3}, rng);
        const auto x = testsupport::uniform_vec(5, rng);
        const auto y = net.forward_scaled(x);
        for (const auto& b : {interval_bounds(net, Box::point(x)), relaxed_bounds(net, Box::point(x))})
            for (Eigen::Index j = 0; j < y.size(); ++j) {
                EXPECT_NEAR(b.out_lo()[j], y[j], 1e-9);
                EXPECT_NEAR(b.out_hi()[j], y[j], 1e-9);
            }
    }
}

TEST(Bounds, HandIntervalArithmetic) {
    // h1 = relu(x0 - x1), h2 = relu(x0 + x1 - 1), y = h1 - 2 h2 + 0.5 over [0,1]^2
    nn::Layer h;
    h.weights = (Eigen::MatrixXd(2, 2) << 1, -1, 1, 1).finished();
    h.biases = Eigen::Vector2d(0, -1);
    nn::Layer o;
    o.weights = (Eigen::MatrixXd(1, 2) << 1, -2).finished();
    o.biases = Eigen::VectorXd::Constant(1, 0.5);
    o.activation = nn::Activation::Identity;
    const nn::Network net({h, o}, nn::MinMaxScaler::identity(2));
    const auto b = interval_bounds(net, Box(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)));
    EXPECT_NEAR(b.lo[0][0], -1, 1e-12);
    EXPECT_NEAR(b.hi[0][0], 1, 1e-12);
    EXPECT_NEAR(b.lo[0][1], -1, 1e-12);
    EXPECT_NEAR(b.hi[0][1], 1, 1e-12);
    // relu ranges [0,1] and [0,1]: y in [0 - 2 + 0.5, 1 + 0.5]
    EXPECT_NEAR(b.out_lo()[0], -1.5, 1e-11);
    EXPECT_NEAR(b.out_hi()[0], 1.5, 1e-11);
}

TEST(Bounds, SampledPointsStayInside) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 200; ++t) {
        auto net = testsupport::random_net({4, 6, 5, 3}, rng);
        const Box box = random_box(4, rng);
        const auto ib = interval_bounds(net, box);
        const auto rb = relaxed_bounds(net, box);
        for (int s = 0; s < 1000; ++s) {
            const auto x = sample_in(box, rng);
            const auto z = pre_activations(net, x);
            ASSERT_TRUE(contains(ib, z));
            ASSERT_TRUE(contains(rb, z));
            for (std::size_t j = 0; j < rb.lower.size(); ++j) {
                EXPECT_LE(rb.lower[j](x), z.back()[static_cast<Eigen::Index>(j)] + 1e-9);
                EXPECT_GE(rb.upper[j](x), z.back()[static_cast<Eigen::Index>(j)] - 1e-9);
            }
        }
    }
}

TEST(Bounds, RelaxedNoLooserThanInterval) {
    std::mt19937_64 rng(3);
    int strictly_tighter = 0;
    for (int t = 0; t < 500; ++t) {
        auto net = testsupport::random_net({3, 8, 8, 2}, rng);
        const Box box = random_box(3, rng);
        const auto ib = interval_bounds(net, box);
        const auto rb = relaxed_bounds(net, box);
        for (std::size_t k = 0; k < ib.lo.size(); ++k) {
            EXPECT_TRUE((rb.lo[k].array() >= ib.lo[k].array()).all());
            EXPECT_TRUE((rb.hi[k].array() <= ib.hi[k].array()).all());
        }
        if ((rb.out_hi() - rb.out_lo()).sum() < (ib.out_hi() - ib.out_lo()).sum() - 1e-9) ++strictly_tighter;
    }
    EXPECT_GT(strictly_tighter, 250);
}

TEST(Bounds, StableRegionIsExact) {
    std::mt19937_64 rng(4);
    int checked = 0;
    for (int t = 0; t < 200 && checked < 20; ++t) {
        auto net = testsupport::random_net({3, 5, 4, 2}, rng);
        const auto c = testsupport::uniform_vec(3, rng);
        const Box box(c.array() - 1e-4, c.array() + 1e-4);
        const BoxBounds bb(net, box);
        if (!bb.all_stable()) continue;
        ++checked;
        const auto rb = bb.result();
        for (std::size_t j = 0; j < rb.lower.size(); ++j) {
            EXPECT_LT((rb.lower[j].a - rb.upper[j].a).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_NEAR(rb.lower[j].c, rb.upper[j].c, 1e-12);
            const auto x = sample_in(box, rng);
            EXPECT_NEAR(rb.lower[j](x), net.forward_scaled(x)[static_cast<Eigen::Index>(j)], 1e-9);
        }
    }
    EXPECT_EQ(checked, 20);
}

TEST(Bounds, MonotoneUnderShrinking) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 300; ++t) {
        auto net = testsupport::random_net({3, 6, 6, 2}, rng);
        const Box box = random_box(3, rng);
        Box sub = box;
        for (Eigen::Index i = 0; i < 3; ++i) {
            const auto a = sample_in(box, rng), b = sample_in(box, rng);
            sub.lo[i] = std::min(a[i], b[i]);
            sub.hi[i] = std::max(a[i], b[i]);
        }
        for (auto f : {&interval_bounds, &relaxed_bounds}) {
            const auto outer = f(net, box), inner = f(net, sub);
            for (std::size_t k = 0; k < outer.lo.size(); ++k) {
                EXPECT_TRUE((inner.lo[k].array() >= outer.lo[k].array() - 1e-9).all()) << "trial " << t;
                EXPECT_TRUE((inner.hi[k].array() <= outer.hi[k].array() + 1e-9).all()) << "trial " << t;
            }
        }
    }
}

TEST(Bounds, OutputDifferenceExpressions) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 100; ++t) {
        auto net = testsupport::random_net({4, 6, 3}, rng);
        const Box box = random_box(4, rng);
        const BoxBounds bb(net, box);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(3);
        c[1] = 1;
        c[0] = -1;
        const auto e = bb.expression(c);
        for (int s = 0; s < 500; ++s) {
            const auto x = sample_in(box, rng);
            const double v = c.dot(net.forward_scaled(x));
            ASSERT_GE(v, e.lo);
            ASSERT_LE(v, e.hi);
            for (const auto& f : e.lower) EXPECT_LE(f(x), v + 1e-9);
            for (const auto& f : e.upper) EXPECT_GE(f(x), v - 1e-9);
        }
    }
}

TEST(Bounds, DimensionMismatchThrows) {
    std::mt19937_64 rng(1);
    auto net = testsupport::random_net({3, 2, 1}, rng);
    EXPECT_THROW(interval_bounds(net, random_box(4, rng)), DimensionError);
    EXPECT_THROW(Box(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)), ValidationError);
}

TEST(Falsify, CenterViolationFoundFirst) {
    const auto net = constant_net(250.0);
    auto p = dsl("c", "post: BG_out[5] <= 180\n");
    const auto w = falsify(net, p, fast_config());
    ASSERT_TRUE(w);
    EXPECT_TRUE(w->x.isApproxToConstant(0.5));
    EXPECT_TRUE(validate_witness(net, p, w->x));
}

TEST(Falsify, InfeasiblePreGivesNothing) {
    const auto net = constant_net(250.0);
    auto p = dsl("c", "pre: BG_in[0] >= 0.8 and BG_in[0] <= 0.2\npost: BG_out[5] <= 180\n");
    EXPECT_FALSE(falsify(net, p, fast_config()));
    const auto v = verify(net, p, fast_config());
    EXPECT_EQ(v.outcome, Outcome::Proved);
    EXPECT_TRUE(v.vacuous);
}

TEST(Falsify, PlantedPocketFound) {
    // |x0 - x1| exceeds 0.9 only near two corners of the unit square
    const auto net = abs_diff_net();
    auto p = dsl("pocket", "post: BG_out[5] <= 0.9\n");
    const auto w = falsify(net, p, fast_config());
    ASSERT_TRUE(w);
    EXPECT_TRUE(validate_witness(net, p, w->x));
    EXPECT_EQ(exact_oracle(net, p).outcome, Outcome::Counterexample);
}

TEST(Verify, ConstantNetworkProvedAtRoot) {
    const auto net = constant_net(150.0);
    auto p = dsl("c", "post: BG_out[5] <= 180\n");
    const auto v = verify(net, p);
    EXPECT_EQ(v.outcome, Outcome::Proved);
    EXPECT_EQ(v.stats.subproblems, 1u);
    EXPECT_FALSE(v.vacuous);
}

TEST(Verify, ConstantNetworkViolatedAnywhere) {
    const auto net = constant_net(200.0);
    auto p = dsl("c", "pre: M_in[11] >= 0.5\npost: BG_out[5] <= 180\n");
    const auto v = verify(net, p);
    ASSERT_EQ(v.outcome, Outcome::Counterexample);
    EXPECT_TRUE(validate_witness(net, p, v.witness->x));
    EXPECT_GE(v.witness->x[35], 0.5);
}

TEST(Verify, HandNetDecisions) {
    const auto net = abs_diff_net();
    // with x0 >= 0.9 and x1 >= 0.5 the gap is at most 0.5
    const std::string pre = "pre: BG_in[0] >= 0.9 and BG_in[1] >= 0.5\n";
    auto ok = dsl("a", pre + "post: BG_out[5] <= 0.6\n");
    auto bad = dsl("b", pre + "post: BG_out[5] <= 0.4\n");
    EXPECT_EQ(verify(net, ok, fast_config()).outcome, Outcome::Proved);
    EXPECT_EQ(exact_oracle(net, ok).outcome, Outcome::Proved);
    const auto v = verify(net, bad, fast_config());
    ASSERT_EQ(v.outcome, Outcome::Counterexample);
    EXPECT_GT(std::abs(v.witness->x[0] - v.witness->x[1]), 0.4);
    EXPECT_EQ(exact_oracle(net, bad).outcome, Outcome::Counterexample);
}

TEST(Verify, NoFalsificationStillFindsCounterexample) {
    const auto net = abs_diff_net();
    auto p = dsl("pocket", "post: BG_out[5] <= 0.97\n");
    auto cfg = fast_config();
    cfg.falsify_samples = 1;
    cfg.falsify_descent_steps = 0;
    const auto v = verify(net, p, cfg);
    ASSERT_EQ(v.outcome, Outcome::Counterexample);
    EXPECT_TRUE(validate_witness(net, p, v.witness->x));
}

TEST(Verify, BudgetExhaustionIsUnknown) {
    std::mt19937_64 rng(11);
    auto net = testsupport::random_net({36, 12, 6}, rng, 0.5);
    const Box unit(Eigen::VectorXd::Zero(36), Eigen::VectorXd::Ones(36));
    const double upper = relaxed_bounds(net, unit).out_hi()[0];
    double sampled = -1e300;
    for (int s = 0; s < 20000; ++s) sampled = std::max(sampled, net.forward_scaled(testsupport::uniform_vec(36, rng, 0, 1))[0]);
    ASSERT_GT(upper - sampled, 1e-3);
    // between the sampled maximum and the root bound: one subproblem cannot settle it
    const double bound = 0.5 * (sampled + upper);
    auto p = dsl("hard", "post: BG_out[0] <= " + util::format_double(bound) + "\n");
    auto cfg = fast_config();
    cfg.falsify_samples = 1;
    cfg.max_subproblems = 1;
    const auto v = verify(net, p, cfg);
    EXPECT_NE(v.outcome, Outcome::Proved);
    if (v.outcome == Outcome::Unknown) {
        EXPECT_EQ(v.reason, "budget");
    }
}

TEST(Verify, DeterministicCounts) {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 5; ++t) {
        auto c = testsupport::random_case(rng);
        const auto a = verify(c.net, c.prop, fast_config());
        const auto b = verify(c.net, c.prop, fast_config());
        EXPECT_EQ(a.outcome, b.outcome);
        EXPECT_EQ(a.stats.subproblems, b.stats.subproblems);
        EXPECT_EQ(a.stats.lp_calls, b.stats.lp_calls);
        EXPECT_EQ(a.to_json().dump().size() > 0, true);
    }
}

TEST(Verify, WidestDimHeuristicAlsoDecides) {
    const auto net = abs_diff_net();
    auto p = dsl("a", "pre: BG_in[0] >= 0.9 and BG_in[1] >= 0.5\npost: BG_out[5] <= 0.6\n");
    auto cfg = fast_config();
    cfg.split_heuristic = SplitHeuristic::WidestDim;
    EXPECT_EQ(verify(net, p, cfg).outcome, Outcome::Proved);
}

TEST(Verify, VerdictJsonRoundtrip) {
    const auto net = constant_net(200.0);
    auto p = dsl("c", "post: BG_out[5] <= 180\n");
    const auto v = verify(net, p);
    const auto j = v.to_json(&net.scaler());
    EXPECT_EQ(j.at("outcome"), "counterexample");
    EXPECT_EQ(j.at("model_hash"), nn::model_hash(net));
    EXPECT_EQ(j.at("config_hash"), VerifierConfig{}.hash());
    const auto back = Verdict::from_json(j);
    EXPECT_EQ(back.outcome, v.outcome);
    EXPECT_EQ(back.witness->x, v.witness->x);
    EXPECT_EQ(back.stats.subproblems, v.stats.subproblems);
    EXPECT_THROW(Verdict::from_json(nlohmann::json{{"outcome", "proved"}}), ParseError);
}

TEST(Oracle, GridAgreementOnOneDimensionalBoxes) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 10; ++t) {
        auto net = testsupport::random_net({36, 6, 6}, rng);
        Eigen::VectorXd x = testsupport::uniform_vec(36, rng, 0, 1);
        double best = -1e300;
        for (int g = 0; g <= 1000000; ++g) {
            x[0] = g * 1e-6;
            best = std::max(best, net.forward_scaled(x)[5]);
        }
        std::string box;
        for (int i = 1; i < 36; ++i) {
            const char* ch = i < 12 ? "BG_in" : i < 24 ? "In_in" : "M_in";
            box += std::string(ch) + "[" + std::to_string(i % 12) + "] = " + util::format_double(x[i]) + "\n";
        }
        for (double off : {-0.05, 0.05}) {
            auto p = dsl("grid", box + "post: BG_out[5] <= " + util::format_double(best + off) + "\n");
            const auto o = exact_oracle(net, p);
            EXPECT_EQ(o.outcome, off < 0 ? Outcome::Counterexample : Outcome::Proved) << "trial " << t;
            EXPECT_EQ(verify(net, p, fast_config()).outcome, o.outcome) << "trial " << t;
        }
    }
}

TEST(Oracle, PatternCountBounded) {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 20; ++t) {
        auto net = testsupport::random_net({36, 5, 4, 6}, rng, 0.3);
        auto p = dsl("loose", "post: BG_out[0] <= 1e9\n");
        const auto ib = interval_bounds(net, Box(Eigen::VectorXd::Zero(36), Eigen::VectorXd::Ones(36)));
        std::size_t unstable = 0;
        for (std::size_t k = 0; k + 1 < ib.lo.size(); ++k)
            for (Eigen::Index i = 0; i < ib.lo[k].size(); ++i) unstable += ib.lo[k][i] < 0 && ib.hi[k][i] > 0;
        const auto o = exact_oracle(net, p);
        EXPECT_EQ(o.outcome, Outcome::Proved);
        EXPECT_LE(o.stats.subproblems, std::size_t{1} << unstable);
    }
    auto big = testsupport::random_net({36, 17, 6}, rng);
    EXPECT_THROW(exact_oracle(big, dsl("x", "post: BG_out[0] <= 1\n")), CapacityError);
}

TEST(Soundness, RandomCasesAgreeWithOracle) {
    std::mt19937_64 rng(99);
    int decisive = 0, unknown = 0;
    for (int t = 0; t < 40; ++t) {
        auto c = testsupport::random_case(rng);
        const auto v = verify(c.net, c.prop, fast_config());
        const auto o = exact_oracle(c.net, c.prop);
        if (v.outcome == Outcome::Counterexample) {
            EXPECT_TRUE(validate_witness(c.net, c.prop, v.witness->x));
        }
        // branch and bound alone, without the sampling front end
        auto bab_cfg = fast_config();
        bab_cfg.falsify_samples = 1;
        bab_cfg.falsify_descent_steps = 0;
        bab_cfg.max_subproblems = 20000;
        const auto b = verify(c.net, c.prop, bab_cfg);
        if (b.outcome != Outcome::Unknown && o.outcome != Outcome::Unknown) {
            EXPECT_EQ(b.outcome, o.outcome) << "case " << t << " " << c.prop.id;
        }
        if (b.outcome == Outcome::Counterexample) {
            EXPECT_TRUE(validate_witness(c.net, c.prop, b.witness->x));
        }
        if (o.outcome == Outcome::Counterexample) {
            EXPECT_TRUE(validate_witness(c.net, c.prop, o.witness->x));
        }
        if (v.outcome == Outcome::Unknown) {
            ++unknown;
            continue;
        }
        ++decisive;
        if (o.outcome != Outcome::Unknown) {
            EXPECT_EQ(v.outcome, o.outcome) << "case " << t << " " << c.prop.id;
        }
    }
    EXPECT_LE(unknown, 8);
}
