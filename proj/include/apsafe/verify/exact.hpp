#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "apsafe/nn/model_io.hpp"
#include "apsafe/nn/network.hpp"
#include "apsafe/prop/compile.hpp"
#include "apsafe/verify/bounds.hpp"
#include "apsafe/verify/query.hpp"
#include "apsafe/verify/verifier.hpp"

namespace apsafe::verify {

inline constexpr std::size_t kOracleMaxRelus = 16;

namespace detail {

class PatternSearch {
public:
    PatternSearch(const nn::Network& net, const prop::Property& p, const prop::Query& q, std::size_t qi,
                  const PreparedQuery& prep, double tol, VerifyStats& stats)
        : net_(net), prop_(p), q_(q), qi_(qi), prep_(prep), tol_(tol), stats_(stats),
          ibp_(interval_bounds(net, prep.box)) {}

    std::optional<Witness> witness;
    bool boundary = false;

    void run() {
        const auto n = prep_.box.dim();
        layer_affine(0, Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n), prep_.pre_rows);
    }

private:
    // A x + c is the input to layer k under the pattern fixed so far.
    void layer_affine(std::size_t k, const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                      const std::vector<LinearConstraint>& rows) {
        if (witness) return;
        const auto& layer = net_.layer(k);
        Eigen::MatrixXd Z = layer.weights * A;
        Eigen::VectorXd z = layer.weights * c + layer.biases;
        if (k + 1 == net_.layers().size()) {
            leaf(Z, z, rows);
            return;
        }
        assign(k, 0, Z, z, rows);
    }

    void assign(std::size_t k, Eigen::Index i, Eigen::MatrixXd& Z, Eigen::VectorXd& z,
                const std::vector<LinearConstraint>& rows) {
        if (witness) return;
        if (i == Z.rows()) {
            layer_affine(k + 1, Z, z, rows);
            return;
        }
        const bool relu = net_.layer(k).activation == nn::Activation::ReLU;
        const double lo = ibp_.lo[k][i], hi = ibp_.hi[k][i];
        if (!relu || lo >= 0.0) {
            assign(k, i + 1, Z, z, rows);
            return;
        }
        const Eigen::RowVectorXd row = Z.row(i);
        const double zi = z[i];
        if (hi > 0.0) {
            // active branch: z_i >= 0
            auto with = rows;
            with.push_back({row.transpose(), Sense::GE, -zi});
            if (feasible(with)) assign(k, i + 1, Z, z, with);
            if (witness) return;
        }
        auto with = rows;
        if (hi > 0.0) with.push_back({row.transpose(), Sense::LE, -zi});
        Z.row(i).setZero();
        z[i] = 0.0;
        if (hi <= 0.0 || feasible(with)) assign(k, i + 1, Z, z, with);
        Z.row(i) = row;
        z[i] = zi;
    }

    bool feasible(const std::vector<LinearConstraint>& rows) {
        ++stats_.lp_calls;
        return lp_solve({prep_.box.lo, prep_.box.hi, rows, std::nullopt}, tol_).feasible;
    }

    void leaf(const Eigen::MatrixXd& Y, const Eigen::VectorXd& y0, const std::vector<LinearConstraint>& signs_and_pre) {
        ++stats_.subproblems;
        // sign rows are hard; pre rows (the first ones) and post rows get the slack variable
        const std::size_t npre = prep_.pre_rows.size();
        std::vector<LinearConstraint> hard(signs_and_pre.begin() + static_cast<std::ptrdiff_t>(npre), signs_and_pre.end());
        std::vector<Witness> found;
        unsigned k = 0;
        for (const auto& a : q_.neg_post)
            if (a.abs && a.bound > 0.0) ++k;
        for (unsigned signs = 0; signs < (1u << k); ++signs) {
            std::vector<LinearConstraint> soft = prep_.pre_rows;
            unsigned bit = 0;
            for (const auto& a : q_.neg_post) {
                const Eigen::VectorXd g = Y.transpose() * a.coef;
                const double g0 = a.coef.dot(y0) + a.constant;
                if (a.abs) {
                    if (a.bound <= 0.0) continue;
                    if (signs & (1u << bit++)) soft.push_back({g, Sense::LE, -a.bound - g0});
                    else soft.push_back({g, Sense::GE, a.bound - g0});
                } else {
                    soft.push_back({g, sense_of(a.cmp), a.bound - g0});
                }
            }
            const auto deep = deepest_point(prep_.box, hard, soft, tol_, stats_.lp_calls);
            if (!deep) continue;
            const Eigen::VectorXd x = deep->first;
            const Eigen::VectorXd y = net_.forward_scaled(x);
            if (q_.satisfied_by(x, y) && validate_witness(net_, prop_, x)) {
                witness = Witness{x, y, qi_};
                return;
            }
            boundary = true;
        }
    }

    const nn::Network& net_;
    const prop::Property& prop_;
    const prop::Query& q_;
    std::size_t qi_;
    const PreparedQuery& prep_;
    double tol_;
    VerifyStats& stats_;
    BoundsResult ibp_;
};

}  // namespace detail

/// Complete decision for small networks: every activation pattern that the
/// box and pre admit is checked by LP for an output violation. Unknown
/// ("boundary") when a violation exists only on a set too thin for the
/// floating-point forward pass to confirm.
inline Verdict exact_oracle(const nn::Network& net, const prop::Property& p, double lp_tolerance = 1e-7) {
    const auto start = std::chrono::steady_clock::now();
    if (net.hidden_relu_count() > kOracleMaxRelus)
        throw CapacityError("exact oracle handles at most " + std::to_string(kOracleMaxRelus) + " hidden ReLUs, got " +
                            std::to_string(net.hidden_relu_count()));
    if (net.input_dim() != prop::kInputs || net.output_dim() != prop::kOutputs)
        throw DimensionError("exact oracle expects a 36-input, 6-output network");
    Verdict v;
    v.property_id = p.id;
    v.model_hash = nn::model_hash(net);
    const auto queries = prop::compile(p, &net.scaler());
    v.stats.queries = queries.size();
    bool boundary = false;
    try {
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            const auto prep = detail::prepare(queries[qi], 0.0);
            if (prep.empty) continue;
            detail::PatternSearch search(net, p, queries[qi], qi, prep, lp_tolerance, v.stats);
            search.run();
            if (search.witness) {
                v.outcome = Outcome::Counterexample;
                v.witness = search.witness;
                break;
            }
            boundary = boundary || search.boundary;
        }
        if (!v.witness) {
            v.outcome = boundary ? Outcome::Unknown : Outcome::Proved;
            if (boundary) v.reason = "boundary";
        }
    } catch (const LpInstability&) {
        v.outcome = Outcome::Unknown;
        v.reason = "lp_instability";
    }
    v.stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return v;
}

}  // namespace apsafe::verify
