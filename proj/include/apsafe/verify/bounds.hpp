#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "apsafe/nn/network.hpp"
#include "apsafe/util/error.hpp"
#include "apsafe/verify/box.hpp"

namespace apsafe::verify {

// Outward rounding, relative to the magnitude of the terms being summed.
inline constexpr double kIntervalRounding = 1e-13;
inline constexpr double kRelaxRounding = 1e-12;

/// a . x + c
struct Affine {
    Eigen::VectorXd a;
    double c = 0.0;

    double operator()(const Eigen::VectorXd& x) const { return a.dot(x) + c; }
};

struct BoundsResult {
    // pre-activation bounds per layer, output layer last
    std::vector<Eigen::VectorXd> lo;
    std::vector<Eigen::VectorXd> hi;
    // per output: lower[j](x) <= y_j <= upper[j](x) for x in the box
    std::vector<Affine> lower;
    std::vector<Affine> upper;

    const Eigen::VectorXd& out_lo() const { return lo.back(); }
    const Eigen::VectorXd& out_hi() const { return hi.back(); }
};

namespace detail {

inline void check_box(const nn::Network& net, const Box& box) {
    if (net.layers().empty()) throw DimensionError("network has no layers");
    if (box.dim() != static_cast<Eigen::Index>(net.input_dim()))
        throw DimensionError("box has " + std::to_string(box.dim()) + " dimensions, network expects " +
                             std::to_string(net.input_dim()));
}

inline double concretize(const Eigen::RowVectorXd& a, double c, const Box& box, bool upper) {
    const Eigen::RowVectorXd pos = a.cwiseMax(0.0), neg = a.cwiseMin(0.0);
    const double v = upper ? pos.dot(box.hi) + neg.dot(box.lo) + c : pos.dot(box.lo) + neg.dot(box.hi) + c;
    const double mag = a.cwiseAbs().dot(box.lo.cwiseAbs().cwiseMax(box.hi.cwiseAbs())) + std::abs(c);
    const double slack = kRelaxRounding * (1.0 + mag);
    return upper ? v + slack : v - slack;
}

}  // namespace detail

inline BoundsResult interval_bounds(const nn::Network& net, const Box& box) {
    detail::check_box(net, box);
    BoundsResult r;
    Eigen::VectorXd l = box.lo, h = box.hi;
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
        const auto& layer = net.layer(k);
        const Eigen::MatrixXd pos = layer.weights.cwiseMax(0.0), neg = layer.weights.cwiseMin(0.0);
        Eigen::VectorXd zl = pos * l + neg * h + layer.biases;
        Eigen::VectorXd zh = pos * h + neg * l + layer.biases;
        const Eigen::VectorXd mag =
            layer.weights.cwiseAbs() * l.cwiseAbs().cwiseMax(h.cwiseAbs()) + layer.biases.cwiseAbs();
        const Eigen::VectorXd slack = kIntervalRounding * (mag.array() + 1.0).matrix();
        zl -= slack;
        zh += slack;
        r.lo.push_back(zl);
        r.hi.push_back(zh);
        if (layer.activation == nn::Activation::ReLU) {
            l = zl.cwiseMax(0.0);
            h = zh.cwiseMax(0.0);
        } else {
            l = zl;
            h = zh;
        }
    }
    const auto n = box.dim();
    for (Eigen::Index j = 0; j < r.lo.back().size(); ++j) {
        r.lower.push_back({Eigen::VectorXd::Zero(n), r.lo.back()[j]});
        r.upper.push_back({Eigen::VectorXd::Zero(n), r.hi.back()[j]});
    }
    return r;
}

/// One back-substitution relaxation of the network over a box. Unstable
/// ReLUs get the triangle chord from above and a fixed-slope line
/// (`lambda` in {0, 1}) from below. Pre-activation bounds come only from
/// this relaxation, which keeps the result monotone under box shrinking.
class Relaxation {
public:
    Relaxation(const nn::Network& net, const Box& box, double lambda) : net_(&net), box_(box), lambda_(lambda) {
        detail::check_box(net, box);
        const auto& layers = net.layers();
        for (std::size_t k = 0; k < layers.size(); ++k) {
            const auto nk = layers[k].weights.rows();
            const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(nk, nk);
            Eigen::VectorXd zl(nk), zh(nk);
            Eigen::MatrixXd al, ah;
            Eigen::VectorXd cl, ch;
            substitute(id, Eigen::VectorXd::Zero(nk), k, false, al, cl);
            substitute(id, Eigen::VectorXd::Zero(nk), k, true, ah, ch);
            for (Eigen::Index i = 0; i < nk; ++i) {
                zl[i] = detail::concretize(al.row(i), cl[i], box_, false);
                zh[i] = detail::concretize(ah.row(i), ch[i], box_, true);
            }
            lo_.push_back(zl);
            hi_.push_back(zh);
            if (k + 1 == layers.size()) {
                out_lower_ = {al, cl};
                out_upper_ = {ah, ch};
            }
            if (layers[k].activation == nn::Activation::ReLU) relax_layer(zl, zh);
            else {
                su_.push_back(Eigen::VectorXd::Ones(nk));
                tu_.push_back(Eigen::VectorXd::Zero(nk));
                sl_.push_back(Eigen::VectorXd::Ones(nk));
            }
        }
    }

    const std::vector<Eigen::VectorXd>& lo() const { return lo_; }
    const std::vector<Eigen::VectorXd>& hi() const { return hi_; }
    double lambda() const { return lambda_; }

    /// Affine bounds of c . y over the box, plus their concretized values.
    void bound_expression(const Eigen::VectorXd& c, Affine& lower, Affine& upper, double& lo, double& hi) const {
        const auto last = net_->layers().size() - 1;
        Eigen::MatrixXd a;
        Eigen::VectorXd k;
        substitute(c.transpose(), Eigen::VectorXd::Zero(1), last, false, a, k);
        lower = {a.row(0).transpose(), k[0]};
        lo = detail::concretize(a.row(0), k[0], box_, false);
        substitute(c.transpose(), Eigen::VectorXd::Zero(1), last, true, a, k);
        upper = {a.row(0).transpose(), k[0]};
        hi = detail::concretize(a.row(0), k[0], box_, true);
    }

    Affine output_lower(Eigen::Index j) const { return {out_lower_.first.row(j).transpose(), out_lower_.second[j]}; }
    Affine output_upper(Eigen::Index j) const { return {out_upper_.first.row(j).transpose(), out_upper_.second[j]}; }

    /// No hidden ReLU straddles zero; the affine bounds are then exact.
    bool all_stable() const {
        const auto& layers = net_->layers();
        for (std::size_t k = 0; k + 1 < layers.size(); ++k)
            if (layers[k].activation == nn::Activation::ReLU)
                for (Eigen::Index i = 0; i < lo_[k].size(); ++i)
                    if (lo_[k][i] < 0.0 && hi_[k][i] > 0.0) return false;
        return true;
    }

private:
    void relax_layer(const Eigen::VectorXd& l, const Eigen::VectorXd& h) {
        const auto n = l.size();
        Eigen::VectorXd su(n), tu(n), sl(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (h[i] <= 0.0) {
                su[i] = tu[i] = sl[i] = 0.0;
            } else if (l[i] >= 0.0) {
                su[i] = sl[i] = 1.0;
                tu[i] = 0.0;
            } else {
                su[i] = h[i] / (h[i] - l[i]);
                tu[i] = -su[i] * l[i];
                sl[i] = lambda_;
            }
        }
        su_.push_back(su);
        tu_.push_back(tu);
        sl_.push_back(sl);
    }

    // C z_top + d  ->  A x + e, choosing the upper or lower relaxation per sign.
    void substitute(Eigen::MatrixXd C, Eigen::VectorXd d, std::size_t top, bool upper, Eigen::MatrixXd& A,
                    Eigen::VectorXd& e) const {
        const auto& layers = net_->layers();
        for (std::size_t k = top + 1; k-- > 0;) {
            d += C * layers[k].biases;
            C = C * layers[k].weights;
            if (k == 0) break;
            const auto j = k - 1;  // C is now over a_j = relu(z_j)
            const Eigen::MatrixXd pos = C.cwiseMax(0.0), neg = C.cwiseMin(0.0);
            const auto& up_s = su_[j];
            const auto& lo_s = sl_[j];
            if (upper) {
                d += pos * tu_[j];
                C = pos * up_s.asDiagonal();
                C += neg * lo_s.asDiagonal();
            } else {
                d += neg * tu_[j];
                C = pos * lo_s.asDiagonal();
                C += neg * up_s.asDiagonal();
            }
        }
        A = C;
        e = d;
    }

    const nn::Network* net_;
    Box box_;
    double lambda_;
    std::vector<Eigen::VectorXd> lo_, hi_, su_, tu_, sl_;
    std::pair<Eigen::MatrixXd, Eigen::VectorXd> out_lower_, out_upper_;
};

/// Bounds of one linear output expression coef . y over a box.
struct ExpressionBounds {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<Affine> lower;  // one per relaxation
    std::vector<Affine> upper;
};

/// Interval bounds and both fixed-slope relaxations of a network over one
/// box. Reported bounds are the intersection of all three.
class BoxBounds {
public:
    BoxBounds(const nn::Network& net, const Box& box)
        : ibp_(interval_bounds(net, box)), passes_{Relaxation(net, box, 0.0), Relaxation(net, box, 1.0)} {}

    BoundsResult result() const {
        BoundsResult r = ibp_;
        for (std::size_t k = 0; k < r.lo.size(); ++k)
            for (const auto& p : passes_) {
                r.lo[k] = r.lo[k].cwiseMax(p.lo()[k]);
                r.hi[k] = r.hi[k].cwiseMin(p.hi()[k]);
            }
        const auto& out = r.lo.size() - 1;
        for (Eigen::Index j = 0; j < r.lo[out].size(); ++j) {
            double best_lo = -std::numeric_limits<double>::infinity(), best_hi = std::numeric_limits<double>::infinity();
            for (const auto& p : passes_) {
                if (p.lo()[out][j] > best_lo) {
                    best_lo = p.lo()[out][j];
                    r.lower[static_cast<std::size_t>(j)] = p.output_lower(j);
                }
                if (p.hi()[out][j] < best_hi) {
                    best_hi = p.hi()[out][j];
                    r.upper[static_cast<std::size_t>(j)] = p.output_upper(j);
                }
            }
        }
        return r;
    }

    ExpressionBounds expression(const Eigen::VectorXd& coef) const {
        ExpressionBounds e;
        const Eigen::VectorXd pos = coef.cwiseMax(0.0), neg = coef.cwiseMin(0.0);
        e.lo = pos.dot(ibp_.out_lo()) + neg.dot(ibp_.out_hi());
        e.hi = pos.dot(ibp_.out_hi()) + neg.dot(ibp_.out_lo());
        const double mag = coef.cwiseAbs().dot(ibp_.out_lo().cwiseAbs().cwiseMax(ibp_.out_hi().cwiseAbs()));
        e.lo -= kIntervalRounding * (1.0 + mag);
        e.hi += kIntervalRounding * (1.0 + mag);
        for (const auto& p : passes_) {
            Affine l, u;
            double lo = 0.0, hi = 0.0;
            p.bound_expression(coef, l, u, lo, hi);
            e.lo = std::max(e.lo, lo);
            e.hi = std::min(e.hi, hi);
            e.lower.push_back(std::move(l));
            e.upper.push_back(std::move(u));
        }
        return e;
    }

    bool all_stable() const {
        for (const auto& p : passes_)
            if (p.all_stable()) return true;
        return false;
    }

    const BoundsResult& interval() const { return ibp_; }

private:
    BoundsResult ibp_;
    std::vector<Relaxation> passes_;
};

inline BoundsResult relaxed_bounds(const nn::Network& net, const Box& box) { return BoxBounds(net, box).result(); }

}  // namespace apsafe::verify
