#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dsservo/errors.hpp"
#include "dsservo/lti.hpp"

namespace dsservo::sysid {

/// Forgetting-factor policy. `fixed` uses a constant lambda (1 = no
/// forgetting); `fixed_trace` picks lambda each step so the covariance trace
/// stays at its initial value.
struct LambdaPolicy {
    enum class Kind { fixed, fixed_trace };
    Kind kind = Kind::fixed;
    double value = 1.0;

    static LambdaPolicy fixed(double lambda = 1.0) {
        if (!(lambda > 0.0 && lambda <= 1.0))
            throw std::invalid_argument("fixed forgetting factor must be in (0, 1]");
        return {Kind::fixed, lambda};
    }
    static LambdaPolicy fixed_trace() { return {Kind::fixed_trace, 1.0}; }
};

/// Which regressor the one-step prediction uses: the current one (the form
/// implemented throughout this library) or the one-sample-older regressor of
/// Astrom's regression-model convention, kept for comparison.
enum class PredictionConvention { current_regressor, delayed_regressor };

constexpr double kLambdaFloor = 1e-3;

/// Constant-trace forgetting factor:
///   lambda = 1 - (||P phi||^2 / (1 + phi' P phi)) / tr P(0),
/// clamped to [1e-3, 1].
inline double fixed_trace_lambda(const Eigen::MatrixXd& p, const Eigen::VectorXd& phi,
                                 double tr_p0) {
    if (!(tr_p0 > 0.0)) throw std::invalid_argument("initial covariance trace must be positive");
    const Eigen::VectorXd p_phi = p * phi;
    const double denom = 1.0 + phi.dot(p_phi);
    const double drained = p_phi.squaredNorm() / denom;
    return std::clamp(1.0 - drained / tr_p0, kLambdaFloor, 1.0);
}

/// Gain-form parameter step, theta(k) = theta(k-1) + P(k) phi(k) e(k), with
/// P(k) already updated at lambda = 1. Cross-validation route only.
inline Eigen::VectorXd gain_form_estimate(const Eigen::MatrixXd& p_updated,
                                          const Eigen::VectorXd& phi, double error,
                                          const Eigen::VectorXd& theta_prev) {
    return theta_prev + p_updated * phi * error;
}

/// Identified ARX disturbance model G = B(z^-1)/A(z^-1) with
/// A = 1 + a1 z^-1 + ... and B = b1 z^-1 + ... (no feedthrough).
struct IdentifiedModel {
    std::vector<double> a;
    std::vector<double> b;
    double ts = 0.0;
    std::optional<double> fitness;  // percent, filled by the metrics layer

    lti::DiscreteLinearFilter to_filter() const {
        return lti::DiscreteLinearFilter(a, b, ts, 0.0);
    }
};

/// Recursive least-squares estimator for the ARX disturbance model.
/// Parameter order is [a1..an, b1..bm]; the regressor is
/// [-d(k-1)..-d(k-n), u(k-1)..u(k-m)] with zero-padded startup histories.
class RlsEstimator {
public:
    RlsEstimator(int n, int m, double p_init_scale,
                 LambdaPolicy policy = LambdaPolicy::fixed(1.0),
                 PredictionConvention convention = PredictionConvention::current_regressor)
        : n_(n), m_(m), policy_(policy), convention_(convention) {
        if (n_ < 0 || m_ < 0 || n_ + m_ < 1)
            throw std::invalid_argument("model orders must satisfy n, m >= 0 and n + m >= 1");
        if (!(p_init_scale > 0.0))
            throw std::invalid_argument("initial covariance scale must be positive");
        const int dim = n_ + m_;
        theta_ = Eigen::VectorXd::Zero(dim);
        p_ = Eigen::MatrixXd::Identity(dim, dim) * p_init_scale;
        tr_p0_ = p_.trace();
        d_hist_.assign(static_cast<std::size_t>(n_), 0.0);
        u_hist_.assign(static_cast<std::size_t>(m_), 0.0);
        prev_phi_ = Eigen::VectorXd::Zero(dim);
    }

    void set_initial_theta(const Eigen::VectorXd& theta0) {
        if (theta0.size() != theta_.size())
            throw std::invalid_argument("initial parameter vector has wrong length");
        theta_ = theta0;
    }

    /// Regressor for the configured prediction convention.
    Eigen::VectorXd build_regressor() const {
        return convention_ == PredictionConvention::current_regressor ? current_regressor()
                                                                      : prev_phi_;
    }

    /// One-step prediction d_hat(k) = phi'(k) theta(k-1).
    double predict() const { return build_regressor().dot(theta_); }

    struct UpdateResult {
        double error = 0.0;
        double prediction = 0.0;
        double lambda = 1.0;
    };

    /// One RLS step on the measured pair (d, u): prediction error, gain-form
    /// parameter update, covariance update with the policy's lambda, then the
    /// histories advance.
    UpdateResult update(double d, double u) {
        const Eigen::VectorXd phi = build_regressor();
        const double d_hat = phi.dot(theta_);
        const double error = d - d_hat;

        const Eigen::VectorXd p_phi = p_ * phi;
        const double denom = 1.0 + phi.dot(p_phi);
        double lambda = policy_.value;
        if (policy_.kind == LambdaPolicy::Kind::fixed_trace) {
            // Same as fixed_trace_lambda under the constant-trace invariant
            // trace(P) = tr P(0); anchoring on the live trace keeps that
            // identity exact in floating point instead of compounding
            // rounding drift through the 1/lambda inflation.
            const double drained = p_phi.squaredNorm() / denom;
            lambda = std::clamp((p_.trace() - drained) / tr_p0_, kLambdaFloor, 1.0);
        }

        theta_ += p_phi * (error / denom);
        p_ -= (p_phi * p_phi.transpose()) / denom;
        p_ /= lambda;
        p_ = 0.5 * (p_ + p_.transpose()).eval();

        if (!theta_.allFinite() || !p_.allFinite() || !std::isfinite(error))
            throw NonFinite("RLS update produced non-finite values; reinitialize the covariance");

        prev_phi_ = current_regressor();
        push(d_hist_, d);
        push(u_hist_, u);
        ++k_;
        return {error, d_hat, lambda};
    }

    /// Advance the measurement histories without touching the estimate
    /// (replay / frozen-parameter prediction).
    void push_measurement(double d, double u) {
        prev_phi_ = current_regressor();
        push(d_hist_, d);
        push(u_hist_, u);
        ++k_;
    }

    /// Split theta into the identified model's a and b vectors.
    IdentifiedModel to_model(double ts) const {
        if (k_ < n_ + m_)
            throw InsufficientData("estimator has seen fewer samples than parameters");
        IdentifiedModel model;
        model.a.assign(theta_.data(), theta_.data() + n_);
        model.b.assign(theta_.data() + n_, theta_.data() + n_ + m_);
        model.ts = ts;
        return model;
    }

    int n() const { return n_; }
    int m() const { return m_; }
    long k() const { return k_; }
    double trace_p0() const { return tr_p0_; }
    const Eigen::VectorXd& theta() const { return theta_; }
    const Eigen::MatrixXd& covariance() const { return p_; }
    const LambdaPolicy& policy() const { return policy_; }

private:
    Eigen::VectorXd current_regressor() const {
        Eigen::VectorXd phi(n_ + m_);
        for (int i = 0; i < n_; ++i) phi(i) = -d_hist_[static_cast<std::size_t>(i)];
        for (int j = 0; j < m_; ++j) phi(n_ + j) = u_hist_[static_cast<std::size_t>(j)];
        return phi;
    }

    static void push(std::vector<double>& h, double v) {
        if (h.empty()) return;
        for (std::size_t i = h.size() - 1; i > 0; --i) h[i] = h[i - 1];
        h[0] = v;
    }

    int n_ = 0;
    int m_ = 0;
    LambdaPolicy policy_;
    PredictionConvention convention_;
    Eigen::VectorXd theta_;
    Eigen::MatrixXd p_;
    double tr_p0_ = 0.0;
    std::vector<double> d_hist_;
    std::vector<double> u_hist_;
    Eigen::VectorXd prev_phi_;
    long k_ = 0;
};

}  // namespace dsservo::sysid
