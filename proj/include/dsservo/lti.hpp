#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "dsservo/errors.hpp"

namespace dsservo::lti {

/// One factor of a continuous-time rational transfer function, order <= 2.
/// Coefficients are in descending powers of s; the denominator's leading
/// coefficient must be nonzero.
struct Section {
    std::vector<double> num;
    std::vector<double> den;
};

/// Continuous-time rational model kept as a gain times a product of
/// low-order sections, so large resonance coefficients never get multiplied
/// into one ill-conditioned high-order polynomial.
struct RationalTransferFunction {
    double gain = 1.0;
    std::vector<Section> sections;
    std::string input_unit;
    std::string output_unit;
};

namespace detail {

inline void check_section(const Section& s) {
    if (s.den.empty() || s.den.size() > 3 || s.num.empty() || s.num.size() > 3)
        throw std::invalid_argument("section order must be between 0 and 2");
    if (s.den.front() == 0.0)
        throw std::invalid_argument("section denominator leading coefficient is zero");
    if (s.num.size() > s.den.size())
        throw std::invalid_argument("section must be proper");
}

inline std::vector<double> polymul(const std::vector<double>& p, const std::vector<double>& q) {
    std::vector<double> out(p.size() + q.size() - 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j)
            out[i + j] += p[i] * q[j];
    return out;
}

}  // namespace detail

inline void validate(const RationalTransferFunction& tf) {
    std::size_t num_deg = 0, den_deg = 0;
    for (const auto& s : tf.sections) {
        detail::check_section(s);
        num_deg += s.num.size() - 1;
        den_deg += s.den.size() - 1;
    }
    if (num_deg > den_deg) throw std::invalid_argument("transfer function must be proper");
    if (!std::isfinite(tf.gain)) throw std::invalid_argument("gain must be finite");
}

/// Static gain: gain * prod(num_i(0) / den_i(0)).
inline double dc_gain(const RationalTransferFunction& tf) {
    validate(tf);
    double g = tf.gain;
    for (const auto& s : tf.sections) {
        const double den0 = s.den.back();
        if (den0 == 0.0) throw PoleAtZero("section denominator vanishes at s = 0");
        g *= s.num.back() / den0;
    }
    return g;
}

/// Continuous poles of every section (closed form, order <= 2).
inline std::vector<std::complex<double>> continuous_poles(const RationalTransferFunction& tf) {
    std::vector<std::complex<double>> out;
    for (const auto& s : tf.sections) {
        const auto& d = s.den;
        if (d.size() == 2) {
            out.emplace_back(-d[1] / d[0], 0.0);
        } else if (d.size() == 3) {
            const double a = d[0], b = d[1], c = d[2];
            const double disc = b * b - 4.0 * a * c;
            if (disc >= 0.0) {
                const double r = std::sqrt(disc);
                out.emplace_back((-b + r) / (2.0 * a), 0.0);
                out.emplace_back((-b - r) / (2.0 * a), 0.0);
            } else {
                const double re = -b / (2.0 * a);
                const double im = std::sqrt(-disc) / (2.0 * a);
                out.emplace_back(re, im);
                out.emplace_back(re, -im);
            }
        }
    }
    return out;
}

/// Difference-equation realization of a z-domain rational model:
///   y(k) = -a1 y(k-1) - ... - an y(k-n)
///          + b0 u(k) + b1 u(k-1) + ... + bm u(k-m)
/// The b0 feedthrough is kept at zero for identification models; discretized
/// plants and controllers may carry a nonzero one.
class DiscreteLinearFilter {
public:
    DiscreteLinearFilter() = default;

    DiscreteLinearFilter(std::vector<double> a, std::vector<double> b, double ts, double b0 = 0.0)
        : a_(std::move(a)), b_(std::move(b)), b0_(b0), ts_(ts) {
        if (!(ts_ > 0.0)) throw std::invalid_argument("sample interval must be positive");
        y_hist_.assign(a_.size(), 0.0);
        u_hist_.assign(b_.size(), 0.0);
    }

    double step(double u) {
        double out = b0_ * u;
        for (std::size_t j = 0; j < b_.size(); ++j) out += b_[j] * u_hist_[j];
        for (std::size_t i = 0; i < a_.size(); ++i) out -= a_[i] * y_hist_[i];
        if (!std::isfinite(out) || !std::isfinite(u))
            throw NonFinite("filter output is not finite");
        push(u_hist_, u);
        push(y_hist_, out);
        return out;
    }

    void reset() {
        std::fill(y_hist_.begin(), y_hist_.end(), 0.0);
        std::fill(u_hist_.begin(), u_hist_.end(), 0.0);
    }

    const std::vector<double>& a() const { return a_; }
    const std::vector<double>& b() const { return b_; }
    double b0() const { return b0_; }
    double ts() const { return ts_; }

    /// Static gain (b0 + sum b) / (1 + sum a).
    double dc() const {
        double bs = b0_, as = 1.0;
        for (double v : b_) bs += v;
        for (double v : a_) as += v;
        if (as == 0.0) throw PoleAtZero("discrete pole at z = 1");
        return bs / as;
    }

    /// Roots of z^n + a1 z^(n-1) + ... + an via the companion matrix.
    std::vector<std::complex<double>> poles() const {
        const std::size_t n = a_.size();
        std::vector<std::complex<double>> out;
        if (n == 0) return out;
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                     static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) comp(0, static_cast<Eigen::Index>(i)) = -a_[i];
        for (std::size_t i = 1; i < n; ++i)
            comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            out.push_back(es.eigenvalues()(i));
        return out;
    }

    /// Set when discretization moved a stable continuous model onto or
    /// outside the unit circle.
    bool unstable_warning = false;

private:
    static void push(std::vector<double>& h, double v) {
        if (h.empty()) return;
        for (std::size_t i = h.size() - 1; i > 0; --i) h[i] = h[i - 1];
        h[0] = v;
    }

    std::vector<double> a_;
    std::vector<double> b_;
    double b0_ = 0.0;
    double ts_ = 0.0;
    std::vector<double> y_hist_;
    std::vector<double> u_hist_;
};

enum class DiscretizeMethod { bilinear, zero_order_hold };

namespace detail {

struct ZPoly {
    // descending powers of z, denominator monic
    std::vector<double> b;
    std::vector<double> a;
};

// Controllable canonical realization of one proper section.
struct SectionSs {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;
    int order = 0;
};

inline SectionSs section_state_space(const Section& s) {
    std::vector<double> den = s.den;
    std::vector<double> num(den.size() - s.num.size(), 0.0);
    num.insert(num.end(), s.num.begin(), s.num.end());
    const double d0 = den[0];
    for (auto& v : den) v /= d0;
    for (auto& v : num) v /= d0;

    SectionSs ss;
    ss.order = static_cast<int>(den.size()) - 1;
    ss.D = num[0];
    if (ss.order == 0) return ss;
    ss.A = Eigen::MatrixXd::Zero(ss.order, ss.order);
    ss.B = Eigen::VectorXd::Zero(ss.order);
    ss.C = Eigen::RowVectorXd::Zero(ss.order);
    for (int i = 0; i < ss.order; ++i) ss.A(0, i) = -den[static_cast<std::size_t>(i) + 1];
    for (int i = 1; i < ss.order; ++i) ss.A(i, i - 1) = 1.0;
    ss.B(0) = 1.0;
    for (int i = 0; i < ss.order; ++i)
        ss.C(i) = num[static_cast<std::size_t>(i) + 1] - num[0] * den[static_cast<std::size_t>(i) + 1];
    return ss;
}

// Exact step-invariant (ZOH) map of one section: Ad = e^(A T),
// Bd = integral of e^(A tau) B, both read off one augmented exponential.
// Second-order sections are similarity-balanced (state 2 scaled by the
// natural frequency) so the exponential sees O(wT) entries instead of the
// w^2-vs-1 spread of the raw companion form.
inline ZPoly zoh_section(const Section& s, double ts) {
    SectionSs ss = section_state_space(s);
    if (ss.order == 0) return {{ss.D}, {1.0}};
    if (ss.order == 2) {
        const double w = std::sqrt(std::abs(ss.A(0, 1)));
        if (w > 0.0) {
            ss.A(0, 1) /= w;
            ss.A(1, 0) *= w;
            ss.C(1) /= w;
        }
    }

    const int n = ss.order;
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = ss.A * ts;
    aug.topRightCorner(n, 1) = ss.B * ts;
    const Eigen::MatrixXd e = aug.exp();
    const Eigen::MatrixXd ad = e.topLeftCorner(n, n);
    const Eigen::VectorXd bd = e.topRightCorner(n, 1);

    ZPoly out;
    if (n == 1) {
        out.a = {1.0, -ad(0, 0)};
        out.b = {0.0, ss.C(0) * bd(0)};
    } else {
        out.a = {1.0, -(ad(0, 0) + ad(1, 1)), ad(0, 0) * ad(1, 1) - ad(0, 1) * ad(1, 0)};
        // C adj(zI - Ad) Bd, adj = [[z-a11(1,1), a01],[a10, z-a00]]
        out.b = {0.0,
                 ss.C(0) * bd(0) + ss.C(1) * bd(1),
                 ss.C(0) * (-ad(1, 1) * bd(0) + ad(0, 1) * bd(1)) +
                     ss.C(1) * (ad(1, 0) * bd(0) - ad(0, 0) * bd(1))};
    }
    for (std::size_t i = 0; i < out.a.size(); ++i) out.b[i] += ss.D * out.a[i];
    return out;
}

inline std::vector<double> binomial_expand(double c0, double c1, int e, int pad_to) {
    // (c0 z + c1)^e, padded with leading zeros to length pad_to + 1
    std::vector<double> p{1.0};
    for (int i = 0; i < e; ++i) p = polymul(p, {c0, c1});
    std::vector<double> out(static_cast<std::size_t>(pad_to) + 1 - p.size(), 0.0);
    out.insert(out.end(), p.begin(), p.end());
    return out;
}

// Tustin substitution s -> (2/ts)(z-1)/(z+1) applied to one section.
inline ZPoly bilinear_section(const Section& s, double ts) {
    std::vector<double> den = s.den;
    std::vector<double> num(den.size() - s.num.size(), 0.0);
    num.insert(num.end(), s.num.begin(), s.num.end());
    const int n = static_cast<int>(den.size()) - 1;
    const double k = 2.0 / ts;

    auto subst = [&](const std::vector<double>& p) {
        std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const int e = static_cast<int>(p.size() - 1 - i);
            auto t1 = binomial_expand(1.0, -1.0, e, e);            // (z-1)^e
            auto t2 = binomial_expand(1.0, 1.0, n - e, n - e);     // (z+1)^(n-e)
            auto term = polymul(t1, t2);
            const double scale = p[i] * std::pow(k, e);
            for (std::size_t j = 0; j < term.size(); ++j)
                out[j] += scale * term[j];
        }
        return out;
    };

    ZPoly out;
    out.b = subst(num);
    out.a = subst(den);
    const double a0 = out.a[0];
    for (auto& v : out.b) v /= a0;
    for (auto& v : out.a) v /= a0;
    return out;
}

}  // namespace detail

/// Discretize a continuous rational model section by section and cascade the
/// results into one difference equation. ZOH keeps every continuous pole at
/// exactly e^(sT); both methods map s = 0 to z = 1, so static gain is
/// preserved whenever it exists.
inline DiscreteLinearFilter discretize(const RationalTransferFunction& tf, double ts,
                                       DiscretizeMethod method) {
    validate(tf);
    if (!(ts > 0.0)) throw std::invalid_argument("sample interval must be positive");

    std::vector<double> b{tf.gain}, a{1.0};
    for (const auto& s : tf.sections) {
        const detail::ZPoly zp = (method == DiscretizeMethod::zero_order_hold)
                                     ? detail::zoh_section(s, ts)
                                     : detail::bilinear_section(s, ts);
        b = detail::polymul(b, zp.b);
        a = detail::polymul(a, zp.a);
    }
    // pad numerator to denominator length; a is monic by construction
    b.insert(b.begin(), a.size() - b.size(), 0.0);

    DiscreteLinearFilter f(std::vector<double>(a.begin() + 1, a.end()),
                           std::vector<double>(b.begin() + 1, b.end()), ts, b.front());

    bool continuous_stable = true;
    for (const auto& p : continuous_poles(tf))
        if (p.real() >= 0.0) continuous_stable = false;
    if (continuous_stable) {
        for (const auto& p : f.poles())
            if (std::abs(p) >= 1.0) f.unstable_warning = true;
    }
    return f;
}

inline double filter_step(DiscreteLinearFilter& f, double u) { return f.step(u); }

}  // namespace dsservo::lti
