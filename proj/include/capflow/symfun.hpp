#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace capflow::symfun {

/// Thrown when a curvature vector leaves the cone required by an operation.
/// Carries the offending vector for diagnostics.
class cone_violation : public std::domain_error {
public:
    cone_violation(const std::string& what, Eigen::VectorXd kappa)
        : std::domain_error(what), kappa_(std::move(kappa)) {}

    const Eigen::VectorXd& kappa() const { return kappa_; }

private:
    Eigen::VectorXd kappa_;
};

[[nodiscard]] inline double binomial(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double result = 1.0;
    for (int i = 0; i < k; ++i) {
        result *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    }
    return result;
}

/// Elementary symmetric polynomials e_0..e_n of kappa by the stable
/// coefficient recurrence of prod_i (1 + t kappa_i).
[[nodiscard]] inline Eigen::VectorXd elementary_all(const Eigen::VectorXd& kappa)
{
    const int n = static_cast<int>(kappa.size());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n + 1);
    e(0) = 1.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j >= 1; --j) {
            e(j) += kappa(i) * e(j - 1);
        }
    }
    return e;
}

/// Elementary symmetric polynomials of kappa with one entry removed,
/// divided out of the full set: e_minus[j] = e[j] - kj * e_minus[j-1].
[[nodiscard]] inline Eigen::VectorXd elementary_excluding(const Eigen::VectorXd& e_full,
                                                          double kj)
{
    const int n = static_cast<int>(e_full.size()) - 1;
    Eigen::VectorXd e_minus = Eigen::VectorXd::Zero(n);
    e_minus(0) = 1.0;
    for (int j = 1; j < n; ++j) {
        e_minus(j) = e_full(j) - kj * e_minus(j - 1);
    }
    return e_minus;
}

[[nodiscard]] inline double sigma(const Eigen::VectorXd& kappa, int j)
{
    const int n = static_cast<int>(kappa.size());
    if (j < 0 || j > n) {
        throw std::out_of_range("sigma: index " + std::to_string(j) +
                                " outside [0, " + std::to_string(n) + "]");
    }
    return elementary_all(kappa)(j);
}

/// Normalized mean curvature H_j = sigma_j / C(n, j), so H_j(1,...,1) = 1.
[[nodiscard]] inline double normalized_H(const Eigen::VectorXd& kappa, int j)
{
    return sigma(kappa, j) / binomial(static_cast<int>(kappa.size()), j);
}

[[nodiscard]] inline bool in_positive_cone(const Eigen::VectorXd& kappa)
{
    return (kappa.array() > 0.0).all() && kappa.allFinite();
}

/// Garding cone membership: sigma_j > 0 for j = 1..k. Strict sign checks,
/// no tolerance; callers wanting slack apply it themselves.
[[nodiscard]] inline bool in_garding_cone(const Eigen::VectorXd& kappa, int k)
{
    if (!kappa.allFinite()) return false;
    const Eigen::VectorXd e = elementary_all(kappa);
    for (int j = 1; j <= k; ++j) {
        if (e(j) <= 0.0) return false;
    }
    return true;
}

inline void require_garding(const Eigen::VectorXd& kappa, int k, const char* where)
{
    if (!in_garding_cone(kappa, k)) {
        throw cone_violation(std::string(where) + ": kappa outside Gamma_" +
                                 std::to_string(k) + "^+",
                             kappa);
    }
}

inline void require_positive(const Eigen::VectorXd& kappa, const char* where)
{
    if (!in_positive_cone(kappa)) {
        throw cone_violation(std::string(where) + ": kappa outside Gamma_+", kappa);
    }
}

/// F = H_k / H_{k-1}, the quotient curvature function driving the flow.
[[nodiscard]] inline double quotient_value(int k, const Eigen::VectorXd& kappa)
{
    const int n = static_cast<int>(kappa.size());
    if (k < 1 || k > n) throw std::out_of_range("quotient_value: bad flow index");
    require_garding(kappa, k, "quotient_value");
    return normalized_H(kappa, k) / normalized_H(kappa, k - 1);
}

/// Gradient fdot^i = d f / d kappa_i via the quotient rule, with
/// sigmadot_j^i = sigma_{j-1}(kappa with entry i removed).
[[nodiscard]] inline Eigen::VectorXd quotient_gradient(int k, const Eigen::VectorXd& kappa)
{
    const int n = static_cast<int>(kappa.size());
    if (k < 1 || k > n) throw std::out_of_range("quotient_gradient: bad flow index");
    require_positive(kappa, "quotient_gradient");

    const Eigen::VectorXd e = elementary_all(kappa);
    const double ratio = binomial(n, k - 1) / binomial(n, k);
    const double sk = e(k);
    const double skm1 = e(k - 1);

    Eigen::VectorXd grad(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd em = elementary_excluding(e, kappa(i));
        const double dk = em(k - 1);
        const double dkm1 = (k >= 2) ? em(k - 2) : 0.0;
        grad(i) = ratio * (dk * skm1 - sk * dkm1) / (skm1 * skm1);
    }
    return grad;
}

struct SandwichTerms {
    double lower;   // F^2
    double middle;  // sum_i fdot^i kappa_i^2
    double upper;   // (n-k+1) F^2
};

/// Closed-form route to the middle sandwich term:
/// [(n-k+1) H_k^2 - (n-k) H_{k-1} H_{k+1}] / H_{k-1}^2, with H_{n+1} = 0.
[[nodiscard]] inline double key_inequality_middle_closed(int k, const Eigen::VectorXd& kappa)
{
    const int n = static_cast<int>(kappa.size());
    const double hk = normalized_H(kappa, k);
    const double hkm1 = normalized_H(kappa, k - 1);
    const double hkp1 = (k + 1 <= n) ? normalized_H(kappa, k + 1) : 0.0;
    return ((n - k + 1) * hk * hk - (n - k) * hkm1 * hkp1) / (hkm1 * hkm1);
}

[[nodiscard]] inline SandwichTerms key_inequality_terms(int k, const Eigen::VectorXd& kappa)
{
    require_positive(kappa, "key_inequality_terms");
    const int n = static_cast<int>(kappa.size());
    const double F = quotient_value(k, kappa);
    const Eigen::VectorXd grad = quotient_gradient(k, kappa);
    SandwichTerms terms;
    terms.lower = F * F;
    terms.middle = grad.dot(kappa.cwiseProduct(kappa));
    terms.upper = (n - k + 1) * F * F;
    return terms;
}

/// Newton-MacLaurin gap H_l H_{k-1} - H_{l-1} H_k; nonnegative on Gamma_k^+,
/// zero exactly at kappa proportional to (1,...,1).
[[nodiscard]] inline double newton_maclaurin_gap(const Eigen::VectorXd& kappa, int k, int l)
{
    const int n = static_cast<int>(kappa.size());
    if (!(1 <= l && l < k && k <= n)) {
        throw std::out_of_range("newton_maclaurin_gap: need 1 <= l < k <= n");
    }
    require_garding(kappa, k, "newton_maclaurin_gap");
    return normalized_H(kappa, l) * normalized_H(kappa, k - 1) -
           normalized_H(kappa, l - 1) * normalized_H(kappa, k);
}

/// Inverse-concavity quadratic form
///   sum fddot^{ij} y_i y_j + 2 sum (fdot^i/kappa_i) y_i^2 - 2 F^{-1} (sum fdot^i y_i)^2,
/// with the second derivative evaluated as a central finite difference of the
/// analytic gradient in direction y. Nonnegative up to the difference-step error.
[[nodiscard]] inline double inverse_concavity_residual(int k,
                                                       const Eigen::VectorXd& kappa,
                                                       const Eigen::VectorXd& y,
                                                       double step = 1e-4)
{
    require_positive(kappa, "inverse_concavity_residual");
    const double F = quotient_value(k, kappa);
    const Eigen::VectorXd grad = quotient_gradient(k, kappa);

    const Eigen::VectorXd kp = kappa + step * y;
    const Eigen::VectorXd km = kappa - step * y;
    const double fdd =
        y.dot(quotient_gradient(k, kp) - quotient_gradient(k, km)) / (2.0 * step);

    const double curvature_term =
        2.0 * (grad.array() / kappa.array() * y.array().square()).sum();
    const double homogeneity_term = 2.0 / F * std::pow(grad.dot(y), 2);
    return fdd + curvature_term - homogeneity_term;
}

}  // namespace capflow::symfun
