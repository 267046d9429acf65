#include "sapa/fitting.hpp"

#include "sapa/params.hpp"
#include "sapa/response.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sapa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
/// Condition number of the relatively-scaled Jacobian above which a fit is
/// flagged ill-conditioned.
constexpr double kConditionWarning = 1e8;
/// A free parameter whose full relative variation moves the model RMS by
/// less than this fraction of the data RMS is practically unidentifiable.
constexpr double kSensitivityWarning = 1e-4;

/// Characteristic magnitude of parameter j, used for relative FD steps,
/// relative gradients, and conditioning. Falls back to the box width, then
/// to 1, for parameters sitting at zero.
double parameter_scale(double x, double lo, double hi)
{
    if (x != 0.0) {
        return std::abs(x);
    }
    const double width = hi - lo;
    if (std::isfinite(width) && width > 0) {
        return 1e-3 * width;
    }
    return 1.0;
}

std::string format_vector(const Eigen::VectorXd& x)
{
    std::ostringstream out;
    out << "[";
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out << (i ? ", " : "") << x[i];
    }
    out << "]";
    return out.str();
}

Eigen::VectorXd clip_to_box(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi)
{
    return x.cwiseMax(lo).cwiseMin(hi);
}

/// Evaluate the residual vector; any non-finite entry is an immediate
/// failure naming the parameter vector.
Eigen::VectorXd eval_residuals(const ResidualFn& fn, const Eigen::VectorXd& x)
{
    Eigen::VectorXd r = fn(x);
    if (!r.allFinite()) {
        throw std::runtime_error(
            "minimize: objective is not finite at parameters " +
            format_vector(x));
    }
    return r;
}

/// Forward-difference Jacobian with a relative step, stepping away from any
/// bound the nominal step would cross. A parameter pinned by a zero-width box
/// produces a zero column.
Eigen::MatrixXd fd_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& r0,
                            const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi, double rel_step)
{
    const auto m = r0.size();
    const auto p = x.size();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        double h = rel_step * parameter_scale(x[j], lo[j], hi[j]);
        if (x[j] + h > hi[j]) {
            h = -h;
        }
        Eigen::VectorXd xt = x;
        xt[j] = std::min(std::max(x[j] + h, lo[j]), hi[j]);
        const double h_eff = xt[j] - x[j];
        if (h_eff == 0.0) {
            continue;
        }
        jac.col(j) = (eval_residuals(fn, xt) - r0) / h_eff;
    }
    return jac;
}

struct BoundFlags {
    std::vector<bool> lower;
    std::vector<bool> upper;
};

BoundFlags bound_flags(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi)
{
    BoundFlags flags;
    flags.lower.resize(static_cast<std::size_t>(x.size()));
    flags.upper.resize(static_cast<std::size_t>(x.size()));
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double width = hi[j] - lo[j];
        const double tol_width =
            std::isfinite(width) ? 1e-8 * width : 0.0;
        const auto near = [&](double bound) {
            if (!std::isfinite(bound)) {
                return false;
            }
            const double tol = std::max(
                tol_width, 1e-10 * std::max(std::abs(x[j]), std::abs(bound)));
            return std::abs(x[j] - bound) <= tol;
        };
        flags.lower[static_cast<std::size_t>(j)] = near(lo[j]);
        flags.upper[static_cast<std::size_t>(j)] = near(hi[j]);
    }
    return flags;
}

/// Gradient of the sum-of-squares objective with respect to *relative*
/// parameter changes (so mixed units compare meaningfully), with components
/// pushing against an active bound zeroed out (first-order optimality on the
/// box).
Eigen::VectorXd projected_gradient(const Eigen::MatrixXd& jac,
                                   const Eigen::VectorXd& r,
                                   const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi,
                                   const BoundFlags& flags)
{
    Eigen::VectorXd g = 2.0 * (jac.transpose() * r);
    for (Eigen::Index j = 0; j < g.size(); ++j) {
        const auto k = static_cast<std::size_t>(j);
        if ((flags.lower[k] && g[j] > 0) || (flags.upper[k] && g[j] < 0)) {
            g[j] = 0;
        } else {
            g[j] *= parameter_scale(x[j], lo[j], hi[j]);
        }
    }
    return g;
}

/// Condition number and standard errors from the finite-difference Jacobian
/// at the solution. Conditioning is judged on the relatively-scaled Jacobian
/// J * diag(scale_j) so that mixed physical units do not masquerade as
/// degeneracy; cov = (J^T J)^-1 * SSR / (m - p), with near-null singular
/// directions producing deliberately huge (but finite) errors.
void finish_statistics(FitResult& result, const Eigen::MatrixXd& jac,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, double ssr)
{
    const auto m = jac.rows();
    const auto p = jac.cols();
    Eigen::VectorXd scales(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        scales[j] = parameter_scale(x[j], lo[j], hi[j]);
    }
    const Eigen::MatrixXd jac_rel = jac * scales.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        jac_rel, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double s_max = s.size() ? s[0] : 0.0;
    const double s_min = s.size() ? s[s.size() - 1] : 0.0;
    result.condition_number = (s_min > 0) ? s_max / s_min : kInf;
    if (!(result.condition_number < kConditionWarning)) {
        result.ill_conditioned = true;
    }

    const double dof = std::max<double>(1, m - p);
    const double sigma2 = ssr / dof;
    const double s_floor = std::max(s_max, 1e-300) * 1e-14;
    for (Eigen::Index j = 0; j < p; ++j) {
        double var = 0;
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            const double sk = std::max(s[k], s_floor);
            const double vjk = svd.matrixV()(j, k);
            var += vjk * vjk / (sk * sk);
        }
        result.parameters[static_cast<std::size_t>(j)].std_error =
            scales[j] * std::sqrt(var * sigma2);
    }
}

FitResult run_gauss_newton(const ResidualFn& fn, Eigen::VectorXd x,
                           const Eigen::VectorXd& lo,
                           const Eigen::VectorXd& hi,
                           const MinimizeOptions& opt)
{
    FitResult result;
    Eigen::VectorXd r = eval_residuals(fn, x);
    double f = r.squaredNorm();
    result.accepted_objectives.push_back(f);

    double lambda = 1e-3;
    Eigen::MatrixXd jac;
    bool jac_fresh = false;
    for (result.iterations = 0; result.iterations < opt.max_iterations;
         ++result.iterations) {
        if (!jac_fresh) {
            jac = fd_jacobian(fn, x, r, lo, hi, opt.fd_step);
            jac_fresh = true;
        }
        const Eigen::VectorXd g_proj =
            projected_gradient(jac, r, x, lo, hi, bound_flags(x, lo, hi));
        if (g_proj.lpNorm<Eigen::Infinity>() <=
            opt.gradient_tolerance * std::max(1.0, f)) {
            result.converged = true;
            break;
        }

        // Marquardt column scaling: solve in variables normalized by the
        // Jacobian column norms so mixed parameter units cannot wreck the
        // conditioning of the normal equations.
        Eigen::VectorXd colnorm(jac.cols());
        for (Eigen::Index j = 0; j < jac.cols(); ++j) {
            const double n = jac.col(j).norm();
            colnorm[j] = (n > 0) ? n : 1.0;
        }
        const Eigen::MatrixXd jac_s =
            jac * colnorm.cwiseInverse().asDiagonal();
        Eigen::MatrixXd normal = jac_s.transpose() * jac_s;
        normal.diagonal().array() += lambda;
        const Eigen::VectorXd step_s =
            normal.ldlt().solve(-jac_s.transpose() * r);
        const Eigen::VectorXd step = step_s.cwiseQuotient(colnorm);

        const Eigen::VectorXd x_trial = clip_to_box(x + step, lo, hi);
        bool accepted = false;
        if ((x_trial - x).lpNorm<Eigen::Infinity>() > 0) {
            const Eigen::VectorXd r_trial = eval_residuals(fn, x_trial);
            const double f_trial = r_trial.squaredNorm();
            if (f_trial < f) {
                x = x_trial;
                r = r_trial;
                f = f_trial;
                result.accepted_objectives.push_back(f);
                lambda = std::max(lambda / 3.0, 1e-12);
                jac_fresh = false;
                accepted = true;
            }
        }
        if (!accepted) {
            lambda *= 4.0;
            if (lambda > 1e14) {
                break;  // damping saturated: no improving step exists
            }
        }
    }

    if (!jac_fresh) {
        jac = fd_jacobian(fn, x, r, lo, hi, opt.fd_step);
    }
    const auto flags = bound_flags(x, lo, hi);
    const Eigen::VectorXd g_proj =
        projected_gradient(jac, r, x, lo, hi, flags);
    result.gradient_norm = g_proj.lpNorm<Eigen::Infinity>();
    result.converged =
        result.gradient_norm <= opt.gradient_tolerance * std::max(1.0, f);

    result.objective = f;
    result.residual_rms = std::sqrt(f / static_cast<double>(r.size()));
    result.parameters.resize(static_cast<std::size_t>(x.size()));
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        auto& par = result.parameters[static_cast<std::size_t>(j)];
        par.name = "x" + std::to_string(j);
        par.value = x[j];
        par.at_lower_bound = flags.lower[static_cast<std::size_t>(j)];
        par.at_upper_bound = flags.upper[static_cast<std::size_t>(j)];
    }
    finish_statistics(result, jac, x, lo, hi, f);
    return result;
}

FitResult run_simplex(const ResidualFn& fn, const Eigen::VectorXd& init,
                      const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                      const MinimizeOptions& opt)
{
    const auto p = init.size();
    const auto np = static_cast<std::size_t>(p);
    const auto objective = [&](const Eigen::VectorXd& x) {
        return eval_residuals(fn, x).squaredNorm();
    };

    std::vector<Eigen::VectorXd> verts;
    std::vector<double> fvals;
    const auto build_simplex = [&](const Eigen::VectorXd& center,
                                   double step_scale) {
        verts.assign(1, clip_to_box(center, lo, hi));
        for (Eigen::Index j = 0; j < p; ++j) {
            const double h =
                step_scale * 0.05 * parameter_scale(center[j], lo[j], hi[j]);
            Eigen::VectorXd v = verts[0];
            v[j] = std::min(v[j] + h, hi[j]);
            if (v[j] == verts[0][j]) {
                v[j] = std::max(verts[0][j] - h, lo[j]);
            }
            verts.push_back(v);
        }
        fvals.resize(verts.size());
        for (std::size_t k = 0; k < verts.size(); ++k) {
            fvals[k] = objective(verts[k]);
        }
    };
    const auto order = [&]() {
        std::vector<std::size_t> idx(verts.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            idx[k] = k;
        }
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a,
                                                     std::size_t b) {
            return fvals[a] < fvals[b];
        });
        std::vector<Eigen::VectorXd> v2;
        std::vector<double> f2;
        for (const auto k : idx) {
            v2.push_back(verts[k]);
            f2.push_back(fvals[k]);
        }
        verts.swap(v2);
        fvals.swap(f2);
    };

    FitResult result;
    build_simplex(init, 1.0);
    order();
    result.accepted_objectives.push_back(fvals[0]);

    int restarts = 0;
    for (result.iterations = 0; result.iterations < opt.max_iterations;
         ++result.iterations) {
        // Converged when the simplex has collapsed in both value and extent.
        double diam = 0;
        for (std::size_t k = 1; k < verts.size(); ++k) {
            diam = std::max(diam,
                            (verts[k] - verts[0]).lpNorm<Eigen::Infinity>());
        }
        const double f_spread = fvals[np] - fvals[0];
        const bool collapsed =
            diam <= 1e-9 * (1.0 + verts[0].lpNorm<Eigen::Infinity>()) &&
            f_spread <= 1e-12 * (std::abs(fvals[0]) + 1e-12);
        if (collapsed) {
            if (restarts >= 1) {
                break;
            }
            // Restart once from the best vertex with a smaller simplex to
            // escape premature collapse.
            const Eigen::VectorXd best = verts[0];
            build_simplex(best, 0.1);
            order();
            ++restarts;
            continue;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(p);
        for (std::size_t k = 0; k < np; ++k) {
            centroid += verts[k];
        }
        centroid /= static_cast<double>(np);

        const auto try_point = [&](double coeff) {
            Eigen::VectorXd x =
                clip_to_box(centroid + coeff * (centroid - verts[np]), lo, hi);
            return std::make_pair(x, objective(x));
        };

        auto [x_r, f_r] = try_point(1.0);  // reflection
        if (f_r < fvals[0]) {
            auto [x_e, f_e] = try_point(2.0);  // expansion
            if (f_e < f_r) {
                verts[np] = x_e;
                fvals[np] = f_e;
            } else {
                verts[np] = x_r;
                fvals[np] = f_r;
            }
        } else if (f_r < fvals[np - 1]) {
            verts[np] = x_r;
            fvals[np] = f_r;
        } else {
            const bool outside = f_r < fvals[np];
            auto [x_c, f_c] = try_point(outside ? 0.5 : -0.5);  // contraction
            if (f_c < (outside ? f_r : fvals[np])) {
                verts[np] = x_c;
                fvals[np] = f_c;
            } else {
                for (std::size_t k = 1; k < verts.size(); ++k) {  // shrink
                    verts[k] = clip_to_box(
                        verts[0] + 0.5 * (verts[k] - verts[0]), lo, hi);
                    fvals[k] = objective(verts[k]);
                }
            }
        }
        order();
        if (fvals[0] < result.accepted_objectives.back()) {
            result.accepted_objectives.push_back(fvals[0]);
        }
    }

    order();
    const Eigen::VectorXd x = verts[0];
    const Eigen::VectorXd r = eval_residuals(fn, x);
    const double f = r.squaredNorm();
    const Eigen::MatrixXd jac = fd_jacobian(fn, x, r, lo, hi, opt.fd_step);
    const auto flags = bound_flags(x, lo, hi);
    result.gradient_norm = projected_gradient(jac, r, x, lo, hi, flags)
                               .lpNorm<Eigen::Infinity>();
    result.converged =
        result.gradient_norm <= opt.gradient_tolerance * std::max(1.0, f);
    result.objective = f;
    result.residual_rms = std::sqrt(f / static_cast<double>(r.size()));
    result.parameters.resize(np);
    for (Eigen::Index j = 0; j < p; ++j) {
        auto& par = result.parameters[static_cast<std::size_t>(j)];
        par.name = "x" + std::to_string(j);
        par.value = x[j];
        par.at_lower_bound = flags.lower[static_cast<std::size_t>(j)];
        par.at_upper_bound = flags.upper[static_cast<std::size_t>(j)];
    }
    finish_statistics(result, jac, x, lo, hi, f);
    return result;
}

/// Post-fit identifiability screen for the spectrum fits: if a full relative
/// variation of some free parameter moves the model RMS by less than
/// kSensitivityWarning of the data RMS, the parameter is practically
/// unidentifiable from this data set and the result is flagged.
void flag_weak_sensitivity(FitResult& result, const ResidualFn& fn,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                           const Eigen::VectorXd& hi, double fd_step,
                           double data_rms)
{
    const Eigen::VectorXd r = eval_residuals(fn, x);
    const Eigen::MatrixXd jac = fd_jacobian(fn, x, r, lo, hi, fd_step);
    const double norm = std::sqrt(static_cast<double>(r.size()));
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double sens =
            jac.col(j).norm() * parameter_scale(x[j], lo[j], hi[j]) / norm;
        if (sens < kSensitivityWarning * data_rms) {
            result.ill_conditioned = true;
        }
    }
}

double lorentzian_amplitude(double omega, double omega_r, double kappa,
                            double scale)
{
    const double half = 0.5 * kappa;
    const double d = omega_r - omega;
    return scale * half / std::sqrt(d * d + half * half);
}

}  // namespace

const FitParameter& FitResult::parameter(const std::string& name) const
{
    for (const auto& par : parameters) {
        if (par.name == name) {
            return par;
        }
    }
    throw std::invalid_argument("FitResult: no parameter named '" + name +
                                "'");
}

double FitResult::value(const std::string& name) const
{
    return parameter(name).value;
}

std::string FitResult::to_text() const
{
    nlohmann::json doc;
    doc["converged"] = converged;
    doc["iterations"] = iterations;
    doc["objective"] = objective;
    doc["residual_rms"] = residual_rms;
    doc["gradient_norm"] = gradient_norm;
    doc["condition_number"] =
        std::isfinite(condition_number) ? condition_number : -1.0;
    doc["ill_conditioned"] = ill_conditioned;
    doc["parameters"] = nlohmann::json::array();
    for (const auto& par : parameters) {
        doc["parameters"].push_back({{"name", par.name},
                                     {"unit", par.unit},
                                     {"value", par.value},
                                     {"std_error", par.std_error},
                                     {"at_lower_bound", par.at_lower_bound},
                                     {"at_upper_bound", par.at_upper_bound}});
    }
    return doc.dump(2);
}

FitResult minimize(const ResidualFn& residuals, const Eigen::VectorXd& init,
                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                   const MinimizeOptions& options)
{
    if (init.size() == 0) {
        throw std::invalid_argument("minimize: empty parameter vector");
    }
    if (lower.size() != init.size() || upper.size() != init.size()) {
        throw std::invalid_argument(
            "minimize: bounds must match the parameter dimension");
    }
    if ((lower.array() > upper.array()).any()) {
        throw std::invalid_argument("minimize: lower bound exceeds upper");
    }
    if (options.max_iterations < 1 || options.fd_step <= 0 ||
        options.gradient_tolerance <= 0) {
        throw std::invalid_argument("minimize: invalid options");
    }
    const Eigen::VectorXd x0 = clip_to_box(init, lower, upper);
    if (options.method == FitMethod::gauss_newton) {
        return run_gauss_newton(residuals, x0, lower, upper, options);
    }
    return run_simplex(residuals, x0, lower, upper, options);
}

FitResult minimize(const ResidualFn& residuals, const Eigen::VectorXd& init,
                   const MinimizeOptions& options)
{
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(init.size(), -kInf);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(init.size(), kInf);
    return minimize(residuals, init, lo, hi, options);
}

FitResult fit_lorentzian(const std::vector<std::pair<double, double>>& data,
                         const Eigen::Vector3d& init,
                         const Eigen::Vector3d& lower,
                         const Eigen::Vector3d& upper,
                         const MinimizeOptions& options)
{
    if (data.size() < 5) {
        throw std::invalid_argument(
            "fit_lorentzian: need at least 5 data points");
    }
    const ResidualFn residuals = [&data](const Eigen::VectorXd& x) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(data.size()));
        for (std::size_t i = 0; i < data.size(); ++i) {
            r[static_cast<Eigen::Index>(i)] =
                lorentzian_amplitude(data[i].first, x[0], x[1], x[2]) -
                data[i].second;
        }
        return r;
    };
    FitResult result = minimize(residuals, init, lower, upper, options);
    const std::vector<std::pair<std::string, std::string>> names = {
        {"omega_r", "rad/s"}, {"kappa", "rad/s"}, {"scale", ""}};
    for (std::size_t j = 0; j < names.size(); ++j) {
        result.parameters[j].name = names[j].first;
        result.parameters[j].unit = names[j].second;
    }

    const auto [lo_it, hi_it] = std::minmax_element(
        data.begin(), data.end(),
        [](const auto& a, const auto& b) { return a.first < b.first; });
    const double span = hi_it->first - lo_it->first;
    if (span < 2.0 * std::abs(result.value("kappa"))) {
        result.ill_conditioned = true;  // width barely sampled
    }

    double data_ms = 0;
    for (const auto& [omega, amp] : data) {
        data_ms += amp * amp;
    }
    Eigen::Vector3d solution(result.value("omega_r"), result.value("kappa"),
                             result.value("scale"));
    flag_weak_sensitivity(result, residuals, solution, lower, upper,
                          options.fd_step,
                          std::sqrt(data_ms / static_cast<double>(data.size())));
    return result;
}

FitResult fit_lorentzian(const std::vector<std::pair<double, double>>& data,
                         const MinimizeOptions& options)
{
    if (data.size() < 5) {
        throw std::invalid_argument(
            "fit_lorentzian: need at least 5 data points");
    }
    const auto peak = std::max_element(
        data.begin(), data.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    const double a_max = peak->second;
    if (a_max <= 0) {
        throw std::invalid_argument(
            "fit_lorentzian: peak amplitude must be positive");
    }
    const auto [lo_it, hi_it] = std::minmax_element(
        data.begin(), data.end(),
        [](const auto& a, const auto& b) { return a.first < b.first; });
    const double span = hi_it->first - lo_it->first;
    if (span <= 0) {
        throw std::invalid_argument(
            "fit_lorentzian: data must span a nonzero frequency range");
    }

    // Width guess: extent of the region above the half-power amplitude.
    const double half_power = a_max / std::sqrt(2.0);
    double w_lo = peak->first;
    double w_hi = peak->first;
    for (const auto& [omega, amp] : data) {
        if (amp >= half_power) {
            w_lo = std::min(w_lo, omega);
            w_hi = std::max(w_hi, omega);
        }
    }
    double kappa0 = w_hi - w_lo;
    if (kappa0 <= 0) {
        kappa0 = 0.25 * span;
    }

    const Eigen::Vector3d init(peak->first, kappa0, a_max);
    const Eigen::Vector3d lower(lo_it->first - span, 1e-9 * span, 0.0);
    const Eigen::Vector3d upper(hi_it->first + span, 1e3 * span, 1e6 * a_max);
    return fit_lorentzian(data, init, lower, upper, options);
}

FitResult fit_coupled(const std::vector<CoupledPoint>& data,
                      const Eigen::VectorXd& init,
                      const Eigen::VectorXd& lower,
                      const Eigen::VectorXd& upper,
                      const std::set<std::string>& fixed,
                      const MinimizeOptions& options)
{
    const auto& names = coupled_parameter_names();
    const auto p_all = static_cast<Eigen::Index>(names.size());
    if (init.size() != p_all || lower.size() != p_all ||
        upper.size() != p_all) {
        throw std::invalid_argument(
            "fit_coupled: expected 6 parameters (g_c, gamma_2, t_c, omega_r, "
            "kappa, scale)");
    }
    for (const auto& name : fixed) {
        const bool known =
            std::any_of(names.begin(), names.end(),
                        [&](const auto& n) { return n.first == name; });
        if (!known) {
            throw std::invalid_argument(
                "fit_coupled: unknown fixed parameter '" + name + "'");
        }
    }
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index j = 0; j < p_all; ++j) {
        if (!fixed.count(names[static_cast<std::size_t>(j)].first)) {
            free_idx.push_back(j);
        }
    }
    if (free_idx.empty()) {
        throw std::invalid_argument(
            "fit_coupled: all parameters are fixed; nothing to fit");
    }
    if (data.size() < free_idx.size() + 1) {
        throw std::invalid_argument(
            "fit_coupled: need more data points than free parameters");
    }

    // Model through the production weak-probe response: symmetric lossless
    // ports with kappa_in = kappa_out = kappa/2 give the canonical
    // (kappa/2)/|denominator| line shape; `scale` absorbs the real port
    // prefactor.
    const auto model = [](const Eigen::VectorXd& full, double omega,
                          double epsilon) {
        SystemParams sys;
        sys.cavity.omega_r = full[3];
        sys.cavity.kappa_in = 0.5 * full[4];
        sys.cavity.kappa_out = 0.5 * full[4];
        DqdParams dqd;
        dqd.epsilon = epsilon;
        dqd.t_c = full[2];
        dqd.g_c = full[0];
        dqd.gamma_phi = full[1];
        sys.dqds.push_back(dqd);
        return full[5] * std::abs(linear_response_transmission(omega, sys));
    };

    const auto expand = [&](const Eigen::VectorXd& free) {
        Eigen::VectorXd full = init;
        for (std::size_t k = 0; k < free_idx.size(); ++k) {
            full[free_idx[k]] = free[static_cast<Eigen::Index>(k)];
        }
        return full;
    };
    const ResidualFn residuals = [&](const Eigen::VectorXd& free) {
        const Eigen::VectorXd full = expand(free);
        Eigen::VectorXd r(static_cast<Eigen::Index>(data.size()));
        for (std::size_t i = 0; i < data.size(); ++i) {
            r[static_cast<Eigen::Index>(i)] =
                model(full, data[i].omega, data[i].epsilon) -
                data[i].amplitude;
        }
        return r;
    };

    const auto n_free = static_cast<Eigen::Index>(free_idx.size());
    Eigen::VectorXd f_init(n_free), f_lo(n_free), f_hi(n_free);
    for (Eigen::Index k = 0; k < n_free; ++k) {
        f_init[k] = init[free_idx[static_cast<std::size_t>(k)]];
        f_lo[k] = lower[free_idx[static_cast<std::size_t>(k)]];
        f_hi[k] = upper[free_idx[static_cast<std::size_t>(k)]];
    }
    FitResult inner = minimize(residuals, f_init, f_lo, f_hi, options);

    Eigen::VectorXd f_solution(n_free);
    for (Eigen::Index k = 0; k < n_free; ++k) {
        f_solution[k] = inner.parameters[static_cast<std::size_t>(k)].value;
    }
    double data_ms = 0;
    for (const auto& pt : data) {
        data_ms += pt.amplitude * pt.amplitude;
    }
    flag_weak_sensitivity(
        inner, residuals, f_solution, f_lo, f_hi, options.fd_step,
        std::sqrt(data_ms / static_cast<double>(data.size())));

    FitResult result = inner;
    result.parameters.clear();
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < p_all; ++j) {
        FitParameter par;
        par.name = names[static_cast<std::size_t>(j)].first;
        par.unit = names[static_cast<std::size_t>(j)].second;
        if (k < free_idx.size() && free_idx[k] == j) {
            const auto& src = inner.parameters[k];
            par.value = src.value;
            par.std_error = src.std_error;
            par.at_lower_bound = src.at_lower_bound;
            par.at_upper_bound = src.at_upper_bound;
            ++k;
        } else {
            par.value = init[j];
        }
        result.parameters.push_back(par);
    }
    return result;
}

}  // namespace sapa
