#pragma once

#include <Eigen/Dense>

#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

// Nonlinear least-squares machinery: a small bounded minimizer (damped
// Gauss-Newton and Nelder-Mead simplex over a residual vector) plus the two
// concrete spectrum fits built on it — a bare Lorentzian line and the full
// weak-probe transmission of the cavity-DQD system.

namespace sapa {

enum class FitMethod {
    simplex,       ///< derivative-free Nelder-Mead descent with one restart
    gauss_newton,  ///< damped least squares with finite-difference Jacobian
};

struct MinimizeOptions {
    FitMethod method = FitMethod::gauss_newton;
    int max_iterations = 500;
    /// Convergence certificate: projected gradient infinity-norm of the
    /// sum-of-squares objective below this, scaled by max(1, objective).
    double gradient_tolerance = 1e-8;
    /// Relative finite-difference step for Jacobians.
    double fd_step = 1e-6;
};

struct FitParameter {
    std::string name;
    std::string unit;
    double value = 0;
    double std_error = 0;  ///< finite-difference estimate, same unit as value
    bool at_lower_bound = false;
    bool at_upper_bound = false;
};

struct FitResult {
    std::vector<FitParameter> parameters;
    double objective = 0;     ///< sum of squared residuals at the solution
    double residual_rms = 0;  ///< sqrt(objective / number of residuals)
    double gradient_norm = 0; ///< projected gradient infinity-norm at the end
    double condition_number = 0;  ///< of the final Jacobian (free parameters)
    int iterations = 0;
    bool converged = false;
    /// Identifiability warning: near-singular Jacobian, or (for the spectrum
    /// fits) data spanning too little of the fitted linewidth.
    bool ill_conditioned = false;
    /// Objective value after every accepted step, starting from the initial
    /// point; non-increasing by construction.
    std::vector<double> accepted_objectives;

    const FitParameter& parameter(const std::string& name) const;
    double value(const std::string& name) const;
    /// JSON rendering of the result for structured-text emission.
    std::string to_text() const;
};

/// Residual-vector callback: maps a parameter vector to the vector of
/// residuals whose squared norm is minimized.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Minimize the squared norm of `residuals` over the box [lower, upper].
/// Bounds are enforced by clipping trial points; parameters that finish on a
/// bound are flagged. The initial point is clipped into the box. A non-finite
/// residual vector aborts immediately, naming the parameter vector. Parameter
/// names in the result are x0, x1, ...
FitResult minimize(const ResidualFn& residuals, const Eigen::VectorXd& init,
                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                   const MinimizeOptions& options = {});

/// Unconstrained overload.
FitResult minimize(const ResidualFn& residuals, const Eigen::VectorXd& init,
                   const MinimizeOptions& options = {});

/// Fit |t(omega)| = scale * (kappa/2) / sqrt((omega_r - omega)^2 +
/// (kappa/2)^2) to (omega, amplitude) samples. Parameter order and result
/// names: omega_r, kappa, scale. Requires at least 5 points; if the data span
/// less than two fitted linewidths the width is poorly identified and the
/// result is flagged ill-conditioned.
FitResult fit_lorentzian(const std::vector<std::pair<double, double>>& data,
                         const Eigen::Vector3d& init,
                         const Eigen::Vector3d& lower,
                         const Eigen::Vector3d& upper,
                         const MinimizeOptions& options = {});

/// Convenience overload: initial guess (peak position, half-power width,
/// peak amplitude) and broad bounds derived from the data themselves.
FitResult fit_lorentzian(const std::vector<std::pair<double, double>>& data,
                         const MinimizeOptions& options = {});

/// One sample of a transmission map: probe angular frequency, DQD detuning
/// (J; gate-voltage axes are converted through the lever arm upstream), and
/// measured amplitude.
struct CoupledPoint {
    double omega = 0;
    double epsilon = 0;
    double amplitude = 0;
};

/// Parameter order and result names for fit_coupled.
inline const std::vector<std::pair<std::string, std::string>>&
coupled_parameter_names()
{
    static const std::vector<std::pair<std::string, std::string>> names = {
        {"g_c", "rad/s"},     {"gamma_2", "rad/s"}, {"t_c", "J"},
        {"omega_r", "rad/s"}, {"kappa", "rad/s"},   {"scale", ""},
    };
    return names;
}

/// Fit the weak-probe transmission amplitude of one DQD coupled to the
/// cavity,
///   |t| = scale * (kappa/2) / |i(omega_r - omega) + kappa/2
///                              + g_t^2 / (i(omega_q - omega) + gamma_2)|,
/// with g_t and omega_q derived from (epsilon, t_c, g_c). `scale` absorbs the
/// port asymmetry sqrt(kappa_in kappa_out)/(kappa/2). Any subset of the six
/// parameters may be held fixed at its initial value via `fixed`. Fixed
/// parameters report zero standard error.
FitResult fit_coupled(const std::vector<CoupledPoint>& data,
                      const Eigen::VectorXd& init,
                      const Eigen::VectorXd& lower,
                      const Eigen::VectorXd& upper,
                      const std::set<std::string>& fixed = {},
                      const MinimizeOptions& options = {});

}  // namespace sapa
