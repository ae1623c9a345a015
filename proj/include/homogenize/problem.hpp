#pragma once

// Multiscale problem data: the fast-row diffusion phi, the slow drift and
// diffusion, the BSDE generator f and the terminal datum H, plus the
// structural constants the coefficients are validated against.

#include "homogenize/coeffex.hpp"
#include "homogenize/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace homog {

using coeffex::Expr;

/// Constants of the ellipticity/growth and Lipschitz/growth assumptions.
struct Bounds {
    double lambda = 0.25;
    double C1 = 1.0;
    double K = 1.0;
    int p = 2;
};

/// f(x1, x2, y, z) = g(x1, x2) * h(x2) + ell(y, z). Lets the averaged
/// generator be tabulated instead of averaged per (y, z).
struct SeparableGenerator {
    Expr g;
    Expr h;
    Expr ell;
};

struct ProblemSpec {
    std::string name = "custom";
    int d = 1;
    int k = 2;
    std::vector<Expr> phi;                       // k entries over (x1, x2)
    std::vector<Expr> b_tilde;                   // d entries over (x1, x2)
    std::vector<std::vector<Expr>> sigma_tilde;  // d rows of k entries
    Expr f;                                      // over (x1, x2, y, z_0..z_d)
    Expr H;                                      // over (x1, x2)
    Bounds bounds;
    std::optional<SeparableGenerator> separable;

    int dim() const { return d + 1; }

    /// Structural checks (sizes, k = d + 1, variable scopes). Throws
    /// Error(InvalidArgument).
    void check_structure() const;
};

/// Coefficients of the rewritten forward system at the point (x1, x2):
/// sigma stacks phi over sigma_tilde, b = (0, b_tilde), a = sigma sigma^T / 2.
struct PointCoefficients {
    Mat a;
    double a00 = 0.0;
    double rho = 0.0;
    Vec b;
    Mat sigma;
};

/// Evaluation environments for coefficients over (x1, x2) and for f.
coeffex::Env space_env(double x1, const Vec& x2);
coeffex::Env generator_env(double x1, const Vec& x2, double y, const RowVec& z);

PointCoefficients eval_coefficients(const ProblemSpec& spec, double x1, const Vec& x2);

/// Drift and diffusion only (inner-loop variant of eval_coefficients).
void eval_drift_diffusion(const ProblemSpec& spec, double x1, const Vec& x2, Vec& b, Mat& sigma);

/// f(x1, x2, y, z); z has d+1 entries.
double eval_generator(const ProblemSpec& spec, double x1, const Vec& x2, double y, const RowVec& z);

/// H(x1, x2).
double eval_terminal(const ProblemSpec& spec, double x1, const Vec& x2);

/// Axis-aligned sampling region for validation.
struct SampleBox {
    double x1_lo = -10.0, x1_hi = 10.0;
    double x2_lo = -3.0, x2_hi = 3.0;
    double yz_radius = 3.0;  // y and each z_j drawn from [-r, r]
};

struct ValidationReport {
    double min_ellipticity = 0.0;      // min eigenvalue of a
    double max_a00 = 0.0;
    double max_slow_growth = 0.0;      // sum_i (a~_ii + b_i^2) / (1 + |x2|^2)
    double max_f_growth = 0.0;         // |f| / (1 + |x2|^p + |y| + |z|)
    double max_h_growth = 0.0;         // |H| / (1 + |x1|^p + |x2|^p)
    double max_lipschitz = 0.0;        // |f - f'| / (|y - y'| + |z - z'|)
    double max_asymmetry = 0.0;        // max |a - a^T|
    bool passed = true;
    std::vector<std::string> failures;  // each names the offending sample point
};

ValidationReport validate(const ProblemSpec& spec, const SampleBox& box, int n_samples, std::uint64_t seed);

/// validate() that throws Error(ValidationFailed) on the first failure.
void validate_or_throw(const ProblemSpec& spec, const SampleBox& box, int n_samples, std::uint64_t seed);

enum class BenchmarkId { BM1_tanh_fast, BM2_periodic, BM3_x1_free };

std::string to_string(BenchmarkId id);
BenchmarkId benchmark_from_string(const std::string& name);

/// Fixed, fully specified benchmark problems (d = 1, k = 2).
ProblemSpec registry(BenchmarkId id);

/// Problem definition file (flat TOML): d, k, phi, b_tilde, sigma_tilde, f,
/// H, lambda, C1, K, p; optional name and f_separable = [g, h, ell].
ProblemSpec load_problem(const std::string& path);
ProblemSpec problem_from_toml(const std::string& text);
std::string problem_to_toml(const ProblemSpec& spec);

/// Sampled sup over x1 in [-x1_range, x1_range] of |phi(x1, x2)| at fixed x2.
double sampled_phi_max(const ProblemSpec& spec, const Vec& x2, double x1_range = 64.0, int samples = 4097);

}  // namespace homog
