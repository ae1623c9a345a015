#pragma once

// Forward-backward model interface shared by the simulators and solvers:
// dX = b(X)ds + sigma(X)dW, generator f(X, Y, Z), terminal datum H(X).

#include "homogenize/linalg.hpp"
#include "homogenize/problem.hpp"

#include <string>

namespace homog {

class DiffusionModel {
public:
    virtual ~DiffusionModel() = default;

    /// State dimension d + 1 (also the Brownian dimension).
    virtual int dim() const = 0;

    virtual void drift_diffusion(const Vec& x, Vec& b, Mat& sigma) const = 0;

    /// a = sigma sigma^T / 2.
    virtual void diffusion_matrix(const Vec& x, Mat& a) const {
        Vec b;
        Mat s;
        drift_diffusion(x, b, s);
        a = 0.5 * s * s.transpose();
    }

    virtual double generator(const Vec& x, double y, const RowVec& z) const = 0;

    /// When the generator splits as source(x) + ell(y, z), solvers may cache
    /// source(x) per node.
    virtual bool split_generator() const { return false; }
    virtual double generator_source(const Vec& /*x*/) const { return 0.0; }
    virtual double generator_yz(double /*y*/, const RowVec& /*z*/) const { return 0.0; }

    virtual double terminal(const Vec& x) const = 0;

    /// Lipschitz constant of the generator in (y, z).
    virtual double lipschitz() const = 0;

    /// Coefficients jump across x1 = 0.
    virtual bool drift_jumps() const { return false; }

    /// Spatial period of the oscillation in x1 that a grid must resolve (0 if none).
    virtual double oscillation_scale() const { return 0.0; }

    virtual std::string tag() const = 0;
};

/// The epsilon-scaled system: coefficients read (x1/eps, x2), H reads (x1, x2).
class EpsilonModel final : public DiffusionModel {
public:
    EpsilonModel(ProblemSpec spec, double eps);

    int dim() const override { return spec_.dim(); }
    void drift_diffusion(const Vec& x, Vec& b, Mat& sigma) const override;
    double generator(const Vec& x, double y, const RowVec& z) const override;
    bool split_generator() const override { return spec_.separable.has_value(); }
    double generator_source(const Vec& x) const override;
    double generator_yz(double y, const RowVec& z) const override;
    double terminal(const Vec& x) const override;
    double lipschitz() const override { return spec_.bounds.K; }
    double oscillation_scale() const override { return eps_; }
    std::string tag() const override;

    const ProblemSpec& spec() const { return spec_; }
    double eps() const { return eps_; }

private:
    ProblemSpec spec_;
    double eps_;
};

/// Split a state vector into (x1, x2).
inline Vec slow_part(const Vec& x) { return x.tail(x.size() - 1); }

}  // namespace homog
