#pragma once

// Explicit finite differences for dv/ds = L v + f(x, v, grad v), v(0) = H, on
// a box in (x1, x2) (d = 1), plus the mollified sequence and discrete
// Sobolev diagnostics.

#include "homogenize/cesaro.hpp"
#include "homogenize/model.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace homog {

inline constexpr double kCflSafety = 0.9;

struct Grid {
    double L1 = 4.0, L2 = 4.0;
    double h1 = 1.0 / 64, h2 = 1.0 / 16;
    double ds = 0.0;  // 0: chosen from the CFL bound
    int n_time = 0;

    int n1() const;
    int n2() const;
    double x1(int i) const { return -L1 + i * h1; }
    double x2(int j) const { return -L2 + j * h2; }
    void check() const;
};

struct Field {
    Grid grid;
    std::string model_tag;
    std::vector<double> times;                // snapshot times, times[0] = 0
    std::vector<std::vector<double>> values;  // per snapshot, index i * n2 + j

    double at(int snap, int i, int j) const { return values[snap][static_cast<std::size_t>(i) * grid.n2() + j]; }
    /// Bilinear in space on snapshot `snap`; throws RegionExceedsGrid outside the box.
    double interpolate(int snap, double x1, double x2) const;
    /// Central-difference gradient, bilinearly interpolated.
    RowVec gradient(int snap, double x1, double x2) const;
    /// Linear in time between snapshots.
    double value(double s, double x1, double x2) const;
    int snapshot_of(double s) const;
};

struct PdeOptions {
    int snapshots = 16;  // evenly spaced, plus s = 0
    int threads = 1;
};

/// Grid with ds set from the CFL bound of the model's coefficients on the
/// grid nodes (ds unchanged if already set and admissible).
Grid fit_time_step(const DiffusionModel& model, Grid grid, double t);

/// Throws CflViolation, OscillationUnresolved, NonFinite.
Field solve_semilinear(const DiffusionModel& model, double t, Grid grid, const PdeOptions& opts = {});

/// Sampled field from a closed form v(s, x1, x2), on the same snapshot layout.
Field sample_field(const Grid& grid, double t, int snapshots, const std::function<double(double, double, double)>& v);

/// Averaged model convolved in x1 with the bump exp(-1/(1-u^2)) of radius 1/n.
class MollifiedModel final : public DiffusionModel {
public:
    MollifiedModel(std::shared_ptr<const AveragedModel> base, int n);

    /// Mass of the kernel on (-inf, x1] side that sees the "+" branch.
    double plus_weight(double x1) const;

    int dim() const override { return base_->dim(); }
    void drift_diffusion(const Vec& x, Vec& b, Mat& sigma) const override;
    void diffusion_matrix(const Vec& x, Mat& a) const override;
    double generator(const Vec& x, double y, const RowVec& z) const override;
    bool split_generator() const override { return base_->split_generator(); }
    double generator_source(const Vec& x) const override;
    double generator_yz(double y, const RowVec& z) const override { return base_->generator_yz(y, z); }
    double terminal(const Vec& x) const override;
    double lipschitz() const override { return base_->lipschitz(); }
    std::string tag() const override;

    int n() const { return n_; }
    const AveragedModel& base() const { return *base_; }

    Vec bbar(const Vec& x) const;
    Mat abar(const Vec& x) const;

private:
    std::shared_ptr<const AveragedModel> base_;
    int n_;
    bool h_uses_x1_;
};

std::shared_ptr<MollifiedModel> mollify(std::shared_ptr<const AveragedModel> model, int n);

/// Normalized bump CDF W(s) = int_{-1}^{s} K, K(u) proportional to exp(-1/(1-u^2)).
double bump_cdf(double s);
/// Normalized bump density K(u).
double bump_density(double u);

/// Q = [0, t] x {|x1| <= R, |x2| <= R}.
struct Region {
    double t = 0.5;
    double R = 2.0;
};

struct SobolevNorms {
    double lp_v = 0.0, lp_dsv = 0.0, lp_grad = 0.0, lp_hess = 0.0;
    double measure = 0.0;  // discrete |Q|
};

/// Discrete L^p norms on Q: trapezoid in s over snapshots, node sums in x;
/// derivatives by central differences. Throws RegionExceedsGrid.
SobolevNorms sobolev_norms(const Field& field, double p, const Region& region);

/// max over snapshots of ||grad v||_p / (||v||_{W^2_p}^{1/2} ||v||_p^{1/2})
/// with ||v||_{W^2_p} = (||v||_p^p + ||grad v||_p^p + ||D^2 v||_p^p)^{1/p};
/// 0 on slices where the denominator vanishes.
double gagliardo_nirenberg_ratio(const Field& field, double p, const Region& region);

/// Field slice at a snapshot as CSV rows (s, x1, x2, v).
void write_field_csv(const Field& field, int snap, const std::string& path);

}  // namespace homog
