#pragma once

// Cesaro limits g^{+/-} = lim (1/x1) int_0^{x1} g as x1 -> +/-inf and the
// averaged model built from them: bbar = (rho b)^{+/-}/rho^{+/-},
// abar = (rho a)^{+/-}/rho^{+/-}, fbar = (rho f)^{+/-}/rho^{+/-}, each taking
// the "+" branch for x1 > 0 and the "-" branch for x1 <= 0.

#include "homogenize/model.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

namespace homog {

struct AveragingControl {
    double X0 = 64.0;
    double growth = 2.0;
    int j_max = 24;
    double tol = 1e-4;
    double quad_points_per_unit = 8.0;

    // x2 lattice used when coefficients depend on both x1 and x2.
    double lattice_lo = -4.0;
    double lattice_hi = 4.0;
    double lattice_pitch = 0.05;

    void check() const;
};

enum class Direction { plus, minus };

struct CesaroResult {
    double limit = 0.0;
    double residual = 0.0;
    double abscissa = 0.0;  // X at which the returned average was taken
};

/// Cesaro average of g along the ray in `direction`. Throws NonStabilizing.
CesaroResult cesaro_limit(const std::function<double(double)>& g, Direction direction, const AveragingControl& ctl);

/// Several integrands averaged in one pass: g(t, out) fills out[0..n).
/// Stabilization is required of every component.
std::vector<CesaroResult> cesaro_limit_vec(const std::function<void(double, double*)>& g, int n,
                                           Direction direction, const AveragingControl& ctl);

class AveragedModel final : public DiffusionModel {
public:
    AveragedModel(ProblemSpec spec, AveragingControl ctl);

    // Branch values at slow coordinate x2.
    double rho(Direction dir, const Vec& x2) const;
    Vec bbar_branch(Direction dir, const Vec& x2) const;
    Mat abar_branch(Direction dir, const Vec& x2) const;
    double fbar_branch(Direction dir, const Vec& x2, double y, const RowVec& z) const;
    double source_branch(Direction dir, const Vec& x2) const;  // split generators only

    // Point evaluators (x = (x1, x2)).
    double rho_at(const Vec& x) const { return rho(branch(x[0]), slow_part(x)); }
    Vec bbar(const Vec& x) const;
    Mat abar(const Vec& x) const;
    Mat sigbar(const Vec& x) const;
    double fbar(const Vec& x, double y, const RowVec& z) const { return generator(x, y, z); }

    static Direction branch(double x1) { return x1 > 0 ? Direction::plus : Direction::minus; }

    // DiffusionModel
    int dim() const override { return spec_.dim(); }
    void drift_diffusion(const Vec& x, Vec& b, Mat& sigma) const override;
    void diffusion_matrix(const Vec& x, Mat& a) const override { a = abar(x); }
    double generator(const Vec& x, double y, const RowVec& z) const override;
    bool split_generator() const override { return spec_.separable.has_value(); }
    double generator_source(const Vec& x) const override;
    double generator_yz(double y, const RowVec& z) const override;
    double terminal(const Vec& x) const override { return eval_terminal(spec_, x[0], slow_part(x)); }
    double lipschitz() const override { return spec_.bounds.K; }
    bool drift_jumps() const override { return !(a_identity_ && b_identity_ && (spec_.separable ? g_identity_ : f_identity_)); }
    std::string tag() const override { return "averaged"; }

    const ProblemSpec& spec() const { return spec_; }
    const AveragingControl& control() const { return ctl_; }
    bool separable_fast_path() const { return spec_.separable.has_value(); }

    /// Lattice used by the tables (a single node when coefficients ignore x2).
    const std::vector<double>& lattice() const { return lattice_; }
    /// Largest Cesaro residual met while building the tables.
    double max_residual() const { return max_residual_; }
    std::size_t memo_size() const;

private:
    struct Table {
        // Per lattice node, per component: plus and minus quotients.
        int n_comp = 0;
        std::vector<double> plus, minus;
        double at(Direction dir, int comp, double x2) const;
        const std::vector<double>* lattice = nullptr;
    };
    struct MemoKey {
        std::array<long long, 1 + 1 + 2 * kMaxDim> q{};
        bool operator==(const MemoKey& o) const { return q == o.q; }
    };
    struct MemoHash {
        std::size_t operator()(const MemoKey& k) const noexcept;
    };

    double rho_table(Direction dir, const Vec& x2) const;
    double generic_fbar(Direction dir, const Vec& x2, double y, const RowVec& z) const;

    ProblemSpec spec_;
    AveragingControl ctl_;
    bool a_identity_ = false;
    bool b_identity_ = false;
    bool f_identity_ = false;
    bool g_identity_ = false;
    bool rho_identity_ = false;
    std::vector<double> lattice_;
    // Components: rho, bbar_1..d, abar upper triangle (row-major), gbar.
    Table table_;
    double max_residual_ = 0.0;

    mutable std::shared_mutex memo_mutex_;
    mutable std::unordered_map<MemoKey, double, MemoHash> memo_;
};

/// Build the averaged model; checks that 2 abar factors on the lattice.
std::shared_ptr<AveragedModel> build_averaged_model(const ProblemSpec& spec, const AveragingControl& ctl = {});

/// fbar at (x, y, z).
double fbar_eval(const AveragedModel& model, const Vec& x, double y, const RowVec& z);

}  // namespace homog
