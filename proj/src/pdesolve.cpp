#include "homogenize/pdesolve.hpp"

#include "homogenize/error.hpp"
#include "homogenize/parallel.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace homog {

namespace {

constexpr int kKernelNodes = 33;

struct GaussLegendre {
    std::array<double, kKernelNodes> x{}, w{};
};

const GaussLegendre& gauss_legendre() {
    static const GaussLegendre gl = [] {
        GaussLegendre g;
        const int n = kKernelNodes;
        for (int i = 0; i < n; ++i) {
            double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = z;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (z * p1 - p0) / (z * z - 1.0);
                const double dz = p1 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            g.x[i] = -z;
            g.w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        return g;
    }();
    return gl;
}

double raw_bump(double u) { return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0; }

double bump_integral(double lo, double hi) {
    const auto& gl = gauss_legendre();
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double s = 0.0;
    for (int k = 0; k < kKernelNodes; ++k) s += gl.w[k] * raw_bump(mid + half * gl.x[k]);
    return s * half;
}

double bump_half_mass() {
    static const double m = bump_integral(-1.0, 0.0);
    return m;
}

double blend(double w, double plus, double minus) { return plus == minus ? plus : w * plus + (1.0 - w) * minus; }

struct NodeCoefficients {
    std::vector<double> a00, a01, a11, b0, b1, src;
    std::vector<unsigned char> upwind;
};

NodeCoefficients cache_coefficients(const DiffusionModel& model, const Grid& g, int threads) {
    const int n1 = g.n1(), n2 = g.n2();
    const std::size_t n = static_cast<std::size_t>(n1) * n2;
    NodeCoefficients c;
    c.a00.resize(n);
    c.a01.resize(n);
    c.a11.resize(n);
    c.b0.resize(n);
    c.b1.resize(n);
    c.upwind.assign(n, 0);
    if (model.split_generator()) c.src.resize(n);
    const bool jumps = model.drift_jumps();
    parallel_for(static_cast<std::size_t>(n1), threads, [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        Vec x(2);
        Vec b;
        Mat sigma, a;
        for (int j = 0; j < n2; ++j) {
            const std::size_t k = ii * n2 + j;
            x << g.x1(i), g.x2(j);
            model.drift_diffusion(x, b, sigma);
            model.diffusion_matrix(x, a);
            c.a00[k] = a(0, 0);
            c.a01[k] = a(0, 1);
            c.a11[k] = a(1, 1);
            c.b0[k] = b[0];
            c.b1[k] = b[1];
            if (jumps && std::abs(x[0]) <= 1.5 * g.h1) c.upwind[k] = 1;
            if (!c.src.empty()) c.src[k] = model.generator_source(x);
        }
    });
    return c;
}

double cfl_limit(const NodeCoefficients& c, const Grid& g) {
    double sa = 0.0, sb = 0.0, sc = 0.0;
    for (std::size_t k = 0; k < c.a00.size(); ++k) {
        sa = std::max(sa, c.a00[k]);
        sb = std::max(sb, c.a11[k]);
        sc = std::max(sc, std::abs(c.a01[k]));
    }
    const double h = std::min(g.h1, g.h2);
    return kCflSafety * h * h / (2.0 * (sa + sb + sc));
}

void set_time_step(Grid& g, double t, double limit) {
    if (g.ds > 0) {
        if (g.ds > limit * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "ds = " << g.ds << " exceeds the CFL bound " << limit;
            throw Error(ErrorKind::CflViolation, os.str());
        }
        g.n_time = std::max(1, static_cast<int>(std::ceil(t / g.ds - 1e-9)));
    } else {
        g.n_time = std::max(1, static_cast<int>(std::ceil(t / limit)));
    }
    g.ds = t / g.n_time;
}

std::vector<int> snapshot_steps(int n_time, int snapshots) {
    std::vector<int> steps;
    const int m = std::max(1, std::min(snapshots, n_time));
    for (int k = 0; k <= m; ++k) steps.push_back(static_cast<int>(static_cast<long long>(k) * n_time / m));
    return steps;
}

}  // namespace

int Grid::n1() const { return static_cast<int>(std::llround(2.0 * L1 / h1)) + 1; }
int Grid::n2() const { return static_cast<int>(std::llround(2.0 * L2 / h2)) + 1; }

void Grid::check() const {
    if (!(L1 > 0) || !(L2 > 0) || !(h1 > 0) || !(h2 > 0)) throw Error(ErrorKind::InvalidArgument, "grid extents and widths must be positive");
    if (std::abs(2.0 * L1 / h1 - std::round(2.0 * L1 / h1)) > 1e-9 || std::abs(2.0 * L2 / h2 - std::round(2.0 * L2 / h2)) > 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "grid widths must divide the box");
    }
    if (n1() < 3 || n2() < 3) throw Error(ErrorKind::InvalidArgument, "grid needs at least three nodes per axis");
}

double Field::interpolate(int snap, double x1, double x2) const {
    const int n1 = grid.n1(), n2 = grid.n2();
    const double u = (x1 + grid.L1) / grid.h1, w = (x2 + grid.L2) / grid.h2;
    if (u < -1e-9 || w < -1e-9 || u > n1 - 1 + 1e-9 || w > n2 - 1 + 1e-9) {
        std::ostringstream os;
        os << "point (" << x1 << ", " << x2 << ") outside the grid";
        throw Error(ErrorKind::RegionExceedsGrid, os.str());
    }
    const int i = std::clamp(static_cast<int>(std::floor(u)), 0, n1 - 2);
    const int j = std::clamp(static_cast<int>(std::floor(w)), 0, n2 - 2);
    const double fu = u - i, fw = w - j;
    return (1 - fu) * (1 - fw) * at(snap, i, j) + fu * (1 - fw) * at(snap, i + 1, j) + (1 - fu) * fw * at(snap, i, j + 1) +
           fu * fw * at(snap, i + 1, j + 1);
}

RowVec Field::gradient(int snap, double x1, double x2) const {
    const int n1 = grid.n1(), n2 = grid.n2();
    const double u = (x1 + grid.L1) / grid.h1, w = (x2 + grid.L2) / grid.h2;
    if (u < -1e-9 || w < -1e-9 || u > n1 - 1 + 1e-9 || w > n2 - 1 + 1e-9) {
        std::ostringstream os;
        os << "point (" << x1 << ", " << x2 << ") outside the grid";
        throw Error(ErrorKind::RegionExceedsGrid, os.str());
    }
    auto d1 = [&](int i, int j) {
        if (i == 0) return (at(snap, 1, j) - at(snap, 0, j)) / grid.h1;
        if (i == n1 - 1) return (at(snap, i, j) - at(snap, i - 1, j)) / grid.h1;
        return (at(snap, i + 1, j) - at(snap, i - 1, j)) / (2 * grid.h1);
    };
    auto d2 = [&](int i, int j) {
        if (j == 0) return (at(snap, i, 1) - at(snap, i, 0)) / grid.h2;
        if (j == n2 - 1) return (at(snap, i, j) - at(snap, i, j - 1)) / grid.h2;
        return (at(snap, i, j + 1) - at(snap, i, j - 1)) / (2 * grid.h2);
    };
    const int i = std::clamp(static_cast<int>(std::floor(u)), 0, n1 - 2);
    const int j = std::clamp(static_cast<int>(std::floor(w)), 0, n2 - 2);
    const double fu = u - i, fw = w - j;
    RowVec g(2);
    g[0] = (1 - fu) * (1 - fw) * d1(i, j) + fu * (1 - fw) * d1(i + 1, j) + (1 - fu) * fw * d1(i, j + 1) + fu * fw * d1(i + 1, j + 1);
    g[1] = (1 - fu) * (1 - fw) * d2(i, j) + fu * (1 - fw) * d2(i + 1, j) + (1 - fu) * fw * d2(i, j + 1) + fu * fw * d2(i + 1, j + 1);
    return g;
}

int Field::snapshot_of(double s) const {
    const auto it = std::lower_bound(times.begin(), times.end(), s - 1e-12);
    if (it == times.end()) return static_cast<int>(times.size()) - 1;
    return static_cast<int>(it - times.begin());
}

double Field::value(double s, double x1, double x2) const {
    if (s <= times.front()) return interpolate(0, x1, x2);
    if (s >= times.back()) return interpolate(static_cast<int>(times.size()) - 1, x1, x2);
    const int k = static_cast<int>(std::upper_bound(times.begin(), times.end(), s) - times.begin());
    const double w = (s - times[k - 1]) / (times[k] - times[k - 1]);
    if (w == 0.0) return interpolate(k - 1, x1, x2);
    return (1 - w) * interpolate(k - 1, x1, x2) + w * interpolate(k, x1, x2);
}

Grid fit_time_step(const DiffusionModel& model, Grid grid, double t) {
    grid.check();
    if (model.dim() != 2) throw Error(ErrorKind::InvalidArgument, "the finite-difference solver handles d = 1 only");
    const auto c = cache_coefficients(model, grid, 1);
    set_time_step(grid, t, cfl_limit(c, grid));
    return grid;
}

Field solve_semilinear(const DiffusionModel& model, double t, Grid grid, const PdeOptions& opts) {
    grid.check();
    if (model.dim() != 2) throw Error(ErrorKind::InvalidArgument, "the finite-difference solver handles d = 1 only");
    if (!(t > 0)) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
    const double scale = model.oscillation_scale();
    if (scale > 0 && grid.h1 > scale / 8.0 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "h1 = " << grid.h1 << " does not resolve the oscillation scale " << scale << " (need h1 <= " << scale / 8.0 << ")";
        throw Error(ErrorKind::OscillationUnresolved, os.str());
    }
    const NodeCoefficients c = cache_coefficients(model, grid, opts.threads);
    set_time_step(grid, t, cfl_limit(c, grid));

    const int n1 = grid.n1(), n2 = grid.n2();
    const int p1 = n1 + 2, p2 = n2 + 2;
    std::vector<double> cur(static_cast<std::size_t>(p1) * p2, 0.0), next(cur.size(), 0.0);
    auto P = [p2](int i, int j) { return static_cast<std::size_t>(i + 1) * p2 + (j + 1); };

    Field field;
    field.model_tag = model.tag();
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            Vec x(2);
            x << grid.x1(i), grid.x2(j);
            cur[P(i, j)] = model.terminal(x);
        }
    }
    auto fill_ghosts = [&](std::vector<double>& v) {
        for (int j = 0; j < n2; ++j) {
            v[P(-1, j)] = 2 * v[P(0, j)] - v[P(1, j)];
            v[P(n1, j)] = 2 * v[P(n1 - 1, j)] - v[P(n1 - 2, j)];
        }
        for (int i = -1; i <= n1; ++i) {
            v[P(i, -1)] = 2 * v[P(i, 0)] - v[P(i, 1)];
            v[P(i, n2)] = 2 * v[P(i, n2 - 1)] - v[P(i, n2 - 2)];
        }
    };
    auto snapshot = [&](const std::vector<double>& v, double s) {
        std::vector<double> out(static_cast<std::size_t>(n1) * n2);
        for (int i = 0; i < n1; ++i) {
            for (int j = 0; j < n2; ++j) out[static_cast<std::size_t>(i) * n2 + j] = v[P(i, j)];
        }
        field.times.push_back(s);
        field.values.push_back(std::move(out));
    };
    const auto steps = snapshot_steps(grid.n_time, opts.snapshots);
    std::size_t next_snap = 1;
    snapshot(cur, 0.0);

    const double ds = grid.ds, h1 = grid.h1, h2 = grid.h2;
    const double ih11 = 1.0 / (h1 * h1), ih22 = 1.0 / (h2 * h2), ih12 = 1.0 / (4.0 * h1 * h2);
    const bool split = !c.src.empty();
    for (int step = 1; step <= grid.n_time; ++step) {
        fill_ghosts(cur);
        parallel_for(static_cast<std::size_t>(n1), opts.threads, [&](std::size_t ii) {
            const int i = static_cast<int>(ii);
            Vec x(2);
            RowVec z(2);
            for (int j = 0; j < n2; ++j) {
                const std::size_t k = ii * n2 + j;
                const double v = cur[P(i, j)];
                const double ve = cur[P(i + 1, j)], vw = cur[P(i - 1, j)];
                const double vn = cur[P(i, j + 1)], vs = cur[P(i, j - 1)];
                const double v11 = (ve - 2 * v + vw) * ih11;
                const double v22 = (vn - 2 * v + vs) * ih22;
                const double v12 = (cur[P(i + 1, j + 1)] - cur[P(i + 1, j - 1)] - cur[P(i - 1, j + 1)] + cur[P(i - 1, j - 1)]) * ih12;
                z[0] = (ve - vw) / (2 * h1);
                z[1] = (vn - vs) / (2 * h2);
                double adv;
                const bool edge = i == 0 || j == 0 || i == n1 - 1 || j == n2 - 1;
                if (c.upwind[k] || edge) {
                    // Zero-gradient ghosts for inflow advection at the box edge.
                    const double ue = i == n1 - 1 ? v : ve, uw = i == 0 ? v : vw;
                    const double un = j == n2 - 1 ? v : vn, us = j == 0 ? v : vs;
                    const double g1 = c.b0[k] > 0 ? (ue - v) / h1 : (v - uw) / h1;
                    const double g2 = c.b1[k] > 0 ? (un - v) / h2 : (v - us) / h2;
                    adv = c.b0[k] * g1 + c.b1[k] * g2;
                } else {
                    adv = c.b0[k] * z[0] + c.b1[k] * z[1];
                }
                double f;
                if (split) {
                    f = c.src[k] + model.generator_yz(v, z);
                } else {
                    x << grid.x1(i), grid.x2(j);
                    f = model.generator(x, v, z);
                }
                next[P(i, j)] = v + ds * (c.a00[k] * v11 + 2.0 * c.a01[k] * v12 + c.a11[k] * v22 + adv + f);
            }
        });
        std::swap(cur, next);
        for (int i = 0; i < n1; ++i) {
            for (int j = 0; j < n2; ++j) {
                if (!std::isfinite(cur[P(i, j)])) {
                    std::ostringstream os;
                    os << "non-finite value at step " << step << ", node (" << i << ", " << j << ")";
                    throw Error(ErrorKind::NonFinite, os.str());
                }
            }
        }
        if (next_snap < steps.size() && step == steps[next_snap]) {
            snapshot(cur, step == grid.n_time ? t : step * ds);
            ++next_snap;
        }
    }
    field.grid = grid;
    return field;
}

Field sample_field(const Grid& grid, double t, int snapshots, const std::function<double(double, double, double)>& v) {
    grid.check();
    Field field;
    field.grid = grid;
    field.model_tag = "sampled";
    const int n1 = grid.n1(), n2 = grid.n2();
    for (int k = 0; k <= snapshots; ++k) {
        const double s = snapshots > 0 ? t * k / snapshots : 0.0;
        std::vector<double> out(static_cast<std::size_t>(n1) * n2);
        for (int i = 0; i < n1; ++i) {
            for (int j = 0; j < n2; ++j) out[static_cast<std::size_t>(i) * n2 + j] = v(s, grid.x1(i), grid.x2(j));
        }
        field.times.push_back(s);
        field.values.push_back(std::move(out));
    }
    return field;
}

// ---- mollification ----

double bump_density(double u) { return raw_bump(u) / (2.0 * bump_half_mass()); }

double bump_cdf(double s) {
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 1.0;
    if (s > 0.0) return 1.0 - bump_cdf(-s);
    return 0.5 * bump_integral(-1.0, s) / bump_half_mass();
}

MollifiedModel::MollifiedModel(std::shared_ptr<const AveragedModel> base, int n) : base_(std::move(base)), n_(n) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "mollification index must be >= 1");
    if (base_->dim() != 2) throw Error(ErrorKind::InvalidArgument, "mollification is implemented for d = 1");
    h_uses_x1_ = base_->spec().H.uses(coeffex::slot::x1);
}

double MollifiedModel::plus_weight(double x1) const { return bump_cdf(n_ * x1); }

Vec MollifiedModel::bbar(const Vec& x) const {
    const Vec x2 = slow_part(x);
    const Vec p = base_->bbar_branch(Direction::plus, x2), m = base_->bbar_branch(Direction::minus, x2);
    if (p == m) return base_->bbar(x);
    const double w = plus_weight(x[0]);
    Vec b(p.size());
    for (int i = 0; i < p.size(); ++i) b[i] = blend(w, p[i], m[i]);
    return b;
}

Mat MollifiedModel::abar(const Vec& x) const {
    const Vec x2 = slow_part(x);
    const Mat p = base_->abar_branch(Direction::plus, x2), m = base_->abar_branch(Direction::minus, x2);
    if (p == m) return base_->abar(x);
    const double w = plus_weight(x[0]);
    Mat a(p.rows(), p.cols());
    for (int i = 0; i < p.rows(); ++i) {
        for (int j = 0; j < p.cols(); ++j) a(i, j) = blend(w, p(i, j), m(i, j));
    }
    return a;
}

void MollifiedModel::diffusion_matrix(const Vec& x, Mat& a) const { a = abar(x); }

void MollifiedModel::drift_diffusion(const Vec& x, Vec& b, Mat& sigma) const {
    const Vec x2 = slow_part(x);
    if (base_->abar_branch(Direction::plus, x2) == base_->abar_branch(Direction::minus, x2)) {
        Vec bb;
        base_->drift_diffusion(x, bb, sigma);
        b = bbar(x);
        return;
    }
    b = bbar(x);
    Eigen::LLT<Mat> llt(2.0 * abar(x));
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::FactorizationFailure, "2*abar^n is not positive definite");
    sigma = llt.matrixL();
}

double MollifiedModel::generator_source(const Vec& x) const {
    const Vec x2 = slow_part(x);
    const double p = base_->source_branch(Direction::plus, x2), m = base_->source_branch(Direction::minus, x2);
    if (p == m) return base_->generator_source(x);
    return blend(plus_weight(x[0]), p, m);
}

double MollifiedModel::generator(const Vec& x, double y, const RowVec& z) const {
    if (split_generator()) return generator_source(x) + generator_yz(y, z);
    const Vec x2 = slow_part(x);
    const double p = base_->fbar_branch(Direction::plus, x2, y, z), m = base_->fbar_branch(Direction::minus, x2, y, z);
    if (p == m) return base_->generator(x, y, z);
    return blend(plus_weight(x[0]), p, m);
}

double MollifiedModel::terminal(const Vec& x) const {
    if (!h_uses_x1_) return base_->terminal(x);
    const auto& gl = gauss_legendre();
    double num = 0.0, den = 0.0;
    Vec y = x;
    for (int k = 0; k < kKernelNodes; ++k) {
        const double wk = gl.w[k] * raw_bump(gl.x[k]);
        y[0] = x[0] - gl.x[k] / n_;
        num += wk * base_->terminal(y);
        den += wk;
    }
    return num / den;
}

std::string MollifiedModel::tag() const { return "mollified(" + std::to_string(n_) + ")"; }

std::shared_ptr<MollifiedModel> mollify(std::shared_ptr<const AveragedModel> model, int n) {
    return std::make_shared<MollifiedModel>(std::move(model), n);
}

// ---- discrete Sobolev diagnostics ----

namespace {

struct RegionIndex {
    int i0, i1, j0, j1;
};

RegionIndex region_index(const Grid& g, const Region& r) {
    if (!(r.R > 0)) throw Error(ErrorKind::InvalidArgument, "region radius must be positive");
    RegionIndex q;
    q.i0 = static_cast<int>(std::ceil((g.L1 - r.R) / g.h1 - 1e-9));
    q.i1 = static_cast<int>(std::floor((g.L1 + r.R) / g.h1 + 1e-9));
    q.j0 = static_cast<int>(std::ceil((g.L2 - r.R) / g.h2 - 1e-9));
    q.j1 = static_cast<int>(std::floor((g.L2 + r.R) / g.h2 + 1e-9));
    if (q.i0 < 1 || q.j0 < 1 || q.i1 > g.n1() - 2 || q.j1 > g.n2() - 2) {
        std::ostringstream os;
        os << "region |x| <= " << r.R << " is not inside the grid interior";
        throw Error(ErrorKind::RegionExceedsGrid, os.str());
    }
    return q;
}

struct SliceSums {
    double v = 0, grad = 0, hess = 0;
};

SliceSums slice_sums(const Field& f, int s, const RegionIndex& q, double p) {
    const double h1 = f.grid.h1, h2 = f.grid.h2;
    SliceSums out;
    for (int i = q.i0; i <= q.i1; ++i) {
        for (int j = q.j0; j <= q.j1; ++j) {
            const double v = f.at(s, i, j);
            const double g1 = (f.at(s, i + 1, j) - f.at(s, i - 1, j)) / (2 * h1);
            const double g2 = (f.at(s, i, j + 1) - f.at(s, i, j - 1)) / (2 * h2);
            const double d11 = (f.at(s, i + 1, j) - 2 * v + f.at(s, i - 1, j)) / (h1 * h1);
            const double d22 = (f.at(s, i, j + 1) - 2 * v + f.at(s, i, j - 1)) / (h2 * h2);
            const double d12 = (f.at(s, i + 1, j + 1) - f.at(s, i + 1, j - 1) - f.at(s, i - 1, j + 1) + f.at(s, i - 1, j - 1)) / (4 * h1 * h2);
            out.v += std::pow(std::abs(v), p);
            out.grad += std::pow(std::sqrt(g1 * g1 + g2 * g2), p);
            out.hess += std::pow(std::sqrt(d11 * d11 + 2 * d12 * d12 + d22 * d22), p);
        }
    }
    const double cell = h1 * h2;
    out.v *= cell;
    out.grad *= cell;
    out.hess *= cell;
    return out;
}

}  // namespace

SobolevNorms sobolev_norms(const Field& field, double p, const Region& region) {
    if (!(p >= 1)) throw Error(ErrorKind::InvalidArgument, "p must be >= 1");
    const RegionIndex q = region_index(field.grid, region);
    const int last = field.snapshot_of(region.t);
    if (last < 1) throw Error(ErrorKind::InvalidArgument, "region needs at least two snapshots");
    const double h1 = field.grid.h1, h2 = field.grid.h2;
    SobolevNorms out;
    for (int s = 0; s <= last; ++s) {
        const double wl = s > 0 ? 0.5 * (field.times[s] - field.times[s - 1]) : 0.0;
        const double wr = s < last ? 0.5 * (field.times[s + 1] - field.times[s]) : 0.0;
        const double w = wl + wr;
        const SliceSums ss = slice_sums(field, s, q, p);
        out.lp_v += w * ss.v;
        out.lp_grad += w * ss.grad;
        out.lp_hess += w * ss.hess;
        const int a = s > 0 ? s - 1 : s, b = s < last ? s + 1 : s;
        const double dt = field.times[b] - field.times[a];
        double acc = 0.0;
        for (int i = q.i0; i <= q.i1; ++i) {
            for (int j = q.j0; j <= q.j1; ++j) acc += std::pow(std::abs(field.at(b, i, j) - field.at(a, i, j)) / dt, p);
        }
        out.lp_dsv += w * acc * h1 * h2;
    }
    out.measure = field.times[last] * (q.i1 - q.i0 + 1) * (q.j1 - q.j0 + 1) * h1 * h2;
    out.lp_v = std::pow(out.lp_v, 1.0 / p);
    out.lp_dsv = std::pow(out.lp_dsv, 1.0 / p);
    out.lp_grad = std::pow(out.lp_grad, 1.0 / p);
    out.lp_hess = std::pow(out.lp_hess, 1.0 / p);
    return out;
}

double gagliardo_nirenberg_ratio(const Field& field, double p, const Region& region) {
    if (!(p >= 1)) throw Error(ErrorKind::InvalidArgument, "p must be >= 1");
    const RegionIndex q = region_index(field.grid, region);
    const int last = field.snapshot_of(region.t);
    double best = 0.0;
    for (int s = 0; s <= last; ++s) {
        const SliceSums ss = slice_sums(field, s, q, p);
        const double w2 = std::pow(ss.v + ss.grad + ss.hess, 1.0 / p);
        const double lp = std::pow(ss.v, 1.0 / p);
        const double den = std::sqrt(w2) * std::sqrt(lp);
        if (!(den > 0)) continue;
        best = std::max(best, std::pow(ss.grad, 1.0 / p) / den);
    }
    return best;
}

void write_field_csv(const Field& field, int snap, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    out << "s,x1,x2,v\n";
    char buf[128];
    for (int i = 0; i < field.grid.n1(); ++i) {
        for (int j = 0; j < field.grid.n2(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", field.times[snap], field.grid.x1(i), field.grid.x2(j), field.at(snap, i, j));
            out << buf;
        }
    }
}

}  // namespace homog
