#include "homogenize/bsde.hpp"

#include "homogenize/error.hpp"
#include "homogenize/parallel.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <sstream>

namespace homog {

namespace {

constexpr int kChunks = 64;

using Exponents = std::vector<std::array<int, kMaxDim>>;

Exponents monomials(int dim, int degree) {
    Exponents out;
    std::array<int, kMaxDim> e{};
    // Enumerate by total degree, then lexicographically.
    for (int total = 0; total <= degree; ++total) {
        std::function<void(int, int)> rec = [&](int var, int left) {
            if (var == dim - 1) {
                e[var] = left;
                out.push_back(e);
                return;
            }
            for (int p = left; p >= 0; --p) {
                e[var] = p;
                rec(var + 1, left - p);
            }
        };
        rec(0, total);
    }
    return out;
}

class Regressor {
public:
    Regressor(const PathEnsemble& ens, int step, const BasisSpec& basis, double rank_tol, int threads)
        : n_(ens.n_paths), threads_(threads) {
        const int dim = ens.dim;
        std::array<double, kMaxDim> mean{}, scale{};
        std::array<bool, kMaxDim> active{};
        for (int c = 0; c < dim; ++c) {
            double s = 0.0, s2 = 0.0;
            for (int p = 0; p < n_; ++p) s += ens.state(p, step)[c];
            mean[c] = s / n_;
            for (int p = 0; p < n_; ++p) {
                const double u = ens.state(p, step)[c] - mean[c];
                s2 += u * u;
            }
            const double sd = std::sqrt(s2 / n_);
            active[c] = sd > 1e-12 * (1.0 + std::abs(mean[c]));
            scale[c] = active[c] ? 1.0 / sd : 0.0;
        }
        Exponents mono;
        for (const auto& e : monomials(dim, basis.degree)) {
            bool ok = true;
            for (int c = 0; c < dim; ++c) ok &= active[c] || e[c] == 0;
            if (ok) mono.push_back(e);
        }
        const int base = static_cast<int>(mono.size());
        p_ = basis.include_indicator ? 2 * base : base;
        phi_.assign(static_cast<std::size_t>(n_) * p_, 0.0);
        parallel_for(static_cast<std::size_t>(n_), threads_, [&](std::size_t pi) {
            const int p = static_cast<int>(pi);
            const double* x = ens.state(p, step);
            std::array<std::array<double, 8>, kMaxDim> pw{};
            for (int c = 0; c < dim; ++c) {
                const double u = (x[c] - mean[c]) * scale[c];
                pw[c][0] = 1.0;
                for (int k = 1; k <= basis.degree && k < 8; ++k) pw[c][k] = pw[c][k - 1] * u;
            }
            double* row = phi_.data() + static_cast<std::size_t>(p) * p_;
            for (int j = 0; j < base; ++j) {
                double v = 1.0;
                for (int c = 0; c < dim; ++c) v *= pw[c][mono[j][c]];
                if (basis.include_indicator) {
                    const bool pos = x[0] > 0;
                    row[j] = pos ? v : 0.0;
                    row[base + j] = pos ? 0.0 : v;
                } else {
                    row[j] = v;
                }
            }
        });

        // Gram matrix, summed over a fixed chunking so the result does not
        // depend on the worker count.
        std::vector<Eigen::MatrixXd> partial(kChunks, Eigen::MatrixXd::Zero(p_, p_));
        const int chunk = (n_ + kChunks - 1) / kChunks;
        parallel_for(kChunks, threads_, [&](std::size_t ci) {
            const int lo = static_cast<int>(ci) * chunk;
            const int hi = std::min(n_, lo + chunk);
            auto& g = partial[ci];
            for (int p = lo; p < hi; ++p) {
                const double* row = phi_.data() + static_cast<std::size_t>(p) * p_;
                for (int a = 0; a < p_; ++a) {
                    if (row[a] == 0.0) continue;
                    for (int b = a; b < p_; ++b) g(a, b) += row[a] * row[b];
                }
            }
        });
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p_, p_);
        for (const auto& g : partial) G += g;
        for (int a = 0; a < p_; ++a) {
            for (int b = 0; b < a; ++b) G(a, b) = G(b, a);
        }

        // Incremental Cholesky with pivot dropping.
        L_ = Eigen::MatrixXd::Zero(p_, p_);
        for (int j = 0; j < p_; ++j) {
            const int r = static_cast<int>(kept_.size());
            Eigen::VectorXd l(r);
            for (int i = 0; i < r; ++i) {
                double s = G(kept_[i], j);
                for (int m = 0; m < i; ++m) s -= L_(i, m) * l[m];
                l[i] = s / L_(i, i);
            }
            const double dgn = G(j, j) - l.squaredNorm();
            if (!(dgn > rank_tol * G(j, j)) || !(G(j, j) > 0)) {
                ++dropped_;
                continue;
            }
            for (int m = 0; m < r; ++m) L_(r, m) = l[m];
            L_(r, r) = std::sqrt(dgn);
            kept_.push_back(j);
        }
        if (kept_.empty()) throw Error(ErrorKind::RankDeficientBasis, "no regression column survived at step " + std::to_string(step));
    }

    int dropped() const { return dropped_; }
    int columns() const { return p_; }

    /// Fitted conditional expectation of each target column (targets are
    /// [path][n_rhs]).
    std::vector<double> fit(const std::vector<double>& targets, int n_rhs) const {
        std::vector<double> out(targets.size());
        const int r = static_cast<int>(kept_.size());
        for (int c = 0; c < n_rhs; ++c) {
            double lo = INFINITY, hi = -INFINITY;
            for (int p = 0; p < n_; ++p) {
                const double v = targets[static_cast<std::size_t>(p) * n_rhs + c];
                if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "non-finite regression target on path " + std::to_string(p));
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (lo == hi) {
                for (int p = 0; p < n_; ++p) out[static_cast<std::size_t>(p) * n_rhs + c] = lo;
                continue;
            }
            std::vector<Eigen::VectorXd> partial(kChunks, Eigen::VectorXd::Zero(r));
            const int chunk = (n_ + kChunks - 1) / kChunks;
            parallel_for(kChunks, threads_, [&](std::size_t ci) {
                const int a = static_cast<int>(ci) * chunk;
                const int b = std::min(n_, a + chunk);
                for (int p = a; p < b; ++p) {
                    const double* row = phi_.data() + static_cast<std::size_t>(p) * p_;
                    const double v = targets[static_cast<std::size_t>(p) * n_rhs + c];
                    for (int i = 0; i < r; ++i) partial[ci][i] += row[kept_[i]] * v;
                }
            });
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r);
            for (const auto& v : partial) rhs += v;
            const auto Lk = L_.topLeftCorner(r, r).triangularView<Eigen::Lower>();
            Eigen::VectorXd w = Lk.solve(rhs);
            Eigen::VectorXd beta = Lk.transpose().solve(w);
            parallel_for(static_cast<std::size_t>(n_), threads_, [&](std::size_t pi) {
                const double* row = phi_.data() + pi * p_;
                double s = 0.0;
                for (int i = 0; i < r; ++i) s += row[kept_[i]] * beta[i];
                out[pi * n_rhs + c] = s;
            });
        }
        return out;
    }

private:
    int n_;
    int threads_;
    int p_ = 0;
    int dropped_ = 0;
    std::vector<double> phi_;
    std::vector<int> kept_;
    Eigen::MatrixXd L_;
};

}  // namespace

std::string BasisSpec::describe() const {
    std::ostringstream os;
    os << "polynomial(degree=" << degree << (include_indicator ? ",sign-split" : "") << ")";
    return os.str();
}

RowVec BsdeSolution::Z(int path, int step) const {
    RowVec out(dim);
    const double* s = z.data() + (static_cast<std::size_t>(path) * n_steps + step) * dim;
    for (int c = 0; c < dim; ++c) out[c] = s[c];
    return out;
}

std::vector<double> BsdeSolution::y_marginal(int step) const {
    std::vector<double> out(static_cast<std::size_t>(n_paths));
    for (int p = 0; p < n_paths; ++p) out[p] = Y(p, step);
    return out;
}

BsdeSolution solve_regression(const PathEnsemble& ens, const DiffusionModel& model, const BsdeOptions& opts) {
    if (ens.dim != model.dim() || ens.k != ens.dim) throw Error(ErrorKind::InvalidArgument, "ensemble does not match the model");
    if (opts.basis.degree < 0 || opts.basis.degree > 7) throw Error(ErrorKind::InvalidArgument, "basis degree must be in 0..7");
    const double dt = ens.dt;
    const double K = model.lipschitz();
    if (K * dt >= 1.0) {
        throw Error(ErrorKind::ContractionViolated, "K*dt = " + std::to_string(K * dt) + " >= 1");
    }
    const int N = ens.n_paths;
    const int n = ens.n_steps;
    const int dim = ens.dim;

    BsdeSolution sol;
    sol.n_paths = N;
    sol.n_steps = n;
    sol.dim = dim;
    sol.dt = dt;
    sol.basis_spec = opts.basis.describe();
    sol.y.assign(static_cast<std::size_t>(N) * (n + 1), 0.0);
    sol.z.assign(static_cast<std::size_t>(N) * n * dim, 0.0);
    auto Yref = [&](int p, int i) -> double& { return sol.y[static_cast<std::size_t>(p) * (n + 1) + i]; };

    parallel_for(static_cast<std::size_t>(N), opts.threads, [&](std::size_t pi) {
        const int p = static_cast<int>(pi);
        Yref(p, n) = model.terminal(ens.state_vec(p, n));
    });

    std::vector<int> iters(static_cast<std::size_t>(N), 0);
    std::vector<double> target(static_cast<std::size_t>(N));
    std::vector<double> ztarget(static_cast<std::size_t>(N) * dim);
    for (int i = n - 1; i >= 0; --i) {
        const Regressor reg(ens, i, opts.basis, opts.rank_tol, opts.threads);
        sol.dropped_columns += reg.dropped();
        for (int p = 0; p < N; ++p) target[p] = Yref(p, i + 1);
        const auto C = reg.fit(target, 1);
        for (int p = 0; p < N; ++p) {
            const double* w = ens.increment(p, i);
            const double r = (target[p] - C[p]) / dt;
            for (int c = 0; c < dim; ++c) ztarget[static_cast<std::size_t>(p) * dim + c] = r * w[c];
        }
        const auto zeta = reg.fit(ztarget, dim);
        parallel_for(static_cast<std::size_t>(N), opts.threads, [&](std::size_t pi) {
            const int p = static_cast<int>(pi);
            const Vec x = ens.state_vec(p, i);
            Vec b;
            Mat sigma;
            model.drift_diffusion(x, b, sigma);
            RowVec zr(dim);
            for (int c = 0; c < dim; ++c) zr[c] = zeta[pi * dim + c];
            RowVec Z = RowVec::Zero(dim);
            if (!zr.isZero(0.0)) Z = sigma.transpose().partialPivLu().solve(zr.transpose()).transpose();
            double* zs = sol.z.data() + (pi * n + i) * dim;
            for (int c = 0; c < dim; ++c) zs[c] = Z[c];
            double y = C[pi];
            int m = 0;
            while (m < opts.picard_max) {
                ++m;
                const double next = C[pi] + dt * model.generator(x, y, Z);
                const double diff = std::abs(next - y);
                y = next;
                if (diff <= opts.picard_tol * (1.0 + std::abs(y))) break;
            }
            if (!std::isfinite(y)) throw Error(ErrorKind::NonFinite, "non-finite Y on path " + std::to_string(p));
            Yref(p, i) = y;
            iters[pi] = std::max(iters[pi], m);
        });
    }
    sol.picard_iters = *std::max_element(iters.begin(), iters.end());
    if (sol.dropped_columns > 0) {
        sol.warnings.push_back(std::to_string(sol.dropped_columns) + " degenerate regression columns dropped");
    }
    sol.y0 = Yref(0, 0);
    // Standard error of the pathwise estimator H(X_t) + sum f dt, whose mean is y0.
    std::vector<double> q(static_cast<std::size_t>(N));
    parallel_for(static_cast<std::size_t>(N), opts.threads, [&](std::size_t pi) {
        const int p = static_cast<int>(pi);
        double acc = Yref(p, n);
        for (int i = 0; i < n; ++i) acc += dt * model.generator(ens.state_vec(p, i), Yref(p, i), sol.Z(p, i));
        q[pi] = acc;
    });
    double s = 0.0, s2 = 0.0;
    for (double v : q) s += v;
    const double m1 = s / N;
    for (double v : q) s2 += (v - m1) * (v - m1);
    sol.y0_stderr = N > 1 ? std::sqrt(s2 / (N - 1) / N) : 0.0;
    return sol;
}

AprioriBound apriori_bound_estimate(const BsdeSolution& sol, const PathEnsemble& ens, const DiffusionModel& model) {
    AprioriBound out;
    Vec b;
    Mat sigma;
    for (int p = 0; p < sol.n_paths; ++p) {
        double sup = 0.0, energy = 0.0;
        for (int i = 0; i <= sol.n_steps; ++i) sup = std::max(sup, sol.Y(p, i) * sol.Y(p, i));
        for (int i = 0; i < sol.n_steps; ++i) {
            model.drift_diffusion(ens.state_vec(p, i), b, sigma);
            energy += (sol.Z(p, i) * sigma).squaredNorm() * sol.dt;
        }
        out.sup_y_sq += sup;
        out.z_energy += energy;
    }
    out.sup_y_sq /= sol.n_paths;
    out.z_energy /= sol.n_paths;
    return out;
}

double conditional_variation_bound(const BsdeSolution& sol, const PathEnsemble& ens, const DiffusionModel& model) {
    double total = 0.0;
    for (int p = 0; p < sol.n_paths; ++p) {
        double s = 0.0;
        for (int i = 0; i < sol.n_steps; ++i) s += std::abs(model.generator(ens.state_vec(p, i), sol.Y(p, i), sol.Z(p, i))) * sol.dt;
        total += s;
    }
    return total / sol.n_paths;
}

double expected_sup_abs(const BsdeSolution& sol) {
    double total = 0.0;
    for (int p = 0; p < sol.n_paths; ++p) {
        double sup = 0.0;
        for (int i = 0; i <= sol.n_steps; ++i) sup = std::max(sup, std::abs(sol.Y(p, i)));
        total += sup;
    }
    return total / sol.n_paths;
}

int upcrossings(const std::vector<double>& path, double a, double b) {
    if (!(a < b)) throw Error(ErrorKind::InvalidArgument, "up-crossing levels need a < b");
    int count = 0;
    bool below = false;
    for (double v : path) {
        if (!below) {
            if (v <= a) below = true;
        } else if (v >= b) {
            ++count;
            below = false;
        }
    }
    return count;
}

std::vector<double> stochastic_integral(const BsdeSolution& sol, const PathEnsemble& ens, const DiffusionModel& model) {
    std::vector<double> out(static_cast<std::size_t>(sol.n_paths), 0.0);
    Vec b;
    Mat sigma;
    for (int p = 0; p < sol.n_paths; ++p) {
        double s = 0.0;
        for (int i = 0; i < sol.n_steps; ++i) {
            model.drift_diffusion(ens.state_vec(p, i), b, sigma);
            const RowVec zs = sol.Z(p, i) * sigma;
            const double* w = ens.increment(p, i);
            for (int c = 0; c < ens.k; ++c) s += zs[c] * w[c];
        }
        out[p] = s;
    }
    return out;
}

}  // namespace homog
