#include "homogenize/cesaro.hpp"

#include "homogenize/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

namespace homog {

namespace {

constexpr double kGaussNode[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
constexpr double kGaussWeight[4] = {0.3478548451374539, 0.6521451548625461, 0.6521451548625461, 0.3478548451374539};

bool uses_x1(const Expr& e) { return e.uses(coeffex::slot::x1); }

bool uses_x2(const Expr& e) {
    for (int i = 1; i <= coeffex::kMaxSlowDim; ++i) {
        if (e.uses(coeffex::slot::x2(i))) return true;
    }
    return false;
}

template <typename Pred>
bool any_coefficient(const ProblemSpec& s, Pred pred, bool include_drift, bool include_diffusion) {
    if (include_diffusion) {
        for (const auto& e : s.phi) {
            if (pred(e)) return true;
        }
        for (const auto& row : s.sigma_tilde) {
            for (const auto& e : row) {
                if (pred(e)) return true;
            }
        }
    }
    if (include_drift) {
        for (const auto& e : s.b_tilde) {
            if (pred(e)) return true;
        }
    }
    return false;
}

long long quantize(double v) { return std::llround(v * 1e3); }
double dequantize(long long q) { return static_cast<double>(q) * 1e-3; }

}  // namespace

void AveragingControl::check() const {
    if (!(X0 > 0) || !(growth > 1) || j_max < 2 || !(tol > 0) || !(quad_points_per_unit > 0)) {
        throw Error(ErrorKind::InvalidArgument, "averaging control needs X0 > 0, growth > 1, j_max >= 2, tol > 0");
    }
    if (!std::isfinite(X0 * std::pow(growth, j_max))) {
        throw Error(ErrorKind::InvalidArgument, "X0 * growth^j_max overflows");
    }
    if (!(lattice_hi > lattice_lo) || !(lattice_pitch > 0)) {
        throw Error(ErrorKind::InvalidArgument, "bad x2 lattice");
    }
}

std::vector<CesaroResult> cesaro_limit_vec(const std::function<void(double, double*)>& g, int n,
                                           Direction direction, const AveragingControl& ctl) {
    ctl.check();
    const double sign = direction == Direction::plus ? 1.0 : -1.0;
    const double panel = 4.0 / ctl.quad_points_per_unit;
    std::vector<double> integral(n, 0.0), prev(n, 0.0), prev_inc(n, INFINITY), val(n);
    double lo = 0.0;
    double X = ctl.X0;
    std::vector<CesaroResult> out(n);

    for (int j = 0; j <= ctl.j_max; ++j) {
        const auto panels = static_cast<long long>(std::ceil((X - lo) / panel));
        const double w = (X - lo) / static_cast<double>(panels);
        for (long long q = 0; q < panels; ++q) {
            const double mid = lo + (static_cast<double>(q) + 0.5) * w;
            for (int k = 0; k < 4; ++k) {
                g(sign * (mid + 0.5 * w * kGaussNode[k]), val.data());
                for (int c = 0; c < n; ++c) integral[c] += 0.5 * w * kGaussWeight[k] * val[c];
            }
        }
        bool stable = j >= 2;
        for (int c = 0; c < n; ++c) {
            const double avg = integral[c] / X;
            const double inc = j == 0 ? INFINITY : std::abs(avg - prev[c]);
            if (!(inc < ctl.tol && prev_inc[c] < ctl.tol)) stable = false;
            out[c] = CesaroResult{avg, j == 0 ? INFINITY : inc, X};
            prev_inc[c] = inc;
            prev[c] = avg;
        }
        if (stable) return out;
        lo = X;
        X *= ctl.growth;
    }
    std::ostringstream os;
    os << "Cesaro average did not stabilize by X = " << lo << " (tol " << ctl.tol << ")";
    throw Error(ErrorKind::NonStabilizing, os.str());
}

CesaroResult cesaro_limit(const std::function<double(double)>& g, Direction direction, const AveragingControl& ctl) {
    return cesaro_limit_vec([&](double t, double* out) { out[0] = g(t); }, 1, direction, ctl).front();
}

double AveragedModel::Table::at(Direction dir, int comp, double x2) const {
    const auto& data = dir == Direction::plus ? plus : minus;
    const auto& lat = *lattice;
    const std::size_t m = lat.size();
    if (m == 1) return data[comp];
    if (x2 <= lat.front()) return data[comp];
    if (x2 >= lat.back()) return data[(m - 1) * n_comp + comp];
    const double pitch = (lat.back() - lat.front()) / static_cast<double>(m - 1);
    auto i = static_cast<std::size_t>((x2 - lat.front()) / pitch);
    if (i >= m - 1) i = m - 2;
    const double s = (x2 - lat[i]) / (lat[i + 1] - lat[i]);
    return (1.0 - s) * data[i * n_comp + comp] + s * data[(i + 1) * n_comp + comp];
}

std::size_t AveragedModel::MemoHash::operator()(const MemoKey& k) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (long long v : k.q) {
        h ^= std::hash<long long>{}(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
}

AveragedModel::AveragedModel(ProblemSpec spec, AveragingControl ctl) : spec_(std::move(spec)), ctl_(ctl) {
    spec_.check_structure();
    ctl_.check();
    const int d = spec_.d;
    const int n = d + 1;

    rho_identity_ = !std::any_of(spec_.phi.begin(), spec_.phi.end(), uses_x1);
    a_identity_ = !any_coefficient(spec_, uses_x1, false, true);
    b_identity_ = !any_coefficient(spec_, uses_x1, true, false);
    f_identity_ = !uses_x1(spec_.f);
    g_identity_ = !spec_.separable || !uses_x1(spec_.separable->g);
    if (a_identity_ && b_identity_ && g_identity_ && (f_identity_ || spec_.separable)) {
        table_.lattice = &lattice_;
        return;
    }

    bool x2_dependent = any_coefficient(spec_, uses_x2, true, true);
    if (spec_.separable && !g_identity_ && uses_x2(spec_.separable->g)) x2_dependent = true;
    if (x2_dependent) {
        if (d != 1) {
            throw Error(ErrorKind::InvalidArgument,
                        "averaging coefficients that depend on both x1 and x2 needs d = 1 (x2 lattice)");
        }
        const auto m = static_cast<int>(std::llround((ctl_.lattice_hi - ctl_.lattice_lo) / ctl_.lattice_pitch));
        for (int i = 0; i <= m; ++i) lattice_.push_back(ctl_.lattice_lo + (ctl_.lattice_hi - ctl_.lattice_lo) * i / m);
    } else {
        lattice_.push_back(0.0);
    }

    const int n_upper = n * (n + 1) / 2;
    const bool with_g = spec_.separable && !g_identity_;
    const int n_comp = 1 + d + n_upper + (with_g ? 1 : 0);
    table_.n_comp = n_comp;
    table_.lattice = &lattice_;
    table_.plus.assign(lattice_.size() * n_comp, 0.0);
    table_.minus.assign(lattice_.size() * n_comp, 0.0);

    for (std::size_t node = 0; node < lattice_.size(); ++node) {
        Vec x2 = Vec::Constant(d, lattice_[node]);
        auto integrand = [&](double t, double* out) {
            const PointCoefficients c = eval_coefficients(spec_, t, x2);
            int k = 0;
            out[k++] = c.rho;
            for (int i = 1; i <= d; ++i) out[k++] = c.rho * c.b[i];
            for (int i = 0; i < n; ++i) {
                for (int j = i; j < n; ++j) out[k++] = c.rho * c.a(i, j);
            }
            if (with_g) out[k++] = c.rho * coeffex::eval_or_throw(spec_.separable->g, space_env(t, x2));
        };
        for (Direction dir : {Direction::plus, Direction::minus}) {
            std::vector<CesaroResult> r;
            try {
                r = cesaro_limit_vec(integrand, n_comp, dir, ctl_);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NonStabilizing) throw;
                std::ostringstream os;
                os << e.what() << " for the rho-weighted coefficients of " << spec_.name << " at x2 = "
                   << lattice_[node];
                throw Error(ErrorKind::NonStabilizing, os.str());
            }
            auto& data = dir == Direction::plus ? table_.plus : table_.minus;
            const double rho = r[0].limit;
            if (!(rho > 0)) throw Error(ErrorKind::Domain, "non-positive Cesaro average of rho");
            data[node * n_comp] = rho;
            for (int c = 1; c < n_comp; ++c) data[node * n_comp + c] = r[c].limit / rho;
            for (const auto& x : r) max_residual_ = std::max(max_residual_, x.residual);
        }
    }
}

double AveragedModel::rho_table(Direction dir, const Vec& x2) const { return table_.at(dir, 0, x2[0]); }

double AveragedModel::rho(Direction dir, const Vec& x2) const {
    if (rho_identity_) return eval_coefficients(spec_, dir == Direction::plus ? 1.0 : -1.0, x2).rho;
    return rho_table(dir, x2);
}

Vec AveragedModel::bbar_branch(Direction dir, const Vec& x2) const {
    const int d = spec_.d;
    Vec b = Vec::Zero(d + 1);
    if (b_identity_) {
        const auto env = space_env(dir == Direction::plus ? 1.0 : -1.0, x2);
        for (int i = 0; i < d; ++i) b[i + 1] = coeffex::eval_or_throw(spec_.b_tilde[i], env);
        return b;
    }
    for (int i = 0; i < d; ++i) b[i + 1] = table_.at(dir, 1 + i, x2[0]);
    return b;
}

Mat AveragedModel::abar_branch(Direction dir, const Vec& x2) const {
    const int n = spec_.d + 1;
    if (a_identity_) return eval_coefficients(spec_, dir == Direction::plus ? 1.0 : -1.0, x2).a;
    Mat a(n, n);
    int k = 1 + spec_.d;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            a(i, j) = table_.at(dir, k++, x2[0]);
            a(j, i) = a(i, j);
        }
    }
    return a;
}

double AveragedModel::source_branch(Direction dir, const Vec& x2) const {
    if (!spec_.separable) throw Error(ErrorKind::InvalidArgument, "generator is not split");
    const auto env = space_env(dir == Direction::plus ? 1.0 : -1.0, x2);
    const double h = coeffex::eval_or_throw(spec_.separable->h, env);
    if (g_identity_) return coeffex::eval_or_throw(spec_.separable->g, env) * h;
    return table_.at(dir, table_.n_comp - 1, x2[0]) * h;
}

double AveragedModel::fbar_branch(Direction dir, const Vec& x2, double y, const RowVec& z) const {
    if (spec_.separable) return source_branch(dir, x2) + generator_yz(y, z);
    if (f_identity_) return eval_generator(spec_, dir == Direction::plus ? 1.0 : -1.0, x2, y, z);
    return generic_fbar(dir, x2, y, z);
}

double AveragedModel::generic_fbar(Direction dir, const Vec& x2, double y, const RowVec& z) const {
    MemoKey key;
    key.q[0] = dir == Direction::plus ? 1 : -1;
    key.q[1] = quantize(y);
    for (int i = 0; i < x2.size(); ++i) key.q[2 + i] = quantize(x2[i]);
    for (int j = 0; j < z.size(); ++j) key.q[2 + kMaxDim + j] = quantize(z[j]);
    {
        std::shared_lock lock(memo_mutex_);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
    }
    Vec qx2(x2.size());
    for (int i = 0; i < x2.size(); ++i) qx2[i] = dequantize(key.q[2 + i]);
    RowVec qz(z.size());
    for (int j = 0; j < z.size(); ++j) qz[j] = dequantize(key.q[2 + kMaxDim + j]);
    const double qy = dequantize(key.q[1]);
    AveragingControl ctl = ctl_;
    // The generator remainder is only controlled relative to this weight.
    ctl.tol *= 1.0 + qx2.squaredNorm() + qy * qy + qz.squaredNorm();
    auto r = cesaro_limit_vec(
        [&](double t, double* out) {
            const double rho = eval_coefficients(spec_, t, qx2).rho;
            out[0] = rho;
            out[1] = rho * eval_generator(spec_, t, qx2, qy, qz);
        },
        2, dir, ctl);
    const double value = r[1].limit / r[0].limit;
    std::unique_lock lock(memo_mutex_);
    memo_.emplace(key, value);
    return value;
}

std::size_t AveragedModel::memo_size() const {
    std::shared_lock lock(memo_mutex_);
    return memo_.size();
}

Vec AveragedModel::bbar(const Vec& x) const {
    if (b_identity_) {
        Vec b;
        Mat s;
        eval_drift_diffusion(spec_, x[0], slow_part(x), b, s);
        return b;
    }
    return bbar_branch(branch(x[0]), slow_part(x));
}

Mat AveragedModel::abar(const Vec& x) const {
    if (a_identity_) return eval_coefficients(spec_, x[0], slow_part(x)).a;
    return abar_branch(branch(x[0]), slow_part(x));
}

Mat AveragedModel::sigbar(const Vec& x) const {
    if (a_identity_) {
        Vec b;
        Mat s;
        eval_drift_diffusion(spec_, x[0], slow_part(x), b, s);
        return s;
    }
    const Mat two_a = 2.0 * abar(x);
    Eigen::LLT<Mat> llt(two_a);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::FactorizationFailure, "2*abar is not positive definite");
    }
    return llt.matrixL();
}

void AveragedModel::drift_diffusion(const Vec& x, Vec& b, Mat& sigma) const {
    if (a_identity_ && b_identity_) {
        eval_drift_diffusion(spec_, x[0], slow_part(x), b, sigma);
        return;
    }
    b = bbar(x);
    sigma = sigbar(x);
}

double AveragedModel::generator(const Vec& x, double y, const RowVec& z) const {
    if (spec_.separable) return generator_source(x) + generator_yz(y, z);
    if (f_identity_) return eval_generator(spec_, x[0], slow_part(x), y, z);
    return generic_fbar(branch(x[0]), slow_part(x), y, z);
}

double AveragedModel::generator_source(const Vec& x) const {
    if (g_identity_) {
        const auto env = space_env(x[0], slow_part(x));
        return coeffex::eval_or_throw(spec_.separable->g, env) * coeffex::eval_or_throw(spec_.separable->h, env);
    }
    return source_branch(branch(x[0]), slow_part(x));
}

double AveragedModel::generator_yz(double y, const RowVec& z) const {
    const Vec none = Vec::Zero(spec_.d);
    return coeffex::eval_or_throw(spec_.separable->ell, generator_env(0.0, none, y, z));
}

std::shared_ptr<AveragedModel> build_averaged_model(const ProblemSpec& spec, const AveragingControl& ctl) {
    auto model = std::make_shared<AveragedModel>(spec, ctl);
    for (double x2v : model->lattice()) {
        const Vec x2 = Vec::Constant(spec.d, x2v);
        for (Direction dir : {Direction::plus, Direction::minus}) {
            const Mat a = model->abar_branch(dir, x2);
            Eigen::LLT<Mat> llt(2.0 * a);
            if (llt.info() != Eigen::Success) {
                throw Error(ErrorKind::FactorizationFailure, "2*abar is not positive definite at x2 = " +
                                                                 std::to_string(x2v));
            }
        }
    }
    return model;
}

double fbar_eval(const AveragedModel& model, const Vec& x, double y, const RowVec& z) {
    return model.generator(x, y, z);
}

}  // namespace homog
