#include "homogenize/sdesim.hpp"

#include "homogenize/error.hpp"
#include "homogenize/parallel.hpp"
#include "homogenize/rng.hpp"
#include "homogenize/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace homog {

namespace {

constexpr char kMagic[8] = {'H', 'M', 'G', 'E', 'N', 'S', '0', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw Error(ErrorKind::Io, "truncated ensemble file");
    return v;
}

}  // namespace

Vec PathEnsemble::state_vec(int path, int step) const {
    const double* s = state(path, step);
    Vec v(dim);
    for (int c = 0; c < dim; ++c) v[c] = s[c];
    return v;
}

std::vector<double> PathEnsemble::marginal(int step, int c) const {
    std::vector<double> out(static_cast<std::size_t>(n_paths));
    for (int p = 0; p < n_paths; ++p) out[p] = state(p, step)[c];
    return out;
}

int PathEnsemble::step_of(double s) const {
    const long i = std::lround(s / dt);
    return static_cast<int>(std::clamp<long>(i, 0, n_steps));
}

PathEnsemble simulate(const DiffusionModel& model, const Vec& x0, double t, double dt, int n_paths,
                      std::uint64_t seed, const SimOptions& opts) {
    const int dim = model.dim();
    if (x0.size() != dim) throw Error(ErrorKind::InvalidArgument, "x0 has the wrong dimension");
    if (!(t > 0) || !(dt > 0) || n_paths < 1) throw Error(ErrorKind::InvalidArgument, "need t > 0, dt > 0, n_paths >= 1");
    long long n_euler = static_cast<long long>(std::ceil(t / dt * (1.0 - 1e-12)));
    if (opts.record_steps > 0) {
        n_euler = (n_euler + opts.record_steps - 1) / opts.record_steps * opts.record_steps;
    }
    const int record = opts.record_steps > 0 ? opts.record_steps : static_cast<int>(n_euler);
    const int sub = static_cast<int>(n_euler / record);
    const long long n_noise = opts.noise_steps > 0 ? opts.noise_steps : n_euler;
    if (n_noise % n_euler != 0) {
        throw Error(ErrorKind::InvalidArgument, "noise grid (" + std::to_string(n_noise) +
                                                    " steps) is not a refinement of the Euler grid (" +
                                                    std::to_string(n_euler) + " steps)");
    }
    const int per_euler = static_cast<int>(n_noise / n_euler);
    const double h = t / static_cast<double>(n_euler);
    const double noise_scale = std::sqrt(t / static_cast<double>(n_noise));

    PathEnsemble ens;
    ens.n_paths = n_paths;
    ens.n_steps = record;
    ens.dim = dim;
    ens.k = dim;
    ens.dt = t / record;
    ens.t = t;
    ens.substeps = sub;
    ens.seed = seed;
    ens.model_tag = model.tag();
    ens.t_grid.resize(record + 1);
    for (int i = 0; i <= record; ++i) ens.t_grid[i] = i == record ? t : ens.dt * i;
    ens.states.assign(static_cast<std::size_t>(n_paths) * (record + 1) * dim, 0.0);
    ens.dW.assign(static_cast<std::size_t>(n_paths) * record * dim, 0.0);

    parallel_for(static_cast<std::size_t>(n_paths), opts.threads, [&](std::size_t pi) {
        const int p = static_cast<int>(pi);
        Vec x = x0;
        Vec b;
        Mat sigma;
        Vec dw(dim), acc(dim);
        std::uint32_t noise_step = 0;
        double* s0 = ens.state(p, 0);
        for (int c = 0; c < dim; ++c) s0[c] = x[c];
        for (int i = 0; i < record; ++i) {
            acc.setZero();
            for (int e = 0; e < sub; ++e) {
                dw.setZero();
                for (int r = 0; r < per_euler; ++r, ++noise_step) {
                    for (int lane = 0; 2 * lane < dim; ++lane) {
                        const auto z = rng::normal_pair(seed, static_cast<std::uint32_t>(p), noise_step,
                                                        static_cast<std::uint32_t>(lane));
                        dw[2 * lane] += noise_scale * z[0];
                        if (2 * lane + 1 < dim) dw[2 * lane + 1] += noise_scale * z[1];
                    }
                }
                model.drift_diffusion(x, b, sigma);
                x += b * h + sigma * dw;
                acc += dw;
            }
            if (!x.allFinite()) {
                throw Error(ErrorKind::NonFinite, "state left the finite range on path " + std::to_string(p) +
                                                      " at step " + std::to_string(i + 1));
            }
            double* s = ens.state(p, i + 1);
            for (int c = 0; c < dim; ++c) s[c] = x[c];
            double* w = ens.dW.data() + (static_cast<std::size_t>(p) * record + i) * dim;
            for (int c = 0; c < dim; ++c) w[c] = acc[c];
        }
    });
    return ens;
}

double multiscale_step_limit(const ProblemSpec& spec, double eps, const Vec& x0, double eta_res) {
    const double phi_max = sampled_phi_max(spec, slow_part(x0));
    if (phi_max <= 0) return INFINITY;
    const double r = eps / (eta_res * phi_max);
    return r * r;
}

PathEnsemble simulate_multiscale(const ProblemSpec& spec, double eps, const Vec& x0, double t, double dt,
                                 int n_paths, std::uint64_t seed, const SimOptions& opts) {
    const EpsilonModel model(spec, eps);
    const double limit = multiscale_step_limit(spec, eps, x0, opts.eta_res);
    if (dt > limit * (1.0 + 1e-12)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "dt = %.6g exceeds (eps/(eta*phi_max))^2 = %.6g for eps = %.6g", dt, limit, eps);
        throw Error(ErrorKind::StepTooCoarse, buf);
    }
    return simulate(model, x0, t, dt, n_paths, seed, opts);
}

PathEnsemble simulate_averaged(const AveragedModel& model, const Vec& x0, double t, double dt, int n_paths,
                               std::uint64_t seed, const SimOptions& opts) {
    return simulate(model, x0, t, dt, n_paths, seed, opts);
}

MarginalComparison weak_marginal_report(const PathEnsemble& a, const PathEnsemble& b, const std::vector<double>& times) {
    if (a.dim != b.dim || std::abs(a.t - b.t) > 1e-12 * a.t) {
        throw Error(ErrorKind::InvalidArgument, "ensembles differ in dimension or horizon");
    }
    MarginalComparison out;
    for (double s : times) {
        const int ia = a.step_of(s);
        const int ib = b.step_of(s);
        for (const auto* e : {&a, &b}) {
            const int i = e == &a ? ia : ib;
            if (std::abs(e->t_grid[i] - s) > 1e-9 * e->t) {
                std::ostringstream os;
                os << "time " << s << " is not on the grid of " << e->model_tag << "; using " << e->t_grid[i];
                out.warnings.push_back(os.str());
            }
        }
        for (int c = 0; c < a.dim; ++c) {
            const auto ma = a.marginal(ia, c);
            const auto mb = b.marginal(ib, c);
            MarginalRow row;
            row.time = s;
            row.coord = c;
            row.mean_a = stats::mean(ma);
            row.var_a = stats::variance(ma);
            row.mean_b = stats::mean(mb);
            row.var_b = stats::variance(mb);
            row.ks = stats::ks_two_sample(ma, mb);
            out.rows.push_back(row);
        }
    }
    return out;
}

std::vector<double> martingale_part(const PathEnsemble& ens, const DiffusionModel& model) {
    std::vector<double> out(static_cast<std::size_t>(ens.n_paths) * ens.dim, 0.0);
    Vec b;
    Mat sigma;
    Vec dw(ens.k);
    for (int p = 0; p < ens.n_paths; ++p) {
        Vec m = Vec::Zero(ens.dim);
        for (int i = 0; i < ens.n_steps; ++i) {
            model.drift_diffusion(ens.state_vec(p, i), b, sigma);
            const double* w = ens.increment(p, i);
            for (int j = 0; j < ens.k; ++j) dw[j] = w[j];
            m += sigma * dw;
        }
        for (int c = 0; c < ens.dim; ++c) out[static_cast<std::size_t>(p) * ens.dim + c] = m[c];
    }
    return out;
}

std::vector<double> drift_residual(const PathEnsemble& ens, const DiffusionModel& model) {
    std::vector<double> out(static_cast<std::size_t>(ens.n_paths) * ens.dim, 0.0);
    Vec b;
    Mat sigma;
    for (int p = 0; p < ens.n_paths; ++p) {
        Vec r = ens.state_vec(p, ens.n_steps) - ens.state_vec(p, 0);
        for (int i = 0; i < ens.n_steps; ++i) {
            model.drift_diffusion(ens.state_vec(p, i), b, sigma);
            r -= b * ens.dt;
        }
        for (int c = 0; c < ens.dim; ++c) out[static_cast<std::size_t>(p) * ens.dim + c] = r[c];
    }
    return out;
}

std::pair<double, double> sup_second_moment(const PathEnsemble& ens) {
    std::vector<double> sup(static_cast<std::size_t>(ens.n_paths), 0.0);
    for (int p = 0; p < ens.n_paths; ++p) {
        for (int i = 0; i <= ens.n_steps; ++i) {
            const double* s = ens.state(p, i);
            double sq = 0.0;
            for (int c = 0; c < ens.dim; ++c) sq += s[c] * s[c];
            sup[p] = std::max(sup[p], sq);
        }
    }
    return {stats::mean(sup), stats::standard_error(sup)};
}

void save_ensemble(const PathEnsemble& ens, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    out.write(kMagic, sizeof kMagic);
    put(out, kVersion);
    put(out, static_cast<std::int32_t>(ens.n_paths));
    put(out, static_cast<std::int32_t>(ens.n_steps));
    put(out, static_cast<std::int32_t>(ens.dim));
    put(out, static_cast<std::int32_t>(ens.k));
    put(out, static_cast<std::int32_t>(ens.substeps));
    put(out, ens.seed);
    put(out, ens.dt);
    put(out, ens.t);
    put(out, static_cast<std::uint32_t>(ens.model_tag.size()));
    out.write(ens.model_tag.data(), static_cast<std::streamsize>(ens.model_tag.size()));
    out.write(reinterpret_cast<const char*>(ens.t_grid.data()), static_cast<std::streamsize>(ens.t_grid.size() * 8));
    out.write(reinterpret_cast<const char*>(ens.states.data()), static_cast<std::streamsize>(ens.states.size() * 8));
    out.write(reinterpret_cast<const char*>(ens.dW.data()), static_cast<std::streamsize>(ens.dW.size() * 8));
    if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

PathEnsemble load_ensemble(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error(ErrorKind::Io, "not an ensemble file");
    if (get<std::uint32_t>(in) != kVersion) throw Error(ErrorKind::Io, "unsupported ensemble version");
    PathEnsemble ens;
    ens.n_paths = get<std::int32_t>(in);
    ens.n_steps = get<std::int32_t>(in);
    ens.dim = get<std::int32_t>(in);
    ens.k = get<std::int32_t>(in);
    ens.substeps = get<std::int32_t>(in);
    ens.seed = get<std::uint64_t>(in);
    ens.dt = get<double>(in);
    ens.t = get<double>(in);
    if (ens.n_paths < 1 || ens.n_steps < 1 || ens.dim < 1 || ens.dim > kMaxDim || ens.k != ens.dim) {
        throw Error(ErrorKind::Io, "corrupt ensemble header");
    }
    ens.model_tag.resize(get<std::uint32_t>(in));
    in.read(ens.model_tag.data(), static_cast<std::streamsize>(ens.model_tag.size()));
    ens.t_grid.resize(static_cast<std::size_t>(ens.n_steps) + 1);
    ens.states.resize(static_cast<std::size_t>(ens.n_paths) * (ens.n_steps + 1) * ens.dim);
    ens.dW.resize(static_cast<std::size_t>(ens.n_paths) * ens.n_steps * ens.k);
    in.read(reinterpret_cast<char*>(ens.t_grid.data()), static_cast<std::streamsize>(ens.t_grid.size() * 8));
    in.read(reinterpret_cast<char*>(ens.states.data()), static_cast<std::streamsize>(ens.states.size() * 8));
    in.read(reinterpret_cast<char*>(ens.dW.data()), static_cast<std::streamsize>(ens.dW.size() * 8));
    if (!in) throw Error(ErrorKind::Io, "truncated ensemble file");
    return ens;
}

void write_paths_csv(const PathEnsemble& ens, const std::string& path, int max_paths) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    std::fprintf(f, "path,step,t");
    for (int c = 0; c < ens.dim; ++c) {
        if (c == 0) std::fprintf(f, ",X1");
        else std::fprintf(f, ",X2_%d", c);
    }
    std::fprintf(f, "\n");
    const int np = max_paths < 0 ? ens.n_paths : std::min(max_paths, ens.n_paths);
    for (int p = 0; p < np; ++p) {
        for (int i = 0; i <= ens.n_steps; ++i) {
            std::fprintf(f, "%d,%d,%.17g", p, i, ens.t_grid[i]);
            const double* s = ens.state(p, i);
            for (int c = 0; c < ens.dim; ++c) std::fprintf(f, ",%.17g", s[c]);
            std::fprintf(f, "\n");
        }
    }
    std::fclose(f);
}

}  // namespace homog
