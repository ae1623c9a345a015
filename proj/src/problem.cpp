#include "homogenize/problem.hpp"

#include "homogenize/error.hpp"
#include "homogenize/rng.hpp"
#include "homogenize/toml_lite.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <sstream>

namespace homog {

using coeffex::Env;
using coeffex::VarSet;

namespace {

void require_scope(const Expr& e, const VarSet& allowed, const std::string& what) {
    const VarSet extra = e.variables() & ~allowed;
    if (extra.any()) {
        for (int s = 0; s < coeffex::kSlotCount; ++s) {
            if (extra.test(static_cast<std::size_t>(s))) {
                throw Error(ErrorKind::InvalidArgument,
                            what + " references '" + coeffex::slot_name(s) + "', which is not allowed there");
            }
        }
    }
}

std::string point_text(double x1, const Vec& x2) {
    std::ostringstream os;
    os.precision(17);
    os << "x1=" << x1;
    for (int i = 0; i < x2.size(); ++i) os << ", x2_" << i + 1 << "=" << x2[i];
    return os.str();
}

std::string quote(const Expr& e) {
    std::string out = "\"";
    for (char c : e.print()) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

Expr P(std::string_view src, const VarSet& allowed) { return coeffex::parse_or_throw(src, allowed, "benchmark"); }

}  // namespace

void ProblemSpec::check_structure() const {
    if (d < 1 || d > coeffex::kMaxSlowDim) {
        throw Error(ErrorKind::InvalidArgument, "d must be in 1.." + std::to_string(coeffex::kMaxSlowDim));
    }
    if (k != d + 1) throw Error(ErrorKind::InvalidArgument, "k must equal d + 1");
    if (static_cast<int>(phi.size()) != k) throw Error(ErrorKind::InvalidArgument, "phi needs k entries");
    if (static_cast<int>(b_tilde.size()) != d) throw Error(ErrorKind::InvalidArgument, "b_tilde needs d entries");
    if (static_cast<int>(sigma_tilde.size()) != d) throw Error(ErrorKind::InvalidArgument, "sigma_tilde needs d rows");
    for (const auto& row : sigma_tilde) {
        if (static_cast<int>(row.size()) != k) throw Error(ErrorKind::InvalidArgument, "sigma_tilde rows need k entries");
    }
    const VarSet sv = coeffex::space_vars(d);
    for (const auto& e : phi) require_scope(e, sv, "phi");
    for (const auto& e : b_tilde) require_scope(e, sv, "b_tilde");
    for (const auto& row : sigma_tilde) {
        for (const auto& e : row) require_scope(e, sv, "sigma_tilde");
    }
    require_scope(f, coeffex::generator_vars(d), "f");
    require_scope(H, sv, "H");
    if (separable) {
        require_scope(separable->g, sv, "f_separable g");
        VarSet x2only = sv;
        x2only.reset(coeffex::slot::x1);
        require_scope(separable->h, x2only, "f_separable h");
        VarSet yz = coeffex::generator_vars(d) & ~sv;
        require_scope(separable->ell, yz, "f_separable ell");
    }
    if (!(bounds.lambda > 0 && bounds.C1 > 0 && bounds.K > 0 && bounds.p >= 1)) {
        throw Error(ErrorKind::InvalidArgument, "bounds need lambda, C1, K > 0 and p >= 1");
    }
}

Env space_env(double x1, const Vec& x2) {
    Env env{};
    env[coeffex::slot::x1] = x1;
    for (int i = 0; i < x2.size(); ++i) env[coeffex::slot::x2(i + 1)] = x2[i];
    return env;
}

Env generator_env(double x1, const Vec& x2, double y, const RowVec& z) {
    Env env = space_env(x1, x2);
    env[coeffex::slot::y] = y;
    for (int j = 0; j < z.size(); ++j) env[coeffex::slot::z(j)] = z[j];
    return env;
}

void eval_drift_diffusion(const ProblemSpec& spec, double x1, const Vec& x2, Vec& b, Mat& sigma) {
    const int n = spec.dim();
    const Env env = space_env(x1, x2);
    b.setZero(n);
    sigma.resize(n, spec.k);
    for (int j = 0; j < spec.k; ++j) sigma(0, j) = coeffex::eval_or_throw(spec.phi[j], env);
    for (int i = 0; i < spec.d; ++i) {
        b[i + 1] = coeffex::eval_or_throw(spec.b_tilde[i], env);
        for (int j = 0; j < spec.k; ++j) sigma(i + 1, j) = coeffex::eval_or_throw(spec.sigma_tilde[i][j], env);
    }
}

PointCoefficients eval_coefficients(const ProblemSpec& spec, double x1, const Vec& x2) {
    PointCoefficients c;
    eval_drift_diffusion(spec, x1, x2, c.b, c.sigma);
    c.a = 0.5 * c.sigma * c.sigma.transpose();
    c.a00 = c.a(0, 0);
    if (!(c.a00 > 0)) throw Error(ErrorKind::Domain, "a00 vanishes at " + point_text(x1, x2));
    c.rho = 1.0 / c.a00;
    return c;
}

double eval_generator(const ProblemSpec& spec, double x1, const Vec& x2, double y, const RowVec& z) {
    return coeffex::eval_or_throw(spec.f, generator_env(x1, x2, y, z));
}

double eval_terminal(const ProblemSpec& spec, double x1, const Vec& x2) {
    return coeffex::eval_or_throw(spec.H, space_env(x1, x2));
}

ValidationReport validate(const ProblemSpec& spec, const SampleBox& box, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw Error(ErrorKind::InvalidArgument, "n_samples must be >= 1");
    spec.check_structure();
    ValidationReport rep;
    rep.min_ellipticity = INFINITY;
    const Bounds& bd = spec.bounds;
    const int d = spec.d;
    const int k = spec.k;
    const double p = bd.p;
    constexpr double kSlack = 1e-12;

    std::uint32_t counter = 0;
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * rng::uniform(seed, 0x5A11u, counter++); };

    auto fail = [&](const std::string& what, double x1, const Vec& x2) {
        rep.passed = false;
        rep.failures.push_back(what + " at " + point_text(x1, x2));
    };

    for (int s = 0; s < n_samples; ++s) {
        const double x1 = draw(box.x1_lo, box.x1_hi);
        Vec x2(d);
        for (int i = 0; i < d; ++i) x2[i] = draw(box.x2_lo, box.x2_hi);
        const double x2sq = x2.squaredNorm();
        const double x2p = std::pow(std::sqrt(x2sq), p);

        PointCoefficients c;
        try {
            c = eval_coefficients(spec, x1, x2);
        } catch (const Error& e) {
            fail(std::string("coefficient evaluation failed (") + e.what() + ")", x1, x2);
            continue;
        }
        const double asym = (c.a - c.a.transpose()).cwiseAbs().maxCoeff();
        rep.max_asymmetry = std::max(rep.max_asymmetry, asym);
        Eigen::SelfAdjointEigenSolver<Mat> es(c.a, Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        rep.min_ellipticity = std::min(rep.min_ellipticity, lmin);
        if (lmin < bd.lambda - kSlack) fail("ellipticity " + std::to_string(lmin) + " < lambda", x1, x2);

        rep.max_a00 = std::max(rep.max_a00, c.a00);
        if (c.a00 > bd.C1 + kSlack) fail("a00 = " + std::to_string(c.a00) + " exceeds C1", x1, x2);

        double slow = 0.0;
        for (int i = 1; i <= d; ++i) slow += c.a(i, i) + c.b[i] * c.b[i];
        const double slow_ratio = slow / (1.0 + x2sq);
        rep.max_slow_growth = std::max(rep.max_slow_growth, slow_ratio);
        if (slow_ratio > bd.C1 + kSlack) fail("slow growth ratio " + std::to_string(slow_ratio) + " exceeds C1", x1, x2);

        const double hv = eval_terminal(spec, x1, x2);
        const double h_ratio = std::abs(hv) / (1.0 + std::pow(std::abs(x1), p) + x2p);
        rep.max_h_growth = std::max(rep.max_h_growth, h_ratio);
        if (h_ratio > bd.K + kSlack) fail("|H| growth ratio " + std::to_string(h_ratio) + " exceeds K", x1, x2);

        const double r = box.yz_radius;
        const double y = draw(-r, r);
        const double y2 = draw(-r, r);
        RowVec z(k), z2(k);
        for (int j = 0; j < k; ++j) {
            z[j] = draw(-r, r);
            z2[j] = draw(-r, r);
        }
        // Half the samples move only y, half move (y, z), so both partial
        // Lipschitz constants are probed.
        if (s % 2 == 0) z2 = z;
        const double fv = eval_generator(spec, x1, x2, y, z);
        const double fv2 = eval_generator(spec, x1, x2, y2, z2);
        const double f_ratio = std::abs(fv) / (1.0 + x2p + std::abs(y) + z.norm());
        rep.max_f_growth = std::max(rep.max_f_growth, f_ratio);
        if (f_ratio > bd.K + kSlack) fail("|f| growth ratio " + std::to_string(f_ratio) + " exceeds K", x1, x2);
        const double dist = std::abs(y - y2) + (z - z2).norm();
        if (dist > 0) {
            const double lip = std::abs(fv - fv2) / dist;
            rep.max_lipschitz = std::max(rep.max_lipschitz, lip);
            if (lip > bd.K * (1.0 + 1e-9)) fail("Lipschitz quotient " + std::to_string(lip) + " exceeds K", x1, x2);
        }
        if (asym > 1e-14 * (1.0 + c.a.cwiseAbs().maxCoeff())) fail("a is not symmetric", x1, x2);
    }
    return rep;
}

void validate_or_throw(const ProblemSpec& spec, const SampleBox& box, int n_samples, std::uint64_t seed) {
    const ValidationReport rep = validate(spec, box, n_samples, seed);
    if (!rep.passed) throw Error(ErrorKind::ValidationFailed, spec.name + ": " + rep.failures.front());
}

std::string to_string(BenchmarkId id) {
    switch (id) {
        case BenchmarkId::BM1_tanh_fast: return "BM1_tanh_fast";
        case BenchmarkId::BM2_periodic: return "BM2_periodic";
        case BenchmarkId::BM3_x1_free: return "BM3_x1_free";
    }
    return "?";
}

BenchmarkId benchmark_from_string(const std::string& name) {
    if (name == "BM1_tanh_fast" || name == "BM1") return BenchmarkId::BM1_tanh_fast;
    if (name == "BM2_periodic" || name == "BM2") return BenchmarkId::BM2_periodic;
    if (name == "BM3_x1_free" || name == "BM3") return BenchmarkId::BM3_x1_free;
    throw Error(ErrorKind::InvalidArgument, "unknown benchmark '" + name + "'");
}

ProblemSpec registry(BenchmarkId id) {
    const VarSet sv = coeffex::space_vars(1);
    const VarSet gv = coeffex::generator_vars(1);
    ProblemSpec s;
    s.name = to_string(id);
    s.d = 1;
    s.k = 2;
    s.H = P("exp(-x1^2 - x2_1^2)", sv);
    s.sigma_tilde = {{P("0", sv), P("1", sv)}};
    VarSet x2only = sv;
    x2only.reset(coeffex::slot::x1);
    const VarSet yz = gv & ~sv;
    if (id == BenchmarkId::BM3_x1_free) {
        s.phi = {P("1", sv), P("0", sv)};
        s.b_tilde = {P("-0.2*x2_1", sv)};
        s.f = P("-y + 0.5*z_1 + cos(x2_1)", gv);
        s.separable = SeparableGenerator{P("1", sv), P("cos(x2_1)", x2only), P("-y + 0.5*z_1", yz)};
        s.bounds = Bounds{0.25, 1.0, 1.0, 2};
        return s;
    }
    const std::string g = id == BenchmarkId::BM1_tanh_fast ? "tanh(x1)" : "sin(x1)";
    s.phi = {P("sqrt(2/(2+" + g + "))", sv), P("0", sv)};
    s.b_tilde = {P(g, sv)};
    s.f = P(g + "*cos(x2_1) - y + 0.5*z_1", gv);
    s.separable = SeparableGenerator{P(g, sv), P("cos(x2_1)", x2only), P("-y + 0.5*z_1", yz)};
    s.bounds = Bounds{0.25, 2.0, 1.0, 2};
    return s;
}

ProblemSpec problem_from_toml(const std::string& text) {
    const toml::Document doc = toml::parse(text);
    ProblemSpec s;
    s.name = doc.get_string("name", std::string("custom"));
    s.d = static_cast<int>(doc.get_int("d"));
    s.k = static_cast<int>(doc.get_int("k", s.d + 1));
    if (s.d < 1 || s.d > coeffex::kMaxSlowDim) throw Error(ErrorKind::Config, "d out of range");
    const VarSet sv = coeffex::space_vars(s.d);
    const VarSet gv = coeffex::generator_vars(s.d);
    for (const auto& src : doc.get_strings("phi")) s.phi.push_back(coeffex::parse_or_throw(src, sv, "phi"));
    for (const auto& src : doc.get_strings("b_tilde")) s.b_tilde.push_back(coeffex::parse_or_throw(src, sv, "b_tilde"));
    for (const auto& row : doc.at("sigma_tilde").as_array("sigma_tilde")) {
        std::vector<Expr> r;
        for (const auto& v : row.as_array("sigma_tilde")) {
            r.push_back(coeffex::parse_or_throw(v.as_string("sigma_tilde"), sv, "sigma_tilde"));
        }
        s.sigma_tilde.push_back(std::move(r));
    }
    s.f = coeffex::parse_or_throw(doc.get_string("f"), gv, "f");
    s.H = coeffex::parse_or_throw(doc.get_string("H"), sv, "H");
    s.bounds.lambda = doc.get_double("lambda");
    s.bounds.C1 = doc.get_double("C1");
    s.bounds.K = doc.get_double("K");
    s.bounds.p = static_cast<int>(doc.get_int("p"));
    if (doc.contains("f_separable")) {
        const auto parts = doc.get_strings("f_separable");
        if (parts.size() != 3) throw Error(ErrorKind::Config, "f_separable needs [g, h, ell]");
        s.separable = SeparableGenerator{coeffex::parse_or_throw(parts[0], sv, "f_separable g"),
                                         coeffex::parse_or_throw(parts[1], sv, "f_separable h"),
                                         coeffex::parse_or_throw(parts[2], gv, "f_separable ell")};
    }
    try {
        s.check_structure();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    return s;
}

ProblemSpec load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return problem_from_toml(ss.str());
}

std::string problem_to_toml(const ProblemSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    auto list = [&](const std::vector<Expr>& v) {
        os << "[";
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << quote(v[i]);
        os << "]";
    };
    os << "name = \"" << spec.name << "\"\n";
    os << "d = " << spec.d << "\nk = " << spec.k << "\n";
    os << "phi = ";
    list(spec.phi);
    os << "\nb_tilde = ";
    list(spec.b_tilde);
    os << "\nsigma_tilde = [";
    for (std::size_t i = 0; i < spec.sigma_tilde.size(); ++i) {
        os << (i ? ", " : "");
        list(spec.sigma_tilde[i]);
    }
    os << "]\n";
    os << "f = " << quote(spec.f) << "\n";
    os << "H = " << quote(spec.H) << "\n";
    if (spec.separable) {
        os << "f_separable = ";
        list({spec.separable->g, spec.separable->h, spec.separable->ell});
        os << "\n";
    }
    os << "lambda = " << spec.bounds.lambda << "\nC1 = " << spec.bounds.C1 << "\nK = " << spec.bounds.K
       << "\np = " << spec.bounds.p << "\n";
    return os.str();
}

double sampled_phi_max(const ProblemSpec& spec, const Vec& x2, double x1_range, int samples) {
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double x1 = -x1_range + 2.0 * x1_range * i / std::max(1, samples - 1);
        const Env env = space_env(x1, x2);
        double sq = 0.0;
        for (const auto& e : spec.phi) {
            const double v = coeffex::eval_or_throw(e, env);
            sq += v * v;
        }
        best = std::max(best, std::sqrt(sq));
    }
    return best;
}

}  // namespace homog
