#include "riskrules/sslr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "riskrules/error.hpp"

namespace riskrules {

namespace {

// Objective increases this small (relative) are indistinguishable from
// floating-point noise in the likelihood sum.
constexpr double kRoundingSlack = 1e-12;

void check_dims(const ModelWeights& m, const Dataset& ds, const SimilarityMatrix& s) {
    if (m.p() != ds.p())
        throw DataError(fmt::format("model has {} coefficients but data has {} features", m.p(), ds.p()));
    if (s.p() != ds.p())
        throw DataError(fmt::format("similarity matrix is {}x{} but data has {} features", s.p(), s.p(), ds.p()));
}

// Cached view of a fitting problem so the solver does not rebuild the label
// vector on every evaluation.
struct Problem {
    const Eigen::MatrixXd& x;
    const Eigen::MatrixXd& s;
    Eigen::VectorXd y;
    double lambda;
    double alpha;
    bool penalize_intercept;

    Problem(const Dataset& ds, const SimilarityMatrix& sim, const SslrConfig& cfg)
        : x(ds.values), s(sim.entries), y(ds.label_vector()), lambda(cfg.lambda), alpha(cfg.alpha),
          penalize_intercept(cfg.penalize_intercept) {}

    Eigen::VectorXd scores(const ModelWeights& m) const {
        return (x * m.coefficients).array() + m.intercept;
    }

    double nll(const Eigen::VectorXd& f) const {
        double total = 0.0;
        for (Eigen::Index d = 0; d < f.size(); ++d) total += softplus(f[d]) - y[d] * f[d];
        return total;
    }

    double quadratic_penalty(const ModelWeights& m) const {
        if (lambda == 0.0 || alpha == 1.0) return 0.0;
        const Eigen::VectorXd r = m.coefficients - s * m.coefficients;
        double q = r.squaredNorm();
        if (penalize_intercept) q += m.intercept * m.intercept;
        return lambda * (1.0 - alpha) / 2.0 * q;
    }

    double l1_penalty(const ModelWeights& m) const {
        if (lambda == 0.0 || alpha == 0.0) return 0.0;
        double a = m.coefficients.lpNorm<1>();
        if (penalize_intercept) a += std::abs(m.intercept);
        return lambda * alpha * a;
    }

    double smooth(const ModelWeights& m) const { return nll(scores(m)) + quadratic_penalty(m); }

    double total(const ModelWeights& m) const { return smooth(m) + l1_penalty(m); }

    Gradient gradient(const ModelWeights& m) const {
        const Eigen::VectorXd f = scores(m);
        Eigen::VectorXd resid(f.size());
        for (Eigen::Index d = 0; d < f.size(); ++d) resid[d] = sigmoid(f[d]) - y[d];
        Gradient g;
        g.intercept = resid.sum();
        g.coefficients = x.transpose() * resid;
        if (lambda != 0.0 && alpha != 1.0) {
            const double c = lambda * (1.0 - alpha);
            const Eigen::VectorXd r = m.coefficients - s * m.coefficients;
            g.coefficients += c * (r - s.transpose() * r);
            if (penalize_intercept) g.intercept += c * m.intercept;
        }
        return g;
    }

    // Largest eigenvalue of A'A/4 + lambda(1-alpha)(I-S)'(I-S), A = [1 X].
    double lipschitz_estimate() const {
        const Eigen::Index p = x.cols();
        const double c = lambda * (1.0 - alpha);
        Eigen::VectorXd v(p + 1);
        for (Eigen::Index i = 0; i <= p; ++i) v[i] = 1.0 + 0.1 * static_cast<double>((i * 7919) % 13);
        v.normalize();
        double eig = 0.0;
        for (int it = 0; it < 100; ++it) {
            const double v0 = v[0];
            const Eigen::VectorXd w = v.tail(p);
            const Eigen::VectorXd av = (x * w).array() + v0;
            Eigen::VectorXd mv(p + 1);
            mv[0] = 0.25 * av.sum();
            mv.tail(p) = 0.25 * (x.transpose() * av);
            if (c != 0.0) {
                const Eigen::VectorXd r = w - s * w;
                mv.tail(p) += c * (r - s.transpose() * r);
                if (penalize_intercept) mv[0] += c * v0;
            }
            const double norm = mv.norm();
            if (!(norm > 0.0)) break;
            const double next = v.dot(mv);
            v = mv / norm;
            if (it > 5 && std::abs(next - eig) <= 1e-6 * std::abs(next)) {
                eig = next;
                break;
            }
            eig = next;
        }
        return std::max(eig, 1e-12);
    }
};

ModelWeights prox_step(const ModelWeights& y, const Gradient& g, double step, const Problem& prob) {
    const double t = step * prob.lambda * prob.alpha;
    ModelWeights z;
    z.coefficients.resize(y.coefficients.size());
    for (Eigen::Index i = 0; i < y.coefficients.size(); ++i)
        z.coefficients[i] = soft_threshold(y.coefficients[i] - step * g.coefficients[i], t);
    const double b = y.intercept - step * g.intercept;
    z.intercept = prob.penalize_intercept ? soft_threshold(b, t) : b;
    return z;
}

double squared_distance(const ModelWeights& a, const ModelWeights& b) {
    const double d0 = a.intercept - b.intercept;
    return d0 * d0 + (a.coefficients - b.coefficients).squaredNorm();
}

double inner(const Gradient& g, const ModelWeights& a, const ModelWeights& b) {
    return g.intercept * (a.intercept - b.intercept) + g.coefficients.dot(a.coefficients - b.coefficients);
}

ModelWeights extrapolate(const ModelWeights& cur, const ModelWeights& prev, double beta) {
    return {cur.intercept + beta * (cur.intercept - prev.intercept),
            cur.coefficients + beta * (cur.coefficients - prev.coefficients)};
}

void require_finite(double v, int iteration) {
    if (!std::isfinite(v))
        throw NumericalError(fmt::format(
            "non-finite objective at iteration {}; check the scaling of the input features", iteration));
}

} // namespace

void validate(const SslrConfig& cfg) {
    if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) throw ValidationError("lambda must be >= 0");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ValidationError("alpha must be in [0,1]");
    if (cfg.max_iterations < 1) throw ValidationError("max_iterations must be positive");
    if (!(cfg.tolerance > 0.0)) throw ValidationError("tolerance must be > 0");
    if (!(cfg.stationarity_tolerance > 0.0)) throw ValidationError("stationarity tolerance must be > 0");
}

double sigmoid(double f) {
    // Saturated tails are held one ulp inside (0,1).
    constexpr double lo = std::numeric_limits<double>::denorm_min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    if (f >= 0.0) return std::min(1.0 / (1.0 + std::exp(-f)), hi);
    const double e = std::exp(f);
    return std::max(e / (1.0 + e), lo);
}

double softplus(double f) {
    if (f > 0.0) return f + std::log1p(std::exp(-f));
    return std::log1p(std::exp(f));
}

double linear_score(const ModelWeights& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (static_cast<std::size_t>(x.size()) != m.p())
        throw DataError(fmt::format("feature vector has {} entries, model expects {}", x.size(), m.p()));
    return m.intercept + m.coefficients.dot(x);
}

double predict_proba(const ModelWeights& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return sigmoid(linear_score(m, x));
}

Eigen::VectorXd predict_proba(const ModelWeights& m, const Dataset& ds) {
    if (m.p() != ds.p())
        throw DataError(fmt::format("model has {} coefficients but data has {} features", m.p(), ds.p()));
    Eigen::VectorXd f = (ds.values * m.coefficients).array() + m.intercept;
    for (Eigen::Index d = 0; d < f.size(); ++d) f[d] = sigmoid(f[d]);
    return f;
}

double negative_log_likelihood(const ModelWeights& m, const Dataset& ds) {
    if (m.p() != ds.p())
        throw DataError(fmt::format("model has {} coefficients but data has {} features", m.p(), ds.p()));
    double total = 0.0;
    for (std::size_t d = 0; d < ds.n(); ++d) {
        const double f = m.intercept + ds.values.row(static_cast<Eigen::Index>(d)).dot(m.coefficients);
        total += softplus(f) - (ds.labels[d] == 1 ? f : 0.0);
    }
    return total;
}

double lasso_objective(const ModelWeights& m, const Dataset& ds, double lambda, bool penalize_intercept) {
    double l1 = m.coefficients.lpNorm<1>();
    if (penalize_intercept) l1 += std::abs(m.intercept);
    return negative_log_likelihood(m, ds) + lambda * l1;
}

double objective(const ModelWeights& m, const Dataset& ds, const SimilarityMatrix& s, const SslrConfig& cfg) {
    check_dims(m, ds, s);
    return Problem(ds, s, cfg).total(m);
}

double smooth_objective(const ModelWeights& m, const Dataset& ds, const SimilarityMatrix& s, const SslrConfig& cfg) {
    check_dims(m, ds, s);
    return Problem(ds, s, cfg).smooth(m);
}

Gradient smooth_gradient(const ModelWeights& m, const Dataset& ds, const SimilarityMatrix& s, const SslrConfig& cfg) {
    check_dims(m, ds, s);
    return Problem(ds, s, cfg).gradient(m);
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

double stationarity_residual(const ModelWeights& m, const Gradient& g, const SslrConfig& cfg) {
    const double t = cfg.lambda * cfg.alpha;
    auto violation = [](double w, double grad, double thr) {
        if (w == 0.0) return std::max(0.0, std::abs(grad) - thr);
        return std::abs(grad + thr * (w > 0.0 ? 1.0 : -1.0));
    };
    double worst = cfg.penalize_intercept ? violation(m.intercept, g.intercept, t) : std::abs(g.intercept);
    double gmax = std::abs(g.intercept);
    for (Eigen::Index i = 0; i < g.coefficients.size(); ++i) {
        worst = std::max(worst, violation(m.coefficients[i], g.coefficients[i], t));
        gmax = std::max(gmax, std::abs(g.coefficients[i]));
    }
    return worst / (1.0 + gmax);
}

SslrFit fit_sslr(const Dataset& ds, const SimilarityMatrix& s, const SslrConfig& cfg,
                 const std::optional<ModelWeights>& init) {
    validate(cfg);
    if (ds.n() == 0) throw DataError("cannot fit an empty dataset");
    if (s.p() != ds.p())
        throw DataError(fmt::format("similarity matrix is {}x{} but data has {} features", s.p(), s.p(), ds.p()));
    ModelWeights x = init.value_or(ModelWeights::zeros(ds.p()));
    check_dims(x, ds, s);

    const Problem prob(ds, s, cfg);
    const double lipschitz = prob.lipschitz_estimate();
    if (!std::isfinite(lipschitz))
        throw NumericalError("non-finite curvature estimate; check the scaling of the input features");
    double step = 1.0 / lipschitz;

    SslrFit fit;
    double fx = prob.total(x);
    require_finite(fx, 0);
    Gradient gx = prob.gradient(x);
    ModelWeights prev = x;
    double theta = 1.0;
    bool momentum = false;

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        fit.iterations = it;
        ModelWeights y = momentum ? extrapolate(x, prev, (theta - 1.0) / ((1.0 + std::sqrt(1.0 + 4.0 * theta * theta)) / 2.0)) : x;
        Gradient gy = momentum ? prob.gradient(y) : gx;
        double sy = prob.smooth(y);
        require_finite(sy, it);

        ModelWeights z;
        double fz = 0.0;
        for (int attempt = 0;; ++attempt) {
            z = prox_step(y, gy, step, prob);
            const double sz = prob.smooth(z);
            if (std::isfinite(sz) &&
                sz <= sy + inner(gy, z, y) + squared_distance(z, y) / (2.0 * step) + 1e-12 * std::abs(sy))
            {
                fz = sz + prob.l1_penalty(z);
                break;
            }
            if (attempt > 200) require_finite(std::numeric_limits<double>::quiet_NaN(), it);
            step /= 2.0;
        }

        if (momentum && fz > fx) {
            // Extrapolation did not pay off: restart from the current iterate.
            momentum = false;
            theta = 1.0;
            --it;
            continue;
        }

        const double fprev = fx;
        if (fz > fx + kRoundingSlack * std::max(1.0, std::abs(fx))) {
            // A plain step with a line-searched step size descends in exact
            // arithmetic; anything beyond rounding means the data is unusable.
            fit.converged = stationarity_residual(x, gx, cfg) <= cfg.stationarity_tolerance;
            break;
        }
        prev = x;
        x = std::move(z);
        fx = fz;
        require_finite(fx, it);
        gx = prob.gradient(x);
        fit.objective_trace.push_back(fx);

        const double decrease = (fprev - fx) / std::max(1.0, std::abs(fprev));
        if (decrease < cfg.tolerance && stationarity_residual(x, gx, cfg) <= cfg.stationarity_tolerance) {
            fit.converged = true;
            break;
        }
        const double next_theta = (1.0 + std::sqrt(1.0 + 4.0 * theta * theta)) / 2.0;
        theta = next_theta;
        momentum = true;
    }

    fit.weights = std::move(x);
    fit.objective = fx;
    return fit;
}

} // namespace riskrules
