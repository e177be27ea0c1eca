#include "jointcrm/optimize.hpp"

#include "jointcrm/errors.hpp"
#include "jointcrm/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace jcrm {

double to_internal(ParamTransform t, double value) {
    switch (t) {
        case ParamTransform::Identity: return value;
        case ParamTransform::Log:
            if (!(value > 0.0)) throw DomainError("to_internal: log transform needs a positive value");
            return std::log(value);
        case ParamTransform::Atanh:
            if (!(std::abs(value) < 1.0)) throw DomainError("to_internal: atanh transform needs |value| < 1");
            return std::atanh(value);
    }
    return value;
}

double from_internal(ParamTransform t, double internal) {
    switch (t) {
        case ParamTransform::Identity: return internal;
        case ParamTransform::Log: return std::exp(internal);
        case ParamTransform::Atanh: return std::tanh(internal);
    }
    return internal;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Box {
    std::vector<double> lo, hi;

    Box(const OptimizerSpec& spec, std::size_t n) : lo(n, -kInf), hi(n, kInf) {
        if (!spec.lower.empty()) {
            if (spec.lower.size() != n) throw DomainError("minimize: lower bound size mismatch");
            lo = spec.lower;
        }
        if (!spec.upper.empty()) {
            if (spec.upper.size() != n) throw DomainError("minimize: upper bound size mismatch");
            hi = spec.upper;
        }
    }
    void project(std::vector<double>& x) const {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    }
    bool blocked(std::size_t i, double xi, double gi) const {
        return (xi <= lo[i] && gi > 0.0) || (xi >= hi[i] && gi < 0.0);
    }
};

struct Counter {
    const ObjectiveWithGradient& f;
    int evaluations = 0;
    double operator()(const std::vector<double>& x, std::vector<double>& g) {
        ++evaluations;
        std::fill(g.begin(), g.end(), 0.0);
        return f(x, g);
    }
};

double scale_of(double f) { return std::max(std::abs(f), 1.0); }

MinimizeResult bfgs(const ObjectiveWithGradient& objective, std::vector<double> x,
                    const OptimizerSpec& spec, const Box& box) {
    const std::size_t n = x.size();
    Counter eval{objective};
    box.project(x);
    std::vector<double> g(n), gNew(n), xNew(n);
    double f = eval(x, g);
    MinimizeResult res{x, f, false, 0, eval.evaluations, 0};
    if (!std::isfinite(f)) return res;

    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    bool scaled = false;
    Eigen::VectorXd d(static_cast<Eigen::Index>(n));

    for (int iter = 0; iter < spec.maxIterations; ++iter) {
        res.iterations = iter;
        std::vector<bool> active(n, false);
        double pgNorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            active[i] = box.blocked(i, x[i], g[i]);
            if (!active[i]) pgNorm = std::max(pgNorm, std::abs(g[i]));
        }
        if (pgNorm <= spec.gradientTolerance) {
            res.converged = true;
            break;
        }
        if (eval.evaluations >= spec.maxEvaluations) break;

        d.setZero();
        for (std::size_t i = 0; i < n; ++i) {
            if (active[i]) continue;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (!active[j]) s -= h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * g[j];
            }
            d(static_cast<Eigen::Index>(i)) = s;
        }
        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i) slope += g[i] * d(static_cast<Eigen::Index>(i));
        if (!(slope < 0.0)) {
            h.setIdentity();
            scaled = false;
            for (std::size_t i = 0; i < n; ++i) d(static_cast<Eigen::Index>(i)) = active[i] ? 0.0 : -g[i];
            slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) slope += g[i] * d(static_cast<Eigen::Index>(i));
        }
        // Reduction predicted by the quadratic model, as in relative function convergence.
        const double predicted = -0.5 * slope;
        if (scaled && predicted <= spec.relativeTolerance * scale_of(f)) {
            res.converged = true;
            break;
        }
        const double dNorm = d.cwiseAbs().maxCoeff();
        if (dNorm > spec.maxStep) d *= spec.maxStep / dNorm;

        // Backtracking along the projected path with an Armijo condition.
        double alpha = 1.0;
        double fNew = kInf;
        bool accepted = false;
        for (int k = 0; k < 60 && eval.evaluations < spec.maxEvaluations; ++k) {
            for (std::size_t i = 0; i < n; ++i) xNew[i] = x[i] + alpha * d(static_cast<Eigen::Index>(i));
            box.project(xNew);
            double decrease = 0.0;
            for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (xNew[i] - x[i]);
            fNew = eval(xNew, gNew);
            if (std::isfinite(fNew) && fNew <= f + 1e-4 * decrease) {
                accepted = true;
                break;
            }
            alpha *= (std::isfinite(fNew) ? 0.5 : 0.1);
        }
        if (!accepted) {
            res.converged = predicted <= 1e-8 * scale_of(f);
            break;
        }

        Eigen::VectorXd s(static_cast<Eigen::Index>(n)), y(static_cast<Eigen::Index>(n));
        double stepRatio = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s(static_cast<Eigen::Index>(i)) = xNew[i] - x[i];
            y(static_cast<Eigen::Index>(i)) = gNew[i] - g[i];
            stepRatio = std::max(stepRatio, std::abs(xNew[i] - x[i]) / std::max(std::abs(xNew[i]), 1.0));
        }
        const double reduction = f - fNew;
        const double fOld = f;
        x = xNew;
        g = gNew;
        f = fNew;
        res.iterations = iter + 1;

        if (reduction <= spec.relativeTolerance * scale_of(fOld) || stepRatio <= spec.stepTolerance) {
            res.converged = true;
            break;
        }

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                h *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            Eigen::VectorXd hy = h * y;
            const double yhy = y.dot(hy);
            h += ((1.0 + rho * yhy) * rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
        }
    }
    res.argmin = x;
    res.value = f;
    res.evaluations = eval.evaluations;
    return res;
}

MinimizeResult run_all(const ObjectiveWithGradient& fg, std::vector<double> start,
                       const OptimizerSpec& spec) {
    const std::size_t n = start.size();
    const Box box(spec, n);
    box.project(start);
    std::vector<double> g0(n);
    const double f0 = fg(start, g0);
    if (!std::isfinite(f0)) throw NonFiniteObjective("minimize: objective is not finite at the start point");

    const Objective valueOnly = [&fg, n](std::span<const double> x) {
        std::vector<double> g(n);
        return fg(x, g);
    };

    MinimizeResult best{start, f0, false, 0, 1, 0};
    int totalEvaluations = 1;
    auto consider = [&best](const MinimizeResult& r) {
        if (std::isfinite(r.value) && (r.value < best.value || (r.value == best.value && r.converged))) {
            const int evals = best.evaluations;
            best = r;
            best.evaluations = evals;
        }
    };

    RngStream jitter(spec.restartSeed, 0);
    for (int attempt = 0; attempt <= spec.restartCount; ++attempt) {
        std::vector<double> x0 = start;
        if (attempt > 0) {
            for (auto& v : x0) v += spec.restartJitter * jitter.normal();
            box.project(x0);
        }
        MinimizeResult r = bfgs(fg, x0, spec, box);
        totalEvaluations += r.evaluations;
        r.restartsUsed = attempt;
        if (!r.converged && spec.polishEvaluations > 0) {
            MinimizeResult p = nelder_mead(valueOnly, r.argmin, spec, spec.polishEvaluations);
            totalEvaluations += p.evaluations;
            if (p.value <= r.value) {
                p.iterations += r.iterations;
                p.restartsUsed = attempt;
                r = p;
            }
        }
        consider(r);
        if (best.converged) break;
    }
    best.evaluations = totalEvaluations;
    return best;
}

}  // namespace

MinimizeResult nelder_mead(const Objective& objective, std::vector<double> start,
                           const OptimizerSpec& spec, int maxEvaluations) {
    const std::size_t n = start.size();
    const Box box(spec, n);
    box.project(start);
    int evals = 0;
    auto f = [&](std::vector<double>& x) {
        box.project(x);
        ++evals;
        const double v = objective(x);
        return std::isfinite(v) ? v : kInf;
    };

    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    values[0] = f(simplex[0]);
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = simplex[i + 1];
        const double step = 0.1 * std::max(std::abs(v[i]), 1.0);
        v[i] += (v[i] + step <= box.hi[i]) ? step : -step;
        values[i + 1] = f(v);
    }

    // Dimension-adaptive coefficients.
    const double dim = static_cast<double>(n);
    const double alpha = 1.0, beta = 1.0 + 2.0 / dim, gamma = 0.75 - 0.5 / dim, delta = 1.0 - 1.0 / dim;
    std::vector<std::size_t> order(n + 1);
    bool converged = false;
    int iterations = 0;

    while (evals < maxEvaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t bestI = order.front(), worstI = order.back(), secondI = order[n - 1];

        double xSpread = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                xSpread = std::max(xSpread, std::abs(simplex[k][i] - simplex[bestI][i]) /
                                                std::max(std::abs(simplex[bestI][i]), 1.0));
            }
        }
        if (values[worstI] - values[bestI] <= spec.relativeTolerance * scale_of(values[bestI]) &&
            xSpread <= 1e3 * spec.stepTolerance) {
            converged = true;
            break;
        }
        ++iterations;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[order[k]][i] / dim;
        }
        auto along = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (simplex[worstI][i] - centroid[i]);
            return p;
        };

        auto reflected = along(-alpha);
        const double fr = f(reflected);
        if (fr < values[bestI]) {
            auto expanded = along(-alpha * beta);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[worstI] = expanded;
                values[worstI] = fe;
            } else {
                simplex[worstI] = reflected;
                values[worstI] = fr;
            }
            continue;
        }
        if (fr < values[secondI]) {
            simplex[worstI] = reflected;
            values[worstI] = fr;
            continue;
        }
        const bool outside = fr < values[worstI];
        auto contracted = along(outside ? -alpha * gamma : gamma);
        const double fc = f(contracted);
        if (fc < std::min(fr, values[worstI])) {
            simplex[worstI] = contracted;
            values[worstI] = fc;
            continue;
        }
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == bestI) continue;
            for (std::size_t i = 0; i < n; ++i) {
                simplex[k][i] = simplex[bestI][i] + delta * (simplex[k][i] - simplex[bestI][i]);
            }
            values[k] = f(simplex[k]);
        }
    }
    const auto bestIt = std::min_element(values.begin(), values.end());
    const auto bestIdx = static_cast<std::size_t>(bestIt - values.begin());
    return {simplex[bestIdx], *bestIt, converged, iterations, evals, 0};
}

MinimizeResult minimize(const ObjectiveWithGradient& objective, std::vector<double> start,
                        const OptimizerSpec& spec) {
    return run_all(objective, std::move(start), spec);
}

MinimizeResult minimize(const Objective& objective, std::vector<double> start, const OptimizerSpec& spec) {
    const std::size_t n = start.size();
    const Box box(spec, n);
    const ObjectiveWithGradient withGradient = [&objective, &box, n](std::span<const double> xs,
                                                                      std::span<double> grad) {
        std::vector<double> x(xs.begin(), xs.end());
        const double fx = objective(x);
        if (!std::isfinite(fx)) return fx;
        for (std::size_t i = 0; i < n; ++i) {
            const double h = 1e-6 * std::max(std::abs(x[i]), 1.0);
            const double up = std::min(x[i] + h, box.hi[i]);
            const double dn = std::max(x[i] - h, box.lo[i]);
            std::vector<double> xp = x, xm = x;
            xp[i] = up;
            xm[i] = dn;
            const double fp = up == x[i] ? fx : objective(xp);
            const double fm = dn == x[i] ? fx : objective(xm);
            grad[i] = (std::isfinite(fp) && std::isfinite(fm)) ? (fp - fm) / (up - dn) : 0.0;
        }
        return fx;
    };
    return run_all(withGradient, std::move(start), spec);
}

}  // namespace jcrm
