#include "imret/svm.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace imret {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& v) { return std::sqrt(dot(v.data(), v.data(), v.size())); }

/// Squared-hinge primal objective over two dense class blocks. All
/// per-example sums are accumulated per class and combined with a single
/// addition, which makes every evaluation exactly antisymmetric under a
/// class swap at negated weights.
class SquaredHingeProblem {
public:
    SquaredHingeProblem(std::span<const double> pos, std::size_t n_pos,
                        std::span<const double> neg, std::size_t n_neg, std::size_t dim,
                        double C)
        : pos_(pos.data()), n_pos_(n_pos), neg_(neg.data()), n_neg_(n_neg), dim_(dim),
          C_(C), margin_pos_(n_pos), margin_neg_(n_neg) {}

    std::size_t dim() const { return dim_; }
    int passes() const { return passes_; }

    // f(w); caches margins for the following grad() call.
    double fun(const std::vector<double>& w) {
        ++passes_;
        double loss_pos = 0, loss_neg = 0;
        for (std::size_t i = 0; i < n_pos_; ++i) {
            double z = dot(w.data(), pos_ + i * dim_, dim_); // y=+1
            margin_pos_[i] = z;
            double d = 1 - z;
            if (d > 0) loss_pos += d * d;
        }
        for (std::size_t i = 0; i < n_neg_; ++i) {
            double z = -dot(w.data(), neg_ + i * dim_, dim_); // y=-1
            margin_neg_[i] = z;
            double d = 1 - z;
            if (d > 0) loss_neg += d * d;
        }
        return 0.5 * dot(w.data(), w.data(), dim_) + C_ * (loss_pos + loss_neg);
    }

    // grad f(w) = w + 2C sum_{i active} y_i (z_i - 1) x_i, using the
    // margins cached by fun(w).
    void grad(const std::vector<double>& w, std::vector<double>& g) {
        ++passes_;
        std::vector<double> acc_pos(dim_, 0.0), acc_neg(dim_, 0.0);
        active_pos_.clear();
        active_neg_.clear();
        for (std::size_t i = 0; i < n_pos_; ++i) {
            if (margin_pos_[i] < 1) {
                active_pos_.push_back(i);
                const double* x = pos_ + i * dim_;
                double coef = margin_pos_[i] - 1; // y=+1
                for (std::size_t j = 0; j < dim_; ++j) acc_pos[j] += coef * x[j];
            }
        }
        for (std::size_t i = 0; i < n_neg_; ++i) {
            if (margin_neg_[i] < 1) {
                active_neg_.push_back(i);
                const double* x = neg_ + i * dim_;
                double coef = -(margin_neg_[i] - 1); // y=-1
                for (std::size_t j = 0; j < dim_; ++j) acc_neg[j] += coef * x[j];
            }
        }
        g.resize(dim_);
        for (std::size_t j = 0; j < dim_; ++j)
            g[j] = w[j] + 2 * C_ * (acc_pos[j] + acc_neg[j]);
    }

    // Generalized Hessian-vector product on the active set of the last
    // grad() call: Hs = s + 2C sum_{i active} <x_i, s> x_i.
    void Hv(const std::vector<double>& s, std::vector<double>& hs) {
        ++passes_;
        std::vector<double> acc_pos(dim_, 0.0), acc_neg(dim_, 0.0);
        for (std::size_t i : active_pos_) {
            const double* x = pos_ + i * dim_;
            double xs = dot(x, s.data(), dim_);
            for (std::size_t j = 0; j < dim_; ++j) acc_pos[j] += xs * x[j];
        }
        for (std::size_t i : active_neg_) {
            const double* x = neg_ + i * dim_;
            double xs = dot(x, s.data(), dim_);
            for (std::size_t j = 0; j < dim_; ++j) acc_neg[j] += xs * x[j];
        }
        hs.resize(dim_);
        for (std::size_t j = 0; j < dim_; ++j)
            hs[j] = s[j] + 2 * C_ * (acc_pos[j] + acc_neg[j]);
    }

private:
    const double* pos_;
    std::size_t n_pos_;
    const double* neg_;
    std::size_t n_neg_;
    std::size_t dim_;
    double C_;
    std::vector<double> margin_pos_, margin_neg_; // y_i <w, x_i>
    std::vector<std::size_t> active_pos_, active_neg_;
    int passes_ = 0;
};

// Conjugate gradient for the trust-region subproblem (Steihaug): solves
// H s = -g within ||s|| <= delta. Returns the residual in r.
int trust_region_cg(SquaredHingeProblem& problem, double delta,
                    const std::vector<double>& g, std::vector<double>& s,
                    std::vector<double>& r, int max_passes) {
    const std::size_t n = problem.dim();
    s.assign(n, 0.0);
    r.resize(n);
    std::vector<double> d(n), hd(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = -g[i];
        d[i] = r[i];
    }
    const double cg_tol = 0.1 * norm2(g);
    double rtr = dot(r.data(), r.data(), n);
    int iter = 0;
    while (true) {
        if (std::sqrt(rtr) <= cg_tol) break;
        if (problem.passes() >= max_passes) break;
        ++iter;
        problem.Hv(d, hd);
        double alpha = rtr / dot(d.data(), hd.data(), n);
        for (std::size_t i = 0; i < n; ++i) s[i] += alpha * d[i];
        double snorm = std::sqrt(dot(s.data(), s.data(), n));
        if (snorm > delta) {
            // Walked past the trust region: back up to the boundary.
            for (std::size_t i = 0; i < n; ++i) s[i] -= alpha * d[i];
            double std_ = dot(s.data(), d.data(), n);
            double sts = dot(s.data(), s.data(), n);
            double dtd = dot(d.data(), d.data(), n);
            double dsq = delta * delta;
            double rad = std::sqrt(std_ * std_ + dtd * (dsq - sts));
            double tau = std_ >= 0 ? (dsq - sts) / (std_ + rad) : (rad - std_) / dtd;
            for (std::size_t i = 0; i < n; ++i) {
                s[i] += tau * d[i];
                r[i] -= tau * hd[i];
            }
            break;
        }
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * hd[i];
        double rtr_new = dot(r.data(), r.data(), n);
        double beta = rtr_new / rtr;
        for (std::size_t i = 0; i < n; ++i) d[i] = r[i] + beta * d[i];
        rtr = rtr_new;
    }
    return iter;
}

SvmModel solve(SquaredHingeProblem& problem, const SvmTrainOptions& options) {
    // Trust-region controls as in the classical TRON solver.
    const double eta0 = 1e-4, eta1 = 0.25, eta2 = 0.75;
    const double sigma1 = 0.25, sigma2 = 0.5, sigma3 = 4.0;

    const std::size_t n = problem.dim();
    std::vector<double> w(n, 0.0), w_new(n), g(n), s(n), r(n);

    double f = problem.fun(w);
    problem.grad(w, g);
    double gnorm0 = norm2(g);
    const double stop = options.tolerance * std::max(1.0, gnorm0);
    double delta = gnorm0;
    double gnorm = gnorm0;

    bool first_step = true;
    while (gnorm > stop && problem.passes() < options.max_passes) {
        trust_region_cg(problem, delta, g, s, r, options.max_passes);

        for (std::size_t i = 0; i < n; ++i) w_new[i] = w[i] + s[i];
        double gs = dot(g.data(), s.data(), n);
        double prered = -0.5 * (gs - dot(s.data(), r.data(), n));
        double f_new = problem.fun(w_new);
        double actred = f - f_new;
        double snorm = norm2(s);

        if (first_step) {
            delta = std::min(delta, snorm);
            first_step = false;
        }

        double alpha;
        if (f_new - f - gs <= 0)
            alpha = sigma3;
        else
            alpha = std::max(sigma1, -0.5 * (gs / (f_new - f - gs)));

        if (actred < eta0 * prered)
            delta = std::min(std::max(alpha, sigma1) * snorm, sigma2 * delta);
        else if (actred < eta1 * prered)
            delta = std::max(sigma1 * delta, std::min(alpha * snorm, sigma2 * delta));
        else if (actred < eta2 * prered)
            delta = std::max(sigma1 * delta, std::min(alpha * snorm, sigma3 * delta));
        else
            delta = std::max(delta, std::min(alpha * snorm, sigma3 * delta));

        if (actred > eta0 * prered) {
            std::swap(w, w_new);
            f = f_new;
            problem.grad(w, g);
            gnorm = norm2(g);
        } else {
            // The rejected trial overwrote the cached margins; restore them.
            f = problem.fun(w);
        }

        if (f < -1e32) break;
        if (prered <= 0) break;
        if (std::abs(actred) <= 1e-12 * std::abs(f) && std::abs(prered) <= 1e-12 * std::abs(f))
            break;
    }

    if (gnorm > stop)
        throw ConvergenceError("svm solver: stopped at |g|=" + std::to_string(gnorm) +
                               " above target " + std::to_string(stop) + " after " +
                               std::to_string(problem.passes()) + " passes");

    SvmModel model;
    model.weights = std::move(w);
    return model;
}

} // namespace

SvmModel train_linear_svm(std::span<const double> pos, std::size_t n_pos,
                          std::span<const double> neg, std::size_t n_neg,
                          std::size_t dim, const SvmTrainOptions& options) {
    if (n_pos == 0 || n_neg == 0)
        throw DataError("train_linear_svm: both classes must be non-empty");
    if (pos.size() != n_pos * dim || neg.size() != n_neg * dim)
        throw DataError("train_linear_svm: matrix size does not match dim");
    if (options.C <= 0) throw DataError("train_linear_svm: C must be positive");
    SquaredHingeProblem problem(pos, n_pos, neg, n_neg, dim, options.C);
    return solve(problem, options);
}

SvmModel train_linear_svm(const FeatureSet& pos, const FeatureSet& neg,
                          const SvmTrainOptions& options) {
    if (pos.empty() || neg.empty())
        throw DataError("train_linear_svm: both classes must be non-empty");
    if (pos.dim() != neg.dim())
        throw DataError("train_linear_svm: class dims differ (" + std::to_string(pos.dim()) +
                        " vs " + std::to_string(neg.dim()) + ")");
    return train_linear_svm(pos.data(), pos.size(), neg.data(), neg.size(), pos.dim(),
                            options);
}

double svm_score(const SvmModel& model, std::span<const double> v) {
    if (v.size() != model.weights.size())
        throw DataError("svm_score: vector dim " + std::to_string(v.size()) +
                        " != model dim " + std::to_string(model.weights.size()));
    return dot(model.weights.data(), v.data(), v.size());
}

double svm_objective(std::span<const double> w, std::span<const double> pos,
                     std::size_t n_pos, std::span<const double> neg, std::size_t n_neg,
                     std::size_t dim, double C) {
    SquaredHingeProblem problem(pos, n_pos, neg, n_neg, dim, C);
    std::vector<double> wv(w.begin(), w.end());
    return problem.fun(wv);
}

} // namespace imret
