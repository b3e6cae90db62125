#include "ser3d/eval.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdio>

#include "ser3d/rng.hpp"

namespace ser3d {

namespace {

// Per-point Gaussian bandwidth by binary search on the Shannon entropy so
// that the conditional distribution matches the target perplexity.
Eigen::MatrixXd conditional_probs(const Eigen::MatrixXd& sq_dist, double perplexity) {
    const Eigen::Index n = sq_dist.rows();
    const double target_entropy = std::log(perplexity);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double beta = 1.0, beta_lo = 0.0, beta_hi = std::numeric_limits<double>::infinity();
        Eigen::VectorXd row(n);
        for (int iter = 0; iter < 64; ++iter) {
            double sum = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                row(j) = j == i ? 0.0 : std::exp(-beta * sq_dist(i, j));
                sum += row(j);
            }
            if (sum <= 0.0) {
                beta_hi = beta;
                beta = 0.5 * (beta_lo + beta);
                continue;
            }
            double entropy = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double pj = row(j) / sum;
                if (pj > 1e-12) entropy -= pj * std::log(pj);
            }
            if (std::abs(entropy - target_entropy) < 1e-5) break;
            if (entropy > target_entropy) {
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
            } else {
                beta_hi = beta;
                beta = 0.5 * (beta_lo + beta);
            }
        }
        const double sum = row.sum();
        if (sum <= 0.0) throw NumericError("tsne: degenerate neighbourhood for point " + std::to_string(i));
        p.row(i) = row.transpose() / sum;
    }
    return p;
}

}  // namespace

TsneResult tsne(const std::vector<std::vector<double>>& features, const TsneOptions& opt) {
    const int n = static_cast<int>(features.size());
    if (n < 4) throw DataError("tsne: need at least 4 points");
    if (n > 5000) throw DataError("tsne: exact O(N^2) variant is capped at 5000 points");
    if (opt.perplexity >= n / 3.0) throw ConfigError("tsne: perplexity must be below N/3");
    const int d = static_cast<int>(features[0].size());

    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = features[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

    Eigen::VectorXd norms = x.rowwise().squaredNorm();
    Eigen::MatrixXd sq_dist = (-2.0 * x * x.transpose());
    sq_dist.colwise() += norms;
    sq_dist.rowwise() += norms.transpose();
    sq_dist = sq_dist.cwiseMax(0.0);
    if (sq_dist.maxCoeff() <= 0.0) throw NumericError("tsne: all points are identical");

    Eigen::MatrixXd p = conditional_probs(sq_dist, opt.perplexity);
    p = ((p + p.transpose()) / (2.0 * n)).eval();  // symmetrize
    p = p.cwiseMax(1e-12);

    Rng rng(opt.seed);
    Eigen::MatrixXd y(n, 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 2; ++j) y(i, j) = rng.normal(0.0, 1e-4);

    Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
    Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
    TsneResult res;

    for (int iter = 0; iter < opt.iters; ++iter) {
        const double exaggeration = iter < opt.exaggeration_iters ? opt.exaggeration : 1.0;
        const double momentum = iter < 250 ? 0.5 : 0.8;

        Eigen::VectorXd ynorm = y.rowwise().squaredNorm();
        Eigen::MatrixXd num = (-2.0 * y * y.transpose());
        num.colwise() += ynorm;
        num.rowwise() += ynorm.transpose();
        num = (1.0 + num.array()).inverse().matrix();  // Student-t kernel
        num.diagonal().setZero();
        const double q_sum = num.sum();

        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, 2);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double q = num(i, j) / q_sum;
                const double coeff = 4.0 * (exaggeration * p(i, j) - q) * num(i, j);
                grad(i, 0) += coeff * (y(i, 0) - y(j, 0));
                grad(i, 1) += coeff * (y(i, 1) - y(j, 1));
            }
        }
        // Per-coordinate adaptive gains: grow while the gradient keeps its
        // sign against the velocity, shrink when it flips.
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 2; ++j) {
                const bool opposed = (grad(i, j) > 0.0) == (velocity(i, j) < 0.0);
                gains(i, j) = opposed ? gains(i, j) + 0.2 : gains(i, j) * 0.8;
                gains(i, j) = std::max(gains(i, j), 0.01);
            }
        velocity = momentum * velocity - opt.learning_rate * gains.cwiseProduct(grad).eval();
        y += velocity;
        y.rowwise() -= y.colwise().mean();  // keep the embedding centred

        if ((iter + 1) % 50 == 0) {
            double kl = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const double q = std::max(num(i, j) / q_sum, 1e-12);
                    kl += p(i, j) * std::log(p(i, j) / q);
                }
            res.kl_history.push_back(kl);
        }
    }

    res.embedding.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) res.embedding[static_cast<std::size_t>(i)] = {y(i, 0), y(i, 1)};
    return res;
}

}  // namespace ser3d
