#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fedscore/dataset.hpp"

namespace fedscore {

// Column layout of the logistic design matrix: one intercept column first,
// then c-1 indicator columns per variable (reference = first category).
struct DesignEncoding {
    struct Group {
        std::string variable;
        std::string reference;
        std::vector<std::string> categories;  // non-reference, in schema order
        std::size_t first_column = 0;
    };

    std::vector<std::string> column_names;  // [0] is "(Intercept)"
    std::vector<Group> groups;

    std::size_t width() const { return column_names.size(); }

    Json to_json() const;
    static DesignEncoding from_json(const Json& j);
};

struct EncodedData {
    Eigen::MatrixXd X;  // n x p, first column all ones
    Eigen::VectorXd y;  // n, entries in {0,1}
    DesignEncoding encoding;

    std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
};

// Encoding implied by the dataset's schema over `variables` (all categorical).
DesignEncoding make_encoding(const Schema& schema, const std::vector<std::string>& variables);

// Dummy-code every row of `data` (callers subset by split first).
EncodedData encode(const SiteDataset& data, const std::vector<std::string>& variables);

// Dummy-code against a fixed external encoding; a row whose category has no
// column and is not the reference is an error (cutoffs/schema mismatch).
EncodedData encode_with(const SiteDataset& data, const DesignEncoding& encoding);

// Numerically stable helpers: sigmoid and log(1 + e^t).
double sigmoid(double t);
double softplus(double t);

// Average log-likelihood (1/n) sum_i [ y_i x_i'b - log(1 + e^{x_i'b}) ].
double log_likelihood(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y);

// Average gradient (1/n) X' (y - p(beta)).
Eigen::VectorXd gradient(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y);

// Average Hessian -(1/n) X' diag(p(1-p)) X; exactly symmetric, negative
// semidefinite (the log-likelihood is concave).
Eigen::MatrixXd hessian(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y);

struct FitOptions {
    double tol = 1e-8;       // sup-norm of the Newton step
    double grad_tol = 1e-6;  // sup-norm of the gradient
    int max_iter = 100;
};

struct FitResult {
    Eigen::VectorXd beta;
    bool converged = false;
    int iterations = 0;
    double log_lik = 0.0;
    double grad_norm = 0.0;  // sup-norm at the returned beta
};

// Newton-Raphson with Armijo step-halving on the average log-likelihood.
// Throws DataError on a single-class outcome, NumericError on
// quasi-separation (coefficients run away without stationarity) or an
// unsalvageably singular Hessian.
FitResult fit_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const FitOptions& options = {});

// Uphill Newton direction for a concave objective with Hessian H and
// gradient g: solves (-H + lambda I) d = g, escalating lambda from 0 until
// the direction is finite and ascending. Throws NumericError if none exists.
Eigen::VectorXd ascent_direction(const Eigen::MatrixXd& H, const Eigen::VectorXd& g);

}  // namespace fedscore
