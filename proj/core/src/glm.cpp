#include "fedscore/glm.hpp"

#include <algorithm>
#include <cmath>

#include "fedscore/errors.hpp"

namespace fedscore {

Json DesignEncoding::to_json() const {
    Json j;
    j["columns"] = column_names;
    Json groups_json = Json::array();
    for (const auto& g : groups) {
        Json gj;
        gj["variable"] = g.variable;
        gj["reference"] = g.reference;
        gj["categories"] = g.categories;
        gj["first_column"] = g.first_column;
        groups_json.push_back(std::move(gj));
    }
    j["groups"] = std::move(groups_json);
    return j;
}

DesignEncoding DesignEncoding::from_json(const Json& j) {
    DesignEncoding enc;
    try {
        enc.column_names = j.at("columns").get<std::vector<std::string>>();
        for (const auto& gj : j.at("groups")) {
            DesignEncoding::Group g;
            g.variable = gj.at("variable").get<std::string>();
            g.reference = gj.at("reference").get<std::string>();
            g.categories = gj.at("categories").get<std::vector<std::string>>();
            g.first_column = gj.at("first_column").get<std::size_t>();
            enc.groups.push_back(std::move(g));
        }
    } catch (const Json::exception& e) {
        throw DataError(std::string("design encoding: ") + e.what());
    }
    return enc;
}

DesignEncoding make_encoding(const Schema& schema, const std::vector<std::string>& variables) {
    DesignEncoding enc;
    enc.column_names.push_back("(Intercept)");
    for (const auto& name : variables) {
        const auto& var = schema.variable(name);
        if (var.kind != VariableKind::Categorical)
            throw DataError("encode: variable '" + name + "' is not categorical (bin first)");
        DesignEncoding::Group g;
        g.variable = name;
        g.reference = var.categories.front();
        g.first_column = enc.column_names.size();
        for (std::size_t c = 1; c < var.categories.size(); ++c) {
            g.categories.push_back(var.categories[c]);
            enc.column_names.push_back(name + "=" + var.categories[c]);
        }
        enc.groups.push_back(std::move(g));
    }
    return enc;
}

EncodedData encode(const SiteDataset& data, const std::vector<std::string>& variables) {
    return encode_with(data, make_encoding(data.schema, variables));
}

EncodedData encode_with(const SiteDataset& data, const DesignEncoding& encoding) {
    const std::size_t n = data.n_rows();
    const std::size_t p = encoding.width();
    EncodedData out;
    out.encoding = encoding;
    out.X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    out.X.col(0).setOnes();
    out.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) out.y[static_cast<Eigen::Index>(r)] = data.outcome[r];

    for (const auto& g : encoding.groups) {
        const auto& var = data.schema.variable(g.variable);
        const auto& col = data.categorical_column(g.variable);
        // Map the site's category codes onto the encoding's columns; -1 =
        // reference, -2 = no such column (an unseen-category mismatch).
        std::vector<int> target(var.categories.size(), -2);
        for (std::size_t c = 0; c < var.categories.size(); ++c) {
            const auto& label = var.categories[c];
            if (label == g.reference) {
                target[c] = -1;
                continue;
            }
            auto it = std::find(g.categories.begin(), g.categories.end(), label);
            if (it != g.categories.end())
                target[c] = static_cast<int>(g.first_column +
                                             static_cast<std::size_t>(it - g.categories.begin()));
        }
        for (std::size_t r = 0; r < n; ++r) {
            int t = target[static_cast<std::size_t>(col[r])];
            if (t == -2)
                throw DataError("encode: category '" +
                                var.categories[static_cast<std::size_t>(col[r])] +
                                "' of variable '" + g.variable +
                                "' has no column in the design encoding");
            if (t >= 0) out.X(static_cast<Eigen::Index>(r), t) = 1.0;
        }
    }
    return out;
}

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double softplus(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

double log_likelihood(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y) {
    if (X.cols() != beta.size() || X.rows() != y.size())
        throw DataError("log_likelihood: dimension mismatch");
    const Eigen::VectorXd eta = X * beta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        total += y[i] * eta[i] - softplus(eta[i]);
    return total / static_cast<double>(X.rows());
}

Eigen::VectorXd gradient(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y) {
    if (X.cols() != beta.size() || X.rows() != y.size())
        throw DataError("gradient: dimension mismatch");
    Eigen::VectorXd resid = X * beta;
    for (Eigen::Index i = 0; i < resid.size(); ++i) resid[i] = y[i] - sigmoid(resid[i]);
    return (X.transpose() * resid) / static_cast<double>(X.rows());
}

Eigen::MatrixXd hessian(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y) {
    if (X.cols() != beta.size() || X.rows() != y.size())
        throw DataError("hessian: dimension mismatch");
    Eigen::VectorXd w = X * beta;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double p = sigmoid(w[i]);
        w[i] = p * (1.0 - p);
    }
    Eigen::MatrixXd A = X.transpose() * w.asDiagonal() * X;
    // Symmetrize so H == H' holds bitwise regardless of product blocking.
    Eigen::MatrixXd H = -0.5 * (A + A.transpose()) / static_cast<double>(X.rows());
    return H;
}

Eigen::VectorXd ascent_direction(const Eigen::MatrixXd& H, const Eigen::VectorXd& g) {
    double lambda = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        Eigen::MatrixXd M = -H;
        if (lambda > 0.0) M.diagonal().array() += lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        if (ldlt.info() == Eigen::Success) {
            Eigen::VectorXd d = ldlt.solve(g);
            if (d.allFinite() && g.dot(d) > 0.0) return d;
        }
        lambda = (lambda == 0.0) ? 1e-8 : lambda * 2.0;
        if (lambda > 1e8) break;
    }
    throw NumericError("singular Hessian: no usable Newton direction");
}

FitResult fit_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const FitOptions& options) {
    if (X.rows() != y.size()) throw DataError("fit_mle: X and y row counts differ");
    if (X.rows() == 0) throw DataError("fit_mle: empty data");
    const double ybar = y.mean();
    if (ybar <= 0.0 || ybar >= 1.0)
        throw DataError("fit_mle: single-class outcome");

    FitResult result;
    result.beta = Eigen::VectorXd::Zero(X.cols());
    double ll = log_likelihood(result.beta, X, y);
    Eigen::VectorXd g = gradient(result.beta, X, y);

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        // Exactly stationary (e.g. a balanced intercept-only fit starts at
        // the optimum): no strict ascent direction exists. Anything short of
        // bitwise zero must keep iterating -- a saturated separated fit also
        // drives the gradient toward zero, and stopping early would mask it.
        if (g.cwiseAbs().maxCoeff() == 0.0) {
            result.converged = true;
            break;
        }
        result.iterations = iter;
        const Eigen::MatrixXd H = hessian(result.beta, X, y);
        const Eigen::VectorXd d = ascent_direction(H, g);

        // Armijo backtracking on the average log-likelihood.
        const double slope = g.dot(d);
        double t = 1.0;
        double ll_new = ll;
        Eigen::VectorXd beta_new = result.beta;
        bool accepted = false;
        for (int h = 0; h < 40; ++h) {
            beta_new = result.beta + t * d;
            ll_new = log_likelihood(beta_new, X, y);
            if (ll_new >= ll + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // flat to machine precision

        const double step_inf = (t * d).cwiseAbs().maxCoeff();
        result.beta = beta_new;
        ll = ll_new;
        g = gradient(result.beta, X, y);
        const double grad_inf = g.cwiseAbs().maxCoeff();

        if (result.beta.cwiseAbs().maxCoeff() > 30.0 && grad_inf >= options.grad_tol)
            throw NumericError(
                "quasi-separation: coefficients diverge without reaching stationarity");

        if (step_inf < options.tol && grad_inf < options.grad_tol) {
            result.converged = true;
            break;
        }
    }

    // A cell with no events drives its coefficient toward -inf while the
    // gradient decays to zero, so divergence can look stationary. Any
    // |beta| > 30 on a 0/1 design means an odds ratio beyond e^30: reject
    // it rather than hand callers a numerically "converged" infinity.
    if (result.beta.cwiseAbs().maxCoeff() > 30.0)
        throw NumericError("quasi-separation: coefficients diverge");

    result.log_lik = ll;
    result.grad_norm = g.cwiseAbs().maxCoeff();
    if (!result.converged && result.grad_norm < options.grad_tol)
        result.converged = true;  // line search stalled at stationarity
    return result;
}

}  // namespace fedscore
