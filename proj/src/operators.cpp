#include "gprc/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gprc {

namespace {

double poisson_source(const Eigen::VectorXd& x) {
    if (x.size() != 2) throw std::invalid_argument("poisson_g: expects 2D input");
    const double x1 = x[0], x2 = x[1];
    return std::exp(-x1) * (x1 - 2.0 + x2 * x2 * x2 + 6.0 * x2);
}

std::function<double(const Eigen::VectorXd&)> lookup_builtin(const std::string& name) {
    if (name == "poisson_g") return poisson_source;
    throw std::invalid_argument("ScalarField: unknown builtin field '" + name + "'");
}

}  // namespace

ScalarField ScalarField::constant(double value) {
    return ScalarField([value](const Eigen::VectorXd&) { return value; },
                       nlohmann::json{{"type", "constant"}, {"value", value}});
}

ScalarField ScalarField::builtin(const std::string& name) {
    return ScalarField(lookup_builtin(name), nlohmann::json{{"type", "builtin"}, {"name", name}});
}

ScalarField ScalarField::grid1d(std::vector<double> points, std::vector<double> values) {
    if (points.size() != values.size() || points.size() < 2) {
        throw std::invalid_argument("ScalarField::grid1d: need >= 2 matching points/values");
    }
    if (!std::is_sorted(points.begin(), points.end())) {
        throw std::invalid_argument("ScalarField::grid1d: points must be sorted ascending");
    }
    nlohmann::json desc{{"type", "grid1d"}, {"points", points}, {"values", values}};
    auto pts = std::make_shared<std::vector<double>>(std::move(points));
    auto val = std::make_shared<std::vector<double>>(std::move(values));
    auto fn = [pts, val](const Eigen::VectorXd& x) {
        if (x.size() != 1) throw std::invalid_argument("grid1d field: expects 1D input");
        const double t = x[0];
        if (t <= pts->front()) return val->front();
        if (t >= pts->back()) return val->back();
        const auto it = std::upper_bound(pts->begin(), pts->end(), t);
        const size_t hi = static_cast<size_t>(it - pts->begin());
        const size_t lo = hi - 1;
        const double w = (t - (*pts)[lo]) / ((*pts)[hi] - (*pts)[lo]);
        return (1.0 - w) * (*val)[lo] + w * (*val)[hi];
    };
    return ScalarField(std::move(fn), std::move(desc));
}

ScalarField ScalarField::custom(std::string label,
                                std::function<double(const Eigen::VectorXd&)> fn) {
    nlohmann::json desc;  // null: not serializable
    (void)label;
    return ScalarField(std::move(fn), std::move(desc));
}

bool ScalarField::serializable() const { return !description_.is_null(); }

nlohmann::json ScalarField::to_json() const {
    if (!serializable()) {
        throw std::runtime_error("ScalarField: custom field is not serializable");
    }
    return description_;
}

ScalarField ScalarField::from_json(const nlohmann::json& j) {
    if (j.is_number()) return constant(j.get<double>());
    if (j.is_string()) return builtin(j.get<std::string>());
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant") return constant(j.at("value").get<double>());
    if (type == "builtin") return builtin(j.at("name").get<std::string>());
    if (type == "grid1d") {
        return grid1d(j.at("points").get<std::vector<double>>(),
                      j.at("values").get<std::vector<double>>());
    }
    throw std::invalid_argument("ScalarField: unknown field type '" + type + "'");
}

LinearOperator::LinearOperator(std::vector<OperatorTerm> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw std::invalid_argument("LinearOperator: needs at least one term");
    const int d = terms_.front().derivative.dim();
    for (const auto& t : terms_) {
        if (t.derivative.dim() != d) {
            throw std::invalid_argument("LinearOperator: mixed term dimensions");
        }
    }
}

LinearOperator LinearOperator::identity(int dim) {
    return LinearOperator({OperatorTerm{ScalarField::constant(1.0), MultiIndex::zero(dim)}});
}

int LinearOperator::max_order() const {
    int m = 0;
    for (const auto& t : terms_) m = std::max(m, t.derivative.total());
    return m;
}

nlohmann::json LinearOperator::to_json() const {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : terms_) {
        terms.push_back({{"coeff", t.coeff.to_json()}, {"orders", t.derivative.orders()}});
    }
    return {{"terms", terms}};
}

LinearOperator LinearOperator::from_json(const nlohmann::json& j) {
    std::vector<OperatorTerm> terms;
    for (const auto& tj : j.at("terms")) {
        terms.push_back(OperatorTerm{ScalarField::from_json(tj.at("coeff")),
                                     MultiIndex(tj.at("orders").get<std::vector<int>>())});
    }
    return LinearOperator(std::move(terms));
}

nlohmann::json AffineConstraint::to_json() const {
    nlohmann::json j = op.to_json();
    j["rhs"] = rhs.to_json();
    return j;
}

AffineConstraint AffineConstraint::from_json(const nlohmann::json& j) {
    LinearOperator op = LinearOperator::from_json(j);
    ScalarField rhs = j.contains("rhs") ? ScalarField::from_json(j.at("rhs"))
                                        : ScalarField::constant(0.0);
    return AffineConstraint{std::move(op), std::move(rhs)};
}

double kernel_rr(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const AffineConstraint& constraint, const KernelHyperparams& hp) {
    double acc = 0.0;
    for (const auto& ti : constraint.op.terms()) {
        const double ci = ti.coeff(x);
        for (const auto& tj : constraint.op.terms()) {
            acc += ci * tj.coeff(x_prime) *
                   se_kernel_derivative(ti.derivative, tj.derivative, x, x_prime, hp);
        }
    }
    return acc;
}

double kernel_ur(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const AffineConstraint& constraint, const KernelHyperparams& hp) {
    const MultiIndex zero = MultiIndex::zero(constraint.dim());
    double acc = 0.0;
    for (const auto& tj : constraint.op.terms()) {
        acc += tj.coeff(x_prime) * se_kernel_derivative(zero, tj.derivative, x, x_prime, hp);
    }
    return acc;
}

double kernel_ru(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const AffineConstraint& constraint, const KernelHyperparams& hp) {
    const MultiIndex zero = MultiIndex::zero(constraint.dim());
    double acc = 0.0;
    for (const auto& ti : constraint.op.terms()) {
        acc += ti.coeff(x) * se_kernel_derivative(ti.derivative, zero, x, x_prime, hp);
    }
    return acc;
}

double kernel_lu(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const DerivativeTarget& target, const KernelHyperparams& hp) {
    return se_kernel_derivative(target.derivative, MultiIndex::zero(target.derivative.dim()), x,
                                x_prime, hp);
}

double kernel_lr(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const DerivativeTarget& target, const AffineConstraint& constraint,
                 const KernelHyperparams& hp) {
    double acc = 0.0;
    for (const auto& tj : constraint.op.terms()) {
        acc += tj.coeff(x_prime) * se_kernel_derivative(target.derivative, tj.derivative, x, x_prime, hp);
    }
    return acc;
}

double kernel_ll(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                 const DerivativeTarget& target, const DerivativeTarget& other,
                 const KernelHyperparams& hp) {
    return se_kernel_derivative(target.derivative, other.derivative, x, x_prime, hp);
}

}  // namespace gprc
