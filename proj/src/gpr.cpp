#include "gprc/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "gprc/csv.hpp"
#include "gprc/errors.hpp"

namespace gprc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const std::vector<double> kJitterLadder = {1e-10, 1e-8, 1e-6};

// Derivative kernels covering every block of the joint [u; r] covariance for one
// operator and hyperparameter setting, compiled once and evaluated on all pairs.
struct CompiledKernels {
    DerivativeKernel kuu;
    std::vector<DerivativeKernel> kur;               // (0, alpha_j), one per term
    std::vector<std::vector<DerivativeKernel>> krr;  // (alpha_i, alpha_j)

    CompiledKernels(const AffineConstraint* constraint, const KernelHyperparams& hp)
        : kuu(MultiIndex::zero(hp.dim()), MultiIndex::zero(hp.dim()), hp) {
        if (!constraint) return;
        const MultiIndex zero = MultiIndex::zero(hp.dim());
        const auto& terms = constraint->op.terms();
        kur.reserve(terms.size());
        for (const auto& t : terms) kur.emplace_back(zero, t.derivative, hp);
        krr.reserve(terms.size());
        for (const auto& ti : terms) {
            std::vector<DerivativeKernel> row;
            row.reserve(terms.size());
            for (const auto& tj : terms) row.emplace_back(ti.derivative, tj.derivative, hp);
            krr.push_back(std::move(row));
        }
    }
};

// Coefficients c_i(x_p), one row per operator term.
Eigen::MatrixXd coefficient_matrix(const AffineConstraint& constraint, const Eigen::MatrixXd& X) {
    const auto& terms = constraint.op.terms();
    Eigen::MatrixXd C(terms.size(), X.rows());
    for (size_t i = 0; i < terms.size(); ++i) {
        for (Eigen::Index p = 0; p < X.rows(); ++p) {
            C(static_cast<Eigen::Index>(i), p) = terms[i].coeff(X.row(p).transpose());
        }
    }
    return C;
}

void check_finite(double v, Eigen::Index p, Eigen::Index q, const Eigen::MatrixXd& X,
                  const char* block) {
    if (std::isfinite(v)) return;
    std::ostringstream msg;
    msg << "non-finite " << block << " covariance between point " << p << " (" << X.row(p)
        << ") and point " << q << " (" << X.row(q) << ")";
    throw NumericError(msg.str());
}

struct Assembled {
    Eigen::MatrixXd K;        // kernel blocks + noise diagonal, no jitter
    Eigen::MatrixXd Kkernel;  // kernel blocks only (d K / d log gamma_alpha = 2 Kkernel)
};

Assembled assemble_value(const Eigen::MatrixXd& X, const AffineConstraint* constraint,
                         const KernelHyperparams& hp, const NoiseConfig& noise) {
    hp.validate();
    noise.validate();
    if (X.cols() != hp.dim()) {
        throw std::invalid_argument("assemble_joint_covariance: X dimension mismatch");
    }
    const Eigen::Index n = X.rows();
    const Eigen::Index dim = constraint ? 2 * n : n;
    const CompiledKernels ck(constraint, hp);

    Assembled out;
    out.Kkernel.setZero(dim, dim);

    for (Eigen::Index p = 0; p < n; ++p) {
        for (Eigen::Index q = p; q < n; ++q) {
            const double v = ck.kuu.value(X.row(p).transpose(), X.row(q).transpose());
            check_finite(v, p, q, X, "u-u");
            out.Kkernel(p, q) = v;
            out.Kkernel(q, p) = v;
        }
    }

    if (constraint) {
        const Eigen::MatrixXd C = coefficient_matrix(*constraint, X);
        const size_t nterms = constraint->op.terms().size();
        for (Eigen::Index p = 0; p < n; ++p) {
            const Eigen::VectorXd xp = X.row(p).transpose();
            for (Eigen::Index q = 0; q < n; ++q) {
                const Eigen::VectorXd xq = X.row(q).transpose();
                double v = 0.0;
                for (size_t j = 0; j < nterms; ++j) {
                    v += C(static_cast<Eigen::Index>(j), q) * ck.kur[j].value(xp, xq);
                }
                check_finite(v, p, q, X, "u-r");
                out.Kkernel(p, n + q) = v;
                out.Kkernel(n + q, p) = v;
            }
        }
        for (Eigen::Index p = 0; p < n; ++p) {
            const Eigen::VectorXd xp = X.row(p).transpose();
            for (Eigen::Index q = p; q < n; ++q) {
                const Eigen::VectorXd xq = X.row(q).transpose();
                double v = 0.0;
                for (size_t i = 0; i < nterms; ++i) {
                    for (size_t j = 0; j < nterms; ++j) {
                        v += C(static_cast<Eigen::Index>(i), p) * C(static_cast<Eigen::Index>(j), q) *
                             ck.krr[i][j].value(xp, xq);
                    }
                }
                check_finite(v, p, q, X, "r-r");
                out.Kkernel(n + p, n + q) = v;
                out.Kkernel(n + q, n + p) = v;
            }
        }
    }

    out.K = out.Kkernel;
    out.K.diagonal().head(n).array() += noise.sigma_u2;
    if (constraint) out.K.diagonal().tail(n).array() += noise.sigma_r2;
    return out;
}

// d K / d log(lengthscales[d]) for every optimized lengthscale.
std::vector<Eigen::MatrixXd> assemble_lengthscale_grads(const Eigen::MatrixXd& X,
                                                        const AffineConstraint* constraint,
                                                        const KernelHyperparams& hp) {
    const Eigen::Index n = X.rows();
    const Eigen::Index dim = constraint ? 2 * n : n;
    const int D = hp.dim();
    const CompiledKernels ck(constraint, hp);
    Eigen::MatrixXd C;
    size_t nterms = 0;
    if (constraint) {
        C = coefficient_matrix(*constraint, X);
        nterms = constraint->op.terms().size();
    }

    std::vector<Eigen::MatrixXd> grads(static_cast<size_t>(D));
    for (int d = 0; d < D; ++d) {
        Eigen::MatrixXd& G = grads[static_cast<size_t>(d)];
        G.setZero(dim, dim);
        for (Eigen::Index p = 0; p < n; ++p) {
            const Eigen::VectorXd xp = X.row(p).transpose();
            for (Eigen::Index q = p; q < n; ++q) {
                const double v = ck.kuu.dlog_lengthscale(d, xp, X.row(q).transpose());
                G(p, q) = v;
                G(q, p) = v;
            }
        }
        if (!constraint) continue;
        for (Eigen::Index p = 0; p < n; ++p) {
            const Eigen::VectorXd xp = X.row(p).transpose();
            for (Eigen::Index q = 0; q < n; ++q) {
                const Eigen::VectorXd xq = X.row(q).transpose();
                double v = 0.0;
                for (size_t j = 0; j < nterms; ++j) {
                    v += C(static_cast<Eigen::Index>(j), q) * ck.kur[j].dlog_lengthscale(d, xp, xq);
                }
                G(p, n + q) = v;
                G(n + q, p) = v;
            }
        }
        for (Eigen::Index p = 0; p < n; ++p) {
            const Eigen::VectorXd xp = X.row(p).transpose();
            for (Eigen::Index q = p; q < n; ++q) {
                const Eigen::VectorXd xq = X.row(q).transpose();
                double v = 0.0;
                for (size_t i = 0; i < nterms; ++i) {
                    for (size_t j = 0; j < nterms; ++j) {
                        v += C(static_cast<Eigen::Index>(i), p) * C(static_cast<Eigen::Index>(j), q) *
                             ck.krr[i][j].dlog_lengthscale(d, xp, xq);
                    }
                }
                G(n + p, n + q) = v;
                G(n + q, n + p) = v;
            }
        }
    }
    return grads;
}

double nlml_from_chol(const detail::LadderChol& chol, const Eigen::VectorXd& yjoint) {
    const Eigen::MatrixXd L = chol.llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += 2.0 * std::log(L(i, i));
    const double quad = yjoint.dot(chol.llt.solve(yjoint));
    return 0.5 * logdet + 0.5 * quad +
           0.5 * static_cast<double>(yjoint.size()) * std::log(2.0 * std::numbers::pi);
}

const AffineConstraint* ptr(const std::optional<AffineConstraint>& c) {
    return c ? &(*c) : nullptr;
}

Eigen::VectorXd joint_observations(const Dataset& dataset,
                                   const std::optional<AffineConstraint>& constraint) {
    if (!constraint) return dataset.y;
    Eigen::VectorXd yj(2 * dataset.n());
    yj.head(dataset.n()) = dataset.y;
    for (int i = 0; i < dataset.n(); ++i) {
        yj[dataset.n() + i] = constraint->rhs(dataset.X.row(i).transpose());
    }
    return yj;
}

// Optimized parameters in log space: [log gamma_alpha, log gl_1..D, log sigma_u2?].
struct ParamCodec {
    int D;
    bool train_noise;

    int size() const { return 1 + D + (train_noise ? 1 : 0); }

    Eigen::VectorXd encode(const KernelHyperparams& hp, double sigma_u2) const {
        Eigen::VectorXd t(size());
        t[0] = std::log(hp.gamma_alpha);
        for (int d = 0; d < D; ++d) t[1 + d] = std::log(hp.lengthscales[d]);
        if (train_noise) t[1 + D] = std::log(sigma_u2);
        return t;
    }

    void decode(const Eigen::VectorXd& t, KernelHyperparams& hp, NoiseConfig& noise) const {
        hp.gamma_alpha = std::exp(t[0]);
        hp.lengthscales.resize(D);
        for (int d = 0; d < D; ++d) hp.lengthscales[d] = std::exp(t[1 + d]);
        if (train_noise) noise.sigma_u2 = std::exp(t[1 + D]);
    }
};

// NLML objective over log-parameters. Caches the assembly between the value-only
// probe and the gradient request at the accepted point.
class NlmlObjective {
public:
    NlmlObjective(const Eigen::MatrixXd& X, Eigen::VectorXd yjoint,
                  const AffineConstraint* constraint, const NoiseConfig& noise_template,
                  const ParamCodec& codec, bool analytic_gradient)
        : X_(X), yjoint_(std::move(yjoint)), constraint_(constraint),
          noise_template_(noise_template), codec_(codec), analytic_(analytic_gradient) {}

    double operator()(const Eigen::VectorXd& t, Eigen::VectorXd* grad) {
        double f = value(t);
        if (grad) {
            if (!std::isfinite(f)) {
                grad->setZero(codec_.size());
            } else if (analytic_) {
                *grad = analytic_gradient(t);
            } else {
                *grad = fd_gradient(t);
            }
        }
        return f;
    }

private:
    double value(const Eigen::VectorXd& t) {
        if (cached_valid_ && t == cached_t_) return cached_f_;
        cached_valid_ = false;
        KernelHyperparams hp;
        NoiseConfig noise = noise_template_;
        codec_.decode(t, hp, noise);
        try {
            cached_assembled_ = assemble_value(X_, constraint_, hp, noise);
            cached_chol_ = detail::cholesky_with_ladder(cached_assembled_.K);
            cached_f_ = nlml_from_chol(cached_chol_, yjoint_);
        } catch (const ConditioningError&) {
            cached_f_ = kInf;
        } catch (const NumericError&) {
            cached_f_ = kInf;
        } catch (const std::invalid_argument&) {
            cached_f_ = kInf;
        }
        if (!std::isfinite(cached_f_)) cached_f_ = kInf;
        cached_t_ = t;
        cached_hp_ = hp;
        cached_noise_ = noise;
        cached_valid_ = true;
        return cached_f_;
    }

    Eigen::VectorXd analytic_gradient(const Eigen::VectorXd& t) {
        // value(t) has been called and succeeded; reuse its factorization.
        value(t);
        const Eigen::Index n = X_.rows();
        const Eigen::Index dim = cached_assembled_.K.rows();
        const Eigen::VectorXd alpha = cached_chol_.llt.solve(yjoint_);
        const Eigen::MatrixXd Kinv =
            cached_chol_.llt.solve(Eigen::MatrixXd::Identity(dim, dim));
        const Eigen::MatrixXd W = Kinv - alpha * alpha.transpose();

        Eigen::VectorXd g(codec_.size());
        // d/dlog gamma_alpha: every kernel block scales with gamma_alpha^2.
        g[0] = 0.5 * (W.cwiseProduct(2.0 * cached_assembled_.Kkernel)).sum();
        const auto dKl = assemble_lengthscale_grads(X_, constraint_, cached_hp_);
        for (int d = 0; d < codec_.D; ++d) {
            g[1 + d] = 0.5 * (W.cwiseProduct(dKl[static_cast<size_t>(d)])).sum();
        }
        if (codec_.train_noise) {
            // d K / d log sigma_u2 = sigma_u2 on the u-block diagonal.
            double tr = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) tr += W(i, i);
            g[1 + codec_.D] = 0.5 * tr * cached_noise_.sigma_u2;
        }
        return g;
    }

    Eigen::VectorXd fd_gradient(const Eigen::VectorXd& t) {
        const double h = 1e-5;
        Eigen::VectorXd g(codec_.size());
        for (int i = 0; i < codec_.size(); ++i) {
            Eigen::VectorXd tp = t, tm = t;
            tp[i] += h;
            tm[i] -= h;
            cached_valid_ = false;  // do not reuse across perturbed points
            const double fp = value(tp);
            cached_valid_ = false;
            const double fm = value(tm);
            cached_valid_ = false;
            g[i] = (fp - fm) / (2.0 * h);
        }
        return g;
    }

    const Eigen::MatrixXd& X_;
    Eigen::VectorXd yjoint_;
    const AffineConstraint* constraint_;
    NoiseConfig noise_template_;
    ParamCodec codec_;
    bool analytic_;

    bool cached_valid_ = false;
    Eigen::VectorXd cached_t_;
    double cached_f_ = kInf;
    Assembled cached_assembled_;
    detail::LadderChol cached_chol_;
    KernelHyperparams cached_hp_;
    NoiseConfig cached_noise_;
};

double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace

void Dataset::validate() const {
    if (X.rows() < 1) throw std::invalid_argument("Dataset: needs at least one observation");
    if (X.cols() < 1) throw std::invalid_argument("Dataset: input dimension must be >= 1");
    if (y.size() != X.rows()) throw std::invalid_argument("Dataset: X/y size mismatch");
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
            if ((X.row(i) - X.row(j)).cwiseAbs().maxCoeff() == 0.0) {
                detail::warn("Dataset: duplicate input locations at rows " + std::to_string(i) +
                             " and " + std::to_string(j));
                return;
            }
        }
    }
}

Dataset Dataset::from_csv(const std::string& path) {
    const auto table = csv::read(path);
    if (table.values.cols() < 2) {
        throw std::runtime_error("Dataset: expected D location columns plus one observation column");
    }
    Dataset ds;
    ds.X = table.values.leftCols(table.values.cols() - 1);
    ds.y = table.values.rightCols(1);
    ds.validate();
    return ds;
}

void Dataset::to_csv(const std::string& path) const {
    std::vector<std::string> header;
    for (int d = 0; d < dim(); ++d) header.push_back("x" + std::to_string(d + 1));
    header.push_back("y");
    Eigen::MatrixXd values(n(), dim() + 1);
    values.leftCols(dim()) = X;
    values.rightCols(1) = y;
    csv::write(path, header, values);
}

void NoiseConfig::validate() const {
    if (!(sigma_r2 > 0.0)) throw std::invalid_argument("NoiseConfig: sigma_r2 must be positive");
    if (sigma_u2 < 0.0) throw std::invalid_argument("NoiseConfig: sigma_u2 must be nonnegative");
}

namespace detail {

LadderChol cholesky_with_ladder(const Eigen::MatrixXd& K0) {
    const double mean_diag = K0.diagonal().mean();
    LadderChol out;
    for (double level : kJitterLadder) {
        const double jitter = level * mean_diag;
        Eigen::MatrixXd K = K0;
        K.diagonal().array() += jitter;
        out.llt.compute(K);
        if (out.llt.info() == Eigen::Success) {
            out.jitter = jitter;
            return out;
        }
    }
    throw ConditioningError("covariance not positive definite after jitter ladder {1e-10, 1e-8, 1e-6}",
                            kJitterLadder);
}

Eigen::VectorXd median_pairwise_scale(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    const int D = static_cast<int>(X.cols());
    Eigen::VectorXd scale(D);

    std::vector<double> dists;
    dists.reserve(static_cast<size_t>(n * (n - 1) / 2));
    double global_med = 1.0;
    if (n > 1) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                dists.push_back((X.row(i) - X.row(j)).norm());
            }
        }
        std::nth_element(dists.begin(), dists.begin() + static_cast<long>(dists.size() / 2),
                         dists.end());
        global_med = dists[dists.size() / 2];
        if (global_med <= 0.0) global_med = 1.0;
    }

    for (int d = 0; d < D; ++d) {
        double med = 0.0;
        if (n > 1) {
            std::vector<double> dd;
            dd.reserve(dists.size());
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    dd.push_back(std::abs(X(i, d) - X(j, d)));
                }
            }
            std::nth_element(dd.begin(), dd.begin() + static_cast<long>(dd.size() / 2), dd.end());
            med = dd[dd.size() / 2];
        }
        if (med <= 0.0) med = global_med;
        scale[d] = 1.0 / (med * med);
    }
    return scale;
}

}  // namespace detail

Eigen::MatrixXd assemble_joint_covariance(const Eigen::MatrixXd& X,
                                          const std::optional<AffineConstraint>& constraint,
                                          const KernelHyperparams& hp, const NoiseConfig& noise) {
    Assembled a = assemble_value(X, ptr(constraint), hp, noise);
    a.K.diagonal().array() += kJitterLadder.front() * a.K.diagonal().mean();
    return a.K;
}

double nlml(const Eigen::MatrixXd& X, const Eigen::VectorXd& yjoint,
            const std::optional<AffineConstraint>& constraint, const KernelHyperparams& hp,
            const NoiseConfig& noise) {
    const Assembled a = assemble_value(X, ptr(constraint), hp, noise);
    if (yjoint.size() != a.K.rows()) {
        throw std::invalid_argument("nlml: yjoint size does not match the joint covariance");
    }
    const auto chol = detail::cholesky_with_ladder(a.K);
    return nlml_from_chol(chol, yjoint);
}

Eigen::VectorXd nlml_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& yjoint,
                              const std::optional<AffineConstraint>& constraint,
                              const KernelHyperparams& hp, const NoiseConfig& noise) {
    const ParamCodec codec{hp.dim(), noise.sigma_u2_trainable};
    NlmlObjective obj(X, yjoint, ptr(constraint), noise, codec, /*analytic=*/true);
    Eigen::VectorXd g(codec.size());
    const double f = obj(codec.encode(hp, noise.sigma_u2), &g);
    if (!std::isfinite(f)) {
        throw ConditioningError("nlml_gradient: covariance not positive definite", kJitterLadder);
    }
    return g;
}

void TrainedModel::rebuild() {
    hp.validate();
    noise.validate();
    const Assembled a = assemble_value(X, ptr(constraint), hp, noise);
    const auto chol = detail::cholesky_with_ladder(a.K);
    chol_lower_ = chol.llt.matrixL();
    alpha_ = chol.llt.solve(yjoint);
    nlml_value = nlml_from_chol(chol, yjoint);

    const Eigen::Index nn = X.rows();
    u_block_ = a.K.topLeftCorner(nn, nn);
}

nlohmann::json TrainedModel::to_json() const {
    nlohmann::json j;
    j["format"] = "gprc-model";
    j["version"] = 1;
    j["hyperparams"] = {{"gamma_alpha", hp.gamma_alpha},
                        {"lengthscales", std::vector<double>(hp.lengthscales.data(),
                                                             hp.lengthscales.data() + hp.dim())}};
    j["noise"] = {{"sigma_u2", noise.sigma_u2},
                  {"sigma_u2_trainable", noise.sigma_u2_trainable},
                  {"sigma_r2", noise.sigma_r2}};
    j["constraint"] = constraint ? constraint->to_json() : nlohmann::json();
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        rows.emplace_back(X.row(i).data(), X.row(i).data() + X.cols());
    }
    j["X"] = rows;
    j["y"] = std::vector<double>(yjoint.data(), yjoint.data() + n());
    j["nlml"] = nlml_value;
    j["converged"] = converged;
    return j;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    if (j.at("format").get<std::string>() != "gprc-model") {
        throw std::runtime_error("TrainedModel: not a model document");
    }
    if (j.at("version").get<int>() != 1) {
        throw std::runtime_error("TrainedModel: unsupported version");
    }
    TrainedModel m;
    m.hp.gamma_alpha = j.at("hyperparams").at("gamma_alpha").get<double>();
    const auto ls = j.at("hyperparams").at("lengthscales").get<std::vector<double>>();
    m.hp.lengthscales = Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    m.noise.sigma_u2 = j.at("noise").at("sigma_u2").get<double>();
    m.noise.sigma_u2_trainable = j.at("noise").at("sigma_u2_trainable").get<bool>();
    m.noise.sigma_r2 = j.at("noise").at("sigma_r2").get<double>();
    if (!j.at("constraint").is_null()) m.constraint = AffineConstraint::from_json(j.at("constraint"));

    const auto rows = j.at("X").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw std::runtime_error("TrainedModel: empty training inputs");
    m.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        m.X.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::VectorXd>(rows[i].data(), static_cast<Eigen::Index>(rows[i].size()));
    }
    const auto yv = j.at("y").get<std::vector<double>>();
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
    Dataset ds{m.X, y};
    m.yjoint = joint_observations(ds, m.constraint);
    m.converged = j.at("converged").get<bool>();

    m.rebuild();
    const double stored = j.at("nlml").get<double>();
    if (std::abs(m.nlml_value - stored) > 1e-6 * std::max(1.0, std::abs(stored))) {
        throw std::runtime_error("TrainedModel: rebuilt nlml " + std::to_string(m.nlml_value) +
                                 " does not match stored value " + std::to_string(stored));
    }
    return m;
}

TrainedModel train(const Dataset& dataset, const std::optional<AffineConstraint>& constraint,
                   const NoiseConfig& noise, const TrainConfig& config) {
    dataset.validate();
    noise.validate();
    const int D = dataset.dim();
    if (constraint && constraint->dim() != D) {
        throw std::invalid_argument("train: constraint dimension does not match the data");
    }

    const Eigen::VectorXd yjoint = joint_observations(dataset, constraint);
    const ParamCodec codec{D, noise.sigma_u2_trainable};

    // Deterministic restart initializations: gamma_alpha from the data scale,
    // sigma_u2 from a fraction of the data variance, lengthscales log-uniform
    // around the inverse squared median pairwise distance.
    const double ymean = dataset.y.mean();
    const double yvar = (dataset.y.array() - ymean).square().sum() /
                        std::max(1, dataset.n() - 1);
    const double ystd = std::sqrt(yvar);
    const double gamma_alpha0 = ystd > 1e-12 ? ystd : 1.0;
    const double sigma_u20 =
        noise.sigma_u2_trainable ? std::max(0.1 * yvar, 1e-8) : noise.sigma_u2;
    const Eigen::VectorXd scale = detail::median_pairwise_scale(dataset.X);

    std::vector<TrainInit> inits;
    std::mt19937_64 eng(config.seed);
    for (int k = 0; k < config.restarts; ++k) {
        KernelHyperparams hp;
        hp.gamma_alpha = gamma_alpha0;
        hp.lengthscales.resize(D);
        for (int d = 0; d < D; ++d) {
            const double lo = std::log(1e-2), hi = std::log(1e2);
            hp.lengthscales[d] = scale[d] * std::exp(lo + (hi - lo) * uniform01(eng));
        }
        inits.push_back(TrainInit{hp, sigma_u20});
    }
    for (const auto& extra : config.extra_inits) inits.push_back(extra);
    if (inits.empty()) throw std::invalid_argument("train: no initializations configured");

    NlmlObjective objective(dataset.X, yjoint, ptr(constraint), noise, codec,
                            config.analytic_gradient);
    GradObjective fn = [&objective](const Eigen::VectorXd& t, Eigen::VectorXd* g) {
        return objective(t, g);
    };

    bool any = false;
    LbfgsResult best;
    best.f = kInf;
    for (const auto& init : inits) {
        init.hp.validate();
        const LbfgsResult r = lbfgs_minimize(fn, codec.encode(init.hp, init.sigma_u2), config.lbfgs);
        if (!std::isfinite(r.f)) continue;
        if (!any || r.f < best.f) {
            best = r;
            any = true;
        }
    }
    if (!any) {
        throw ConditioningError("train: every restart failed to produce a factorizable covariance",
                                kJitterLadder);
    }

    TrainedModel model;
    model.noise = noise;
    codec.decode(best.x, model.hp, model.noise);
    model.constraint = constraint;
    model.X = dataset.X;
    model.yjoint = yjoint;
    model.converged = best.converged;
    if (!best.converged) {
        detail::warn("train: optimizer stopped before convergence; returning best iterate");
    }
    model.rebuild();
    return model;
}

double estimate_sigma_r2(const Dataset& dataset, const TrainConfig& config) {
    NoiseConfig noise;
    noise.sigma_u2_trainable = true;
    const TrainedModel pre = train(dataset, std::nullopt, noise, config);
    return 10.0 * pre.noise.sigma_u2;
}

}  // namespace gprc
