#include "gprc/predict.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "gprc/csv.hpp"
#include "gprc/errors.hpp"

namespace gprc {

namespace {

constexpr double kPoeVarianceFloor = 1e-8;
constexpr double kNegativeVarianceTol = 1e-10;

double clamp_variance(double v) {
    if (v >= 0.0) return v;
    if (v < -kNegativeVarianceTol) {
        detail::warn("posterior variance " + std::to_string(v) + " clamped to zero");
    }
    return 0.0;
}

// Conditioning state for one (training set, extended set) pair: the factorized
// (n+m) x (n+m) joint covariance and the weight vector K^-1 [y; f(chi)].
struct Conditioner {
    Eigen::MatrixXd extset;
    detail::LadderChol chol;
    Eigen::VectorXd weights;
    Eigen::MatrixXd coeffs;  // operator coefficients at the extended-set points
};

std::shared_ptr<Conditioner> make_conditioner(const TrainedModel& model,
                                              const Eigen::MatrixXd& extset_in) {
    auto cond = std::make_shared<Conditioner>();
    const bool constrained = model.constraint.has_value() && extset_in.rows() > 0;
    cond->extset = constrained ? extset_in : Eigen::MatrixXd(0, model.dim());

    const Eigen::Index n = model.n();
    const Eigen::Index m = cond->extset.rows();
    Eigen::MatrixXd K(n + m, n + m);
    K.topLeftCorner(n, n) = model.u_block();

    Eigen::VectorXd obs(n + m);
    obs.head(n) = model.y();

    if (m > 0) {
        const auto& constraint = *model.constraint;
        const auto& terms = constraint.op.terms();
        const MultiIndex zero = MultiIndex::zero(model.dim());

        cond->coeffs.resize(static_cast<Eigen::Index>(terms.size()), m);
        for (size_t j = 0; j < terms.size(); ++j) {
            for (Eigen::Index a = 0; a < m; ++a) {
                cond->coeffs(static_cast<Eigen::Index>(j), a) =
                    terms[j].coeff(cond->extset.row(a).transpose());
            }
        }

        std::vector<DerivativeKernel> kur;
        kur.reserve(terms.size());
        for (const auto& t : terms) kur.emplace_back(zero, t.derivative, model.hp);
        std::vector<std::vector<DerivativeKernel>> krr;
        for (const auto& ti : terms) {
            std::vector<DerivativeKernel> row;
            for (const auto& tj : terms) row.emplace_back(ti.derivative, tj.derivative, model.hp);
            krr.push_back(std::move(row));
        }

        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd xi = model.X.row(i).transpose();
            for (Eigen::Index a = 0; a < m; ++a) {
                const Eigen::VectorXd xa = cond->extset.row(a).transpose();
                double v = 0.0;
                for (size_t j = 0; j < terms.size(); ++j) {
                    v += cond->coeffs(static_cast<Eigen::Index>(j), a) * kur[j].value(xi, xa);
                }
                K(i, n + a) = v;
                K(n + a, i) = v;
            }
        }
        for (Eigen::Index a = 0; a < m; ++a) {
            const Eigen::VectorXd xa = cond->extset.row(a).transpose();
            for (Eigen::Index b = a; b < m; ++b) {
                const Eigen::VectorXd xb = cond->extset.row(b).transpose();
                double v = 0.0;
                for (size_t i = 0; i < terms.size(); ++i) {
                    for (size_t j = 0; j < terms.size(); ++j) {
                        v += cond->coeffs(static_cast<Eigen::Index>(i), a) *
                             cond->coeffs(static_cast<Eigen::Index>(j), b) * krr[i][j].value(xa, xb);
                    }
                }
                K(n + a, n + b) = v;
                K(n + b, n + a) = v;
            }
        }
        K.bottomRightCorner(m, m).diagonal().array() += model.noise.sigma_r2;
        for (Eigen::Index a = 0; a < m; ++a) {
            obs[n + a] = constraint.rhs(cond->extset.row(a).transpose());
        }
    }

    if (!K.allFinite()) {
        throw NumericError("posterior: non-finite entries in the prediction covariance");
    }
    cond->chol = detail::cholesky_with_ladder(K);
    cond->weights = cond->chol.llt.solve(obs);
    return cond;
}

// Cross-covariance kernels between one derivative target and the conditioning set.
struct TargetKernels {
    DerivativeTarget target;
    DerivativeKernel lu;               // (target, 0)
    std::vector<DerivativeKernel> lr;  // (target, alpha_j) per operator term
    DerivativeKernel ll;               // (target, target)

    TargetKernels(const DerivativeTarget& t, const TrainedModel& model)
        : target(t),
          lu(t.derivative, MultiIndex::zero(model.dim()), model.hp),
          ll(t.derivative, t.derivative, model.hp) {
        if (model.constraint) {
            for (const auto& term : model.constraint->op.terms()) {
                lr.emplace_back(t.derivative, term.derivative, model.hp);
            }
        }
    }
};

PosteriorGaussian posterior_one(const TrainedModel& model, const TargetKernels& tk,
                                const Eigen::VectorXd& x_star, const Conditioner& cond) {
    const Eigen::Index n = model.n();
    const Eigen::Index m = cond.extset.rows();
    Eigen::VectorXd kstar(n + m);
    for (Eigen::Index i = 0; i < n; ++i) {
        kstar[i] = tk.lu.value(x_star, model.X.row(i).transpose());
    }
    for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::VectorXd xa = cond.extset.row(a).transpose();
        double v = 0.0;
        for (size_t j = 0; j < tk.lr.size(); ++j) {
            v += cond.coeffs(static_cast<Eigen::Index>(j), a) * tk.lr[j].value(x_star, xa);
        }
        kstar[n + a] = v;
    }
    PosteriorGaussian out;
    out.mean = kstar.dot(cond.weights);
    const double prior = tk.ll.value(x_star, x_star);
    out.variance = clamp_variance(prior - kstar.dot(cond.chol.llt.solve(kstar)));
    return out;
}

const IcbcAnchor& nearest_anchor(const std::vector<IcbcAnchor>& anchors,
                                 const Eigen::VectorXd& x_star) {
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < anchors.size(); ++i) {
        const double d = (anchors[i].x0 - x_star).norm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return anchors[best];
}

}  // namespace

int ExtendedSetConfig::total_count() const {
    int m = 1;
    for (int c : count) m *= c;
    return m;
}

void ExtendedSetConfig::validate() const {
    if (half_width.size() == 0 || static_cast<size_t>(half_width.size()) != count.size()) {
        throw std::invalid_argument("ExtendedSetConfig: half_width/count dimension mismatch");
    }
    for (Eigen::Index d = 0; d < half_width.size(); ++d) {
        if (!(half_width[d] > 0.0)) {
            throw std::invalid_argument("ExtendedSetConfig: half_width must be positive");
        }
        if (count[static_cast<size_t>(d)] < 1) {
            throw std::invalid_argument("ExtendedSetConfig: count must be >= 1");
        }
    }
}

Eigen::MatrixXd build_extended_set(const Eigen::VectorXd& x_star, const ExtendedSetConfig& cfg,
                                   const std::optional<DomainBox>& domain) {
    cfg.validate();
    if (x_star.size() != cfg.dim()) {
        throw std::invalid_argument("build_extended_set: test point dimension mismatch");
    }
    if (domain && !domain->contains(x_star)) {
        throw std::invalid_argument("build_extended_set: test point outside the domain box");
    }

    const int D = cfg.dim();
    std::vector<std::vector<double>> axes(static_cast<size_t>(D));
    for (int d = 0; d < D; ++d) {
        const int c = cfg.count[static_cast<size_t>(d)];
        auto& axis = axes[static_cast<size_t>(d)];
        if (c == 1) {
            axis.push_back(x_star[d]);
        } else {
            const double lo = x_star[d] - cfg.half_width[d];
            const double step = 2.0 * cfg.half_width[d] / (c - 1);
            for (int i = 0; i < c; ++i) axis.push_back(lo + step * i);
        }
    }

    const int total = cfg.total_count();
    Eigen::MatrixXd grid(total, D);
    std::vector<int> idx(static_cast<size_t>(D), 0);
    for (int r = 0; r < total; ++r) {
        for (int d = 0; d < D; ++d) grid(r, d) = axes[static_cast<size_t>(d)][static_cast<size_t>(idx[static_cast<size_t>(d)])];
        for (int d = D - 1; d >= 0; --d) {  // last dimension varies fastest
            if (++idx[static_cast<size_t>(d)] < cfg.count[static_cast<size_t>(d)]) break;
            idx[static_cast<size_t>(d)] = 0;
        }
    }

    if (!domain) return grid;
    Eigen::MatrixXd clipped(total, D);
    Eigen::Index kept = 0;
    for (int r = 0; r < total; ++r) {
        if (domain->contains(grid.row(r).transpose())) clipped.row(kept++) = grid.row(r);
    }
    if (kept == 0) {
        clipped.row(kept++) = x_star.transpose();
    }
    return clipped.topRows(kept);
}

PosteriorGaussian posterior(const TrainedModel& model, const DerivativeTarget& target,
                            const Eigen::VectorXd& x_star, const Eigen::MatrixXd& extset) {
    if (x_star.size() != model.dim()) {
        throw std::invalid_argument("posterior: test point dimension mismatch");
    }
    const auto cond = make_conditioner(model, extset);
    const TargetKernels tk(target, model);
    return posterior_one(model, tk, x_star, *cond);
}

PosteriorGaussian poe_correct(const PosteriorGaussian& base, const IcbcAnchor& anchor,
                              const Eigen::VectorXd& x_star, const KernelHyperparams& hp) {
    const double d2 = weighted_sqdist(x_star, anchor.x0, hp);
    const double expert_var = std::max(std::expm1(d2), kPoeVarianceFloor);
    if (base.variance <= 0.0) return base;  // a delta belief cannot be moved
    const double prec = 1.0 / base.variance + 1.0 / expert_var;
    PosteriorGaussian out;
    out.variance = 1.0 / prec;
    out.mean = out.variance * (base.mean / base.variance + anchor.value / expert_var);
    return out;
}

FieldPrediction predict_field(const TrainedModel& model, const std::vector<DerivativeTarget>& targets,
                              const Eigen::MatrixXd& grid,
                              const std::optional<ExtendedSetConfig>& extcfg,
                              const std::vector<AnchorSet>& anchors,
                              const std::optional<DomainBox>& domain,
                              const PredictOptions& options) {
    if (grid.rows() == 0) throw std::invalid_argument("predict_field: empty grid");
    if (grid.cols() != model.dim()) {
        throw std::invalid_argument("predict_field: grid dimension mismatch");
    }

    std::vector<TargetKernels> compiled;
    compiled.reserve(targets.size());
    for (const auto& t : targets) compiled.emplace_back(t, model);

    std::vector<const AnchorSet*> anchor_of(targets.size(), nullptr);
    for (size_t t = 0; t < targets.size(); ++t) {
        for (const auto& aset : anchors) {
            if (aset.target == targets[t] && !aset.anchors.empty()) {
                anchor_of[t] = &aset;
                break;
            }
        }
    }

    FieldPrediction out;
    out.per_target.assign(targets.size(), std::vector<PosteriorGaussian>(static_cast<size_t>(grid.rows())));

    std::map<std::uint64_t, std::shared_ptr<Conditioner>> cache;
    for (Eigen::Index g = 0; g < grid.rows(); ++g) {
        try {
            const Eigen::VectorXd x_star = grid.row(g).transpose();
            Eigen::MatrixXd extset(0, model.dim());
            if (extcfg && model.constraint) extset = build_extended_set(x_star, *extcfg, domain);

            std::shared_ptr<Conditioner> cond;
            if (options.cache_factorizations) {
                const std::uint64_t key = csv::hash_doubles(extset.data(), static_cast<size_t>(extset.size()));
                auto it = cache.find(key);
                if (it != cache.end() && it->second->extset == extset) {
                    cond = it->second;
                } else {
                    cond = make_conditioner(model, extset);
                    cache[key] = cond;
                }
            } else {
                cond = make_conditioner(model, extset);
            }

            for (size_t t = 0; t < targets.size(); ++t) {
                PosteriorGaussian p = posterior_one(model, compiled[t], x_star, *cond);
                if (anchor_of[t]) {
                    p = poe_correct(p, nearest_anchor(anchor_of[t]->anchors, x_star), x_star, model.hp);
                }
                out.per_target[t][static_cast<size_t>(g)] = p;
            }
        } catch (const ConditioningError& e) {
            throw ConditioningError("predict_field: grid row " + std::to_string(g) + ": " + e.what(),
                                    e.jitters_tried());
        } catch (const std::exception& e) {
            throw std::runtime_error("predict_field: grid row " + std::to_string(g) + ": " + e.what());
        }
    }
    return out;
}

void write_field_csv(const std::string& path, const Eigen::MatrixXd& grid,
                     const std::vector<DerivativeTarget>& targets, const FieldPrediction& field) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_field_csv: cannot write '" + path + "'");
    for (Eigen::Index d = 0; d < grid.cols(); ++d) out << "x" << (d + 1) << ",";
    out << "target,mean,variance\n";
    for (Eigen::Index g = 0; g < grid.rows(); ++g) {
        for (size_t t = 0; t < targets.size(); ++t) {
            for (Eigen::Index d = 0; d < grid.cols(); ++d) {
                out << csv::format_double(grid(g, d)) << ",";
            }
            const auto& p = field.per_target[t][static_cast<size_t>(g)];
            out << targets[t].derivative.label() << "," << csv::format_double(p.mean) << ","
                << csv::format_double(p.variance) << "\n";
        }
    }
}

}  // namespace gprc
