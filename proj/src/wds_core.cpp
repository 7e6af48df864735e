#include "driftwin/wds_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <tuple>

#include "driftwin/error.hpp"
#include "driftwin/nnls.hpp"

namespace driftwin {

namespace {

using AtomKey = std::vector<std::uint64_t>;

AtomKey row_key(const IncidenceMatrix& inc, Eigen::Index i) {
    AtomKey key(static_cast<std::size_t>((inc.atoms() + 63) / 64), 0);
    for (Eigen::Index t = 0; t < inc.atoms(); ++t)
        if (inc.entries(i, t) != 0.0) key[static_cast<std::size_t>(t / 64)] |= std::uint64_t{1} << (t % 64);
    return key;
}

bool key_disjoint(const AtomKey& a, const AtomKey& b) {
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] & b[k]) return false;
    return true;
}

AtomKey key_union(const AtomKey& a, const AtomKey& b) {
    AtomKey out(a);
    for (std::size_t k = 0; k < a.size(); ++k) out[k] |= b[k];
    return out;
}

struct WindowIndex {
    std::vector<AtomKey> keys;
    std::map<AtomKey, std::vector<std::size_t>> by_key;

    explicit WindowIndex(const IncidenceMatrix& inc) {
        for (Eigen::Index i = 0; i < inc.windows(); ++i) {
            keys.push_back(row_key(inc, i));
            by_key[keys.back()].push_back(static_cast<std::size_t>(i));
        }
    }

    const std::vector<std::size_t>* find(const AtomKey& key) const {
        auto it = by_key.find(key);
        return it == by_key.end() ? nullptr : &it->second;
    }
};

double row_distance(const Eigen::MatrixXd& R, std::size_t i, std::size_t j) {
    return (R.row(static_cast<Eigen::Index>(i)) - R.row(static_cast<Eigen::Index>(j))).cwiseAbs().maxCoeff();
}

// Max-norm deviation of the target row from the weighted mixture of the parts.
double mixture_deviation(const Eigen::MatrixXd& R, std::size_t target, const std::vector<std::size_t>& parts,
                         const Eigen::VectorXd& weights) {
    Eigen::RowVectorXd mix = Eigen::RowVectorXd::Zero(R.cols());
    double total = 0.0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        mix += weights(static_cast<Eigen::Index>(k)) * R.row(static_cast<Eigen::Index>(parts[k]));
        total += weights(static_cast<Eigen::Index>(k));
    }
    return (R.row(static_cast<Eigen::Index>(target)) - mix / total).cwiseAbs().maxCoeff();
}

// Every subset of a family (two or more parts) whose union is itself a window,
// as (union window, positions of the parts within the family).
std::vector<std::pair<std::size_t, std::vector<std::size_t>>> present_subunions(const WindowIndex& index,
                                                                                const DisjointFamily& family) {
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> out;
    const std::size_t k = family.parts.size();
    for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
        std::vector<std::size_t> pos;
        for (std::size_t b = 0; b < k; ++b)
            if ((mask >> b) & 1U) pos.push_back(b);
        if (pos.size() < 2) continue;
        if (pos.size() == k) {
            out.emplace_back(family.target, pos);
            continue;
        }
        AtomKey key = index.keys[family.parts[pos[0]]];
        for (std::size_t p = 1; p < pos.size(); ++p) key = key_union(key, index.keys[family.parts[pos[p]]]);
        if (const auto* hits = index.find(key)) out.emplace_back(hits->front(), pos);
    }
    return out;
}

std::string join(const std::vector<std::size_t>& v) {
    std::ostringstream os;
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
    return os.str();
}

}  // namespace

void validate_process(const DistributionProcess& process, double tol) {
    const auto& P = process.P;
    const auto& D = process.D;
    if (P.size() != D.rows()) throw Error(ErrorCode::DimensionMismatch, "P length and D rows differ");
    if (process.atom_set && static_cast<Eigen::Index>(process.atom_set->size()) != P.size())
        throw Error(ErrorCode::DimensionMismatch, "process size does not match its atom set");
    if (!P.allFinite() || !D.allFinite()) throw Error(ErrorCode::InvalidInput, "process has non-finite entries");
    if (P.size() > 0 && (P.minCoeff() < 0.0 || D.minCoeff() < 0.0))
        throw Error(ErrorCode::InvalidInput, "process has negative entries");
    if (std::abs(P.sum() - 1.0) > tol) throw Error(ErrorCode::InvalidInput, "P does not sum to one");
    for (Eigen::Index t = 0; t < D.rows(); ++t)
        if (std::abs(D.row(t).sum() - 1.0) > tol) throw Error(ErrorCode::InvalidInput, "D row does not sum to one");
}

void validate_observations(const WindowObservations& obs, double tol) {
    const auto& R = obs.R;
    if (R.rows() != obs.incidence.windows())
        throw Error(ErrorCode::DimensionMismatch, "R rows and incidence windows differ");
    if (!R.allFinite()) throw Error(ErrorCode::InvalidInput, "R has non-finite entries");
    if (R.size() > 0 && R.minCoeff() < 0.0) throw Error(ErrorCode::InvalidInput, "R has negative entries");
    for (Eigen::Index i = 0; i < R.rows(); ++i)
        if (std::abs(R.row(i).sum() - 1.0) > tol) throw Error(ErrorCode::InvalidInput, "R row does not sum to one");
}

WindowObservations induce_observations(const DistributionProcess& process, const IncidenceMatrix& incidence) {
    if (incidence.atoms() != process.P.size())
        throw Error(ErrorCode::DimensionMismatch, "incidence columns and process size differ");
    const Eigen::MatrixXd& W = incidence.entries;
    const Eigen::VectorXd mass = W * process.P;
    for (Eigen::Index i = 0; i < mass.size(); ++i)
        if (!(mass(i) > 0.0))
            throw Error(ErrorCode::NullWindowMass, "window " + std::to_string(i) + " has zero time mass");
    WindowObservations obs;
    obs.incidence = incidence;
    obs.R = mass.cwiseInverse().asDiagonal() * (W * process.P.asDiagonal() * process.D);
    return obs;
}

bool has_drift(const DistributionProcess& process, double tol) {
    std::vector<Eigen::Index> live;
    for (Eigen::Index t = 0; t < process.P.size(); ++t)
        if (process.P(t) > 0.0) live.push_back(t);
    for (std::size_t a = 0; a < live.size(); ++a)
        for (std::size_t b = a + 1; b < live.size(); ++b)
            if ((process.D.row(live[a]) - process.D.row(live[b])).cwiseAbs().maxCoeff() > tol) return true;
    return false;
}

std::vector<DisjointFamily> disjoint_families(const IncidenceMatrix& incidence, std::size_t max_parts) {
    const WindowIndex index(incidence);
    const std::size_t n = index.keys.size();
    std::vector<DisjointFamily> out;
    auto emit = [&](const AtomKey& key, std::vector<std::size_t> parts) {
        if (const auto* hits = index.find(key))
            for (auto target : *hits) out.push_back({target, parts});
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!key_disjoint(index.keys[i], index.keys[j])) continue;
            const AtomKey ij = key_union(index.keys[i], index.keys[j]);
            if (max_parts >= 2) emit(ij, {i, j});
            if (max_parts < 3) continue;
            for (std::size_t l = j + 1; l < n; ++l)
                if (key_disjoint(ij, index.keys[l])) emit(key_union(ij, index.keys[l]), {i, j, l});
        }
    std::sort(out.begin(), out.end(), [](const DisjointFamily& a, const DisjointFamily& b) {
        return std::tie(a.target, a.parts) < std::tie(b.target, b.parts);
    });
    return out;
}

AxiomReport check_wds_axioms(const WindowObservations& obs, const std::optional<Eigen::VectorXd>& weights,
                             const WdsCheckOptions& options) {
    validate_observations(obs);
    const auto& R = obs.R;
    const auto n = static_cast<std::size_t>(R.rows());
    if (weights) {
        if (static_cast<std::size_t>(weights->size()) != n)
            throw Error(ErrorCode::DimensionMismatch, "one weight per window expected");
        if (weights->size() > 0 && !(weights->minCoeff() > 0.0))
            throw Error(ErrorCode::InvalidInput, "window weights must be positive");
    }
    const WindowIndex index(obs.incidence);
    AxiomReport report;

    AxiomCheck same{"null_invariance", CheckStatus::Pass, {}, "windows equal up to null sets share a distribution"};
    for (const auto& [key, group] : index.by_key) {
        for (std::size_t k = 1; k < group.size(); ++k) {
            const double dev = row_distance(R, group[0], group[k]);
            report.max_residual = std::max(report.max_residual, dev);
            if (dev > options.tol && same.status == CheckStatus::Pass) {
                same.status = CheckStatus::Fail;
                same.witness = Witness{"windows cover the same atoms but carry different distributions",
                                       {group[0], group[k]}, dev};
            }
        }
    }
    report.add(same);
    report.add({"limits", CheckStatus::NotApplicable, {}, "not applicable: finite system"});

    AxiomCheck mixture{"mixture", CheckStatus::Pass, {}, ""};
    const auto families = disjoint_families(obs.incidence, options.max_family);
    report.checked = families.size();
    for (const auto& family : families) {
        const auto subunions = present_subunions(index, family);
        const auto k = static_cast<Eigen::Index>(family.parts.size());
        auto worst_deviation = [&](const Eigen::VectorXd& lambda) {
            double worst = 0.0;
            for (const auto& [u, pos] : subunions) {
                std::vector<std::size_t> parts;
                Eigen::VectorXd w(static_cast<Eigen::Index>(pos.size()));
                for (std::size_t p = 0; p < pos.size(); ++p) {
                    parts.push_back(family.parts[pos[p]]);
                    w(static_cast<Eigen::Index>(p)) = lambda(static_cast<Eigen::Index>(pos[p]));
                }
                worst = std::max(worst, mixture_deviation(R, u, parts, w));
            }
            return worst;
        };

        double dev = 0.0;
        if (weights) {
            Eigen::VectorXd lambda(k);
            for (Eigen::Index p = 0; p < k; ++p) lambda(p) = (*weights)(static_cast<Eigen::Index>(family.parts[p]));
            dev = worst_deviation(lambda);
        } else {
            // Stack sum_i lambda_i (R_i - R_u) = 0 over present sub-unions; pin sum(lambda) = 1.
            const Eigen::Index m = R.cols();
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(subunions.size()) * m + 1, k);
            Eigen::Index row = 0;
            for (const auto& [u, pos] : subunions) {
                for (auto p : pos)
                    M.block(row, static_cast<Eigen::Index>(p), m, 1) =
                        (R.row(static_cast<Eigen::Index>(family.parts[p])) - R.row(static_cast<Eigen::Index>(u)))
                            .transpose();
                row += m;
            }
            M.row(row).setOnes();
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M.rows());
            rhs(row) = 1.0;
            Eigen::VectorXd lambda = nnls(M, rhs).x;
            dev = lambda.sum() > 0.0 ? worst_deviation(lambda) : 1.0;
            if (lambda.minCoeff() <= 1e-12 * lambda.sum()) {
                // A strictly positive mixture must also exist: bound lambda away from 0.
                const double floor = 1e-6;
                const Eigen::VectorXd base = Eigen::VectorXd::Constant(k, floor);
                Eigen::VectorXd shifted_rhs = rhs - M * base;
                const Eigen::VectorXd mu = nnls(M, shifted_rhs).x;
                lambda = base + mu;
                dev = worst_deviation(lambda);
            }
        }
        report.max_residual = std::max(report.max_residual, dev);
        if (dev > options.tol && mixture.status == CheckStatus::Pass) {
            mixture.status = CheckStatus::Fail;
            auto idx = family.parts;
            idx.insert(idx.begin(), family.target);
            mixture.witness = Witness{"window " + std::to_string(family.target) +
                                          " is not a positive mixture of disjoint windows " + join(family.parts),
                                      idx, dev};
        }
    }
    report.add(mixture);
    return report;
}

CompatibilityReport check_compatibility(const WindowObservations& obs, const Eigen::VectorXd& P,
                                        const CompatibilityOptions& options) {
    validate_observations(obs);
    if (P.size() != obs.incidence.atoms())
        throw Error(ErrorCode::DimensionMismatch, "P length and atom count differ");
    if (P.size() > 0 && P.minCoeff() < 0.0) throw Error(ErrorCode::InvalidInput, "time weights must be non-negative");
    const Eigen::MatrixXd& W = obs.incidence.entries;
    const Eigen::VectorXd mass = W * P;

    CompatibilityReport report;
    AxiomCheck positive{"positive_mass", CheckStatus::Pass, {}, ""};
    for (Eigen::Index i = 0; i < mass.size(); ++i)
        if (!(mass(i) > 0.0) || !std::isfinite(mass(i))) {
            positive.status = CheckStatus::Fail;
            positive.witness = Witness{"window has no time mass", {static_cast<std::size_t>(i)}, mass(i)};
            break;
        }
    report.add(positive);

    // Atoms outside every window belong to the null cell.
    AxiomCheck null_mass{"null_mass", CheckStatus::Pass, {}, ""};
    for (Eigen::Index t = 0; t < W.cols(); ++t)
        if (W.col(t).cwiseAbs().maxCoeff() == 0.0 && P(t) != 0.0) {
            null_mass.status = CheckStatus::Fail;
            null_mass.witness = Witness{"atom outside every window carries mass", {static_cast<std::size_t>(t)}, P(t)};
            break;
        }
    report.add(null_mass);

    AxiomCheck mixture{"mixture_weights", CheckStatus::Pass, {}, ""};
    if (positive.status == CheckStatus::Fail) {
        mixture.status = CheckStatus::NotApplicable;
        mixture.note = "window masses not all positive";
    } else {
        const auto families = disjoint_families(obs.incidence, options.max_family);
        report.checked = families.size();
        for (const auto& family : families) {
            Eigen::VectorXd w(static_cast<Eigen::Index>(family.parts.size()));
            for (std::size_t p = 0; p < family.parts.size(); ++p)
                w(static_cast<Eigen::Index>(p)) = mass(static_cast<Eigen::Index>(family.parts[p]));
            const double dev = mixture_deviation(obs.R, family.target, family.parts, w);
            report.max_residual = std::max(report.max_residual, dev);
            if (dev > options.tol && mixture.status == CheckStatus::Pass) {
                mixture.status = CheckStatus::Fail;
                auto idx = family.parts;
                idx.insert(idx.begin(), family.target);
                mixture.witness = Witness{"window masses do not reproduce the union's distribution", idx, dev};
            }
        }
    }
    report.add(mixture);
    return report;
}

Eigen::VectorXd exact_time_weights(const WindowObservations& obs, const ExactWeightsOptions& options) {
    validate_observations(obs);
    const auto& R = obs.R;
    const auto n = static_cast<std::size_t>(R.rows());
    const Eigen::Index N = obs.incidence.atoms();
    if (n == 0 || N == 0) throw Error(ErrorCode::EmptyInput, "no windows or atoms");

    bool constant = true;
    for (std::size_t i = 1; i < n && constant; ++i) constant = row_distance(R, 0, i) <= options.tol;
    if (constant) throw Error(ErrorCode::ConstantWDS, "all window distributions coincide; weights are arbitrary");

    struct Triple {
        std::size_t i, j, k;
        double lambda;  // share of i in the union; NaN when the rows of i and j coincide
        double separation;
    };
    std::vector<Triple> triples;
    for (const auto& f : disjoint_families(obs.incidence, 2)) {
        const std::size_t i = f.parts[0], j = f.parts[1], k = f.target;
        const double sep = row_distance(R, i, j);
        double lambda = std::nan("");
        if (sep > options.tol) {
            // 1-D least squares for R_k = lambda R_i + (1 - lambda) R_j over all categories.
            const Eigen::RowVectorXd d = R.row(static_cast<Eigen::Index>(i)) - R.row(static_cast<Eigen::Index>(j));
            const Eigen::RowVectorXd e = R.row(static_cast<Eigen::Index>(k)) - R.row(static_cast<Eigen::Index>(j));
            const double l = e.dot(d) / d.squaredNorm();
            if (l > 0.0 && l < 1.0) lambda = l;
        }
        triples.push_back({i, j, k, lambda, sep});
    }

    const Triple* anchor = nullptr;
    for (const auto& t : triples)
        if (!std::isnan(t.lambda) && (!anchor || t.separation > anchor->separation)) anchor = &t;
    if (!anchor) throw Error(ErrorCode::UnchainableAtom, "no disjoint pair with distinct distributions and a union");

    std::vector<double> mu(n, std::nan(""));
    auto known = [&](std::size_t w) { return !std::isnan(mu[w]); };
    mu[anchor->i] = options.anchor_mass;
    mu[anchor->j] = options.anchor_mass * (1.0 - anchor->lambda) / anchor->lambda;
    mu[anchor->k] = mu[anchor->i] + mu[anchor->j];

    for (bool changed = true; changed;) {
        changed = false;
        auto set = [&](std::size_t w, double v) {
            if (!known(w) && v > 0.0) {
                mu[w] = v;
                changed = true;
            }
        };
        // Ratios first; sums and differences only where no ratio is available.
        for (const auto& t : triples) {
            if (std::isnan(t.lambda)) continue;
            if (known(t.i)) set(t.j, mu[t.i] * (1.0 - t.lambda) / t.lambda);
            if (known(t.j)) set(t.i, mu[t.j] * t.lambda / (1.0 - t.lambda));
            if (known(t.k)) {
                set(t.i, mu[t.k] * t.lambda);
                set(t.j, mu[t.k] * (1.0 - t.lambda));
            }
        }
        if (changed) continue;
        for (const auto& t : triples) {
            if (known(t.i) && known(t.j)) set(t.k, mu[t.i] + mu[t.j]);
            if (known(t.k) && known(t.i)) set(t.j, mu[t.k] - mu[t.i]);
            if (known(t.k) && known(t.j)) set(t.i, mu[t.k] - mu[t.j]);
        }
    }

    std::vector<Eigen::Index> rows;
    for (std::size_t w = 0; w < n; ++w)
        if (known(w)) rows.push_back(static_cast<Eigen::Index>(w));
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), N);
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        A.row(static_cast<Eigen::Index>(r)) = obs.incidence.entries.row(rows[r]);
        b(static_cast<Eigen::Index>(r)) = mu[static_cast<std::size_t>(rows[r])];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < N)
        throw Error(ErrorCode::UnchainableAtom, "chained window masses determine only " + std::to_string(qr.rank()) +
                                                    " of " + std::to_string(N) + " atom weights");
    Eigen::VectorXd P = qr.solve(b).cwiseMax(0.0);
    return P / P.sum();
}

}  // namespace driftwin
