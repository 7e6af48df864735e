#include "driftwin/instances.hpp"

#include <cmath>
#include <random>
#include <set>
#include <string>

#include <Eigen/SVD>

#include "driftwin/error.hpp"

namespace driftwin {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Eigen::VectorXd dirichlet_one(std::size_t dim, std::mt19937_64& rng) {
    std::exponential_distribution<double> expo(1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = expo(rng);
    return v / v.sum();
}

DistributionProcess random_process(std::size_t atoms, std::size_t categories, std::mt19937_64& rng) {
    DistributionProcess p;
    p.P = dirichlet_one(atoms, rng);
    p.D.resize(static_cast<Eigen::Index>(atoms), static_cast<Eigen::Index>(categories));
    for (Eigen::Index t = 0; t < p.D.rows(); ++t) p.D.row(t) = dirichlet_one(categories, rng).transpose();
    return p;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return splitmix64(h ^ c);
}

double identifiability_margin(const IncidenceMatrix& incidence, const Eigen::MatrixXd& R) {
    const Eigen::MatrixXd& W = incidence.entries;
    const Eigen::Index n = W.rows(), N = W.cols(), m = R.cols();
    if (R.rows() != n) throw Error(ErrorCode::DimensionMismatch, "incidence and R rows differ");
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * m, N * m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index t = 0; t < N; ++t)
                for (Eigen::Index k = 0; k < m; ++k)
                    L(i * m + j, t * m + k) = W(i, t) * ((k == j ? 1.0 : 0.0) - R(i, j));
    const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(L).singularValues();
    // Fewer rows than unknowns leaves extra zero singular values off the list.
    if (L.rows() < L.cols() || sv.size() < 2 || !(sv(0) > 0.0)) return 0.0;
    return sv(sv.size() - 2) / sv(0);
}

Eigen::VectorXd uniform_simplex(std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return dirichlet_one(dim, rng);
}

Instance make_instance(double target_rank, std::uint64_t seed, const InstanceOptions& options) {
    if (!(target_rank > 0.0) || options.grid_min < 1 || options.grid_max < options.grid_min || options.categories < 2)
        throw Error(ErrorCode::InvalidInput, "invalid instance options");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> grid_dist(options.grid_min, options.grid_max);

    for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
        const std::size_t grid = grid_dist(rng);
        const std::size_t distinct = grid * (grid + 1) / 2;
        const auto n = static_cast<std::size_t>(std::lround(target_rank * static_cast<double>(grid)));
        if (n < 1 || n > distinct) continue;

        std::uniform_int_distribution<std::size_t> endpoint(0, grid);
        std::set<std::pair<std::size_t, std::size_t>> chosen;
        Instance inst;
        while (chosen.size() < n) {
            std::size_t a = endpoint(rng), b = endpoint(rng);
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            if (!chosen.insert({a, b}).second) continue;
            inst.windows.push_back({"w" + std::to_string(inst.windows.size()),
                                    {{static_cast<double>(a), static_cast<double>(b)}}});
        }
        inst.atomization = atomize(inst.windows, Interval{0.0, static_cast<double>(grid)});
        const auto N = static_cast<double>(inst.atomization.atoms.size());
        const double rank = static_cast<double>(n) / N;
        if (std::abs(rank - target_rank) > options.rank_slack * target_rank) continue;

        inst.windows_per_atom = rank;
        inst.atoms_per_window = N / static_cast<double>(n);
        inst.truth = random_process(inst.atomization.atoms.size(), options.categories, rng);
        inst.truth.atom_set = inst.atomization.atoms;
        inst.obs = induce_observations(inst.truth, inst.atomization.incidence);
        inst.identifiability = identifiability_margin(inst.atomization.incidence, inst.obs.R);
        if (options.min_identifiability > 0.0 && !(inst.identifiability >= options.min_identifiability)) continue;
        return inst;
    }
    throw Error(ErrorCode::InvalidInput, "could not hit the target rank within the attempt budget");
}

Instance make_singleton_union_instance(std::size_t atoms, std::uint64_t seed, std::size_t categories) {
    if (atoms < 2) throw Error(ErrorCode::InvalidInput, "need at least two atoms");
    std::mt19937_64 rng(seed);
    Instance inst;
    for (std::size_t t = 0; t < atoms; ++t)
        inst.windows.push_back({"s" + std::to_string(t), {{static_cast<double>(t), static_cast<double>(t + 1)}}});
    for (std::size_t a = 0; a < atoms; ++a)
        for (std::size_t b = a + 1; b < atoms; ++b) {
            IntervalSet ivs{{static_cast<double>(a), static_cast<double>(a + 1)},
                            {static_cast<double>(b), static_cast<double>(b + 1)}};
            inst.windows.push_back({"u" + std::to_string(a) + "_" + std::to_string(b), normalize(ivs)});
        }
    inst.atomization = atomize(inst.windows);
    inst.truth = random_process(atoms, categories, rng);
    inst.truth.atom_set = inst.atomization.atoms;
    inst.obs = induce_observations(inst.truth, inst.atomization.incidence);
    const auto n = static_cast<double>(inst.windows.size());
    inst.identifiability = identifiability_margin(inst.atomization.incidence, inst.obs.R);
    inst.windows_per_atom = n / static_cast<double>(atoms);
    inst.atoms_per_window = static_cast<double>(atoms) / n;
    return inst;
}

}  // namespace driftwin
