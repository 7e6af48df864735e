#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "driftwin/report.hpp"
#include "driftwin/window_algebra.hpp"

namespace driftwin {

/// Time weights P over atoms and one data distribution per atom (rows of D,
/// over m categories). The atom realization is optional: synthetic instances
/// only carry the incidence structure.
struct DistributionProcess {
    Eigen::VectorXd P;
    Eigen::MatrixXd D;
    std::optional<TimeAtomSet> atom_set;
};

/// Window mean distributions R (one row per window) together with the
/// window-by-atom incidence they were observed on.
struct WindowObservations {
    Eigen::MatrixXd R;
    IncidenceMatrix incidence;
};

inline constexpr double kInputStochasticTol = 1e-9;
inline constexpr double kInternalStochasticTol = 1e-12;
inline constexpr double kDriftTol = 1e-10;

void validate_process(const DistributionProcess& process, double tol = kInternalStochasticTol);
void validate_observations(const WindowObservations& obs, double tol = kInputStochasticTol);

/// R = diag(WP)^-1 W diag(P) D. Throws NullWindowMass if a window gets no mass.
WindowObservations induce_observations(const DistributionProcess& process, const IncidenceMatrix& incidence);

/// True iff two atoms of positive weight carry distributions further apart
/// than `tol` in the max norm.
bool has_drift(const DistributionProcess& process, double tol = kDriftTol);

/// A set of pairwise disjoint windows whose union is itself a window of the
/// system (compared as atom sets).
struct DisjointFamily {
    std::size_t target = 0;
    std::vector<std::size_t> parts;
};

/// All families of 2..max_parts parts, ordered by (target, parts).
std::vector<DisjointFamily> disjoint_families(const IncidenceMatrix& incidence, std::size_t max_parts);

struct WdsCheckOptions {
    double tol = kInputStochasticTol;
    std::size_t max_family = 3;
};

/// Report entries: "null_invariance" (axiom 1), "limits" (axiom 2, not
/// applicable for a finite system) and "mixture" (axiom 3).
AxiomReport check_wds_axioms(const WindowObservations& obs,
                             const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                             const WdsCheckOptions& options = {});

struct CompatibilityOptions {
    double tol = 1e-10;
    std::size_t max_family = 3;
};

/// Entries "positive_mass", "null_mass" and "mixture_weights"; max_residual
/// holds the worst mixture deviation over all disjoint families.
CompatibilityReport check_compatibility(const WindowObservations& obs, const Eigen::VectorXd& P,
                                        const CompatibilityOptions& options = {});

struct ExactWeightsOptions {
    double tol = kDriftTol;
    double anchor_mass = 1.0;  // unnormalized mass given to the anchor window
};

/// Noiseless time-weight recovery. Mixture ratios of disjoint pairs with
/// distinct rows fix relative window masses; they are chained outward from
/// the best separated pair, then the atom weights are solved from the window
/// masses and normalized.
/// Throws ConstantWDS when all rows coincide and UnchainableAtom when the
/// reachable windows do not determine every atom.
Eigen::VectorXd exact_time_weights(const WindowObservations& obs, const ExactWeightsOptions& options = {});

}  // namespace driftwin
