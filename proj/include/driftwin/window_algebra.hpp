#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "driftwin/report.hpp"

namespace driftwin {

/// Half-open interval [lo, hi).
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi > lo ? hi - lo : 0.0; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

using IntervalSet = std::vector<Interval>;

/// Total length of a sorted, pairwise disjoint interval list.
double total_length(const IntervalSet& set);

/// Length of the intersection of two sorted, pairwise disjoint interval lists.
double overlap_length(const IntervalSet& a, const IntervalSet& b);

/// Sorts and merges touching or overlapping pieces; drops empty ones.
IntervalSet normalize(IntervalSet set);

/// `a` minus `b`, both sorted and disjoint.
IntervalSet subtract(const IntervalSet& a, const IntervalSet& b);

struct IntervalWindow {
    std::string id;
    IntervalSet intervals;

    double length() const { return total_length(intervals); }
};

/// Throws InvalidInput for unsorted, overlapping or reversed intervals and
/// DegenerateWindow when the window has no positive length.
void validate_window(const IntervalWindow& window);

struct Atom {
    std::size_t index = 0;
    std::vector<std::int8_t> signature;  // +1 inside window i, -1 outside
    IntervalSet intervals;
    double length = 0.0;
};

struct TimeAtomSet {
    std::vector<Atom> atoms;
    Interval horizon;
    IntervalSet null_cell;  // horizon minus the union of all windows
    std::vector<std::string> window_ids;

    std::size_t size() const { return atoms.size(); }
};

/// Binary window-by-atom incidence (generalizes to fractional coverage for
/// the water case, where entries are overlap lengths).
struct IncidenceMatrix {
    Eigen::MatrixXd entries;

    Eigen::Index windows() const { return entries.rows(); }
    Eigen::Index atoms() const { return entries.cols(); }
};

struct Atomization {
    TimeAtomSet atoms;
    IncidenceMatrix incidence;
};

/// Splits the windows into elementary cells by an endpoint sweep. Atoms are
/// ordered by their leftmost point. When `horizon` is absent it spans the
/// smallest and largest endpoint.
Atomization atomize(std::span<const IntervalWindow> windows,
                    std::optional<Interval> horizon = std::nullopt);

/// Overlap length of every window with every cell. Cells must be pairwise
/// disjoint. Row i, column c holds |window_i ∩ cell_c|.
Eigen::MatrixXd coverage_matrix(std::span<const IntervalWindow> windows,
                                std::span<const IntervalWindow> cells);

struct WindowSystemCheckOptions {
    bool complement_is_null = true;
    std::size_t exhaustive_cap = std::size_t{1} << 16;
    std::size_t sample_size = 4096;
    std::uint64_t seed = 0;
    bool force_exhaustive = false;
};

/// Checks the four window-system axioms for the family of all nonempty unions
/// of atoms, with the declared null windows (and, optionally, the complement
/// cell) generating the null ideal. Axiom names in the report: "closure",
/// "disjoint_semiring", "local_generation", "covering".
AxiomReport check_window_system(const TimeAtomSet& atoms,
                                std::span<const IntervalWindow> null_windows,
                                const WindowSystemCheckOptions& options = {});

}  // namespace driftwin
