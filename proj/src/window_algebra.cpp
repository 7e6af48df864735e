#include "driftwin/window_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "driftwin/error.hpp"

namespace driftwin {

double total_length(const IntervalSet& set) {
    double sum = 0.0;
    for (const auto& iv : set) sum += iv.length();
    return sum;
}

double overlap_length(const IntervalSet& a, const IntervalSet& b) {
    double sum = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double lo = std::max(a[i].lo, b[j].lo);
        const double hi = std::min(a[i].hi, b[j].hi);
        if (hi > lo) sum += hi - lo;
        if (a[i].hi < b[j].hi)
            ++i;
        else
            ++j;
    }
    return sum;
}

IntervalSet normalize(IntervalSet set) {
    std::erase_if(set, [](const Interval& iv) { return !(iv.hi > iv.lo); });
    std::sort(set.begin(), set.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    IntervalSet out;
    for (const auto& iv : set) {
        if (!out.empty() && iv.lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, iv.hi);
        else
            out.push_back(iv);
    }
    return out;
}

IntervalSet subtract(const IntervalSet& a, const IntervalSet& b) {
    IntervalSet out;
    std::size_t j = 0;
    for (auto piece : a) {
        while (j < b.size() && b[j].hi <= piece.lo) ++j;
        std::size_t k = j;
        while (k < b.size() && b[k].lo < piece.hi) {
            if (b[k].lo > piece.lo) out.push_back({piece.lo, b[k].lo});
            piece.lo = std::max(piece.lo, b[k].hi);
            if (piece.lo >= piece.hi) break;
            ++k;
        }
        if (piece.hi > piece.lo) out.push_back(piece);
    }
    return out;
}

void validate_window(const IntervalWindow& window) {
    const auto& ivs = window.intervals;
    for (std::size_t k = 0; k < ivs.size(); ++k) {
        const auto& iv = ivs[k];
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi))
            throw Error(ErrorCode::InvalidInput, "window '" + window.id + "' has a non-finite endpoint");
        if (iv.lo > iv.hi)
            throw Error(ErrorCode::InvalidInput, "window '" + window.id + "' has a reversed interval");
        if (iv.lo == iv.hi)
            throw Error(ErrorCode::DegenerateWindow, "window '" + window.id + "' has an empty interval");
        if (k > 0 && ivs[k - 1].hi > iv.lo)
            throw Error(ErrorCode::InvalidInput,
                        "window '" + window.id + "' intervals must be sorted and pairwise disjoint");
    }
    if (!(window.length() > 0.0))
        throw Error(ErrorCode::DegenerateWindow, "window '" + window.id + "' has zero length");
}

Atomization atomize(std::span<const IntervalWindow> windows, std::optional<Interval> horizon) {
    if (windows.empty()) throw Error(ErrorCode::EmptyInput, "no windows given");
    for (const auto& w : windows) validate_window(w);

    std::vector<double> points;
    for (const auto& w : windows)
        for (const auto& iv : w.intervals) {
            points.push_back(iv.lo);
            points.push_back(iv.hi);
        }
    const auto [min_it, max_it] = std::minmax_element(points.begin(), points.end());
    Interval span{*min_it, *max_it};
    if (horizon) {
        if (!(horizon->hi > horizon->lo))
            throw Error(ErrorCode::InvalidInput, "horizon must be a nonempty interval");
        if (span.lo < horizon->lo || span.hi > horizon->hi)
            throw Error(ErrorCode::InvalidInput, "windows extend beyond the horizon");
        span = *horizon;
        points.push_back(span.lo);
        points.push_back(span.hi);
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    const std::size_t n = windows.size();
    Atomization out;
    out.atoms.horizon = span;
    for (const auto& w : windows) out.atoms.window_ids.push_back(w.id);

    std::vector<std::size_t> cursor(n, 0);
    std::map<std::vector<std::int8_t>, std::size_t> by_signature;
    std::vector<std::int8_t> signature(n);
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        const Interval seg{points[k], points[k + 1]};
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& ivs = windows[i].intervals;
            auto& c = cursor[i];
            while (c < ivs.size() && ivs[c].hi <= seg.lo) ++c;
            const bool inside = c < ivs.size() && ivs[c].lo <= seg.lo;
            signature[i] = inside ? 1 : -1;
            any = any || inside;
        }
        auto append = [&seg](IntervalSet& set) {
            if (!set.empty() && set.back().hi == seg.lo)
                set.back().hi = seg.hi;
            else
                set.push_back(seg);
        };
        if (!any) {
            append(out.atoms.null_cell);
            continue;
        }
        auto [it, inserted] = by_signature.try_emplace(signature, out.atoms.atoms.size());
        if (inserted) {
            Atom atom;
            atom.index = it->second;
            atom.signature = signature;
            out.atoms.atoms.push_back(std::move(atom));
        }
        append(out.atoms.atoms[it->second].intervals);
    }

    const auto N = static_cast<Eigen::Index>(out.atoms.atoms.size());
    out.incidence.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), N);
    for (Eigen::Index t = 0; t < N; ++t) {
        auto& atom = out.atoms.atoms[static_cast<std::size_t>(t)];
        atom.length = total_length(atom.intervals);
        for (std::size_t i = 0; i < n; ++i)
            if (atom.signature[i] > 0) out.incidence.entries(static_cast<Eigen::Index>(i), t) = 1.0;
    }
    return out;
}

Eigen::MatrixXd coverage_matrix(std::span<const IntervalWindow> windows,
                                std::span<const IntervalWindow> cells) {
    struct Piece {
        Interval iv;
        Eigen::Index cell;
    };
    std::vector<Piece> pieces;
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (const auto& iv : cells[c].intervals) pieces.push_back({iv, static_cast<Eigen::Index>(c)});
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) { return a.iv.lo < b.iv.lo; });
    for (std::size_t k = 1; k < pieces.size(); ++k)
        if (pieces[k - 1].iv.hi > pieces[k].iv.lo)
            throw Error(ErrorCode::InvalidInput, "coverage cells must be pairwise disjoint");

    Eigen::MatrixXd cover = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(windows.size()),
                                                  static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < windows.size(); ++i) {
        for (const auto& iv : windows[i].intervals) {
            auto it = std::partition_point(pieces.begin(), pieces.end(),
                                           [&](const Piece& p) { return p.iv.hi <= iv.lo; });
            for (; it != pieces.end() && it->iv.lo < iv.hi; ++it) {
                const double lo = std::max(iv.lo, it->iv.lo);
                const double hi = std::min(iv.hi, it->iv.hi);
                if (hi > lo) cover(static_cast<Eigen::Index>(i), it->cell) += hi - lo;
            }
        }
    }
    return cover;
}

namespace {

std::string describe(const IntervalSet& set) {
    std::ostringstream os;
    for (std::size_t k = 0; k < set.size(); ++k)
        os << (k ? " " : "") << '[' << set[k].lo << ',' << set[k].hi << ')';
    return os.str();
}

}  // namespace

AxiomReport check_window_system(const TimeAtomSet& atoms, std::span<const IntervalWindow> null_windows,
                                const WindowSystemCheckOptions& options) {
    const std::size_t N = atoms.size();
    if (N == 0) throw Error(ErrorCode::EmptyInput, "atom set is empty");

    IntervalSet nulls;
    for (const auto& z : null_windows) nulls.insert(nulls.end(), z.intervals.begin(), z.intervals.end());
    if (options.complement_is_null) nulls.insert(nulls.end(), atoms.null_cell.begin(), atoms.null_cell.end());
    nulls = normalize(std::move(nulls));

    // Atom-level facts every member check is built from.
    std::vector<double> atom_len(N), atom_nonnull_len(N), atom_null_overlap(N);
    for (std::size_t a = 0; a < N; ++a) {
        const auto& ivs = atoms.atoms[a].intervals;
        atom_len[a] = total_length(ivs);
        atom_null_overlap[a] = overlap_length(ivs, nulls);
        atom_nonnull_len[a] = atom_len[a] - atom_null_overlap[a];
    }
    Eigen::MatrixXd atom_overlap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    for (std::size_t a = 0; a < N; ++a)
        for (std::size_t b = a + 1; b < N; ++b) {
            const double o = overlap_length(atoms.atoms[a].intervals, atoms.atoms[b].intervals);
            atom_overlap(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = o;
            atom_overlap(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = o;
        }

    // Enumerate or sample the generated family of nonempty atom unions.
    const bool fits = N < 63 && ((std::size_t{1} << N) - 1) <= options.exhaustive_cap;
    if (!fits && options.force_exhaustive)
        throw Error(ErrorCode::TooLarge, "generated family exceeds the exhaustive cap");
    std::vector<std::vector<char>> members;
    if (fits) {
        const std::size_t count = (std::size_t{1} << N) - 1;
        members.reserve(count);
        for (std::size_t mask = 1; mask <= count; ++mask) {
            std::vector<char> m(N);
            for (std::size_t a = 0; a < N; ++a) m[a] = static_cast<char>((mask >> a) & 1U);
            members.push_back(std::move(m));
        }
    } else {
        std::mt19937_64 rng(options.seed);
        std::bernoulli_distribution coin(0.5);
        members.reserve(options.sample_size);
        while (members.size() < options.sample_size) {
            std::vector<char> m(N);
            bool any = false;
            for (auto& bit : m) any = (bit = static_cast<char>(coin(rng))) || any;
            if (any) members.push_back(std::move(m));
        }
    }

    AxiomReport report;
    report.exhaustive = fits;
    report.checked = members.size();

    const double scale = std::max(1.0, atoms.horizon.length());
    const double len_tol = 1e-12 * scale;

    auto member_indices = [&](const std::vector<char>& m) {
        std::vector<std::size_t> idx;
        for (std::size_t a = 0; a < N; ++a)
            if (m[a]) idx.push_back(a);
        return idx;
    };

    // Axiom 1: a disjoint union of two members is again a (non-null) member.
    AxiomCheck closure{"closure", CheckStatus::Pass, {}, ""};
    for (const auto& m : members) {
        double nonnull = 0.0;
        for (std::size_t a = 0; a < N; ++a)
            if (m[a]) nonnull += atom_nonnull_len[a];
        for (std::size_t b = 0; b < N && closure.status == CheckStatus::Pass; ++b) {
            if (m[b]) continue;
            bool disjoint = true;
            for (std::size_t a = 0; a < N && disjoint; ++a)
                if (m[a] && atom_overlap(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) > 0.0)
                    disjoint = false;
            if (disjoint && !(nonnull + atom_nonnull_len[b] > len_tol)) {
                auto idx = member_indices(m);
                idx.push_back(b);
                closure.status = CheckStatus::Fail;
                closure.witness = Witness{"disjoint union of atoms is null", idx, nonnull + atom_nonnull_len[b]};
            }
        }
        if (closure.status == CheckStatus::Fail) break;
    }
    report.add(closure);

    // Axiom 2: no member is null; members and null sets intersect and subtract
    // into finite disjoint unions of members and null sets.
    AxiomCheck semiring{"disjoint_semiring", CheckStatus::Pass, {}, ""};
    for (std::size_t a = 0; a < N && semiring.status == CheckStatus::Pass; ++a) {
        if (!(atom_nonnull_len[a] > len_tol)) {
            semiring.status = CheckStatus::Fail;
            semiring.witness = Witness{"window of zero non-null length is both a window and null: " +
                                           describe(atoms.atoms[a].intervals),
                                       {a}, atom_nonnull_len[a]};
        } else if (atom_null_overlap[a] > len_tol) {
            semiring.status = CheckStatus::Fail;
            semiring.witness = Witness{"atom partially covered by a null window; the difference is neither "
                                       "a union of windows nor null: " + describe(atoms.atoms[a].intervals),
                                       {a}, atom_null_overlap[a]};
        }
        for (std::size_t b = a + 1; b < N && semiring.status == CheckStatus::Pass; ++b) {
            const double o = atom_overlap(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            if (o > len_tol) {
                semiring.status = CheckStatus::Fail;
                semiring.witness = Witness{"atoms overlap; their intersection is not a union of atoms", {a, b}, o};
            }
        }
    }
    if (semiring.status == CheckStatus::Pass) {
        for (const auto& m : members) {
            double nonnull = 0.0;
            for (std::size_t a = 0; a < N; ++a)
                if (m[a]) nonnull += atom_nonnull_len[a];
            if (!(nonnull > len_tol)) {
                semiring.status = CheckStatus::Fail;
                semiring.witness = Witness{"member is null", member_indices(m), nonnull};
                break;
            }
        }
    }
    report.add(semiring);

    // Axiom 3, finite content: every member is exactly the disjoint union of
    // the atoms it contains, so its trace sigma-algebra is generated.
    AxiomCheck local{"local_generation", CheckStatus::Pass, {},
                     "verified for the finitely generated family only"};
    for (const auto& m : members) {
        IntervalSet joined;
        double sum = 0.0;
        for (std::size_t a = 0; a < N; ++a)
            if (m[a]) {
                const auto& ivs = atoms.atoms[a].intervals;
                joined.insert(joined.end(), ivs.begin(), ivs.end());
                sum += atom_len[a];
            }
        const double realized = total_length(normalize(std::move(joined)));
        if (std::abs(realized - sum) > len_tol) {
            local.status = CheckStatus::Fail;
            local.witness = Witness{"member is not the disjoint union of its atoms", member_indices(m),
                                    std::abs(realized - sum)};
            break;
        }
    }
    report.add(local);

    // Axiom 4: whatever the atoms leave uncovered in the horizon must be null.
    AxiomCheck covering{"covering", CheckStatus::Pass, {}, ""};
    IntervalSet covered = nulls;
    for (const auto& atom : atoms.atoms) covered.insert(covered.end(), atom.intervals.begin(), atom.intervals.end());
    covered = normalize(std::move(covered));
    const IntervalSet gaps = subtract({atoms.horizon}, covered);
    const double gap_len = total_length(gaps);
    if (gap_len > len_tol) {
        covering.status = CheckStatus::Fail;
        covering.witness = Witness{"non-null time not covered by any window: " + describe(gaps), {}, gap_len};
    }
    report.add(covering);
    return report;
}

}  // namespace driftwin
