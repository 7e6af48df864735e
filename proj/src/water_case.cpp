#include "driftwin/water_case.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "driftwin/error.hpp"
#include "driftwin/instances.hpp"
#include "driftwin/nnls.hpp"
#include "driftwin/parallel.hpp"
#include "driftwin/window_algebra.hpp"

namespace driftwin {

namespace {

constexpr double kSecondsPerHour = 3600.0;

double truncated_normal(double mean, double sd, std::mt19937_64& rng) {
    if (sd <= 0.0) return std::max(mean, 0.0);
    std::normal_distribution<double> normal(mean, sd);
    for (;;) {
        const double v = normal(rng);
        if (v >= 0.0) return v;
    }
}

// Hour-of-day cells as interval sets in Unix hours, repeated over [first_day, last_day).
std::vector<IntervalWindow> day_cells(std::int64_t first_day, std::int64_t last_day, std::size_t bins) {
    const double width = 24.0 / static_cast<double>(bins);
    std::vector<IntervalWindow> cells(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        cells[b].id = "bin" + std::to_string(b);
        for (std::int64_t d = first_day; d < last_day; ++d) {
            const double lo = 24.0 * static_cast<double>(d) + width * static_cast<double>(b);
            cells[b].intervals.push_back({lo, lo + width});
        }
    }
    return cells;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

}  // namespace

void validate_profile(const DemandProfile& profile) {
    if (profile.hourly_rate.size() != 24) throw Error(ErrorCode::InvalidInput, "hourly_rate needs 24 entries");
    if (!profile.hourly_rate.allFinite() || profile.hourly_rate.minCoeff() < 0.0)
        throw Error(ErrorCode::InvalidInput, "hourly rates must be finite and non-negative");
    if (!(profile.jump_mean > 0.0) || !std::isfinite(profile.jump_mean))
        throw Error(ErrorCode::InvalidInput, "jump_mean must be positive");
    if (!(profile.jump_sd >= 0.0) || !std::isfinite(profile.jump_sd))
        throw Error(ErrorCode::InvalidInput, "jump_sd must be non-negative");
    if (profile.horizon_days < 1) throw Error(ErrorCode::InvalidInput, "horizon_days must be at least 1");
    if (profile.start % 86400 != 0) throw Error(ErrorCode::InvalidInput, "start must be a UTC midnight");
}

DemandProfile default_profile() {
    DemandProfile p;
    p.hourly_rate.resize(24);
    p.hourly_rate << 7.6, 7.1, 7.1, 7.1, 7.6, 9.7, 16.8, 26.0, 25.0, 17.8, 14.3, 13.2,  //
        13.8, 13.2, 12.2, 12.2, 13.2, 16.3, 21.4, 24.5, 22.4, 18.3, 13.2, 9.7;
    p.jump_mean = 1.0;
    p.jump_sd = 0.5;
    return p;
}

Eigen::VectorXd expected_hourly_mean(const DemandProfile& profile) {
    return profile.hourly_rate * profile.jump_mean;
}

Eigen::VectorXd expected_hourly_var(const DemandProfile& profile) {
    return profile.hourly_rate * (profile.jump_mean * profile.jump_mean + profile.jump_sd * profile.jump_sd);
}

Simulation simulate_households(const DemandProfile& profile, std::size_t households, double reports_per_day,
                               std::uint64_t seed) {
    validate_profile(profile);
    if (households < 1) throw Error(ErrorCode::InvalidInput, "need at least one household");
    if (!(reports_per_day > 0.0) || !std::isfinite(reports_per_day))
        throw Error(ErrorCode::InvalidInput, "reports_per_day must be positive");

    const auto hours = static_cast<Eigen::Index>(24 * profile.horizon_days);
    const double horizon = static_cast<double>(hours);
    const double peak = profile.hourly_rate.maxCoeff();

    Simulation sim;
    sim.logs.resize(households);
    sim.consumption = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(households), hours);

    parallel_for(households, [&](std::size_t k) {
        std::mt19937_64 rng(derive_seed(seed, k));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        // Event times in hours since start by thinning a homogeneous process at the peak rate.
        std::vector<std::pair<double, double>> events;
        if (peak > 0.0) {
            std::exponential_distribution<double> gap(peak);
            for (double t = gap(rng); t < horizon; t += gap(rng)) {
                const auto hour = static_cast<Eigen::Index>(t);
                if (unit(rng) * peak < profile.hourly_rate(hour % 24)) {
                    const double v = truncated_normal(profile.jump_mean, profile.jump_sd, rng);
                    events.emplace_back(t, v);
                    sim.consumption(static_cast<Eigen::Index>(k), hour) += v;
                }
            }
        }

        MeterLog& log = sim.logs[k];
        log.household_id = "h" + std::to_string(k);
        log.readings.push_back({profile.start, 0.0});
        std::exponential_distribution<double> report_gap(reports_per_day / 24.0);
        std::size_t next_event = 0;
        double cumulative = 0.0;
        for (double t = report_gap(rng); t < horizon; t += report_gap(rng)) {
            const auto offset = static_cast<std::int64_t>(std::floor(t * kSecondsPerHour));
            const std::int64_t stamp = profile.start + offset;
            if (stamp <= log.readings.back().timestamp) continue;
            const double cutoff = static_cast<double>(offset) / kSecondsPerHour;
            while (next_event < events.size() && events[next_event].first <= cutoff)
                cumulative += events[next_event++].second;
            log.readings.push_back({stamp, cumulative});
        }
    });
    return sim;
}

DemandEstimate fit_demand(const std::vector<MeterLog>& logs, std::size_t bins) {
    if (logs.empty()) throw Error(ErrorCode::EmptyInput, "no meter logs");
    if (bins < 1) throw Error(ErrorCode::InvalidInput, "bins must be positive");

    std::vector<Eigen::MatrixXd> blocks;
    std::vector<Eigen::VectorXd> volumes;
    Eigen::Index rows = 0;
    for (const auto& log : logs) {
        if (log.readings.size() < 2)
            throw Error(ErrorCode::InsufficientReadings, "household " + log.household_id + " has fewer than two readings");
        std::vector<IntervalWindow> windows;
        Eigen::VectorXd dv(static_cast<Eigen::Index>(log.readings.size() - 1));
        for (std::size_t r = 1; r < log.readings.size(); ++r) {
            const auto& a = log.readings[r - 1];
            const auto& b = log.readings[r];
            if (b.timestamp <= a.timestamp)
                throw Error(ErrorCode::InvalidInput, "household " + log.household_id + ": timestamps not increasing");
            if (!(b.cumulative_liters >= a.cumulative_liters) || !std::isfinite(b.cumulative_liters))
                throw Error(ErrorCode::InvalidInput, "household " + log.household_id + ": meter value decreased");
            windows.push_back({std::to_string(r),
                               {{static_cast<double>(a.timestamp) / kSecondsPerHour,
                                 static_cast<double>(b.timestamp) / kSecondsPerHour}}});
            dv(static_cast<Eigen::Index>(r - 1)) = b.cumulative_liters - a.cumulative_liters;
        }
        const std::int64_t first_day = floor_div(log.readings.front().timestamp, 86400);
        const std::int64_t last_day = floor_div(log.readings.back().timestamp, 86400) + 1;
        blocks.push_back(coverage_matrix(windows, day_cells(first_day, last_day, bins)));
        volumes.push_back(std::move(dv));
        rows += volumes.back().size();
    }

    const auto B = static_cast<Eigen::Index>(bins);
    Eigen::MatrixXd C(rows, B);
    Eigen::VectorXd v(rows);
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        C.middleRows(at, blocks[k].rows()) = blocks[k];
        v.segment(at, volumes[k].size()) = volumes[k];
        at += volumes[k].size();
    }

    // Rows weighted by 1/sqrt(interval hours).
    const Eigen::VectorXd w = C.rowwise().sum().cwiseSqrt().cwiseInverse();
    const Eigen::VectorXd mean = nnls(w.asDiagonal() * C, w.cwiseProduct(v)).x;
    const Eigen::VectorXd resid_sq = (v - C * mean).array().square();
    const Eigen::VectorXd var = nnls(C, resid_sq).x;

    // Cell values are per cell; report per clock hour.
    const double cell_hours = 24.0 / static_cast<double>(bins);
    DemandEstimate est;
    est.hourly_mean = mean / cell_hours;
    est.hourly_var = var / cell_hours;
    est.community_size = 1;
    return est;
}

CommunityForecast predict_community(const DemandEstimate& estimate, std::size_t households, double quantile) {
    if (!(quantile > 0.0 && quantile < 1.0)) throw Error(ErrorCode::InvalidInput, "quantile must lie in (0, 1)");
    if (estimate.hourly_mean.size() != estimate.hourly_var.size())
        throw Error(ErrorCode::DimensionMismatch, "mean and variance curves differ in length");
    const double n = static_cast<double>(households);
    const double z = boost::math::quantile(boost::math::normal_distribution<double>(), quantile);
    CommunityForecast f;
    f.level = quantile;
    f.mean = n * estimate.hourly_mean;
    f.quantile = f.mean + z * (n * estimate.hourly_var.cwiseMax(0.0)).cwiseSqrt();
    if (households == 0) f.quantile.setZero();
    return f;
}

std::string format_iso8601(std::int64_t unix_seconds) {
    const auto t = static_cast<std::time_t>(unix_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::int64_t parse_iso8601(const std::string& text) {
    std::tm tm{};
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                    &tm.tm_min, &tm.tm_sec, &consumed) != 6)
        throw Error(ErrorCode::InvalidInput, "bad timestamp '" + text + "'");
    const std::string rest = text.substr(static_cast<std::size_t>(consumed));
    if (!(rest.empty() || rest == "Z")) throw Error(ErrorCode::InvalidInput, "bad timestamp '" + text + "'");
    if (tm.tm_mon < 1 || tm.tm_mon > 12 || tm.tm_mday < 1 || tm.tm_mday > 31 || tm.tm_hour > 23 || tm.tm_min > 59 ||
        tm.tm_sec > 60)
        throw Error(ErrorCode::InvalidInput, "timestamp out of range '" + text + "'");
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    return static_cast<std::int64_t>(timegm(&tm));
}

void write_meter_csv(std::ostream& out, const std::vector<MeterLog>& logs) {
    out << "household_id,timestamp_iso8601,cumulative_liters\n";
    char buf[64];
    for (const auto& log : logs)
        for (const auto& r : log.readings) {
            std::snprintf(buf, sizeof buf, "%.17g", r.cumulative_liters);
            out << log.household_id << ',' << format_iso8601(r.timestamp) << ',' << buf << '\n';
        }
}

std::vector<MeterLog> read_meter_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::EmptyInput, "empty meter CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "household_id,timestamp_iso8601,cumulative_liters")
        throw Error(ErrorCode::InvalidInput, "unexpected meter CSV header '" + line + "'");
    std::vector<MeterLog> logs;
    std::map<std::string, std::size_t> index;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, stamp, value;
        if (!std::getline(ss, id, ',') || !std::getline(ss, stamp, ',') || !std::getline(ss, value))
            throw Error(ErrorCode::InvalidInput, "meter CSV line " + std::to_string(lineno) + ": expected 3 fields");
        double liters = 0.0;
        try {
            std::size_t used = 0;
            liters = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidInput, "meter CSV line " + std::to_string(lineno) + ": bad volume");
        }
        auto [it, fresh] = index.emplace(id, logs.size());
        if (fresh) logs.push_back({id, {}});
        logs[it->second].readings.push_back({parse_iso8601(stamp), liters});
    }
    return logs;
}

}  // namespace driftwin
