#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace driftwin {

struct DemandProfile {
    Eigen::VectorXd hourly_rate = Eigen::VectorXd::Zero(24);  // events per hour, by hour of day (UTC)
    double jump_mean = 1.0;                                    // liters per event
    double jump_sd = 0.0;
    std::size_t horizon_days = 28;
    std::int64_t start = 1704067200;  // Unix seconds of the first midnight, 2024-01-01T00:00:00Z
};

struct MeterReading {
    std::int64_t timestamp = 0;  // Unix seconds
    double cumulative_liters = 0.0;
};

struct MeterLog {
    std::string household_id;
    std::vector<MeterReading> readings;
};

struct DemandEstimate {
    Eigen::VectorXd hourly_mean;  // liters per household per hour
    Eigen::VectorXd hourly_var;
    std::size_t community_size = 1;
};

struct Simulation {
    std::vector<MeterLog> logs;
    Eigen::MatrixXd consumption;  // households x (24 * horizon_days) liters per absolute hour
};

struct CommunityForecast {
    Eigen::VectorXd mean;
    Eigen::VectorXd quantile;
    double level = 0.5;
};

/// Throws InvalidInput on a malformed profile.
void validate_profile(const DemandProfile& profile);

/// Rate profile with a morning and an evening peak over a small night floor.
DemandProfile default_profile();

/// Expected liters per household for each hour of day: rate * jump_mean.
Eigen::VectorXd expected_hourly_mean(const DemandProfile& profile);
/// Compound-Poisson variance per hour of day: rate * (jump_mean^2 + jump_sd^2).
Eigen::VectorXd expected_hourly_var(const DemandProfile& profile);

/// Household k uses its own stream seeded by derive_seed(seed, k). Each log
/// starts with a zero reading at the profile start; later reading times come from
/// a Poisson process with reports_per_day and are rounded down to whole seconds.
Simulation simulate_households(const DemandProfile& profile, std::size_t households, double reports_per_day,
                               std::uint64_t seed);

/// Hour-of-day demand fit from consecutive reading pairs. `bins` cells split
/// each day evenly. Means come from NNLS on the fractional coverage system and
/// variances from NNLS of squared residuals on the same coverage. Throws
/// InsufficientReadings when a log has fewer than two readings and InvalidInput
/// on non-increasing timestamps or decreasing meter values.
DemandEstimate fit_demand(const std::vector<MeterLog>& logs, std::size_t bins = 24);

/// Community totals modelled as normal with mean n * mean and variance n * var.
CommunityForecast predict_community(const DemandEstimate& estimate, std::size_t households, double quantile);

std::string format_iso8601(std::int64_t unix_seconds);
/// Accepts YYYY-MM-DDTHH:MM:SS with an optional trailing Z; throws InvalidInput.
std::int64_t parse_iso8601(const std::string& text);

/// CSV with header household_id,timestamp_iso8601,cumulative_liters.
void write_meter_csv(std::ostream& out, const std::vector<MeterLog>& logs);
/// Rows are grouped by household in order of first appearance.
std::vector<MeterLog> read_meter_csv(std::istream& in);

}  // namespace driftwin
