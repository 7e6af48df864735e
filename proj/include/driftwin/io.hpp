#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftwin/reconstruction.hpp"
#include "driftwin/report.hpp"
#include "driftwin/water_case.hpp"
#include "driftwin/window_algebra.hpp"

namespace driftwin {

using Json = nlohmann::ordered_json;

/// Plain numeric CSV, one matrix row per line, values printed with %.17g.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& M);
/// Reads a rectangular numeric CSV. A first line that does not parse as numbers
/// is treated as a header. Throws InvalidInput.
Eigen::MatrixXd read_matrix_csv(std::istream& in);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// {"windows": [{"id": ..., "intervals": [[lo, hi], ...]}, ...], "horizon": [lo, hi]?}, or just the windows array.
struct WindowSpec {
    std::vector<IntervalWindow> windows;
    std::optional<Interval> horizon;
};
WindowSpec windows_from_json(const Json& j);

Json to_json(const TimeAtomSet& atoms);
Json to_json(const ReconstructionResult& result);
Json to_json(const AxiomReport& report);
Json to_json(const DemandProfile& profile);
Json to_json(const DemandEstimate& estimate);

DemandProfile profile_from_json(const Json& j);
DemandEstimate estimate_from_json(const Json& j);

}  // namespace driftwin
