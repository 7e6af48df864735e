#include "driftwin/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "driftwin/error.hpp"

namespace driftwin {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool parse_row(const std::string& line, std::vector<double>& out) {
    out.clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        if (b == std::string::npos) return false;
        cell = cell.substr(b, e - b + 1);
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end != cell.c_str() + cell.size()) return false;
        out.push_back(v);
    }
    if (!line.empty() && line.back() == ',') return false;
    return !out.empty();
}

Json vector_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
    return a;
}

Json matrix_json(const Eigen::MatrixXd& M) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) a.push_back(vector_json(M.row(i).transpose()));
    return a;
}

Json intervals_json(const IntervalSet& set) {
    Json a = Json::array();
    for (const auto& iv : set) a.push_back({iv.lo, iv.hi});
    return a;
}

Eigen::VectorXd vector_from(const Json& j, const char* what) {
    if (!j.is_array()) throw Error(ErrorCode::InvalidInput, std::string(what) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number()) throw Error(ErrorCode::InvalidInput, std::string(what) + " must hold numbers");
        v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
    }
    return v;
}

template <class T>
T field(const Json& j, const char* key) {
    if (!j.contains(key)) throw Error(ErrorCode::InvalidInput, std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::InvalidInput, std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) out << (j ? "," : "") << fmt(M(i, j));
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::vector<double> row;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (!parse_row(line, row)) {
            if (rows.empty() && lineno == 1) continue;
            throw Error(ErrorCode::InvalidInput, "CSV line " + std::to_string(lineno) + " is not numeric");
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error(ErrorCode::InvalidInput, "CSV line " + std::to_string(lineno) + " has a different width");
        rows.push_back(row);
    }
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "CSV has no data rows");
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return M;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
    out << text;
}

WindowSpec windows_from_json(const Json& j) {
    if (!j.is_array() && (!j.is_object() || !j.contains("windows") || !j["windows"].is_array()))
        throw Error(ErrorCode::InvalidInput, "expected a window array or an object with a 'windows' array");
    WindowSpec spec;
    for (const auto& w : j.is_array() ? j : j["windows"]) {
        IntervalWindow win;
        win.id = field<std::string>(w, "id");
        const auto ivs = field<std::vector<std::vector<double>>>(w, "intervals");
        for (const auto& iv : ivs) {
            if (iv.size() != 2) throw Error(ErrorCode::InvalidInput, "window " + win.id + ": intervals are [lo, hi] pairs");
            win.intervals.push_back({iv[0], iv[1]});
        }
        spec.windows.push_back(std::move(win));
    }
    if (j.is_object() && j.contains("horizon")) {
        const auto h = field<std::vector<double>>(j, "horizon");
        if (h.size() != 2) throw Error(ErrorCode::InvalidInput, "horizon is a [lo, hi] pair");
        spec.horizon = Interval{h[0], h[1]};
    }
    return spec;
}

Json to_json(const TimeAtomSet& atoms) {
    Json j;
    j["horizon"] = {atoms.horizon.lo, atoms.horizon.hi};
    j["window_ids"] = atoms.window_ids;
    Json list = Json::array();
    for (const auto& a : atoms.atoms) {
        Json sig = Json::array();
        for (auto s : a.signature) sig.push_back(static_cast<int>(s));
        list.push_back({{"index", a.index}, {"signature", sig}, {"intervals", intervals_json(a.intervals)},
                        {"length", a.length}});
    }
    j["atoms"] = list;
    j["null_cell"] = intervals_json(atoms.null_cell);
    return j;
}

Json to_json(const ReconstructionResult& result) {
    return {{"P", vector_json(result.process.P)},
            {"D", matrix_json(result.process.D)},
            {"objective", result.objective},
            {"objective_trace", result.objective_trace},
            {"iterations", result.iterations},
            {"converged", result.converged}};
}

Json to_json(const AxiomReport& report) {
    Json checks = Json::array();
    for (const auto& c : report.checks) {
        Json cj{{"name", c.name}, {"status", to_string(c.status)}};
        if (c.witness)
            cj["witness"] = {{"detail", c.witness->detail},
                             {"indices", c.witness->indices},
                             {"deviation", c.witness->deviation}};
        if (!c.note.empty()) cj["note"] = c.note;
        checks.push_back(cj);
    }
    return {{"passed", report.passed()},
            {"exhaustive", report.exhaustive},
            {"checked", report.checked},
            {"max_residual", report.max_residual},
            {"checks", checks}};
}

Json to_json(const DemandProfile& profile) {
    return {{"hourly_rate", vector_json(profile.hourly_rate)},
            {"jump_mean", profile.jump_mean},
            {"jump_sd", profile.jump_sd},
            {"horizon_days", profile.horizon_days},
            {"start", format_iso8601(profile.start)}};
}

Json to_json(const DemandEstimate& estimate) {
    return {{"hourly_mean", vector_json(estimate.hourly_mean)},
            {"hourly_var", vector_json(estimate.hourly_var)},
            {"community_size", estimate.community_size}};
}

DemandProfile profile_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "profile must be a JSON object");
    DemandProfile p;
    if (!j.contains("hourly_rate")) throw Error(ErrorCode::InvalidInput, "missing field 'hourly_rate'");
    p.hourly_rate = vector_from(j["hourly_rate"], "hourly_rate");
    p.jump_mean = field<double>(j, "jump_mean");
    p.jump_sd = field<double>(j, "jump_sd");
    if (j.contains("horizon_days")) p.horizon_days = field<std::size_t>(j, "horizon_days");
    if (j.contains("start")) p.start = parse_iso8601(field<std::string>(j, "start"));
    validate_profile(p);
    return p;
}

DemandEstimate estimate_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "estimate must be a JSON object");
    DemandEstimate e;
    if (!j.contains("hourly_mean") || !j.contains("hourly_var"))
        throw Error(ErrorCode::InvalidInput, "estimate needs hourly_mean and hourly_var");
    e.hourly_mean = vector_from(j["hourly_mean"], "hourly_mean");
    e.hourly_var = vector_from(j["hourly_var"], "hourly_var");
    if (e.hourly_mean.size() != e.hourly_var.size() || e.hourly_mean.size() == 0)
        throw Error(ErrorCode::InvalidInput, "hourly_mean and hourly_var must have equal, nonzero length");
    if (e.hourly_mean.minCoeff() < 0.0 || e.hourly_var.minCoeff() < 0.0)
        throw Error(ErrorCode::InvalidInput, "estimate curves must be non-negative");
    if (j.contains("community_size")) e.community_size = field<std::size_t>(j, "community_size");
    return e;
}

}  // namespace driftwin
