#include "driftwin/report.hpp"

#include <algorithm>
#include <stdexcept>

#include "driftwin/error.hpp"

namespace driftwin {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::DegenerateWindow: return "DegenerateWindow";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::NullWindowMass: return "NullWindowMass";
        case ErrorCode::ConstantWDS: return "ConstantWDS";
        case ErrorCode::UnchainableAtom: return "UnchainableAtom";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::UncoveredAtom: return "UncoveredAtom";
        case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
        case ErrorCode::InsufficientReadings: return "InsufficientReadings";
        case ErrorCode::InvalidInput: return "InvalidInput";
    }
    return "Unknown";
}

const char* to_string(CheckStatus status) {
    switch (status) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::NotApplicable: return "not_applicable";
    }
    return "unknown";
}

bool AxiomReport::passed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const AxiomCheck& c) { return c.status == CheckStatus::Fail; });
}

const AxiomCheck& AxiomReport::at(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw std::out_of_range("no check named " + name);
}

void AxiomReport::add(AxiomCheck check) {
    if (check.status == CheckStatus::Fail && !check.witness)
        check.witness = Witness{"unspecified", {}, 0.0};
    checks.push_back(std::move(check));
}

}  // namespace driftwin
