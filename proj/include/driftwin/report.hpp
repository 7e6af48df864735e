#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace driftwin {

enum class CheckStatus { Pass, Fail, NotApplicable };

const char* to_string(CheckStatus status);

struct Witness {
    std::string detail;
    std::vector<std::size_t> indices;  // windows or atoms involved, meaning given by `detail`
    double deviation = 0.0;
};

struct AxiomCheck {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    std::optional<Witness> witness;  // always set when status == Fail
    std::string note;
};

/// Outcome of an axiom or compatibility check. `checked` counts the members or
/// families that were actually evaluated; `exhaustive` is false when a seeded
/// random subfamily was used instead.
struct AxiomReport {
    std::vector<AxiomCheck> checks;
    bool exhaustive = true;
    std::size_t checked = 0;
    double max_residual = 0.0;

    bool passed() const;
    const AxiomCheck& at(const std::string& name) const;
    void add(AxiomCheck check);
};

using CompatibilityReport = AxiomReport;

}  // namespace driftwin
