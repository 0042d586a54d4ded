#pragma once

// Validation suite behind `ctap-sim validate` and the acceptance test binary.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ctap::experiments {

struct CriterionResult {
    int id = 0;
    std::string group;
    std::string title;
    bool passed = false;
    std::string measured;
    std::string expected;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    /// Group name ("transport", "fig4", "firstorder", "rates", "oracle",
    /// "purity", "invariants", "darkstate") or a criterion number.
    std::optional<std::string> only;
    /// Multiplies every integrator step; fault injection for the suite itself.
    double dt_scale = 1.0;
};

/// Known group names in criterion order.
const std::vector<std::string>& acceptance_groups();

/// Throws std::invalid_argument for an unknown `only` selector.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options = {});

/// One line per criterion; returns true when all passed.
bool print_report(const std::vector<CriterionResult>& results, std::ostream& out);

}  // namespace ctap::experiments
