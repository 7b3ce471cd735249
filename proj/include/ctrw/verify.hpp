#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ctrw/cli.hpp"

namespace ctrw::verify {

// The acceptance suite. Each check produces deterministic tables (no
// timings) and a pass flag; `passed` additionally requires the check to
// finish inside its runtime budget.
struct CheckOutcome {
    int id = 0;
    std::string name;
    bool within_tolerance = false;
    bool passed = false;
    double seconds = 0.0;
    double budget_seconds = 0.0;
    std::string summary;
    std::vector<cli::Table> tables;
};

struct VerifyOptions {
    /// Reduced sample sizes and grids; same tolerances.
    bool quick = false;
    std::uint64_t seed = cli::kDefaultSeed;
    int workers = 1;
    /// Called after each check finishes.
    std::function<void(const CheckOutcome&)> on_check;
};

struct CheckInfo {
    int id;
    std::string name;
    double budget_seconds;
};

const std::vector<CheckInfo>& checks();

/// Runs check `id` (1..9). Throws DomainError for an unknown id.
CheckOutcome run_check(int id, const VerifyOptions& options);

std::vector<CheckOutcome> run_acceptance(const VerifyOptions& options);

/// "PASS"/"FAIL" line with timing.
std::string report_line(const CheckOutcome& outcome);

} // namespace ctrw::verify
