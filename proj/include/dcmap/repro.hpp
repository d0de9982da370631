#pragma once

#include <string>
#include <vector>

namespace dcmap::repro {

// Built-in reference cases: seven canonical operating points from the
// power-electronics literature plus three closed-form consistency tables.
// Each check records the expected value, the computed value, and the
// tolerance so reports can show all three.

enum class CheckKind { Near, Below, Flag };

struct Check {
    std::string name;
    CheckKind kind;
    double expected;  // target (Near), bound (Below), 1.0 (Flag)
    double got;
    double tol;       // absolute tolerance (Near only)
    bool pass;
    std::string note;
};

struct Report {
    std::string title;
    std::vector<Check> checks;
    [[nodiscard]] bool passed() const;
};

/// Reference case k in 1..7.
Report example(int k);

/// Consistency table k in 2..4 (closed forms vs module-composed values).
Report table(int k);

/// Closed-form coefficients vs the finite-difference linearizer over the
/// scheme x topology x load grid.
Report oracle_grid();

/// All three tables plus the constant-on-time boundary-mode audio identities.
Report table_consistency();

/// Cross-cutting property checks (steady-state residuals, load-shift
/// invariances, deadbeat, audio null, phase behavior).
Report property_suite();

/// The full acceptance sequence: cases 1..7, the oracle grid, table
/// consistency, and the property suite.
std::vector<Report> acceptance();

}  // namespace dcmap::repro
