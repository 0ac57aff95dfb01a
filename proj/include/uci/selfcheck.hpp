#pragma once

#include <functional>
#include <iosfwd>

namespace uci {

struct SelfcheckOptions {
    /// Candidate BCE under test; tests inject broken variants to prove the
    /// harness actually catches them. Defaults to the production bce_loss.
    std::function<double(double, int)> bce_fn;
};

/// Gradient, closed-form-loss and AUC-oracle checks; one line per check.
/// Returns true when everything passed.
bool run_selfcheck(std::ostream& out, const SelfcheckOptions& options = {});

} // namespace uci
