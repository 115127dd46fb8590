#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace riskrules {

/// Runs one subcommand (prep, train, rule, boost, eval, synth).
/// Returns 0 on success, 1 on a usage or validation error, 2 on a runtime
/// error. Machine artifacts go to files or `out`; messages go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace riskrules
