#pragma once

#include <string>
#include <vector>

#include "ddsindy/config.hpp"

namespace ddsindy {

/// CLI entry points. Exit codes: 0 success, 2 usage/config error,
/// 3 numerical/identification failure.
int cmd_simulate(const IniFile& ini);
int cmd_identify(const IniFile& ini);
int cmd_optimize(const IniFile& ini);
int cmd_report(const std::vector<std::string>& inputs, const std::string& out_prefix, bool sweep);

/// Applies `--key value` style overrides onto config sections.
void apply_override(IniFile& ini, const std::string& section, const std::string& key,
                    const std::string& value);

} // namespace ddsindy
