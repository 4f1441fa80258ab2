#pragma once

#include <string>

#include "ddsindy/error.hpp"

namespace ddsindy {

/// Per-component equation kind: renewal equations relate x(t) itself to the
/// memory integral; delay integro-differential equations relate x'(t) to it.
enum class EquationKind { RE, DIDE };

inline std::string to_string(EquationKind k) { return k == EquationKind::RE ? "RE" : "DIDE"; }

inline EquationKind equation_kind_from_string(const std::string& s) {
    if (s == "RE") return EquationKind::RE;
    if (s == "DIDE") return EquationKind::DIDE;
    throw Error("unknown equation kind '" + s + "' (expected RE|DIDE)");
}

} // namespace ddsindy
