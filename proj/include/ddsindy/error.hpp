#pragma once

#include <stdexcept>
#include <string>

namespace ddsindy {

/// Library-wide error type. All preconditions and I/O failures throw this.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

} // namespace ddsindy
