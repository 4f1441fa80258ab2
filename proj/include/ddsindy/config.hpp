#pragma once

#include <map>
#include <string>
#include <vector>

#include "ddsindy/error.hpp"

namespace ddsindy {

/// Configuration / usage error; maps to exit code 2 in the CLI.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Sectioned key=value text (INI-style). Keys may repeat within a section;
/// order is preserved. Comment lines start with '#' or ';'.
class IniFile {
public:
    void set(const std::string& section, const std::string& key, const std::string& value);
    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback = "") const;
    std::vector<std::string> get_all(const std::string& section, const std::string& key) const;

    double num(const std::string& section, const std::string& key, double fallback) const;
    int integer(const std::string& section, const std::string& key, int fallback) const;
    bool flag(const std::string& section, const std::string& key, bool fallback) const;

    std::string render() const;

    static IniFile parse_text(const std::string& text);
    static IniFile parse_file(const std::string& path);

private:
    // section -> ordered (key, value) pairs
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections_;
};

/// Affine expression in one parameter: "k*name+c", "name-1", "-name", "3.5".
struct AffineExpr {
    bool is_constant = false;
    double constant = 0.0;
    std::string param;
    double scale = 1.0;
    double offset = 0.0;
};
AffineExpr parse_affine(const std::string& text);

std::vector<std::string> split_list(const std::string& text, char sep = ',');

} // namespace ddsindy
