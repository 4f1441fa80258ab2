#include "ddsindy/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ddsindy {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

} // namespace

void IniFile::set(const std::string& section, const std::string& key, const std::string& value) {
    for (auto& [name, entries] : sections_)
        if (name == section) {
            entries.emplace_back(key, value);
            return;
        }
    sections_.push_back({section, {{key, value}}});
}

bool IniFile::has_section(const std::string& section) const {
    for (const auto& [name, entries] : sections_)
        if (name == section) return true;
    return false;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    for (const auto& [name, entries] : sections_)
        if (name == section)
            for (const auto& [k, v] : entries)
                if (k == key) return true;
    return false;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    std::string out = fallback;
    for (const auto& [name, entries] : sections_)
        if (name == section)
            for (const auto& [k, v] : entries)
                if (k == key) out = v;  // last assignment wins
    return out;
}

std::vector<std::string> IniFile::get_all(const std::string& section,
                                          const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [name, entries] : sections_)
        if (name == section)
            for (const auto& [k, v] : entries)
                if (k == key) out.push_back(v);
    return out;
}

double IniFile::num(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw ConfigError("config: [" + section + "] " + key + " = '" + v + "' is not a number");
    }
}

int IniFile::integer(const std::string& section, const std::string& key, int fallback) const {
    if (!has(section, key)) return fallback;
    const double v = num(section, key, 0.0);
    return static_cast<int>(v);
}

bool IniFile::flag(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config: [" + section + "] " + key + " = '" + v + "' is not a boolean");
}

std::string IniFile::render() const {
    std::ostringstream out;
    for (const auto& [name, entries] : sections_) {
        out << "[" << name << "]\n";
        for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
        out << "\n";
    }
    return out.str();
}

IniFile IniFile::parse_text(const std::string& text) {
    IniFile ini;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line[0] == '[') {
            const auto close = line.find(']');
            if (close == std::string::npos)
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(lineno));
            section = trim(line.substr(1, close - 1));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " + std::to_string(lineno) +
                              ": '" + line + "'");
        if (section.empty())
            throw ConfigError("config: key outside any section at line " + std::to_string(lineno));
        ini.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

AffineExpr parse_affine(const std::string& text) {
    const std::string t = trim(text);
    require(!t.empty(), "config: empty expression");
    AffineExpr out;
    // pure number?
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used == t.size()) {
            out.is_constant = true;
            out.constant = v;
            return out;
        }
    } catch (const std::exception&) {
    }
    std::string rest = t;
    // optional leading sign on the whole expression
    double sign = 1.0;
    if (rest[0] == '-') {
        sign = -1.0;
        rest = trim(rest.substr(1));
    } else if (rest[0] == '+') {
        rest = trim(rest.substr(1));
    }
    // optional scale "k*"
    const auto star = rest.find('*');
    if (star != std::string::npos) {
        try {
            out.scale = std::stod(rest.substr(0, star));
        } catch (const std::exception&) {
            throw ConfigError("config: bad scale in expression '" + text + "'");
        }
        rest = trim(rest.substr(star + 1));
    }
    out.scale *= sign;
    // name [+|- offset]
    std::size_t cut = rest.find_first_of("+-");
    out.param = trim(cut == std::string::npos ? rest : rest.substr(0, cut));
    if (out.param.empty()) throw ConfigError("config: missing parameter name in '" + text + "'");
    if (cut != std::string::npos) {
        try {
            out.offset = std::stod(rest.substr(cut));
        } catch (const std::exception&) {
            throw ConfigError("config: bad offset in expression '" + text + "'");
        }
    }
    return out;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace ddsindy
