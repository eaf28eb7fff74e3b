#include "pmvc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pmvc {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& want) {
    throw std::runtime_error("config key '" + key + "': cannot parse '" + value + "' as " + want);
}

}  // namespace

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(csv);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

Config Config::from_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     " is not key=value: " + line);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw std::runtime_error("empty config key on line " + std::to_string(lineno));
        cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) bad_value(key, it->second, "a number");
        return v;
    } catch (const std::logic_error&) {
        bad_value(key, it->second, "a number");
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const int v = std::stoi(it->second, &used);
        if (used != it->second.size()) bad_value(key, it->second, "an integer");
        return v;
    } catch (const std::logic_error&) {
        bad_value(key, it->second, "an integer");
    }
}

std::uint64_t Config::get_uint64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(it->second, &used);
        if (used != it->second.size()) bad_value(key, it->second, "an unsigned integer");
        return v;
    } catch (const std::logic_error&) {
        bad_value(key, it->second, "an unsigned integer");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v, "a boolean");
}

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<int> out;
    for (const auto& f : split_list(it->second)) {
        try {
            out.push_back(std::stoi(f));
        } catch (const std::logic_error&) {
            bad_value(key, it->second, "a comma-separated integer list");
        }
    }
    return out;
}

std::vector<std::string> Config::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

}  // namespace pmvc
