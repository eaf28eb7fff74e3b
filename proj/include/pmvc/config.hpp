#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pmvc {

/// Flat key=value configuration with dotted section prefixes. Lines starting
/// with '#' are comments; later assignments win.
class Config {
public:
    static Config from_file(const std::filesystem::path& file);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

    /// Keys beginning with `prefix`, in lexicographic order.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(const std::string& csv);

}  // namespace pmvc
