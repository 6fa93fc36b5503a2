#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

// Small helpers shared by the plain-text formats.
namespace crowdtt::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char delim);

// Strict numeric parsing: the whole field must be consumed.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

// Ordered key-value document. Lines are `key = value`; `#` starts a
// comment line; blank lines are ignored. Duplicate keys are a parse error.
// An INI-style `[section]` line prefixes the keys that follow with
// `section.`; `[]` returns to the top level.
class KeyValue {
public:
    static KeyValue parse(std::istream& in);
    static KeyValue load(const std::string& path);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int_or(const std::string& key, long long fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;

    void set(const std::string& key, std::string value);
    void set(const std::string& key, double value);

    // Keys starting with `prefix` (e.g. "portal."), in key order.
    std::vector<std::pair<std::string, std::string>> with_prefix(const std::string& prefix) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }
    // `key = value` lines in key order.
    void write(std::ostream& out) const;

private:
    std::map<std::string, std::string> entries_;
};

// FNV-1a, used to stamp artifacts with the configuration they came from.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace crowdtt::text
