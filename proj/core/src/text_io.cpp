#include "crowdtt/text_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <system_error>

#include "crowdtt/error.hpp"

namespace crowdtt::text {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, long long& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return std::to_string(v);
    return std::string(buf, ptr);
}

KeyValue KeyValue::parse(std::istream& in) {
    KeyValue kv;
    std::string line;
    std::size_t lineno = 0;
    std::string section;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#' || body.front() == ';') continue;
        if (body.front() == '[') {
            if (body.back() != ']') throw ParseError(lineno, "unterminated section header");
            const auto name = trim(body.substr(1, body.size() - 2));
            section = name.empty() ? std::string() : std::string(name) + '.';
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ParseError(lineno, "expected `key = value`");
        const std::string key = section + std::string(trim(body.substr(0, eq)));
        if (key == section) throw ParseError(lineno, "empty key");
        if (kv.entries_.count(key)) throw ParseError(lineno, "duplicate key `" + key + "`");
        kv.entries_.emplace(key, std::string(trim(body.substr(eq + 1))));
    }
    return kv;
}

KeyValue KeyValue::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return parse(in);
}

bool KeyValue::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& KeyValue::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw InvalidArgument("missing key `" + key + "`");
    return it->second;
}

std::string KeyValue::get_or(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KeyValue::get_double(const std::string& key) const {
    double v = 0.0;
    if (!parse_double(get(key), v)) throw InvalidArgument("key `" + key + "` is not a number");
    return v;
}

double KeyValue::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long KeyValue::get_int(const std::string& key) const {
    long long v = 0;
    if (!parse_int(get(key), v)) throw InvalidArgument("key `" + key + "` is not an integer");
    return v;
}

long long KeyValue::get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValue::get_u64(const std::string& key) const {
    const auto v = trim(get(key));
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
        throw InvalidArgument("key `" + key + "` is not an unsigned integer");
    return out;
}

std::uint64_t KeyValue::get_u64_or(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

bool KeyValue::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InvalidArgument("key `" + key + "` is not a boolean");
}

void KeyValue::set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

void KeyValue::set(const std::string& key, double value) { entries_[key] = format_double(value); }

std::vector<std::pair<std::string, std::string>> KeyValue::with_prefix(const std::string& prefix) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        out.emplace_back(it->first, it->second);
    }
    return out;
}

void KeyValue::write(std::ostream& out) const {
    for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace crowdtt::text
