#pragma once

#include "favmap/error.hpp"

#include <charconv>
#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace favmap::detail {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

/// Whole-string parse; throws Error on trailing garbage.
inline double parse_double(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw Error("not a number: '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s)
{
    s = trim(s);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw Error("not an integer: '" + std::string(s) + "'");
    return v;
}

inline std::size_t parse_size(std::string_view s)
{
    const long long v = parse_int(s);
    if (v < 0)
        throw Error("negative count: '" + std::string(s) + "'");
    return static_cast<std::size_t>(v);
}

inline std::string next_token(std::istream& in)
{
    std::string tok;
    if (!(in >> tok))
        throw Error("missing value");
    return tok;
}

/// Splits on commas; no quoting (none of the formats here need it).
inline std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

inline std::string_view strip_eol(std::string_view s)
{
    if (!s.empty() && s.back() == '\r')
        s.remove_suffix(1);
    return s;
}

} // namespace favmap::detail
