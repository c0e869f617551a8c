#include "orsnn/io/text.hpp"

#include <charconv>

#include "orsnn/error.hpp"

namespace orsnn {

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(std::string_view text, const std::string& what) {
    const std::string t = trim(text);
    double v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
        fail(ErrorKind::ParseError, what + ": '" + t + "' is not a number");
    }
    return v;
}

std::size_t parse_size(std::string_view text, const std::string& what) {
    const std::string t = trim(text);
    std::size_t v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
        fail(ErrorKind::ParseError, what + ": '" + t + "' is not a non-negative integer");
    }
    return v;
}

std::string trim(std::string_view text) {
    const auto b = text.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(b, e - b + 1));
}

}  // namespace orsnn
