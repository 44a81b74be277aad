#ifndef TXGC_CORE_COMMON_HPP
#define TXGC_CORE_COMMON_HPP

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace txgc {

// Error categories map 1:1 onto C API status codes and CLI exit codes.
enum class StatusCode : int {
    Ok = 0,
    ConfigError = 2,
    DataError = 3,
    InternalError = 4,
};

class Error : public std::runtime_error {
  public:
    Error(StatusCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    StatusCode code() const { return code_; }

  private:
    StatusCode code_;
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& msg) : Error(StatusCode::ConfigError, msg) {}
};

class DataError : public Error {
  public:
    explicit DataError(const std::string& msg) : Error(StatusCode::DataError, msg) {}
};

class InternalError : public Error {
  public:
    explicit InternalError(const std::string& msg) : Error(StatusCode::InternalError, msg) {}
};

// Shortest decimal form that parses back to the same double. Used for all
// CSV output so reruns are byte-identical.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_view(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim_view(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace txgc

#endif
