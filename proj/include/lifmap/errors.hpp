#pragma once

#include <stdexcept>
#include <string>

namespace lifmap {

// Error categories with a stable exit-code contract:
//   0 success, 2 config, 3 mapping, 4 capacity, 5 io.
enum class error_category : int {
    none = 0,
    config = 2,
    mapping = 3,
    capacity = 4,
    io = 5,
};

inline const char* category_name(error_category c) {
    switch (c) {
        case error_category::none: return "none";
        case error_category::config: return "config";
        case error_category::mapping: return "mapping";
        case error_category::capacity: return "capacity";
        case error_category::io: return "io";
    }
    return "unknown";
}

class sim_error : public std::runtime_error {
public:
    sim_error(error_category cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}
    error_category category() const noexcept { return cat_; }
    int exit_code() const noexcept { return static_cast<int>(cat_); }

private:
    error_category cat_;
};

struct config_error : sim_error {
    explicit config_error(const std::string& msg) : sim_error(error_category::config, msg) {}
};

struct mapping_error : sim_error {
    explicit mapping_error(const std::string& msg) : sim_error(error_category::mapping, msg) {}
};

struct capacity_error : sim_error {
    explicit capacity_error(const std::string& msg) : sim_error(error_category::capacity, msg) {}
};

struct io_error : sim_error {
    explicit io_error(const std::string& msg) : sim_error(error_category::io, msg) {}
};

// Degenerate (constant) series in a correlation. Not a process failure:
// callers report the metric as undefined and continue with exit code 0.
struct undefined_correlation : std::runtime_error {
    undefined_correlation() : std::runtime_error("correlation undefined for constant series") {}
};

}  // namespace lifmap
