#ifndef CONSTANCY_COMMON_HPP
#define CONSTANCY_COMMON_HPP

#include <stdexcept>
#include <string>

namespace constancy {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorCategory : int {
    usage     = 1,
    data      = 2,
    numerical = 3,
    internal  = 4,
};

// All library errors carry a short machine-readable code ("singular-information",
// "degenerate-fit", ...) plus a human message.
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message),
          category_(category),
          code_(std::move(code)) {}

    ErrorCategory category() const { return category_; }
    const std::string& code() const { return code_; }

private:
    ErrorCategory category_;
    std::string code_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
    throw Error(ErrorCategory::usage, "usage", msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
    throw Error(ErrorCategory::data, "data", msg);
}
[[noreturn]] inline void throw_domain(const std::string& msg) {
    throw Error(ErrorCategory::data, "domain", msg);
}
[[noreturn]] inline void throw_singular_information(const std::string& msg) {
    throw Error(ErrorCategory::numerical, "singular-information", msg);
}
[[noreturn]] inline void throw_degenerate_fit(const std::string& msg) {
    throw Error(ErrorCategory::numerical, "degenerate-fit", msg);
}
[[noreturn]] inline void throw_degenerate_weight(const std::string& msg) {
    throw Error(ErrorCategory::numerical, "degenerate-weight", msg);
}
[[noreturn]] inline void throw_out_of_range_alternative(const std::string& msg) {
    throw Error(ErrorCategory::numerical, "alternative-out-of-range", msg);
}
[[noreturn]] inline void throw_internal(const std::string& msg) {
    throw Error(ErrorCategory::internal, "internal", msg);
}

} // namespace constancy

#endif
