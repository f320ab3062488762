#ifndef DUMB_CORE_ERROR_HPP
#define DUMB_CORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dumb {

/// Exception carrying a stable machine-readable code ("shape-error",
/// "eval-error", ...) alongside the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace dumb

#endif
