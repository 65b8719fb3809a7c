#pragma once

#include <stdexcept>
#include <string>

namespace mtr {

// All recoverable failures surface as Error; the CLI catches it at top level.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

}  // namespace mtr
