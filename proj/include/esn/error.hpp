#pragma once

#include <stdexcept>
#include <string>

namespace esn {

// Error categories map 1:1 onto CLI exit codes.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace esn
