#pragma once

#include <stdexcept>
#include <string>

namespace dtnt {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Geometry
struct EmptyCloudError : Error { using Error::Error; };
struct InvalidCoordinateError : Error { using Error::Error; };

// Networks / shapes
struct ShapeError : Error { using Error::Error; };
struct CacheError : Error { using Error::Error; };
struct ConfigMismatchError : Error { using Error::Error; };

// Sequences / training
struct SequenceTooShortError : Error { using Error::Error; };
struct EmptyDatasetError : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Files / dataset layout
struct IoError : Error { using Error::Error; };
struct DatasetError : Error { using Error::Error; };

}  // namespace dtnt
