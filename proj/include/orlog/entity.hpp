#pragma once

#include <string>

namespace orlog {

/// A corpus member: stable identifier, display title and free-text
/// description (possibly empty).
struct Entity {
    std::string id;
    std::string title;
    std::string description;
};

}  // namespace orlog
