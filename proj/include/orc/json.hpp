#pragma once

#include <json.hpp>

namespace orc {

// Insertion-ordered so that schema order survives serialization.
using Json = nlohmann::ordered_json;

}  // namespace orc
