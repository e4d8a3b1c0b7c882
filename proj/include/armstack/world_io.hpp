#pragma once

#include <cstdint>
#include <string>

#include "armstack/model.hpp"

namespace armstack::world_io {

/// Loads and validates a world description. Throws std::runtime_error with
/// file/line/column context on parse errors and with the offending entity
/// named on validation errors.
model::WorldModel load_world(const std::string& path);

/// Same as load_world but from an in-memory document. `origin` is used in
/// error messages.
model::WorldModel parse_world(const std::string& text,
                              const std::string& origin = "<string>");

/// Stable 64-bit digest of everything that defines a scenario: settings,
/// mounts, arms, environment geometry, objects, named poses.
std::uint64_t scenario_hash(const model::WorldModel& world);

}  // namespace armstack::world_io
