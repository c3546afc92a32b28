#pragma once

#include <optional>
#include <string>

#include "situ3d/scenegen.hpp"

namespace situ3d::testsupport {

// A second, independently written answerer for generated questions. It
// parses the question text and answers from raw scene geometry using its
// own trigonometry (bearing angles in the world frame, no realignment
// matrices), so it shares no code path with the generator's oracle.
std::optional<std::string> independent_answer(const scene::Scene& scene,
                                              const geom::SituationVector& gt,
                                              const std::string& question);

} // namespace situ3d::testsupport
