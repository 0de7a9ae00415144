#pragma once

#include "scatterkit/errors.hpp"
#include "scatterkit/linop.hpp"
#include "scatterkit/twobody.hpp"
#include "scatterkit/multibody.hpp"
#include "scatterkit/modelspace.hpp"
#include "scatterkit/diagnostics.hpp"

namespace scatterkit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace scatterkit
