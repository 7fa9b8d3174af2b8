#pragma once

#include <string>

namespace plgnn {

// shortest round-trip decimal form via std::to_chars, so every text output
// is reproducible byte for byte
std::string format_double(double v);

}  // namespace plgnn
