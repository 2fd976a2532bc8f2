#pragma once

#define GRAPHON_VERSION "0.1.0"

namespace graphon {

inline const char* version() { return GRAPHON_VERSION; }

}  // namespace graphon
