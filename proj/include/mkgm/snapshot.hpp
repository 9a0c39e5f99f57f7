#pragma once

#include <string>

#include "mkgm/kgm.hpp"
#include "mkgm/rem.hpp"

namespace mkgm {

// Binary field snapshot format, little-endian:
//   magic "MKGM1"
//   u32 version (1)
//   u32 field kind (0 scalar, 1 complex, 2 vector3)
//   3 x u32 dims
//   3 x f64 extents
//   f64 time
//   f64 epsilon
//   u32 name length, then the UTF-8 name
//   payload of f64, row-major, components interleaved per cell
// A state file is a concatenation of field records; round-trips are bit-exact.

void save_kgm_state(const std::string& path, const KgmState& s);
KgmState load_kgm_state(const std::string& path);

void save_rem_state(const std::string& path, const RemState& s);
RemState load_rem_state(const std::string& path);

}  // namespace mkgm
