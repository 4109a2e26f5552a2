#ifndef HOMM_VERSION_HPP
#define HOMM_VERSION_HPP

namespace homm {

inline constexpr const char* kVersion = "1.0.0";

} // namespace homm

#endif
