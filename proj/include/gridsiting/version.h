#ifndef GRIDSITING_VERSION_H_
#define GRIDSITING_VERSION_H_

namespace gridsiting {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gridsiting

#endif  // GRIDSITING_VERSION_H_
