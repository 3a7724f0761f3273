#ifndef GUANZERO_VERSION_H_
#define GUANZERO_VERSION_H_

namespace guanzero {
inline constexpr const char* kCodeVersion = "0.1.0";
}

#endif  // GUANZERO_VERSION_H_
