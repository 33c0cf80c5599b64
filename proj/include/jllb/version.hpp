#ifndef JLLB_VERSION_HPP
#define JLLB_VERSION_HPP

namespace jllb {
inline constexpr const char* kToolkitVersion = "1.0.0";
}

#endif // JLLB_VERSION_HPP
