#pragma once

namespace dwc {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace dwc
