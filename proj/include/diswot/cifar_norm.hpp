#pragma once

// Per-channel RGB normalization constants applied after scaling bytes to
// [0,1]. Changing these changes every score; they are part of the
// reproducibility contract of score files. config/cifar_norm.json holds the
// same values and a test keeps the two in sync.

#include <array>

namespace diswot::cifar_norm {

inline constexpr std::array<double, 3> kCifar10Mean{0.4914, 0.4822, 0.4465};
inline constexpr std::array<double, 3> kCifar10Std{0.2470, 0.2435, 0.2616};

inline constexpr std::array<double, 3> kCifar100Mean{0.5071, 0.4865, 0.4409};
inline constexpr std::array<double, 3> kCifar100Std{0.2673, 0.2564, 0.2762};

}  // namespace diswot::cifar_norm
