#pragma once

#include <vector>

#include "rcpolicy/data.hpp"
#include "rcpolicy/dgp.hpp"

namespace testing {

inline const std::vector<double> kReferenceMasses = {0.2170, 0.3440, 0.0521, 0.3137,
                                                  0.0109, 0.0294, 0.0034, 0.0294};
inline const std::vector<double> kReferenceBlips = {0.07, 0.08, 0.10, 0.11, 0.20, 0.21, 0.24, 0.25};

inline rcpolicy::Dataset draw(rcpolicy::DgpKind kind, std::size_t n, std::uint64_t seed) {
  return rcpolicy::generate(rcpolicy::DgpSpec::preset(kind), n, seed);
}

}  // namespace testing
