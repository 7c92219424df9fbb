#pragma once

#include <Eigen/Core>

namespace otafl {

/// Flat d-dimensional parameter / gradient / transmit-signal vector.
/// Every module trades in this one currency.
using ParamVector = Eigen::VectorXd;

inline bool all_finite(const ParamVector& v) { return v.allFinite(); }

}  // namespace otafl
