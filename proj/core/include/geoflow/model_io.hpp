#pragma once

#include <string>
#include <string_view>

#include "geoflow/graph.hpp"

namespace geoflow {

/// Parses the line-oriented model format and validates the result.
///
///   q <int>=2>
///   delta <float>              optional, default ln q (lattice)
///   ray <ID> attach <VERTEX>
///   compact none | point | matrix
///   state <VERTEX>
///   trans <V1> <V2> <prob>
///   exit <V> <RAY_ID> <prob>
///   entry <RAY_ID> <V> <prob>
///
/// '#' starts a comment. Probabilities accept decimals or "p/q" and are kept
/// exact. A missing `compact` directive means a pure ray.
///
/// Throws Error with code Syntax, DeltaTooSmall, UnknownVertex, DuplicateRay
/// (all carrying the offending line) or InvalidModel for other violations.
QuotientModel parse_model(std::string_view text);

QuotientModel load_model(const std::string& path);

/// Inverse of parse_model on validated models.
std::string serialize_model(const QuotientModel& model);

}  // namespace geoflow
