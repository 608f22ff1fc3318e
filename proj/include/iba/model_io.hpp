#pragma once

#include <string>

#include "iba/domains.hpp"

namespace iba {

// Textual serialization of a full problem instance (model, local state
// function, protagonist, d-set, fixed policies) in the `iba-model v1`
// format described in docs/model-format.md. Probabilities are written with
// 17 significant digits, so write/read round-trips are bit-exact.
std::string write_instance(const Domain& d);

// Parses the textual format; throws ModelError with a descriptive message
// on any structural problem. The returned model is finalized.
Domain read_instance(const std::string& text);

void save_instance(const Domain& d, const std::string& path);
Domain load_instance(const std::string& path);

}  // namespace iba
