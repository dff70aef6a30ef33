#pragma once

#include <string>

#include "posgrowth/matrices.hpp"

namespace posgrowth {

// Model files are JSON objects, matrices row-major:
//   {"n": 3, "kind": "segment", "G": [[...]], "F": [[...]], "range": [a, A]}
//   {"n": 3, "kind": "vertices", "matrices": [[[...]], ...]}
// "n" is optional for vertex lists. Malformed input raises InvalidModel;
// matrices that fail validation raise the validation error.

ControlSet parse_model(const std::string& text);
ControlSet read_model_file(const std::string& path);
std::string model_to_json(const ControlSet& cs);

}  // namespace posgrowth
