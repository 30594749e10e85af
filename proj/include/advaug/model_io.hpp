#pragma once

#include <string>
#include <vector>

#include "advaug/net.hpp"

namespace advaug {

// Model file layout (all integers and floats little-endian):
//   "ADAW" | u32 version = 1 | u32 layer_count (weight matrices incl. classifier)
//   | u32 dims[layer_count + 1] | u8 activation[layer_count - 1]
//   | f64 parameters in the Network flat order (theta_c last).
std::vector<char> encode_model(const Network& net);
Network decode_model(const std::vector<char>& bytes);

void write_model(const std::string& path, const Network& net);
Network read_model(const std::string& path);

}  // namespace advaug
