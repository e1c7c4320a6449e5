#pragma once

#include <string>

#include <json.hpp>

#include "embedlab/network.hpp"

namespace embedlab {

using Json = nlohmann::ordered_json;

// Wire formats (keys are part of the CLI contract):
//   network: {"activation":"tanh"|"relu","input_dim":int,"hidden":int,
//             "output_dim":int,"w":[[...]],"v":[[...]]}
//   dataset: {"loss":"squared"|"logistic","inputs":[[...]],"targets":[[...]]}
Json network_to_json(const NetworkParams& net);
NetworkParams network_from_json(const Json& j);
Json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const Json& j);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const char* what);

// Serializes with floating-point numbers printed to 17 significant digits so
// a parse of the output reproduces every double bit-exactly. nlohmann's own
// dump() prints shortest-round-trip forms instead, hence this writer.
std::string dump_json(const Json& j, int indent = 2);

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);  // IoError / ParseError

// "%.17g" rendering shared by the CSV writer.
std::string format_double(double x);

}  // namespace embedlab
