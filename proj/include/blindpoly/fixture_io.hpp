#pragma once

// JSON fixtures for jitter instances, shared with other implementations.
//
//   {
//     "N": 30, "domain_lo": -3.0, "domain_hi": 3.0, "delta": 5.0,
//     "K": 3, "L": 3, "seed": 42, "period": 0.20689655172413793,
//     "u": [N],  "x": [N],  "W": [[L] x K],  "Y": [[L] x N]
//   }
//
// Matrices are arrays of rows. Floats are written with 17 significant digits,
// which round-trips every double exactly.

#include "blindpoly/jitter.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace blindpoly {

/// Serializes with floats as %.17g; non-finite floats become null.
std::string dump_json(const nlohmann::json& doc, int indent = 2);

nlohmann::json vector_to_json(const Vector& v);
nlohmann::json matrix_to_json(const Matrix& m);
Vector vector_from_json(const nlohmann::json& j);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const JitterInstance& instance);
JitterInstance instance_from_json(const nlohmann::json& doc);

void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

void write_fixture(const std::filesystem::path& path, const JitterInstance& instance);
JitterInstance read_fixture(const std::filesystem::path& path);

}  // namespace blindpoly
