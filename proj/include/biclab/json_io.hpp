#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace biclab {

using nlohmann::json;

/// Serializes with every floating-point value printed to 17 significant
/// digits, keys sorted, two-space indent and '\n' line endings.
std::string dump_json(const json& value);

/// Decimal text of a double with 17 significant digits.
std::string format_double(double x);

json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);
json to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

/// 64-bit FNV-1a of a byte string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace biclab
