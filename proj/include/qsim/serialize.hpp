#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qsim/operator_core.hpp"

namespace qsim {

using Json = nlohmann::json;

// {"dim": n, "re": [...], "im": [...]} with entries in row-major order.
Json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const Json& j);

Json real_matrix_to_json(const RealMatrix& m);  // nested rows

// CSV reals carry 17 significant digits so doubles round-trip.
std::string csv_real(double x);
std::string csv_escape(const std::string& field);

}  // namespace qsim
