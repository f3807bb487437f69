#pragma once

#include "dnnr/predictor.hpp"

#include <json.hpp>

namespace dnnr {

using Json = nlohmann::json;

Json to_json_array(const Vector& v);
Vector vector_from_json(const Json& j);
Json to_json_rows(const Matrix& m);
Matrix matrix_from_json(const Json& j);

void to_json(Json& j, const ScalingWeights& w);
void from_json(const Json& j, ScalingWeights& w);

void to_json(Json& j, const AnchorTrace& a);
void from_json(const Json& j, AnchorTrace& a);

void to_json(Json& j, const PredictionTrace& t);
void from_json(const Json& j, PredictionTrace& t);

}  // namespace dnnr
