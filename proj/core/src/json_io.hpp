// Copyright 2026 The Macop Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MACOP_SRC_JSON_IO_HPP_
#define MACOP_SRC_JSON_IO_HPP_

// nlohmann bindings for the core types; internal to the library.

#include "json.hpp"
#include "macop/checkpoint.hpp"
#include "macop/marl.hpp"

namespace macop {

void to_json(nlohmann::json& j, const NetSpec& s);
void from_json(const nlohmann::json& j, NetSpec& s);
void to_json(nlohmann::json& j, const ParamStore& p);
void from_json(const nlohmann::json& j, ParamStore& p);
void to_json(nlohmann::json& j, const QNet& q);
void from_json(const nlohmann::json& j, QNet& q);
void to_json(nlohmann::json& j, const ReturnStats& r);
void from_json(const nlohmann::json& j, ReturnStats& r);
void to_json(nlohmann::json& j, const TeammateGroup& g);
void from_json(const nlohmann::json& j, TeammateGroup& g);
void to_json(nlohmann::json& j, const EgoPolicy& e);
void from_json(const nlohmann::json& j, EgoPolicy& e);

// Reals that may be infinite or absent.
nlohmann::json real_to_json(double v);
double real_from_json(const nlohmann::json& j);

nlohmann::json parse_json(const std::string& text, const char* what);

}  // namespace macop

#endif  // MACOP_SRC_JSON_IO_HPP_
