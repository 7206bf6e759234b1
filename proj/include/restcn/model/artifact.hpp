/*
 * Copyright 2026 The restcn Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Model artifact: a text header followed by raw parameters.
//
//     RESTCN-MODEL 1\n
//     {"config": {...}, "class_names": [...], "n_params": P, "n_stats": S,
//      "bn_calibrated": true}\n
//     P little-endian float32 parameters, then S float32 running statistics

#ifndef RESTCN_MODEL_ARTIFACT_HPP_
#define RESTCN_MODEL_ARTIFACT_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "restcn/model/res_tcn.hpp"

namespace restcn::model {

inline constexpr const char* kArtifactMagic = "RESTCN-MODEL";
inline constexpr int kArtifactVersion = 1;

struct Artifact {
  ResTcn<float> model;
  std::vector<std::string> class_names;
};

nlohmann::ordered_json config_to_json(const ModelConfig& config);
// Missing keys keep their defaults; unknown keys throw SchemaError.
ModelConfig config_from_json(const nlohmann::json& j, ModelConfig base = {});

void write_artifact(const Artifact& artifact, std::ostream& out);
Artifact read_artifact(std::istream& in);
void save_artifact(const Artifact& artifact, const std::string& path);
Artifact load_artifact(const std::string& path);

}  // namespace restcn::model

#endif  // RESTCN_MODEL_ARTIFACT_HPP_
