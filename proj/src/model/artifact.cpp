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

#include "restcn/model/artifact.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "restcn/common/error.hpp"

namespace restcn::model {
namespace {

using nlohmann::json;

void write_floats(std::ostream& out, std::span<const float> values) {
  std::vector<char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void read_floats(std::istream& in, std::span<float> values, const char* what) {
  std::vector<char> buf(values.size() * 4);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw SchemaError(std::string("artifact truncated in ") + what);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i * 4 + b])) << (8 * b);
    }
    values[i] = std::bit_cast<float>(bits);
  }
}

}  // namespace

nlohmann::ordered_json config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["n_blocks"] = c.n_blocks;
  j["subblocks_per_block"] = c.subblocks_per_block;
  j["block_widths"] = c.block_widths;
  j["block_strides"] = c.block_strides;
  j["kernel"] = c.kernel;
  j["n_classes"] = c.n_classes;
  j["input_dim"] = c.input_dim;
  j["time_steps"] = c.time_steps;
  j["distill_temperature"] = c.distill_temperature;
  j["reduced"] = c.reduced;
  return j;
}

ModelConfig config_from_json(const json& j, ModelConfig c) {
  if (!j.is_object()) throw SchemaError("model config must be an object");
  static const std::set<std::string> known = {
      "n_blocks",  "subblocks_per_block", "block_widths", "block_strides",       "kernel",
      "n_classes", "input_dim",           "time_steps",   "distill_temperature", "reduced"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw SchemaError("unknown model config key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("n_blocks", c.n_blocks);
    get("subblocks_per_block", c.subblocks_per_block);
    get("block_widths", c.block_widths);
    get("block_strides", c.block_strides);
    get("kernel", c.kernel);
    get("n_classes", c.n_classes);
    get("input_dim", c.input_dim);
    get("time_steps", c.time_steps);
    get("distill_temperature", c.distill_temperature);
    get("reduced", c.reduced);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model config: ") + e.what());
  }
  return c;
}

void write_artifact(const Artifact& a, std::ostream& out) {
  nlohmann::ordered_json header;
  header["config"] = config_to_json(a.model.config());
  header["class_names"] = a.class_names;
  header["n_params"] = a.model.params().size();
  header["n_stats"] = a.model.stats().size();
  header["bn_calibrated"] = a.model.batchnorm_calibrated();
  out << kArtifactMagic << ' ' << kArtifactVersion << '\n' << header.dump() << '\n';
  write_floats(out, a.model.params());
  write_floats(out, a.model.stats());
  if (!out) throw Error("failed writing model artifact");
}

Artifact read_artifact(std::istream& in) {
  std::string magic_line;
  std::getline(in, magic_line);
  if (magic_line != std::string(kArtifactMagic) + " " + std::to_string(kArtifactVersion)) {
    throw SchemaError("not a version " + std::to_string(kArtifactVersion) + " model artifact");
  }
  std::string header_line;
  std::getline(in, header_line);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw ParseError(2, std::string("artifact header: ") + e.what());
  }
  try {
    const ModelConfig config = config_from_json(header.at("config"));
    Artifact a{ResTcn<float>(config), header.at("class_names").get<std::vector<std::string>>()};
    if (header.at("n_params").get<std::size_t>() != a.model.params().size() ||
        header.at("n_stats").get<std::size_t>() != a.model.stats().size()) {
      throw SchemaError("artifact parameter counts do not match its config");
    }
    if (!a.class_names.empty() && a.class_names.size() != config.n_classes) {
      throw SchemaError("artifact class_names length differs from n_classes");
    }
    read_floats(in, a.model.params(), "parameters");
    read_floats(in, a.model.stats(), "statistics");
    a.model.set_batchnorm_calibrated(header.at("bn_calibrated").get<bool>());
    return a;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("artifact header: ") + e.what());
  }
}

void save_artifact(const Artifact& artifact, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_artifact(artifact, out);
}

Artifact load_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_artifact(in);
}

}  // namespace restcn::model
