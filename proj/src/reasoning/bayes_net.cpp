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

#include "restcn/reasoning/bayes_net.hpp"

#include <algorithm>

#include <cmath>
#include <set>

#include "restcn/common/error.hpp"

namespace restcn::reasoning {
namespace {

constexpr double kRowTolerance = 1e-9;
constexpr std::size_t kMaxJointSize = std::size_t{1} << 24;

}  // namespace

void DiscreteBayesNet::add_node(BayesNode node) {
  const std::string& n = node.name;
  if (n.empty()) throw SchemaError("bayes net: node without a name");
  for (const auto& existing : nodes_) {
    if (existing.name == n) throw SchemaError("bayes net: duplicate node '" + n + "'");
  }
  if (node.states.empty()) throw SchemaError("bayes net: node '" + n + "' has no states");
  if (std::set<std::string>(node.states.begin(), node.states.end()).size() != node.states.size()) {
    throw SchemaError("bayes net: node '" + n + "' repeats a state");
  }
  std::vector<std::size_t> parent_idx;
  std::size_t rows = 1;
  for (const auto& p : node.parents) {
    const auto it = std::find_if(nodes_.begin(), nodes_.end(),
                                 [&](const BayesNode& b) { return b.name == p; });
    if (it == nodes_.end()) {
      throw SchemaError("bayes net: node '" + n + "' has unknown parent '" + p + "'");
    }
    const auto i = static_cast<std::size_t>(it - nodes_.begin());
    for (std::size_t q : parent_idx) {
      if (q == i) throw SchemaError("bayes net: node '" + n + "' lists parent '" + p + "' twice");
    }
    parent_idx.push_back(i);
    rows *= nodes_[i].states.size();
  }
  if (node.cpt.size() != rows) {
    throw SchemaError("bayes net: node '" + n + "' needs " + std::to_string(rows) +
                      " CPT rows, has " + std::to_string(node.cpt.size()));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = node.cpt[r];
    if (row.size() != node.states.size()) {
      throw SchemaError("bayes net: node '" + n + "' CPT row " + std::to_string(r) +
                        " has the wrong length");
    }
    double sum = 0.0;
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw SchemaError("bayes net: node '" + n + "' has a CPT entry outside [0, 1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      throw SchemaError("bayes net: node '" + n + "' CPT row " + std::to_string(r) +
                        " sums to " + std::to_string(sum));
    }
  }
  nodes_.push_back(std::move(node));
  parents_.push_back(std::move(parent_idx));
}

std::size_t DiscreteBayesNet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return i;
  }
  throw DomainError("bayes net: unknown node '" + std::string(name) + "'");
}

std::size_t DiscreteBayesNet::state_index(std::size_t node, std::string_view state) const {
  const auto& states = nodes_.at(node).states;
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (states[s] == state) return s;
  }
  throw DomainError("bayes net: node '" + nodes_[node].name + "' has no state '" +
                    std::string(state) + "'");
}

std::size_t DiscreteBayesNet::cpt_row(std::size_t node,
                                      std::span<const std::size_t> assignment) const {
  std::size_t row = 0;
  for (std::size_t p : parents_[node]) row = row * nodes_[p].states.size() + assignment[p];
  return row;
}

double DiscreteBayesNet::joint(std::span<const std::size_t> assignment) const {
  if (assignment.size() != nodes_.size()) throw DomainError("bayes net: partial assignment");
  double p = 1.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    p *= nodes_[i].cpt[cpt_row(i, assignment)].at(assignment[i]);
  }
  return p;
}

std::vector<double> DiscreteBayesNet::infer(const Evidence& evidence,
                                            std::string_view query) const {
  const std::size_t q = index_of(query);
  std::vector<long> fixed(nodes_.size(), -1);
  for (const auto& [name, state] : evidence) {
    const std::size_t i = index_of(name);
    fixed[i] = static_cast<long>(state_index(i, state));
  }
  std::size_t joint_size = 1;
  for (const auto& n : nodes_) {
    joint_size *= n.states.size();
    if (joint_size > kMaxJointSize) throw DomainError("bayes net too large for enumeration");
  }

  std::vector<double> post(nodes_[q].states.size(), 0.0);
  std::vector<std::size_t> a(nodes_.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (fixed[i] >= 0) a[i] = static_cast<std::size_t>(fixed[i]);
  }
  // Odometer over the free nodes.
  while (true) {
    post[a[q]] += joint(a);
    std::size_t i = a.size();
    while (i-- > 0) {
      if (fixed[i] >= 0) continue;
      if (++a[i] < nodes_[i].states.size()) break;
      a[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }
  double z = 0.0;
  for (double v : post) z += v;
  if (!(z > 0.0)) throw InconsistentEvidence("evidence has probability zero");
  for (double& v : post) v /= z;
  return post;
}

nlohmann::ordered_json DiscreteBayesNet::to_json() const {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : nodes_) {
    nlohmann::ordered_json j;
    j["name"] = n.name;
    j["states"] = n.states;
    j["parents"] = n.parents;
    j["cpt"] = n.cpt;
    nodes.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["nodes"] = std::move(nodes);
  return out;
}

DiscreteBayesNet DiscreteBayesNet::from_json(const nlohmann::json& j) {
  std::vector<BayesNode> pending;
  try {
    for (const auto& jn : j.at("nodes")) {
      BayesNode n;
      n.name = jn.at("name").get<std::string>();
      n.states = jn.at("states").get<std::vector<std::string>>();
      n.parents = jn.value("parents", std::vector<std::string>{});
      n.cpt = jn.at("cpt").get<std::vector<std::vector<double>>>();
      pending.push_back(std::move(n));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bayes net json: ") + e.what());
  }
  // Insert in topological order; a pass that places nothing means a cycle
  // or a missing parent.
  DiscreteBayesNet net;
  std::set<std::string> placed;
  while (!pending.empty()) {
    std::vector<BayesNode> rest;
    for (auto& n : pending) {
      bool ready = true;
      for (const auto& p : n.parents) ready = ready && placed.count(p);
      if (ready) {
        placed.insert(n.name);
        net.add_node(std::move(n));
      } else {
        rest.push_back(std::move(n));
      }
    }
    if (rest.size() == pending.size()) {
      throw SchemaError("bayes net json: cycle or unknown parent at node '" + rest.front().name +
                        "'");
    }
    pending = std::move(rest);
  }
  return net;
}

}  // namespace restcn::reasoning
