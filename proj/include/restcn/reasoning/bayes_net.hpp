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

// Discrete Bayesian networks with exact inference by enumerating the full
// joint distribution.
//
// JSON interchange, nodes in any order:
//
//     {"nodes": [{"name": "A", "states": ["a0", "a1"], "parents": [],
//                 "cpt": [[0.3, 0.7]]},
//                {"name": "B", "states": ["b0", "b1"], "parents": ["A"],
//                 "cpt": [[0.9, 0.1], [0.2, 0.8]]}]}
//
// CPT rows enumerate parent state combinations with the last parent varying
// fastest; each row lists the node's state probabilities.

#ifndef RESTCN_REASONING_BAYES_NET_HPP_
#define RESTCN_REASONING_BAYES_NET_HPP_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace restcn::reasoning {

struct BayesNode {
  std::string name;
  std::vector<std::string> states;
  std::vector<std::string> parents;
  std::vector<std::vector<double>> cpt;
};

using Evidence = std::map<std::string, std::string>;

class DiscreteBayesNet {
 public:
  // Parents must already be present, which keeps the graph acyclic. Throws
  // SchemaError on a malformed node or CPT.
  void add_node(BayesNode node);

  const std::vector<BayesNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t index_of(std::string_view name) const;
  std::size_t state_index(std::size_t node, std::string_view state) const;
  const std::vector<std::size_t>& parent_indices(std::size_t node) const {
    return parents_[node];
  }

  // Product of CPT entries; `assignment` holds one state index per node.
  double joint(std::span<const std::size_t> assignment) const;

  // Posterior over the query node's states. Throws InconsistentEvidence when
  // the evidence has probability zero.
  std::vector<double> infer(const Evidence& evidence, std::string_view query) const;

  nlohmann::ordered_json to_json() const;
  static DiscreteBayesNet from_json(const nlohmann::json& j);

 private:
  std::size_t cpt_row(std::size_t node, std::span<const std::size_t> assignment) const;

  std::vector<BayesNode> nodes_;
  std::vector<std::vector<std::size_t>> parents_;
};

}  // namespace restcn::reasoning

#endif  // RESTCN_REASONING_BAYES_NET_HPP_
