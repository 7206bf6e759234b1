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

#include "restcn/app/pipeline.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "restcn/common/error.hpp"
#include "restcn/reasoning/networks.hpp"

namespace restcn::app {
namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw SchemaError("unknown key '" + key + "' in " + where);
  }
}

ordered_json metrics_json(const eval::MetricsReport& m) {
  ordered_json j;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["sensitivity"] = m.sensitivity;
  j["specificity"] = m.specificity;
  j["skipped_sensitivity"] = m.skipped_sensitivity;
  j["skipped_specificity"] = m.skipped_specificity;
  j["undefined"] = m.undefined;
  return j;
}

ordered_json risk_json(const reasoning::RiskProfile& r) {
  ordered_json j;
  j["fnmr"] = r.errors.fnmr;
  j["fmr"] = r.errors.fmr;
  j["risk"] = r.risk;
  return j;
}

std::string direction(double bias) {
  if (bias > 0.0) return "positive";
  if (bias < 0.0) return "negative";
  return "neutral";
}

std::optional<std::size_t> class_index(const std::vector<std::string>& names,
                                       const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

eval::ConfusionMatrix cm_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<std::uint64_t>>>();
  eval::ConfusionMatrix cm(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.size()) throw SchemaError("confusion matrix is not square");
    cm.counts[r] = rows[r];
  }
  return cm;
}

double recall(const eval::ConfusionMatrix& cm, std::size_t c) {
  const std::uint64_t row = cm.row_sum(c);
  return row == 0 ? 0.0 : static_cast<double>(cm.counts[c][c]) / static_cast<double>(row);
}

}  // namespace

void AppConfig::validate() const {
  model.validate();
  train.validate();
  costs.validate();
  if (port < 1 || port > 65535) throw DomainError("port must be in [1, 65535]");
}

AppConfig app_config_from_json(const json& j) {
  reject_unknown(j, {"model", "train", "cohorts", "costs", "positive_classes", "port"}, "config");
  AppConfig c;
  try {
    if (j.contains("model")) {
      c.model = model::config_from_json(j["model"]);
      c.model_n_classes_set = j["model"].contains("n_classes");
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      reject_unknown(t, {"epochs", "base_lr", "batch_size", "seed"}, "train");
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.base_lr = t.value("base_lr", c.train.base_lr);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.seed = t.value("seed", c.train.seed);
    }
    if (j.contains("cohorts")) {
      c.cohorts.clear();
      for (const auto& name : j["cohorts"].get<std::vector<std::string>>()) {
        const auto a = data::parse_attribute(name);
        if (!a) throw SchemaError("unknown cohort attribute '" + name + "'");
        c.cohorts.push_back(*a);
      }
    }
    if (j.contains("costs")) {
      const json& k = j["costs"];
      reject_unknown(k, {"alpha", "beta"}, "costs");
      c.costs.alpha = k.value("alpha", c.costs.alpha);
      c.costs.beta = k.value("beta", c.costs.beta);
    }
    c.positive_classes = j.value("positive_classes", c.positive_classes);
    c.port = j.value("port", c.port);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

AppConfig load_app_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError("config '" + path + "': " + e.what());
  }
  return app_config_from_json(j);
}

std::vector<data::Attribute> parse_cohort_list(const std::string& csv) {
  std::vector<data::Attribute> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto a = data::parse_attribute(item);
    if (!a) throw DomainError("unknown cohort attribute '" + item + "'");
    out.push_back(*a);
  }
  return out;
}

ordered_json history_to_json(const model::TrainHistory& h) {
  ordered_json j;
  j["steps"] = h.steps;
  j["diverged"] = h.diverged;
  j["divergence_message"] = h.divergence_message;
  ordered_json epochs = ordered_json::array();
  for (const auto& r : h.epochs) {
    ordered_json e;
    e["epoch"] = r.epoch;
    e["lr"] = r.lr;
    e["block_ce"] = r.block_ce;
    e["block_fkd"] = r.block_fkd;
    e["block_total"] = r.block_total;
    e["fusion"] = r.fusion;
    e["total"] = r.total;
    e["head_accuracy"] = r.head_accuracy;
    epochs.push_back(std::move(e));
  }
  j["epochs"] = std::move(epochs);
  return j;
}

Evaluation evaluate(const model::Artifact& artifact, const data::Dataset& dataset,
                    const std::vector<data::Attribute>& cohort_attributes) {
  const auto& names = artifact.class_names;
  const std::size_t n_classes = artifact.model.config().n_classes;
  if (dataset.num_classes() > n_classes) {
    throw DimensionError("dataset has " + std::to_string(dataset.num_classes()) +
                         " classes but the model has " + std::to_string(n_classes));
  }
  std::vector<std::size_t> remap(dataset.num_classes());
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    if (names.empty()) {
      remap[c] = c;
      continue;
    }
    const auto idx = class_index(names, dataset.class_names[c]);
    if (!idx) throw DimensionError("model has no class '" + dataset.class_names[c] + "'");
    remap[c] = *idx;
  }
  model::FeatureSet fs = model::make_features(dataset, artifact.model.config().time_steps);
  for (auto& y : fs.labels) y = remap[y];

  Evaluation ev;
  ev.truths = fs.labels;
  for (const auto& p : model::predict_features(artifact.model, fs)) ev.predictions.push_back(p.rank1);
  std::vector<data::Attributes> attrs;
  for (const auto& s : dataset.samples) attrs.push_back(s.attributes);
  ev.cohorts = eval::cohort_eval(ev.predictions, ev.truths, attrs, n_classes, cohort_attributes);
  return ev;
}

std::vector<std::size_t> resolve_positive_classes(const std::vector<std::string>& class_names,
                                                  const std::vector<std::string>& requested) {
  std::vector<std::size_t> out;
  if (!requested.empty()) {
    for (const auto& name : requested) {
      const auto idx = class_index(class_names, name);
      if (!idx) throw DomainError("unknown positive class '" + name + "'");
      out.push_back(*idx);
    }
    return out;
  }
  for (const char* name : {"cough", "sneeze"}) {
    if (const auto idx = class_index(class_names, name)) out.push_back(*idx);
  }
  if (out.empty()) out.push_back(0);
  return out;
}

ordered_json build_report(const ReportInputs& in) {
  const eval::CohortReport& cr = in.cohorts;
  ordered_json r;
  r["format"] = "restcn-report";
  r["version"] = 1;
  r["class_names"] = in.class_names;
  r["costs"] = {{"alpha", in.costs.alpha}, {"beta", in.costs.beta}};
  std::vector<std::string> positive;
  for (std::size_t c : in.positive_classes) {
    positive.push_back(c < in.class_names.size() ? in.class_names[c] : std::to_string(c));
  }
  r["positive_classes"] = positive;

  const auto base_risk = reasoning::risk_error(in.costs, cr.baseline);
  const double base_rel = eval::reliability(cr.baseline);
  ordered_json base;
  base["samples"] = cr.total;
  base["confusion_matrix"] = cr.confusion.counts;
  base["metrics"] = metrics_json(cr.baseline);
  base["reliability"] = base_rel;
  base["risk"] = risk_json(base_risk);
  base["trust"] = reasoning::trust(base_rel, base_risk.risk);
  r["baseline"] = std::move(base);

  ordered_json cohorts = ordered_json::array();
  for (const auto& e : cr.cohorts) {
    ordered_json c;
    c["attribute"] = data::to_string(e.attribute);
    c["value"] = e.value;
    c["samples"] = e.samples;
    c["absent"] = e.absent;
    if (e.absent) {
      c["direction"] = "absent";
    } else {
      const auto risk = reasoning::risk_error(in.costs, *e.metrics);
      const double rel = eval::reliability(*e.metrics);
      c["confusion_matrix"] = e.confusion.counts;
      c["metrics"] = metrics_json(*e.metrics);
      c["reliability"] = rel;
      c["risk"] = risk_json(risk);
      c["trust"] = reasoning::trust(rel, risk.risk);
      const double bias_rel = reasoning::bias_reliability(rel, base_rel);
      c["bias_reliability"] = bias_rel;
      c["bias_risk"] = reasoning::bias_risk(base_risk.risk, risk.risk);
      c["direction"] = direction(bias_rel);
    }
    cohorts.push_back(std::move(c));
  }
  r["cohorts"] = std::move(cohorts);

  const auto bias_net = reasoning::build_bias_network(cr, in.positive_classes);
  ordered_json bn;
  bn["composition"] =
      "P(valid=yes|g,p,v) = base * (r_g/base) * (r_p/base) * (r_v/base), clamped to [0,1]; "
      "r_x is the predicted-positive rate of cohort x";
  bn["baseline_valid_rate"] = bias_net.baseline_valid_rate;
  bn["flags"] = bias_net.flags;
  bn["p_match"] = bias_net.net.infer({}, "match")[0];
  bn["network"] = bias_net.net.to_json();
  r["bias_network"] = std::move(bn);

  const auto cough = class_index(in.class_names, "cough");
  const auto sneeze = class_index(in.class_names, "sneeze");
  if (cough && sneeze && cr.confusion.row_sum(*cough) > 0 && cr.confusion.row_sum(*sneeze) > 0) {
    const auto flu = reasoning::assess_flu(recall(cr.confusion, *cough),
                                           recall(cr.confusion, *sneeze), base_risk.risk);
    r["flu"] = {{"source", "per-class recall of cough and sneeze, baseline risk"},
                {"p_cough", flu.p_cough},
                {"p_sneeze", flu.p_sneeze},
                {"risk", flu.risk},
                {"p_flu_base", flu.p_flu_base},
                {"p_flu_adjusted", flu.p_flu_adjusted}};
  } else {
    r["flu"] = nullptr;
  }
  return r;
}

std::vector<std::string> verify_report(const json& report) {
  std::vector<std::string> bad;
  auto expect = [&](const json& stored, double want, const std::string& what) {
    if (!stored.is_number() || stored.get<double>() != want) {
      bad.push_back(what + ": stored " + stored.dump() + ", recomputed " + json(want).dump());
    }
  };
  try {
    const reasoning::ImpactCosts costs{report.at("costs").at("alpha").get<double>(),
                                       report.at("costs").at("beta").get<double>()};
    auto check_section = [&](const json& s, const std::string& where) {
      const eval::MetricsReport m = eval::metrics_from_cm(cm_from_json(s.at("confusion_matrix")));
      const json& sm = s.at("metrics");
      expect(sm.at("accuracy"), m.accuracy, where + ".metrics.accuracy");
      expect(sm.at("precision"), m.precision, where + ".metrics.precision");
      expect(sm.at("sensitivity"), m.sensitivity, where + ".metrics.sensitivity");
      expect(sm.at("specificity"), m.specificity, where + ".metrics.specificity");
      const double sens = sm.at("sensitivity").get<double>();
      const double spec = sm.at("specificity").get<double>();
      const auto risk = reasoning::risk_error(costs, sens, spec);
      expect(s.at("risk").at("fnmr"), risk.errors.fnmr, where + ".risk.fnmr");
      expect(s.at("risk").at("fmr"), risk.errors.fmr, where + ".risk.fmr");
      expect(s.at("risk").at("risk"), risk.risk, where + ".risk.risk");
      const double rel = sm.at("accuracy").get<double>();
      expect(s.at("reliability"), rel, where + ".reliability");
      expect(s.at("trust"), reasoning::trust(rel, risk.risk), where + ".trust");
    };
    const json& base = report.at("baseline");
    check_section(base, "baseline");
    const double base_rel = base.at("reliability").get<double>();
    const double base_risk = base.at("risk").at("risk").get<double>();
    for (const json& c : report.at("cohorts")) {
      const std::string where =
          "cohort " + c.at("attribute").get<std::string>() + "=" + c.at("value").get<std::string>();
      if (c.at("absent").get<bool>()) {
        if (c.at("samples").get<std::size_t>() != 0) bad.push_back(where + ": absent with samples");
        continue;
      }
      check_section(c, where);
      const double rel = c.at("reliability").get<double>();
      const double bias_rel = reasoning::bias_reliability(rel, base_rel);
      expect(c.at("bias_reliability"), bias_rel, where + ".bias_reliability");
      expect(c.at("bias_risk"), reasoning::bias_risk(base_risk, c.at("risk").at("risk").get<double>()),
             where + ".bias_risk");
      if (c.at("direction") != direction(bias_rel)) bad.push_back(where + ".direction mismatch");
    }
    const json& flu = report.at("flu");
    if (!flu.is_null()) {
      expect(flu.at("risk"), base_risk, "flu.risk");
      const auto a = reasoning::assess_flu(flu.at("p_cough").get<double>(),
                                           flu.at("p_sneeze").get<double>(), base_risk);
      expect(flu.at("p_flu_base"), a.p_flu_base, "flu.p_flu_base");
      expect(flu.at("p_flu_adjusted"), a.p_flu_adjusted, "flu.p_flu_adjusted");
    }
  } catch (const std::exception& e) {
    bad.push_back(std::string("malformed report: ") + e.what());
  }
  return bad;
}

}  // namespace restcn::app
