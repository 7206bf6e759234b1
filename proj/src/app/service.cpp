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

#include "restcn/app/service.hpp"

#include <cmath>

#include "httplib.h"
#include "restcn/common/error.hpp"
#include "restcn/data/dataset.hpp"
#include "restcn/model/trainer.hpp"
#include "restcn/reasoning/risk.hpp"

namespace restcn::app {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct BadRequest : Error {
  using Error::Error;
};

HttpResponse reply(int status, const ordered_json& body) { return {status, body.dump()}; }

HttpResponse error_reply(int status, const std::string& code, const std::string& message) {
  ordered_json e;
  e["error"] = {{"code", code}, {"message", message}};
  return reply(status, e);
}

json parse_body(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw BadRequest("body is not valid JSON");
  if (!j.is_object()) throw BadRequest("body must be a JSON object");
  return j;
}

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw BadRequest(std::string("missing field '") + key + "'");
  const json& v = j[key];
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    throw BadRequest(std::string("field '") + key + "' must be a finite number");
  }
  return v.get<double>();
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return number(j, key);
}

void require_fraction(double v, const char* key) {
  if (v < 0.0 || v > 1.0) throw BadRequest(std::string("field '") + key + "' must be in [0, 1]");
}

data::SkeletonSequence frames_from_json(const json& j) {
  if (!j.contains("frames") || !j["frames"].is_array() || j["frames"].empty()) {
    throw BadRequest("'frames' must be a non-empty array of frames");
  }
  data::SkeletonSequence seq;
  std::size_t f = 0;
  for (const json& frame : j["frames"]) {
    if (!frame.is_array() || frame.size() != data::kNumKeypoints) {
      throw BadRequest("frame " + std::to_string(f) + " must hold 17 keypoints");
    }
    data::Frame out;
    for (std::size_t k = 0; k < data::kNumKeypoints; ++k) {
      const json& kp = frame[k];
      if (!kp.is_array() || kp.size() != 2 || !kp[0].is_number() || !kp[1].is_number()) {
        throw BadRequest("frame " + std::to_string(f) + " keypoint " + std::to_string(k) +
                         " must be [x, y]");
      }
      out[k] = {kp[0].get<double>(), kp[1].get<double>()};
      if (!std::isfinite(out[k].x) || !std::isfinite(out[k].y)) {
        throw BadRequest("frame " + std::to_string(f) + " has a non-finite coordinate");
      }
    }
    seq.frames.push_back(out);
    ++f;
  }
  return seq;
}

}  // namespace

Service::Service(std::optional<model::Artifact> artifact, std::optional<json> report)
    : artifact_(std::move(artifact)), report_(std::move(report)) {}

Service::~Service() = default;

HttpResponse Service::handle(std::string_view method, std::string_view path,
                             std::string_view body) const {
  struct Route {
    std::string_view path, method;
  };
  static constexpr Route kRoutes[] = {{"/api/health", "GET"},
                                      {"/api/report", "GET"},
                                      {"/api/classify", "POST"},
                                      {"/api/whatif", "POST"}};
  const Route* route = nullptr;
  for (const auto& r : kRoutes) {
    if (r.path == path) route = &r;
  }
  if (route == nullptr) return error_reply(404, "not_found", "no route " + std::string(path));
  if (route->method != method) {
    return error_reply(405, "method_not_allowed", std::string(path) + " expects " +
                                                      std::string(route->method));
  }
  try {
    if (path == "/api/health") return reply(200, {{"status", "ok"}});
    if (path == "/api/report") {
      if (!report_) return error_reply(503, "unavailable", "no report loaded");
      return {200, report_->dump()};
    }
    if (path == "/api/classify") return classify(body);
    return whatif(body);
  } catch (const BadRequest& e) {
    return error_reply(400, "bad_request", e.what());
  } catch (const Error& e) {
    return error_reply(400, "bad_request", e.what());
  }
}

HttpResponse Service::classify(std::string_view body) const {
  if (!artifact_) return error_reply(503, "unavailable", "no model loaded");
  const json req = parse_body(body);
  const data::SkeletonSequence seq = frames_from_json(req);
  const auto pred = model::predict(artifact_->model, seq);
  const auto& names = artifact_->class_names;

  ordered_json heads = ordered_json::array();
  for (std::size_t m = 0; m < pred.block_probs.size(); ++m) {
    heads.push_back({{"head", "block" + std::to_string(m + 1)}, {"probs", pred.block_probs[m]}});
  }
  heads.push_back({{"head", "fusion"}, {"probs", pred.fusion_probs}});
  ordered_json out;
  out["heads"] = std::move(heads);
  out["rank1"] = pred.rank1 < names.size() ? names[pred.rank1] : std::to_string(pred.rank1);
  out["rank1Index"] = pred.rank1;
  out["classNames"] = names;
  out["uncalibrated"] = pred.uncalibrated;
  return reply(200, out);
}

HttpResponse Service::whatif(std::string_view body) const {
  const json req = parse_body(body);
  const reasoning::ImpactCosts costs{number(req, "alpha"), number(req, "beta")};
  if (costs.alpha < 0.0 || costs.beta < 0.0) throw BadRequest("alpha and beta must be >= 0");
  const double p_cough = number(req, "pCough");
  const double p_sneeze = number(req, "pSneeze");
  require_fraction(p_cough, "pCough");
  require_fraction(p_sneeze, "pSneeze");

  std::string cohort = "baseline";
  if (req.contains("cohort") && !req["cohort"].is_null()) {
    if (!req["cohort"].is_string()) throw BadRequest("'cohort' must be a string");
    cohort = req["cohort"].get<std::string>();
  }

  std::optional<double> sens = optional_number(req, "sensitivity");
  std::optional<double> spec = optional_number(req, "specificity");
  if (sens) require_fraction(*sens, "sensitivity");
  if (spec) require_fraction(*spec, "specificity");

  std::optional<reasoning::RiskProfile> baseline;
  if (report_) {
    const json& m = report_->at("baseline").at("metrics");
    baseline = reasoning::risk_error(costs, m.at("sensitivity").get<double>(),
                                     m.at("specificity").get<double>());
  }
  if (!sens || !spec) {
    if (!report_) throw BadRequest("no report loaded; give sensitivity and specificity");
    const json* metrics = nullptr;
    if (cohort == "baseline") {
      metrics = &report_->at("baseline").at("metrics");
    } else {
      const auto eq = cohort.find('=');
      if (eq == std::string::npos) throw BadRequest("cohort must be 'baseline' or 'attribute=value'");
      const std::string attr = cohort.substr(0, eq), value = cohort.substr(eq + 1);
      for (const json& c : report_->at("cohorts")) {
        if (c.at("attribute") == attr && c.at("value") == value) {
          if (c.at("absent").get<bool>()) throw BadRequest("cohort " + cohort + " is absent");
          metrics = &c.at("metrics");
        }
      }
      if (metrics == nullptr) throw BadRequest("unknown cohort " + cohort);
    }
    if (!sens) sens = metrics->at("sensitivity").get<double>();
    if (!spec) spec = metrics->at("specificity").get<double>();
  }

  const auto risk = reasoning::risk_error(costs, *sens, *spec);
  const auto flu = reasoning::assess_flu(p_cough, p_sneeze, risk.risk);
  ordered_json out;
  out["risk"] = risk.risk;
  out["pFluBase"] = flu.p_flu_base;
  out["pFluAdjusted"] = flu.p_flu_adjusted;
  out["biasVsBaseline"] =
      baseline ? json(reasoning::bias_risk(baseline->risk, risk.risk)) : json(nullptr);
  out["sensitivity"] = *sens;
  out["specificity"] = *spec;
  out["cohort"] = cohort;
  return reply(200, out);
}

int Service::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  for (const char* p : {"/api/health", "/api/report", "/api/classify", "/api/whatif"}) {
    server_->Get(p, forward);
    server_->Post(p, forward);
  }
  server_->set_error_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404) {
      const HttpResponse r = handle(req.method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, "application/json");
    }
  });
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void Service::serve() {
  if (!server_) throw Error("service not bound");
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace restcn::app
