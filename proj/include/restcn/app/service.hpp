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

// HTTP API over an immutable model artifact and report document.
//
//   GET  /api/health    {"status": "ok"}
//   GET  /api/report    the report document
//   POST /api/classify  {"frames": T x 17 x [x, y]}
//                       -> {"heads": [{"head", "probs"} x 5], "rank1", ...}
//   POST /api/whatif    {"alpha", "beta", "pCough", "pSneeze",
//                        "sensitivity"?, "specificity"?, "cohort"?}
//                       -> {"risk", "pFluBase", "pFluAdjusted", "biasVsBaseline", ...}
//
// Errors are {"error": {"code", "message"}} with status 400, 404, 405 or 503.

#ifndef RESTCN_APP_SERVICE_HPP_
#define RESTCN_APP_SERVICE_HPP_

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "restcn/model/artifact.hpp"

namespace httplib {
class Server;
}

namespace restcn::app {

struct HttpResponse {
  int status = 200;
  std::string body;
};

class Service {
 public:
  Service(std::optional<model::Artifact> artifact, std::optional<nlohmann::json> report);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Pure in (model, report, request); safe to call concurrently.
  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

  // Binds to host:port (port 0 picks a free one) and returns the bound port,
  // or -1 on failure. serve() then blocks until stop().
  int bind(const std::string& host, int port);
  void serve();
  void stop();

 private:
  HttpResponse classify(std::string_view body) const;
  HttpResponse whatif(std::string_view body) const;

  std::optional<model::Artifact> artifact_;
  std::optional<nlohmann::json> report_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace restcn::app

#endif  // RESTCN_APP_SERVICE_HPP_
