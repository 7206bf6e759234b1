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

#include "restcn/app/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include "CLI11.hpp"
#include "restcn/app/pipeline.hpp"
#include "restcn/app/service.hpp"
#include "restcn/common/error.hpp"
#include "restcn/reasoning/risk.hpp"

namespace restcn::app {
namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void write_json(const ordered_json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError("'" + path + "': " + e.what());
  }
}

struct SynthArgs {
  std::string out;
  data::SynthConfig config;
  double noise = 0.05;
  std::optional<double> noise_left, noise_center, noise_right;
};

struct TrainArgs {
  std::string data, config, out, history;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  bool quiet = false;
};

struct EvalArgs {
  std::string model, data, config, report, cohorts, positive;
  std::optional<double> alpha, beta;
};

struct DiagnoseArgs {
  double p_cough = 0.0, p_sneeze = 0.0, alpha = 1.0, beta = 1.0;
  std::optional<double> sens, spec;
  std::string report;
  bool json_out = false;
};

struct ServeArgs {
  std::string host = "127.0.0.1", model, report;
  int port = 8080;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  data::SynthConfig c = a.config;
  c.noise_sigma_per_view = {{data::View::kLeft, a.noise_left.value_or(a.noise)},
                            {data::View::kCenter, a.noise_center.value_or(a.noise)},
                            {data::View::kRight, a.noise_right.value_or(a.noise)}};
  const data::Dataset ds = data::generate_synthetic(c);
  data::save_dataset(ds, a.out);
  out << "wrote " << ds.size() << " samples, " << ds.num_classes() << " classes to " << a.out
      << '\n';
  return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  AppConfig cfg = a.config.empty() ? AppConfig{} : load_app_config(a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  const data::Dataset ds = data::load_dataset(a.data);
  if (ds.empty()) throw DomainError("dataset '" + a.data + "' is empty");
  if (cfg.model_n_classes_set && cfg.model.n_classes != ds.num_classes()) {
    throw DomainError("config n_classes " + std::to_string(cfg.model.n_classes) +
                      " but the dataset has " + std::to_string(ds.num_classes()) + " classes");
  }
  cfg.model.n_classes = ds.num_classes();
  cfg.validate();

  model::Artifact artifact{model::ResTcn<float>::init(cfg.model, cfg.train.seed), ds.class_names};
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t every = std::max<std::size_t>(1, cfg.train.epochs / 20);
  const auto history = model::train(artifact.model, ds, cfg.train, [&](const model::EpochRecord& r) {
    if (a.quiet || (r.epoch % every != 0 && r.epoch != 1)) return;
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "epoch " << r.epoch << "/" << cfg.train.epochs << " total " << r.total << " fkd "
        << r.mean_fkd() << " fusion_acc " << r.head_accuracy.back() << " (" << fixed3(s)
        << " s)\n";
  });
  model::save_artifact(artifact, a.out);
  const std::string history_path = a.history.empty() ? a.out + ".history.json" : a.history;
  write_json(history_to_json(history), history_path);
  if (history.diverged) {
    out << "training diverged (" << history.divergence_message
        << "); saved the last good checkpoint to " << a.out << '\n';
    return kExitRuntime;
  }
  out << "saved model to " << a.out << ", history to " << history_path << '\n';
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  AppConfig cfg = a.config.empty() ? AppConfig{} : load_app_config(a.config);
  if (!a.cohorts.empty()) cfg.cohorts = parse_cohort_list(a.cohorts);
  if (a.alpha) cfg.costs.alpha = *a.alpha;
  if (a.beta) cfg.costs.beta = *a.beta;
  if (!a.positive.empty()) {
    cfg.positive_classes.clear();
    std::stringstream ss(a.positive);
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) cfg.positive_classes.push_back(item);
    }
  }
  cfg.costs.validate();
  model::Artifact artifact = [&] {
    try {
      return model::load_artifact(a.model);
    } catch (const Error& e) {
      throw SchemaError(e.what());
    }
  }();
  const data::Dataset ds = data::load_dataset(a.data);
  if (ds.empty()) throw DomainError("dataset '" + a.data + "' is empty");
  const Evaluation ev = evaluate(artifact, ds, cfg.cohorts);
  ReportInputs in{ev.cohorts, artifact.class_names, cfg.costs,
                  resolve_positive_classes(artifact.class_names, cfg.positive_classes)};
  const ordered_json report = build_report(in);
  const auto problems = verify_report(report);
  if (!problems.empty()) throw Error("report failed its consistency check: " + problems.front());
  write_json(report, a.report);

  const auto& b = ev.cohorts.baseline;
  out << "samples " << ev.cohorts.total << " accuracy " << fixed3(b.accuracy) << " precision "
      << fixed3(b.precision) << " sensitivity " << fixed3(b.sensitivity) << " specificity "
      << fixed3(b.specificity) << " risk " << fixed3(report["baseline"]["risk"]["risk"].get<double>())
      << '\n';
  for (const auto& c : report["cohorts"]) {
    out << "  " << c["attribute"].get<std::string>() << "=" << c["value"].get<std::string>();
    if (c["absent"].get<bool>()) {
      out << "  absent\n";
      continue;
    }
    out << "  n=" << c["samples"].get<std::size_t>() << " reliability "
        << fixed3(c["reliability"].get<double>()) << " bias "
        << fixed3(c["bias_reliability"].get<double>()) << " (" << c["direction"].get<std::string>()
        << ")\n";
  }
  out << "wrote report to " << a.report << '\n';
  return kExitOk;
}

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  double sens = 1.0, spec = 1.0;
  std::string source = "none (sensitivity = specificity = 1)";
  if (!a.report.empty()) {
    const json r = read_json(a.report);
    try {
      sens = r.at("baseline").at("metrics").at("sensitivity").get<double>();
      spec = r.at("baseline").at("metrics").at("specificity").get<double>();
    } catch (const json::exception& e) {
      throw SchemaError("report '" + a.report + "': " + e.what());
    }
    source = "report baseline";
  }
  if (a.sens) sens = *a.sens;
  if (a.spec) spec = *a.spec;
  if (a.sens || a.spec) source = a.report.empty() ? "flags" : "report baseline with flag overrides";
  const auto risk = reasoning::risk_error({a.alpha, a.beta}, sens, spec);
  const auto flu = reasoning::assess_flu(a.p_cough, a.p_sneeze, risk.risk);
  if (a.json_out) {
    ordered_json j;
    j["sensitivity"] = sens;
    j["specificity"] = spec;
    j["alpha"] = a.alpha;
    j["beta"] = a.beta;
    j["risk"] = risk.risk;
    j["p_cough"] = flu.p_cough;
    j["p_sneeze"] = flu.p_sneeze;
    j["p_flu_base"] = flu.p_flu_base;
    j["p_flu_adjusted"] = flu.p_flu_adjusted;
    out << j.dump() << '\n';
    return kExitOk;
  }
  out << "metrics source: " << source << '\n'
      << "sensitivity " << fixed3(sens) << " specificity " << fixed3(spec) << '\n'
      << "risk " << fixed3(risk.risk) << '\n'
      << "p_flu_base " << fixed3(flu.p_flu_base) << '\n'
      << "p_flu_adjusted " << fixed3(flu.p_flu_adjusted) << '\n';
  return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  if (a.port < 1 || a.port > 65535) throw DomainError("port must be in [1, 65535]");
  std::optional<model::Artifact> artifact;
  try {
    artifact = model::load_artifact(a.model);
  } catch (const Error& e) {
    throw SchemaError(e.what());
  }
  json report = read_json(a.report);
  const auto problems = verify_report(report);
  if (!problems.empty()) throw SchemaError("report is not self-consistent: " + problems.front());
  Service service(std::move(artifact), std::move(report));
  if (service.bind(a.host, a.port) < 0) {
    throw Error("cannot bind " + a.host + ":" + std::to_string(a.port));
  }
  out << "listening on http://" << a.host << ":" << a.port << std::endl;
  service.serve();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Res-TCN action recognition with fusion distillation, cohort bias and risk analysis"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic skeleton dataset");
  s->add_option("--out", synth.out, "Output dataset path")->required();
  s->add_option("--classes", synth.config.n_classes, "Number of classes")
      ->default_val(synth.config.n_classes);
  s->add_option("--per-class", synth.config.samples_per_class, "Samples per class")
      ->default_val(synth.config.samples_per_class);
  s->add_option("--frames", synth.config.frames, "Frames per sequence")
      ->default_val(synth.config.frames);
  s->add_option("--subjects", synth.config.n_subjects, "Distinct subjects")
      ->default_val(synth.config.n_subjects);
  s->add_option("--seed", synth.config.seed, "Random seed")->default_val(synth.config.seed);
  s->add_option("--noise", synth.noise, "Noise sigma for every view")->default_val(synth.noise);
  s->add_option("--noise-left", synth.noise_left, "Noise sigma, left view");
  s->add_option("--noise-center", synth.noise_center, "Noise sigma, center view");
  s->add_option("--noise-right", synth.noise_right, "Noise sigma, right view");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--data", train.data, "Training dataset")->required()->check(CLI::ExistingFile);
  t->add_option("--config", train.config, "JSON config file")->check(CLI::ExistingFile);
  t->add_option("--out", train.out, "Model artifact path")->required();
  t->add_option("--history", train.history, "History path (default OUT.history.json)");
  t->add_option("--seed", train.seed, "Overrides train.seed");
  t->add_option("--epochs", train.epochs, "Overrides train.epochs");
  t->add_flag("--quiet", train.quiet, "No progress output");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a model and write the report document");
  e->add_option("--model", ev.model, "Model artifact")->required()->check(CLI::ExistingFile);
  e->add_option("--data", ev.data, "Evaluation dataset")->required()->check(CLI::ExistingFile);
  e->add_option("--config", ev.config, "JSON config file")->check(CLI::ExistingFile);
  e->add_option("--cohorts", ev.cohorts, "Comma-separated attributes (gender,pose,view)");
  e->add_option("--report", ev.report, "Report output path")->required();
  e->add_option("--alpha", ev.alpha, "Cost of a false non-match");
  e->add_option("--beta", ev.beta, "Cost of a false match");
  e->add_option("--positive", ev.positive, "Comma-separated positive class names");

  DiagnoseArgs dg;
  auto* d = app.add_subcommand("diagnose", "Risk-adjusted flu probability");
  d->add_option("--p-cough", dg.p_cough, "Pr(cough)")->required();
  d->add_option("--p-sneeze", dg.p_sneeze, "Pr(sneeze)")->required();
  d->add_option("--alpha", dg.alpha, "Cost of a false non-match")->default_val(dg.alpha);
  d->add_option("--beta", dg.beta, "Cost of a false match")->default_val(dg.beta);
  d->add_option("--sens", dg.sens, "Sensitivity");
  d->add_option("--spec", dg.spec, "Specificity");
  d->add_option("--report", dg.report, "Report whose baseline metrics to use")
      ->check(CLI::ExistingFile);
  d->add_flag("--json", dg.json_out, "Print JSON");

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "Serve the HTTP API");
  v->add_option("--port", sv.port, "TCP port")->default_val(sv.port);
  v->add_option("--host", sv.host, "Bind address")->default_val(sv.host);
  v->add_option("--model", sv.model, "Model artifact")->required()->check(CLI::ExistingFile);
  v->add_option("--report", sv.report, "Report document")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << '\n';
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (t->parsed()) return cmd_train(train, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (d->parsed()) return cmd_diagnose(dg, out);
    return cmd_serve(sv, out);
  } catch (const DivergenceError& x) {
    err << "error: " << x.what() << '\n';
    return kExitRuntime;
  } catch (const ParseError& x) {
    err << "error: " << x.what() << '\n';
    return kExitUsage;
  } catch (const SchemaError& x) {
    err << "error: " << x.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& x) {
    err << "error: " << x.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& x) {
    err << "error: " << x.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& x) {
    err << "error: " << x.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace restcn::app
