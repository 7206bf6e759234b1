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

#include "restcn/data/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <set>

#include "json.hpp"
#include "restcn/common/error.hpp"

namespace restcn::data {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::vector<std::string> kGenderValues = {"male", "female"};
const std::vector<std::string> kPoseValues = {"stand", "walk"};
const std::vector<std::string> kViewValues = {"left", "center", "right"};

template <typename E>
std::optional<E> lookup(const std::vector<std::string>& values, std::string_view s) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

std::string required_string(const json& rec, const char* field, std::size_t line) {
  const auto it = rec.find(field);
  if (it == rec.end() || !it->is_string()) {
    throw ParseError(line, std::string("missing or non-string field '") + field + "'");
  }
  return it->get<std::string>();
}

struct RawRecord {
  LabeledSample sample;
  std::string action;
};

RawRecord parse_record(const std::string& text, std::size_t line) {
  json rec;
  try {
    rec = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line, std::string("invalid JSON: ") + e.what());
  }
  if (!rec.is_object()) throw ParseError(line, "record is not a JSON object");

  RawRecord out;
  LabeledSample& s = out.sample;
  s.id = required_string(rec, "id", line);
  s.attributes.subject_id = required_string(rec, "subject", line);
  const std::string gender = required_string(rec, "gender", line);
  const std::string pose = required_string(rec, "pose", line);
  const std::string view = required_string(rec, "view", line);
  out.action = required_string(rec, "action", line);

  if (auto g = parse_gender(gender)) {
    s.attributes.gender = *g;
  } else {
    throw ParseError(line, "unknown gender '" + gender + "'");
  }
  if (auto p = parse_pose(pose)) {
    s.attributes.pose = *p;
  } else {
    throw ParseError(line, "unknown pose '" + pose + "'");
  }
  if (auto v = parse_view(view)) {
    s.attributes.view = *v;
  } else {
    throw ParseError(line, "unknown view '" + view + "'");
  }

  const auto frames = rec.find("frames");
  if (frames == rec.end() || !frames->is_array()) {
    throw ParseError(line, "missing or non-array field 'frames'");
  }
  if (frames->empty()) throw SchemaError("line " + std::to_string(line) + ": sequence has no frames");
  s.sequence.frames.reserve(frames->size());
  for (std::size_t f = 0; f < frames->size(); ++f) {
    const json& frame = (*frames)[f];
    if (!frame.is_array()) throw ParseError(line, "frame " + std::to_string(f) + " is not an array");
    if (frame.size() != kNumKeypoints) {
      throw SchemaError("line " + std::to_string(line) + ": frame " + std::to_string(f) +
                        " has " + std::to_string(frame.size()) + " keypoints, expected " +
                        std::to_string(kNumKeypoints));
    }
    Frame out_frame;
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      const json& kp = frame[k];
      if (!kp.is_array() || kp.size() != 2 || !kp[0].is_number() || !kp[1].is_number()) {
        throw ParseError(line, "frame " + std::to_string(f) + " keypoint " + std::to_string(k) +
                                   " is not an [x, y] pair");
      }
      out_frame[k] = {kp[0].get<double>(), kp[1].get<double>()};
    }
    s.sequence.frames.push_back(out_frame);
  }
  return out;
}

}  // namespace

std::string_view to_string(Gender g) { return kGenderValues[static_cast<std::size_t>(g)]; }
std::string_view to_string(Pose p) { return kPoseValues[static_cast<std::size_t>(p)]; }
std::string_view to_string(View v) { return kViewValues[static_cast<std::size_t>(v)]; }
std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::kGender:
      return "gender";
    case Attribute::kPose:
      return "pose";
    case Attribute::kView:
      return "view";
  }
  return "";
}

std::optional<Gender> parse_gender(std::string_view s) { return lookup<Gender>(kGenderValues, s); }
std::optional<Pose> parse_pose(std::string_view s) { return lookup<Pose>(kPoseValues, s); }
std::optional<View> parse_view(std::string_view s) { return lookup<View>(kViewValues, s); }
std::optional<Attribute> parse_attribute(std::string_view s) {
  if (s == "gender") return Attribute::kGender;
  if (s == "pose") return Attribute::kPose;
  if (s == "view") return Attribute::kView;
  return std::nullopt;
}

const std::vector<std::string>& attribute_values(Attribute a) {
  switch (a) {
    case Attribute::kGender:
      return kGenderValues;
    case Attribute::kPose:
      return kPoseValues;
    case Attribute::kView:
      break;
  }
  return kViewValues;
}

std::string_view Attributes::value(Attribute a) const {
  switch (a) {
    case Attribute::kGender:
      return to_string(gender);
    case Attribute::kPose:
      return to_string(pose);
    case Attribute::kView:
      break;
  }
  return to_string(view);
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto& s : samples) ++counts.at(s.action);
  return counts;
}

Dataset parse_dataset(std::istream& in) {
  std::vector<RawRecord> records;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    records.push_back(parse_record(text, line));
  }

  Dataset ds;
  std::set<std::string> names;
  for (const auto& r : records) names.insert(r.action);
  ds.class_names.assign(names.begin(), names.end());
  ds.samples.reserve(records.size());
  for (auto& r : records) {
    r.sample.action = static_cast<std::size_t>(
        std::lower_bound(ds.class_names.begin(), ds.class_names.end(), r.action) -
        ds.class_names.begin());
    ds.samples.push_back(std::move(r.sample));
  }
  return ds;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return parse_dataset(in);
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  for (const auto& s : dataset.samples) {
    ordered_json rec;
    rec["id"] = s.id;
    rec["subject"] = s.attributes.subject_id;
    rec["gender"] = to_string(s.attributes.gender);
    rec["pose"] = to_string(s.attributes.pose);
    rec["view"] = to_string(s.attributes.view);
    rec["action"] = dataset.class_names.at(s.action);
    ordered_json frames = ordered_json::array();
    for (const auto& frame : s.sequence.frames) {
      ordered_json f = ordered_json::array();
      for (const auto& kp : frame) f.push_back({kp.x, kp.y});
      frames.push_back(std::move(f));
    }
    rec["frames"] = std::move(frames);
    out << rec.dump() << '\n';
  }
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset '" + path + "'");
  write_dataset(dataset, out);
}

NormalizedSequence normalize_sequence(const SkeletonSequence& seq) {
  if (seq.frames.empty()) throw DomainError("cannot normalize an empty sequence");
  const Frame& first = seq.frames.front();

  double cx = 0.0, cy = 0.0;
  int hips = 0;
  for (std::size_t k : {kLeftHip, kRightHip}) {
    if (!first[k].missing()) {
      cx += first[k].x;
      cy += first[k].y;
      ++hips;
    }
  }
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  double sx = 0.0, sy = 0.0;
  int present = 0;
  for (const auto& kp : first) {
    if (kp.missing()) continue;
    min_x = std::min(min_x, kp.x);
    max_x = std::max(max_x, kp.x);
    min_y = std::min(min_y, kp.y);
    max_y = std::max(max_y, kp.y);
    sx += kp.x;
    sy += kp.y;
    ++present;
  }
  if (hips > 0) {
    cx /= hips;
    cy /= hips;
  } else if (present > 0) {
    // No hips detected: fall back to the keypoint centroid.
    cx = sx / present;
    cy = sy / present;
  }

  NormalizedSequence out;
  double scale = 1.0;
  const double diag = present > 0 ? std::hypot(max_x - min_x, max_y - min_y) : 0.0;
  if (diag > 0.0 && std::isfinite(diag)) {
    scale = diag;
  } else {
    out.degenerate_scale = true;
  }

  out.sequence.frame_rate = seq.frame_rate;
  out.sequence.frames.reserve(seq.frames.size());
  for (const auto& frame : seq.frames) {
    Frame f;
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      f[k] = frame[k].missing() ? Keypoint{}
                                : Keypoint{(frame[k].x - cx) / scale, (frame[k].y - cy) / scale};
    }
    out.sequence.frames.push_back(f);
  }
  return out;
}

SkeletonSequence resample_to_length(const SkeletonSequence& seq, std::size_t target) {
  if (seq.frames.empty() || target == 0) {
    throw DomainError("resample needs a non-empty sequence and target >= 1");
  }
  SkeletonSequence out;
  out.frame_rate = seq.frame_rate;
  const std::size_t t = seq.frames.size();
  if (t >= target) {
    const std::size_t start = (t - target) / 2;
    out.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(start),
                      seq.frames.begin() + static_cast<std::ptrdiff_t>(start + target));
  } else {
    out.frames = seq.frames;
    out.frames.resize(target, seq.frames.back());
  }
  return out;
}

std::vector<float> to_features(const SkeletonSequence& seq, std::size_t target) {
  const SkeletonSequence s = resample_to_length(normalize_sequence(seq).sequence, target);
  std::vector<float> out;
  out.reserve(target * kFeatureDim);
  for (const auto& frame : s.frames) {
    for (const auto& kp : frame) {
      out.push_back(static_cast<float>(kp.x));
      out.push_back(static_cast<float>(kp.y));
    }
  }
  return out;
}

void SynthConfig::validate() const {
  if (n_classes < 2) throw DomainError("synthetic data needs n_classes >= 2");
  if (samples_per_class < 1) throw DomainError("synthetic data needs samples_per_class >= 1");
  if (frames < 1) throw DomainError("synthetic data needs frames >= 1");
  if (n_subjects < 1) throw DomainError("synthetic data needs n_subjects >= 1");
  for (View v : {View::kLeft, View::kCenter, View::kRight}) {
    const auto it = noise_sigma_per_view.find(v);
    if (it == noise_sigma_per_view.end()) {
      throw DomainError("missing noise sigma for view " + std::string(to_string(v)));
    }
    if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
      throw DomainError("noise sigma must be finite and >= 0");
    }
  }
}

namespace {

// Upright skeleton in body units (y down, hips near the origin).
constexpr std::array<Keypoint, kNumKeypoints> kRestPose = {{
    {0.00, -0.42},  {0.03, -0.45},  {-0.03, -0.45}, {0.06, -0.43},  {-0.06, -0.43},
    {0.13, -0.30},  {-0.13, -0.30}, {0.16, -0.12},  {-0.16, -0.12}, {0.17, 0.04},
    {-0.17, 0.04},  {0.08, 0.02},   {-0.08, 0.02},  {0.08, 0.26},   {-0.08, 0.26},
    {0.08, 0.50},   {-0.08, 0.50},
}};

constexpr double kPixelScale = 180.0;
constexpr double kPixelCenterX = 240.0;
constexpr double kPixelCenterY = 150.0;

std::string synth_class_name(std::size_t k, std::size_t n) {
  static const std::array<const char*, 3> kNamed = {"cough", "sneeze", "stretch"};
  if (n <= kNamed.size()) return kNamed[k];
  std::string idx = std::to_string(k);
  return "class_" + std::string(idx.size() < 2 ? 2 - idx.size() : 0, '0') + idx;
}

double view_x_factor(View v) {
  switch (v) {
    case View::kLeft:
      return 0.7;
    case View::kRight:
      return -0.7;
    case View::kCenter:
      break;
  }
  return 1.0;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  Dataset ds;
  for (std::size_t k = 0; k < config.n_classes; ++k) {
    ds.class_names.push_back(synth_class_name(k, config.n_classes));
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  for (std::size_t k = 0; k < config.n_classes; ++k) {
    const double freq_hz = 0.5 + 0.3 * static_cast<double>(k);
    const double amplitude = 0.10 + 0.04 * static_cast<double>(k % 2);
    for (std::size_t j = 0; j < config.samples_per_class; ++j) {
      LabeledSample s;
      s.action = k;
      s.id = "syn-" + std::to_string(k) + "-" + std::to_string(j);
      const std::size_t cell = j % 12;
      s.attributes.gender = static_cast<Gender>(cell / 6);
      s.attributes.pose = static_cast<Pose>((cell / 3) % 2);
      s.attributes.view = static_cast<View>(cell % 3);
      s.attributes.subject_id = "subj" + std::to_string(j % config.n_subjects);
      const double sigma = config.noise_sigma_per_view.at(s.attributes.view);
      const double xf = view_x_factor(s.attributes.view);

      s.sequence.frame_rate = kDefaultFrameRate;
      s.sequence.frames.resize(config.frames);
      for (std::size_t t = 0; t < config.frames; ++t) {
        const double phase = 2.0 * std::numbers::pi * freq_hz * static_cast<double>(t) /
                             kDefaultFrameRate;
        const double lift = amplitude * (1.0 - std::cos(phase));
        Frame& frame = s.sequence.frames[t];
        for (std::size_t p = 0; p < kNumKeypoints; ++p) {
          double x = kRestPose[p].x;
          double y = kRestPose[p].y;
          if (p == 9 || p == 10) {
            y -= 2.0 * lift;
            x -= (p == 9 ? 1.0 : -1.0) * 0.5 * lift;
          } else if (p == 7 || p == 8) {
            y -= lift;
          }
          if (sigma > 0.0) {
            x += sigma * unit(rng);
            y += sigma * unit(rng);
          }
          frame[p] = {kPixelCenterX + kPixelScale * xf * x, kPixelCenterY + kPixelScale * y};
        }
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

Split partition(const Dataset& dataset, const SplitProtocol& protocol) {
  Split out;
  out.train.class_names = dataset.class_names;
  out.test.class_names = dataset.class_names;
  std::string description;
  if (const auto* subjects = std::get_if<BySubjects>(&protocol)) {
    const std::set<std::string> held(subjects->test_subjects.begin(),
                                     subjects->test_subjects.end());
    for (const auto& s : dataset.samples) {
      (held.count(s.attributes.subject_id) ? out.test : out.train).samples.push_back(s);
    }
    description = "subject list";
  } else {
    const auto& by = std::get<ByAttribute>(protocol);
    const auto& values = attribute_values(by.attribute);
    if (std::find(values.begin(), values.end(), by.held_out) == values.end()) {
      throw PartitionError("'" + by.held_out + "' is not a value of attribute " +
                           std::string(to_string(by.attribute)));
    }
    for (const auto& s : dataset.samples) {
      (s.attributes.value(by.attribute) == by.held_out ? out.test : out.train)
          .samples.push_back(s);
    }
    description = std::string(to_string(by.attribute)) + "=" + by.held_out;
  }
  if (out.test.empty()) throw PartitionError("split by " + description + " leaves the test set empty");
  if (out.train.empty()) throw PartitionError("split by " + description + " leaves the train set empty");
  return out;
}

}  // namespace restcn::data
