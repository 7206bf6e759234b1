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

// Labeled skeleton sequences: 17 COCO-order keypoints per frame, plus the
// subject attributes that cohort analysis partitions on.

#ifndef RESTCN_DATA_DATASET_HPP_
#define RESTCN_DATA_DATASET_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace restcn::data {

inline constexpr std::size_t kNumKeypoints = 17;
inline constexpr std::size_t kFeatureDim = 2 * kNumKeypoints;
inline constexpr std::size_t kLeftHip = 11;
inline constexpr std::size_t kRightHip = 12;
inline constexpr double kDefaultFrameRate = 10.0;

// (0, 0) marks a keypoint the pose estimator did not find.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;

  bool missing() const { return x == 0.0 && y == 0.0; }
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

using Frame = std::array<Keypoint, kNumKeypoints>;

struct SkeletonSequence {
  std::vector<Frame> frames;
  double frame_rate = kDefaultFrameRate;

  std::size_t length() const { return frames.size(); }
  friend bool operator==(const SkeletonSequence&, const SkeletonSequence&) = default;
};

enum class Gender { kMale, kFemale };
enum class Pose { kStand, kWalk };
enum class View { kLeft, kCenter, kRight };
enum class Attribute { kGender, kPose, kView };

std::string_view to_string(Gender g);
std::string_view to_string(Pose p);
std::string_view to_string(View v);
std::string_view to_string(Attribute a);
std::optional<Gender> parse_gender(std::string_view s);
std::optional<Pose> parse_pose(std::string_view s);
std::optional<View> parse_view(std::string_view s);
std::optional<Attribute> parse_attribute(std::string_view s);

// Closed value set of each attribute, in declaration order.
const std::vector<std::string>& attribute_values(Attribute a);

struct Attributes {
  Gender gender = Gender::kMale;
  Pose pose = Pose::kStand;
  View view = View::kCenter;
  std::string subject_id;

  std::string_view value(Attribute a) const;
  friend bool operator==(const Attributes&, const Attributes&) = default;
};

struct LabeledSample {
  std::string id;
  SkeletonSequence sequence;
  Attributes attributes;
  std::size_t action = 0;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

// Samples plus the class-name table; `action` indexes class_names.
struct Dataset {
  std::vector<LabeledSample> samples;
  std::vector<std::string> class_names;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::size_t num_classes() const { return class_names.size(); }
  std::vector<std::size_t> class_counts() const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Line-delimited JSON records, see README for the field list. Class indices
// follow the sorted order of distinct action names. Blank lines are skipped.
// Throws ParseError (bad JSON or fields, with line number) or SchemaError
// (wrong keypoint count, naming line and frame).
Dataset parse_dataset(std::istream& in);
Dataset load_dataset(const std::string& path);
void write_dataset(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::string& path);

struct NormalizedSequence {
  SkeletonSequence sequence;
  // Frame-0 bounding box had zero diagonal; scale 1 was used instead.
  bool degenerate_scale = false;
};

// Translates the first-frame mid-hip to the origin and divides by the
// first-frame bounding-box diagonal. Missing keypoints stay (0, 0).
NormalizedSequence normalize_sequence(const SkeletonSequence& seq);

// Center-crops (lower-index bias on odd remainders) or pads with the last
// frame to exactly `target` frames.
SkeletonSequence resample_to_length(const SkeletonSequence& seq, std::size_t target);

// normalize + resample, flattened to target x kFeatureDim (x0, y0, x1, ...).
std::vector<float> to_features(const SkeletonSequence& seq, std::size_t target);

struct SynthConfig {
  std::size_t n_classes = 3;
  std::size_t samples_per_class = 10;
  std::size_t frames = 64;
  // Noise std-dev per view, in body-height units.
  std::map<View, double> noise_sigma_per_view = {
      {View::kLeft, 0.05}, {View::kCenter, 0.05}, {View::kRight, 0.05}};
  std::uint64_t seed = 0;
  // Distinct synthetic subject ids; sample j of every class gets subject
  // j mod n_subjects.
  std::size_t n_subjects = 10;

  void validate() const;
};

// Class k moves both arms with a sinusoid whose frequency and amplitude are
// keyed by k; Gaussian noise scaled by the view's sigma is the only random
// component. Attributes cycle round-robin over the gender x pose x view grid.
Dataset generate_synthetic(const SynthConfig& config);

struct BySubjects {
  std::vector<std::string> test_subjects;
};
struct ByAttribute {
  Attribute attribute = Attribute::kView;
  std::string held_out;
};
using SplitProtocol = std::variant<BySubjects, ByAttribute>;

struct Split {
  Dataset train;
  Dataset test;
};

// Disjoint, exhaustive, order-preserving split. Throws PartitionError when
// either side would be empty.
Split partition(const Dataset& dataset, const SplitProtocol& protocol);

}  // namespace restcn::data

#endif  // RESTCN_DATA_DATASET_HPP_
