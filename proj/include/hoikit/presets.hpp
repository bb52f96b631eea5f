// Copyright 2026 The hoikit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Category name tables for the benchmark presets. Included from core.hpp.

#include <string>
#include <vector>

namespace hoikit {

namespace presets {

// COCO category names in canonical order, multi-word names space-joined.
inline const std::vector<std::string>& coco_object_names() {
  static const std::vector<std::string> names = {
      "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train",
      "truck", "boat", "traffic light", "fire hydrant", "stop sign",
      "parking meter", "bench", "bird", "cat", "dog", "horse", "sheep", "cow",
      "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella",
      "handbag", "tie", "suitcase", "frisbee", "skis", "snowboard",
      "sports ball", "kite", "baseball bat", "baseball glove", "skateboard",
      "surfboard", "tennis racket", "bottle", "wine glass", "cup", "fork",
      "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange",
      "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair",
      "couch", "potted plant", "bed", "dining table", "toilet", "tv",
      "laptop", "mouse", "remote", "keyboard", "cell phone", "microwave",
      "oven", "toaster", "sink", "refrigerator", "book", "clock", "vase",
      "scissors", "teddy bear", "hair drier", "toothbrush"};
  return names;
}

// Original COCO category ids (1..90, with gaps) for the names above.
inline const std::vector<int>& coco_category_ids() {
  static const std::vector<int> ids = {
      1,  2,  3,  4,  5,  6,  7,  8,  9,  10, 11, 13, 14, 15, 16, 17,
      18, 19, 20, 21, 22, 23, 24, 25, 27, 28, 31, 32, 33, 34, 35, 36,
      37, 38, 39, 40, 41, 42, 43, 44, 46, 47, 48, 49, 50, 51, 52, 53,
      54, 55, 56, 57, 58, 59, 60, 61, 62, 63, 64, 65, 67, 70, 72, 73,
      74, 75, 76, 77, 78, 79, 80, 81, 82, 84, 85, 86, 87, 88, 89, 90};
  return ids;
}

inline const std::vector<std::string>& hico_verb_names() {
  static const std::vector<std::string> names = {
      "adjust", "assemble", "block", "blow", "board", "break", "brush with",
      "buy", "carry", "catch", "chase", "check", "clean", "control", "cook",
      "cut", "cut with", "direct", "drag", "dribble", "drink with", "drive",
      "dry", "eat", "eat at", "exit", "feed", "fill", "flip", "flush", "fly",
      "greet", "grind", "groom", "herd", "hit", "hold", "hop on", "hose",
      "hug", "hunt", "inspect", "install", "jump", "kick", "kiss", "lasso",
      "launch", "lick", "lie on", "lift", "light", "load", "lose", "make",
      "milk", "move", "no interaction", "open", "operate", "pack", "paint",
      "park", "pay", "peel", "pet", "pick", "pick up", "point", "pour",
      "pull", "push", "race", "read", "release", "repair", "ride", "row",
      "run", "sail", "scratch", "serve", "set", "shear", "sign", "sip",
      "sit at", "sit on", "slide", "smell", "spin", "squeeze", "stab",
      "stand on", "stand under", "stick", "stir", "stop at", "straddle",
      "swing", "tag", "talk on", "teach", "text on", "throw", "tie", "toast",
      "train", "turn", "type on", "walk", "wash", "watch", "wave", "wear",
      "wield", "zip"};
  return names;
}

// V-COCO actions with their role suffix; the four without a suffix are the
// body motions.
inline const std::vector<std::string>& vcoco_action_names() {
  static const std::vector<std::string> names = {
      "hold obj", "stand", "sit instr", "ride instr", "walk", "look obj",
      "hit instr", "hit obj", "eat obj", "eat instr", "jump instr",
      "lay instr", "talk on phone instr", "carry obj", "throw obj",
      "catch obj", "cut instr", "cut obj", "run", "work on computer instr",
      "ski instr", "surf instr", "skateboard instr", "smile", "drink instr",
      "kick obj", "point instr", "read obj", "snowboard instr"};
  return names;
}

}  // namespace presets

inline Vocabulary Vocabulary::coco_objects_only() {
  Vocabulary v;
  v.object_names = presets::coco_object_names();
  return v;
}

// HOI categories are filled from data (see derive_hoi_categories in io.hpp).
inline Vocabulary Vocabulary::hico() {
  Vocabulary v;
  v.benchmark = Benchmark::kHico;
  v.object_names = presets::coco_object_names();
  v.verb_names = presets::hico_verb_names();
  v.verb_without_object.assign(v.verb_names.size(), false);
  return v;
}

inline Vocabulary Vocabulary::vcoco() {
  Vocabulary v;
  v.benchmark = Benchmark::kVcoco;
  v.object_names = presets::coco_object_names();
  v.verb_names = presets::vcoco_action_names();
  v.verb_without_object.assign(v.verb_names.size(), false);
  for (const char* m : {"stand", "walk", "run", "smile"})
    v.verb_without_object[*v.verb_index(m)] = true;
  return v;
}

}  // namespace hoikit
