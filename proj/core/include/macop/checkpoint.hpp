// Copyright 2026 The Macop Lab Authors
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

#ifndef MACOP_CHECKPOINT_HPP_
#define MACOP_CHECKPOINT_HPP_

// JSON checkpoints for ego policies and teammate archives. Doubles are
// written in shortest round-trip form, so save -> load is bit exact.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "macop/ego.hpp"
#include "macop/teammate.hpp"

namespace macop {

// A frozen group as stored in an archive. Replay buffers are not kept.
struct ArchiveEntry {
  int iteration = 0;
  TeammateGroup group;
};

struct Archive {
  std::string run_id;  // algorithm + seed of the producing run
  std::string env;
  std::vector<ArchiveEntry> entries;
};

std::string ego_to_json(const EgoPolicy& ego);
EgoPolicy ego_from_json(const std::string& text);

std::string archive_to_json(const Archive& archive);
Archive archive_from_json(const std::string& text);

void save_ego(const std::filesystem::path& path, const EgoPolicy& ego);
EgoPolicy load_ego(const std::filesystem::path& path);
void save_archive(const std::filesystem::path& path, const Archive& archive);
Archive load_archive(const std::filesystem::path& path);

// Write to a sibling temp file, then rename over the target.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);
std::string read_text(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace macop

#endif  // MACOP_CHECKPOINT_HPP_
