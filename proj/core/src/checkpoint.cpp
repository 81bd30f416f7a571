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

#include "macop/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json_io.hpp"
#include "macop/error.hpp"

namespace macop {

using nlohmann::json;

void to_json(json& j, const NetSpec& s) {
  j = json{{"input_dim", s.input_dim},
           {"hidden_dims", s.hidden_dims},
           {"head_hidden_dims", s.head_hidden_dims},
           {"output_dim", s.output_dim},
           {"activation", s.activation == Activation::kTanh ? "tanh" : "relu"}};
}

void from_json(const json& j, NetSpec& s) {
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
  s.head_hidden_dims = j.at("head_hidden_dims").get<std::vector<std::size_t>>();
  s.output_dim = j.at("output_dim").get<std::size_t>();
  const auto act = j.at("activation").get<std::string>();
  require(act == "relu" || act == "tanh", "unknown activation " + act);
  s.activation = act == "tanh" ? Activation::kTanh : Activation::kRelu;
  s.validate();
}

void to_json(json& j, const ParamStore& p) { j = p.values; }
void from_json(const json& j, ParamStore& p) {
  p.values = j.get<std::vector<double>>();
}

void to_json(json& j, const QNet& q) {
  j = json{{"spec", q.spec}, {"backbone", q.backbone}, {"head", q.head}};
}

void from_json(const json& j, QNet& q) {
  q.spec = j.at("spec").get<NetSpec>();
  q.backbone = j.at("backbone").get<ParamStore>();
  q.head = j.at("head").get<ParamStore>();
  require(q.backbone.size() == q.spec.param_count(NetPart::kBackbone) &&
              q.head.size() == q.spec.param_count(NetPart::kHead),
          "network parameters do not match their spec");
}

json real_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double real_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    require(s == "inf" || s == "-inf", "bad real value " + s);
    return s == "inf" ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
  }
  return j.get<double>();
}

void to_json(json& j, const ReturnStats& r) {
  j = json{{"mean", real_to_json(r.mean)}, {"std", real_to_json(r.std)}};
}

void from_json(const json& j, ReturnStats& r) {
  r.mean = real_from_json(j.at("mean"));
  r.std = real_from_json(j.at("std"));
}

void to_json(json& j, const TeammateGroup& g) {
  j = json{{"id", g.id},
           {"lineage", g.lineage ? json(*g.lineage) : json(nullptr)},
           {"generation", g.generation},
           {"tm_net", g.tm_net},
           {"comp_ego_net", g.comp_ego_net},
           {"sp_return", g.sp_return_cache ? json(*g.sp_return_cache)
                                           : json(nullptr)},
           {"xp_return", g.xp_return_cache ? json(*g.xp_return_cache)
                                           : json(nullptr)}};
}

void from_json(const json& j, TeammateGroup& g) {
  g.id = j.at("id").get<std::int64_t>();
  g.lineage.reset();
  if (!j.at("lineage").is_null()) g.lineage = j.at("lineage").get<std::int64_t>();
  g.generation = j.at("generation").get<int>();
  g.tm_net = j.at("tm_net").get<QNet>();
  g.comp_ego_net = j.at("comp_ego_net").get<QNet>();
  g.invalidate_caches();
  if (!j.at("sp_return").is_null()) g.sp_return_cache = j.at("sp_return").get<ReturnStats>();
  if (!j.at("xp_return").is_null()) g.xp_return_cache = j.at("xp_return").get<ReturnStats>();
}

void to_json(json& j, const EgoPolicy& e) {
  j = json{{"spec", e.spec},
           {"backbone", e.backbone},
           {"heads", e.heads},
           {"snapshots", e.snapshots},
           {"head_origin", e.head_origin},
           {"fisher_backbone", e.fisher_backbone},
           {"fisher_head", e.fisher_head},
           {"anchor_backbone", e.anchor_backbone},
           {"anchor_head", e.anchor_head}};
}

void from_json(const json& j, EgoPolicy& e) {
  e.spec = j.at("spec").get<NetSpec>();
  e.backbone = j.at("backbone").get<ParamStore>();
  e.heads = j.at("heads").get<std::vector<ParamStore>>();
  e.snapshots = j.at("snapshots").get<std::vector<ParamStore>>();
  e.head_origin = j.at("head_origin").get<std::vector<std::int64_t>>();
  e.fisher_backbone = j.at("fisher_backbone").get<ParamStore>();
  e.fisher_head = j.at("fisher_head").get<ParamStore>();
  e.anchor_backbone = j.at("anchor_backbone").get<ParamStore>();
  e.anchor_head = j.at("anchor_head").get<ParamStore>();
  e.rehearsal.clear();
  require(e.backbone.size() == e.spec.param_count(NetPart::kBackbone),
          "ego backbone does not match its spec");
  require(e.snapshots.size() == e.heads.size() &&
              e.head_origin.size() == e.heads.size(),
          "ego heads, snapshots and origins differ in length");
  for (const auto& h : e.heads) {
    require(h.size() == e.spec.param_count(NetPart::kHead),
            "ego head does not match its spec");
  }
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("corrupt ") + what + ": " + e.what());
  }
}

namespace {

template <class T>
T decode(const std::string& text, const char* what) {
  const json j = parse_json(text, what);
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string("corrupt ") + what + ": " + e.what());
  }
}

}  // namespace

std::string ego_to_json(const EgoPolicy& ego) { return json(ego).dump(); }

EgoPolicy ego_from_json(const std::string& text) {
  return decode<EgoPolicy>(text, "ego checkpoint");
}

std::string archive_to_json(const Archive& archive) {
  json entries = json::array();
  for (const auto& e : archive.entries) {
    entries.push_back({{"iteration", e.iteration}, {"group", e.group}});
  }
  return json{{"run_id", archive.run_id},
              {"env", archive.env},
              {"entries", entries}}
      .dump();
}

Archive archive_from_json(const std::string& text) {
  const json j = parse_json(text, "archive");
  Archive a;
  try {
    a.run_id = j.at("run_id").get<std::string>();
    a.env = j.at("env").get<std::string>();
    for (const auto& e : j.at("entries")) {
      a.entries.push_back(
          {e.at("iteration").get<int>(), e.at("group").get<TeammateGroup>()});
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("corrupt archive: ") + e.what());
  }
  return a;
}

void save_ego(const std::filesystem::path& path, const EgoPolicy& ego) {
  write_text_atomic(path, ego_to_json(ego));
}

EgoPolicy load_ego(const std::filesystem::path& path) {
  return ego_from_json(read_text(path));
}

void save_archive(const std::filesystem::path& path, const Archive& archive) {
  write_text_atomic(path, archive_to_json(archive));
}

Archive load_archive(const std::filesystem::path& path) {
  return archive_from_json(read_text(path));
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  return fnv1a64(read_text(path));
}

}  // namespace macop
