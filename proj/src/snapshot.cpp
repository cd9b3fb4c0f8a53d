// Copyright 2026 The streampca Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "streampca/snapshot.hpp"

#include <algorithm>
#include <stdexcept>

namespace streampca {
namespace {

using nlohmann::json;

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

json transform_json(const SimilarityTransform& t) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < t.rotation.rows(); ++i) {
    rows.push_back(vector_json(t.rotation.row(i).transpose()));
  }
  return {{"c", t.scale}, {"tau", vector_json(t.translation)}, {"R", rows}};
}

SimilarityTransform transform_from(const json& j) {
  SimilarityTransform t;
  t.scale = j.at("c").get<double>();
  t.translation = vector_from(j.at("tau"));
  const auto& rows = j.at("R");
  const auto k = static_cast<Eigen::Index>(rows.size());
  t.rotation.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    t.rotation.row(i) = vector_from(rows.at(static_cast<std::size_t>(i))).transpose();
  }
  return t;
}

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

const PlacedPoint* LayoutSnapshot::find(const std::string& id) const {
  const auto it = std::find_if(points.begin(), points.end(),
                               [&](const PlacedPoint& p) { return p.id == id; });
  return it == points.end() ? nullptr : &*it;
}

json to_json(const LayoutSnapshot& s, bool with_timings) {
  json points = json::array();
  for (const PlacedPoint& p : s.points) {
    json entry = {{"id", p.id}, {"pos", vector_json(p.position)},
                  {"estimated", p.estimated}, {"l", p.observed}};
    if (!p.group.empty()) entry["group"] = p.group;
    points.push_back(std::move(entry));
  }
  json uncertainty = json::array();
  for (const UncertaintyRecord& r : s.uncertainties) {
    uncertainty.push_back(
        {{"id", r.id}, {"l", r.observed}, {"u", r.strain}, {"v", r.loading}, {"w", r.combined}});
  }
  json paths = json::array();
  for (const PointPath& path : s.paths) {
    json nodes = json::array();
    for (const PathNode& node : path.nodes) {
      nodes.push_back({{"pos", vector_json(node.position)}, {"w", node.combined}});
    }
    paths.push_back({{"id", path.id}, {"nodes", std::move(nodes)}});
  }
  json j = {{"seq", s.seq},
            {"frame", s.kind == FrameKind::kFull ? "full" : "partial"},
            {"t", s.t},
            {"k", s.components},
            {"transition_ms", s.transition_ms},
            {"points", std::move(points)},
            {"uncertainty", std::move(uncertainty)},
            {"paths", std::move(paths)},
            {"added", s.added},
            {"removed", s.removed},
            {"transform", transform_json(s.transform)},
            {"beta", s.beta},
            {"beta_updates", s.beta_updates},
            {"stored", s.stored}};
  if (with_timings) {
    j["timings"] = {{"a1", s.timings.a1}, {"a2", s.timings.a2}, {"a3", s.timings.a3},
                    {"b1", s.timings.b1}, {"b2", s.timings.b2}};
  }
  return j;
}

LayoutSnapshot snapshot_from_json(const json& j) {
  LayoutSnapshot s;
  s.seq = j.at("seq").get<std::uint64_t>();
  const auto frame = j.at("frame").get<std::string>();
  if (frame == "full") {
    s.kind = FrameKind::kFull;
  } else if (frame == "partial") {
    s.kind = FrameKind::kPartial;
  } else {
    throw std::invalid_argument("snapshot: unknown frame kind '" + frame + "'");
  }
  s.t = j.at("t").get<double>();
  s.components = j.at("k").get<int>();
  s.transition_ms = j.at("transition_ms").get<int>();
  for (const auto& p : j.at("points")) {
    PlacedPoint point;
    point.id = p.at("id").get<std::string>();
    point.position = vector_from(p.at("pos"));
    point.estimated = p.at("estimated").get<bool>();
    point.observed = p.at("l").get<int>();
    if (const auto g = p.find("group"); g != p.end()) point.group = g->get<std::string>();
    s.points.push_back(std::move(point));
  }
  for (const auto& r : j.at("uncertainty")) {
    s.uncertainties.push_back({r.at("id").get<std::string>(), r.at("l").get<int>(),
                               r.at("u").get<double>(), r.at("v").get<double>(),
                               r.at("w").get<double>()});
  }
  for (const auto& p : j.at("paths")) {
    PointPath path;
    path.id = p.at("id").get<std::string>();
    for (const auto& n : p.at("nodes")) {
      path.nodes.push_back({vector_from(n.at("pos")), n.at("w").get<double>()});
    }
    s.paths.push_back(std::move(path));
  }
  s.added = j.at("added").get<std::vector<std::string>>();
  s.removed = j.at("removed").get<std::vector<std::string>>();
  s.transform = transform_from(j.at("transform"));
  s.beta = j.at("beta").get<double>();
  s.beta_updates = j.at("beta_updates").get<long>();
  s.stored = j.at("stored").get<std::size_t>();
  if (const auto t = j.find("timings"); t != j.end()) {
    s.timings = {t->at("a1").get<double>(), t->at("a2").get<double>(),
                 t->at("a3").get<double>(), t->at("b1").get<double>(),
                 t->at("b2").get<double>()};
  }
  return s;
}

std::string serialize(const LayoutSnapshot& snapshot, bool with_timings) {
  return to_json(snapshot, with_timings).dump();
}

bool same_payload(const LayoutSnapshot& a, const LayoutSnapshot& b) {
  if (a.seq != b.seq || a.kind != b.kind || a.t != b.t || a.components != b.components ||
      a.transition_ms != b.transition_ms || a.added != b.added || a.removed != b.removed ||
      a.beta != b.beta || a.beta_updates != b.beta_updates || a.stored != b.stored ||
      a.uncertainties != b.uncertainties) {
    return false;
  }
  if (a.transform.scale != b.transform.scale ||
      !same_vector(a.transform.translation, b.transform.translation) ||
      a.transform.rotation.rows() != b.transform.rotation.rows() ||
      a.transform.rotation.cols() != b.transform.rotation.cols() ||
      !(a.transform.rotation.array() == b.transform.rotation.array()).all()) {
    return false;
  }
  if (a.points.size() != b.points.size() || a.paths.size() != b.paths.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const PlacedPoint& p = a.points[i];
    const PlacedPoint& q = b.points[i];
    if (p.id != q.id || p.group != q.group || p.estimated != q.estimated ||
        p.observed != q.observed || !same_vector(p.position, q.position)) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    const PointPath& p = a.paths[i];
    const PointPath& q = b.paths[i];
    if (p.id != q.id || p.nodes.size() != q.nodes.size()) return false;
    for (std::size_t n = 0; n < p.nodes.size(); ++n) {
      if (p.nodes[n].combined != q.nodes[n].combined ||
          !same_vector(p.nodes[n].position, q.nodes[n].position)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace streampca
