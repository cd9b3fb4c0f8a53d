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

#include "streampca/pipeline.hpp"
#include "streampca/synthetic.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <set>

using namespace streampca;
using namespace streampca::testing;

namespace {

StreamEvent ev(const std::string& id, std::vector<double> values, double t = 0.0) {
  return StreamEvent{id, std::move(values), t, std::nullopt};
}

PipelineConfig config_for(int dims, int k = 2, int m = 2) {
  PipelineConfig c;
  c.dims = dims;
  c.components = k;
  c.batch = m;
  return c;
}

std::vector<std::shared_ptr<const LayoutSnapshot>> replay(Pipeline& pipeline,
                                                          const std::vector<StreamEvent>& events) {
  std::vector<std::shared_ptr<const LayoutSnapshot>> out;
  for (const StreamEvent& e : events) {
    if (auto s = pipeline.ingest(e)) out.push_back(std::move(s));
  }
  return out;
}

// Positions of the stored (non-estimated) points by id.
std::map<std::string, Eigen::VectorXd> stored_positions(const LayoutSnapshot& s) {
  std::map<std::string, Eigen::VectorXd> out;
  for (const PlacedPoint& p : s.points) {
    if (!p.estimated) out.emplace(p.id, p.position);
  }
  return out;
}

void check_snapshot_invariants(const LayoutSnapshot& s) {
  std::set<std::string> ids;
  std::map<std::string, const UncertaintyRecord*> records;
  for (const UncertaintyRecord& r : s.uncertainties) records[r.id] = &r;
  for (const PlacedPoint& p : s.points) {
    CHECK(ids.insert(p.id).second);
    CHECK(p.position.size() == s.components);
    CHECK(p.position.allFinite());
    if (p.estimated) {
      REQUIRE(records.contains(p.id));
      const UncertaintyRecord& r = *records.at(p.id);
      CHECK(r.observed == p.observed);
      CHECK(r.combined == s.beta * r.strain + (1.0 - s.beta) * r.loading);
      CHECK(r.strain >= 0.0);
      CHECK(r.strain <= 1.0);
      CHECK(r.loading >= 0.0);
      CHECK(r.loading <= 1.0);
    } else {
      CHECK_FALSE(records.contains(p.id));
    }
  }
  CHECK(records.size() == s.paths.size());
  CHECK(s.beta >= 0.0);
  CHECK(s.beta <= 1.0);
}

}  // namespace

TEST_CASE("boot and first partial placement") {
  Pipeline pipeline(config_for(3));
  CHECK(pipeline.ingest(ev("a", {1.0, 0.0, 2.0})) == nullptr);
  const auto first = pipeline.ingest(ev("b", {0.0, 1.0, -1.0}));
  REQUIRE(first);
  CHECK(first->seq == 1);
  CHECK(first->kind == FrameKind::kFull);
  CHECK(first->points.size() == 2);
  CHECK(first->uncertainties.empty());
  CHECK(first->added == std::vector<std::string>{"a", "b"});
  CHECK(pipeline.booted());

  const auto partial = pipeline.ingest(ev("u", {0.5}, 1.0));
  REQUIRE(partial);
  CHECK(partial->seq == 2);
  CHECK(partial->kind == FrameKind::kPartial);
  const PlacedPoint* u = partial->find("u");
  REQUIRE(u != nullptr);
  CHECK(u->estimated);
  CHECK(u->observed == 1);
  REQUIRE(partial->uncertainties.size() == 1);
  CHECK(partial->uncertainties[0].id == "u");
  check_snapshot_invariants(*partial);
}

TEST_CASE("points arriving complete only emit when their batch fills") {
  Pipeline pipeline(config_for(2));
  const auto snapshots = replay(pipeline, complete_events(uniform_points(4, 2, 7)));
  CHECK(snapshots.size() == 2);
}

TEST_CASE("iris replay matches batch PCA up to the recorded scale") {
  const Iris iris = load_iris();
  Pipeline pipeline(config_for(4));
  const auto snapshots = replay(pipeline, complete_events(iris.features, "iris", iris.species));
  REQUIRE(snapshots.size() == 75);
  const LayoutSnapshot& last = *snapshots.back();
  CHECK(last.points.size() == 150);
  for (std::size_t i = 1; i < snapshots.size(); ++i) {
    CHECK(snapshots[i]->seq == snapshots[i - 1]->seq + 1);
  }

  Eigen::MatrixXd positions(150, 2);
  for (int i = 0; i < 150; ++i) {
    const PlacedPoint* p = last.find("iris" + std::to_string(i));
    REQUIRE(p != nullptr);
    CHECK(p->group == iris.species[static_cast<std::size_t>(i)]);
    positions.row(i) = p->position.transpose();
  }
  const BatchPca oracle = batch_pca(iris.features);
  const Eigen::MatrixXd expected =
      last.transform.scale * pairwise_distances(oracle.project(iris.features, 2));
  CHECK(relative_max_error(pairwise_distances(positions), expected) < 1e-3);

  SUBCASE("the recorded transform maps raw PCA coordinates to the display") {
    const Eigen::MatrixXd raw = pipeline.model().project(iris.features);
    CHECK((apply(last.transform, raw) - positions).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((apply(invert(last.transform), positions) - raw).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("alignment displacement equals the Procrustes residual") {
  const Iris iris = load_iris();
  PipelineConfig aligned_config = config_for(4);
  PipelineConfig raw_config = aligned_config;
  raw_config.align = false;
  Pipeline aligned(aligned_config), raw(raw_config);
  const auto events = complete_events(iris.features);
  const auto with = replay(aligned, events);
  const auto without = replay(raw, events);
  REQUIRE(with.size() == without.size());

  double moved_with = 0.0, moved_without = 0.0;
  for (std::size_t f = 1; f < with.size(); ++f) {
    const auto prev = stored_positions(*with[f - 1]);
    const auto curr = stored_positions(*with[f]);
    const auto prev_raw = stored_positions(*without[f - 1]);
    const auto curr_raw = stored_positions(*without[f]);
    Eigen::MatrixXd p(static_cast<Eigen::Index>(prev.size()), 2);
    Eigen::MatrixXd c(p.rows(), 2), cr(p.rows(), 2);
    Eigen::Index row = 0;
    double sum_with = 0.0, sum_without = 0.0;
    for (const auto& [id, position] : prev) {
      p.row(row) = position.transpose();
      c.row(row) = curr.at(id).transpose();
      cr.row(row) = curr_raw.at(id).transpose();
      sum_with += (curr.at(id) - position).norm();
      sum_without += (curr_raw.at(id) - prev_raw.at(id)).norm();
      ++row;
    }
    const SimilarityTransform refit = fit({p, cr});
    CHECK((c - p).norm() == doctest::Approx(residual(refit, {p, cr})).epsilon(1e-9));
    moved_with += sum_with / static_cast<double>(prev.size());
    moved_without += sum_without / static_cast<double>(prev.size());
  }
  CHECK(moved_with < moved_without);
}

TEST_CASE("rejected events leave the pipeline untouched") {
  Pipeline pipeline(config_for(3));
  pipeline.ingest(ev("a", {1.0, 0.0, 2.0}));
  pipeline.ingest(ev("b", {0.0, 1.0, -1.0}));
  pipeline.ingest(ev("u", {0.5, 0.25}));
  const auto before = pipeline.latest();

  CHECK_THROWS_AS(pipeline.ingest(ev("u", {0.5})), RejectedEvent);            // shrinks
  CHECK_THROWS_AS(pipeline.ingest(ev("u", {0.4, 0.25, 1.0})), RejectedEvent);  // rewrites
  CHECK_THROWS_AS(pipeline.ingest(ev("x", {1, 2, 3, 4})), RejectedEvent);      // D mismatch
  CHECK_THROWS_AS(pipeline.ingest(ev("x", {})), RejectedEvent);
  CHECK_THROWS_AS(pipeline.ingest(ev("", {1.0})), RejectedEvent);
  CHECK_THROWS_AS(pipeline.ingest(ev("x", {std::nan("")})), RejectedEvent);
  CHECK_THROWS_AS(pipeline.ingest(ev("a", {1.0})), RejectedEvent);  // already stored

  CHECK(pipeline.latest() == before);
  CHECK(pipeline.placement("u")->position == before->find("u")->position);
  CHECK(pipeline.partial_count() == 1);
}

TEST_CASE("repeating an observed level is a no-op") {
  Pipeline pipeline(config_for(3));
  pipeline.ingest(ev("a", {1.0, 0.0, 2.0}));
  pipeline.ingest(ev("b", {0.0, 1.0, -1.0}));
  REQUIRE(pipeline.ingest(ev("u", {0.5})));
  CHECK(pipeline.ingest(ev("u", {0.5})) == nullptr);
  CHECK(pipeline.latest()->seq == 2);
}

TEST_CASE("partial points before boot are parked, then placed") {
  Pipeline pipeline(config_for(3));
  CHECK(pipeline.ingest(ev("u", {0.5})) == nullptr);
  CHECK(pipeline.ingest(ev("v", {0.1, 0.2})) == nullptr);
  CHECK(pipeline.parked_count() == 2);
  pipeline.ingest(ev("a", {1.0, 0.0, 2.0}));
  const auto boot = pipeline.ingest(ev("b", {0.0, 1.0, -1.0}));
  REQUIRE(boot);
  CHECK(pipeline.parked_count() == 0);
  CHECK(boot->uncertainties.size() == 2);
  REQUIRE(boot->find("v") != nullptr);
  CHECK(boot->find("v")->observed == 2);
  check_snapshot_invariants(*boot);
}

TEST_CASE("growth to D before joining a batch") {
  Pipeline pipeline(config_for(3));
  pipeline.ingest(ev("a", {1.0, 0.0, 2.0}));
  pipeline.ingest(ev("b", {0.0, 1.0, -1.0}));
  pipeline.ingest(ev("c", {2.0, 1.0, 0.0}));  // waits in the buffer, not shown
  CHECK(pipeline.latest()->find("c") == nullptr);

  pipeline.ingest(ev("u", {0.5}));
  pipeline.ingest(ev("u", {0.5, 0.5}));
  pipeline.ingest(ev("v", {0.3}));
  // u completing fills the batch: its l = D estimate is taken, then the PCA
  // update gives its real position and drops its uncertainty.
  const auto full = pipeline.ingest(ev("u", {0.5, 0.5, 0.5}));
  REQUIRE(full);
  CHECK(full->kind == FrameKind::kFull);
  CHECK(full->added == std::vector<std::string>{"c", "u"});
  REQUIRE(full->find("u") != nullptr);
  CHECK_FALSE(full->find("u")->estimated);
  for (const auto& r : full->uncertainties) CHECK(r.id != "u");
  for (const auto& p : full->paths) CHECK(p.id != "u");
  std::set<int> levels;
  for (const CompletionSample& c : pipeline.last_completions()) {
    CHECK(c.id == "u");
    levels.insert(c.observed);
  }
  CHECK(levels == std::set<int>{1, 2, 3});
  CHECK(full->beta_updates == 1);
  check_snapshot_invariants(*full);
}

TEST_CASE("a tracked point completing with room in the buffer shows its l = D estimate") {
  Pipeline pipeline(config_for(3));
  pipeline.ingest(ev("a", {1.0, 0.0, 2.0}));
  pipeline.ingest(ev("b", {0.0, 1.0, -1.0}));
  pipeline.ingest(ev("u", {0.5}));
  const auto s = pipeline.ingest(ev("u", {0.5, 0.5, 0.5}));
  REQUIRE(s);
  CHECK(s->kind == FrameKind::kPartial);
  REQUIRE(s->find("u") != nullptr);
  CHECK(s->find("u")->observed == 3);
  CHECK(s->uncertainties.at(0).loading == 0.0);  // V_D = 0
}

TEST_CASE("paths keep the most recent estimates") {
  PipelineConfig config = config_for(12);
  config.path_length = 3;
  Pipeline pipeline(config);
  pipeline.bootstrap({"a", "b", "c", "d"}, uniform_points(4, 12, 3));
  const Eigen::MatrixXd values = uniform_points(1, 12, 4);
  std::vector<Eigen::VectorXd> history;
  for (int l = 1; l < 12; ++l) {
    std::vector<double> prefix(values.data(), values.data() + l);
    const auto s = pipeline.ingest(ev("u", prefix, l));
    REQUIRE(s);
    history.push_back(s->find("u")->position);
    REQUIRE(s->paths.size() == 1);
    const auto& nodes = s->paths[0].nodes;
    CHECK(nodes.size() == std::min<std::size_t>(history.size(), 3));
    CHECK(nodes.back().position == history.back());
    CHECK(nodes.back().combined == s->uncertainties[0].combined);
  }
}

TEST_CASE("retention bounds stored points") {
  PipelineConfig config = config_for(3);
  config.forgetting = 0.5;
  config.retention = Retention::kForgetBeyondEffectiveHistory;
  Pipeline pipeline(config);
  const auto snapshots = replay(pipeline, complete_events(uniform_points(40, 3, 5)));
  REQUIRE(snapshots.size() == 20);
  std::set<std::string> removed;
  for (const auto& s : snapshots) {
    CHECK(s->stored <= 4);
    CHECK(s->points.size() == s->stored);
    for (const auto& id : s->removed) CHECK(removed.insert(id).second);
  }
  CHECK(removed.size() == 36);
  CHECK(*removed.begin() == "p0");
  CHECK(pipeline.stored_ids() == std::vector<std::string>{"p36", "p37", "p38", "p39"});

  SUBCASE("retention cap for f = 0.998, m = 2") {
    PipelineConfig c = config_for(2);
    c.forgetting = 0.998;
    c.retention = Retention::kForgetBeyondEffectiveHistory;
    Pipeline p(c);
    replay(p, complete_events(uniform_points(1100, 2, 6)));
    CHECK(p.stored_count() == 1000);
  }
}

TEST_CASE("coalescing window") {
  PipelineConfig config = config_for(4);
  config.coalesce_window = 1.0;
  Pipeline pipeline(config);
  pipeline.bootstrap({"a", "b", "c"}, uniform_points(3, 4, 8));
  CHECK(pipeline.ingest(ev("u", {0.1}, 10.0)));
  CHECK(pipeline.ingest(ev("u", {0.1, 0.2}, 10.5)) == nullptr);
  CHECK(pipeline.placement("u").has_value());
  const auto later = pipeline.ingest(ev("u", {0.1, 0.2, 0.3}, 11.0));
  REQUIRE(later);
  CHECK(later->find("u")->observed == 3);
}

TEST_CASE("bootstrap") {
  Pipeline pipeline(config_for(5));
  const Eigen::MatrixXd data = uniform_points(11, 5, 9);
  std::vector<std::string> ids;
  for (int i = 0; i < 11; ++i) ids.push_back("b" + std::to_string(i));
  const auto s = pipeline.bootstrap(ids, data);
  REQUIRE(s);
  CHECK(s->points.size() == 11);
  CHECK(pipeline.model().n_effective() == doctest::Approx(11.0));
  const BatchPca oracle = batch_pca(data);
  CHECK((pipeline.model().mean() - oracle.mean).norm() < 1e-12);
  CHECK_THROWS_AS(pipeline.bootstrap({"b0", "x"}, uniform_points(2, 5, 1)), std::invalid_argument);
  CHECK_THROWS_AS(pipeline.bootstrap({"y"}, uniform_points(1, 5, 1)), std::invalid_argument);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(Pipeline{config_for(0)}, std::invalid_argument);
  CHECK_THROWS_AS(Pipeline{config_for(3, 4)}, std::invalid_argument);
  CHECK_THROWS_AS(Pipeline{config_for(3, 2, 1)}, std::invalid_argument);
  PipelineConfig c = config_for(3);
  c.forgetting = 0.0;
  CHECK_THROWS_AS(Pipeline{c}, std::invalid_argument);
}

TEST_CASE("property: progressive stream invariants and determinism") {
  ProgressiveStreamOptions options;
  options.points = 120;
  options.dims = 5;
  const auto events = progressive_stream(options);
  PipelineConfig config = config_for(5);
  Pipeline first(config), second(config);
  const auto a = replay(first, events);
  const auto b = replay(second, events);
  REQUIRE(a.size() == b.size());
  std::uint64_t seq = 0;
  long beta_updates = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->seq > seq);
    seq = a[i]->seq;
    check_snapshot_invariants(*a[i]);
    CHECK(serialize(*a[i]) == serialize(*b[i]));
    beta_updates = a[i]->beta_updates;
  }
  CHECK(beta_updates > 10);
  CHECK(first.uncertainty().tracked() == first.partial_count() - first.parked_count());
}

TEST_CASE("snapshots round-trip through JSON") {
  ProgressiveStreamOptions options;
  options.points = 30;
  const auto events = progressive_stream(options);
  Pipeline pipeline(config_for(4));
  for (const auto& s : replay(pipeline, events)) {
    const LayoutSnapshot back = snapshot_from_json(nlohmann::json::parse(serialize(*s)));
    CHECK(same_payload(back, *s));
    CHECK(serialize(back) == serialize(*s));
  }
}

TEST_CASE("emitted snapshots never change") {
  ProgressiveStreamOptions options;
  options.points = 40;
  const auto events = progressive_stream(options);
  Pipeline pipeline(config_for(4));
  std::vector<std::pair<std::shared_ptr<const LayoutSnapshot>, std::string>> seen;
  for (const auto& e : events) {
    if (auto s = pipeline.ingest(e)) seen.emplace_back(s, serialize(*s));
  }
  for (const auto& [snapshot, text] : seen) CHECK(serialize(*snapshot) == text);
}
