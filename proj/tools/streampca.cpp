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

#include "tool_options.hpp"

#include "streampca/bench.hpp"
#include "streampca/replay.hpp"
#include "streampca/synthetic.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

using namespace streampca;

std::string summary(const LayoutSnapshot& s) {
  std::size_t estimated = 0;
  for (const PlacedPoint& p : s.points) estimated += p.estimated ? 1 : 0;
  return fmt::format("seq={} frame={} t={} stored={} estimated={} added={} removed={} beta={:.4f}",
                     s.seq, s.kind == FrameKind::kFull ? "full" : "partial", s.t, s.stored,
                     estimated, s.added.size(), s.removed.size(), s.beta);
}

// Opens --out, or stdout when it is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void print_grid(std::ostream& out, const std::vector<BenchCell>& cells) {
  fmt::print(out, "{:>6} {:>7} | {:>17} {:>17} {:>17} | {:>17} {:>17} | {:>17} {:>17}\n", "D",
             "n", "a1", "a2", "a3", "b1", "b2", "full a1-a3", "partial b1-b2");
  auto cell = [](const StageSummary& s) { return fmt::format("{:8.3f}/{:<8.3f}", s.mean, s.median); };
  for (const BenchCell& c : cells) {
    fmt::print(out, "{:>6} {:>7} | {:>17} {:>17} {:>17} | {:>17} {:>17} | {:>17} {:>17}\n",
               c.dims, c.points, cell(c.a1), cell(c.a2), cell(c.a3), cell(c.b1), cell(c.b2),
               cell(c.full), cell(c.partial));
  }
  fmt::print(out, "milliseconds, mean/median over {} repetitions\n",
             cells.empty() ? 0 : cells.front().reps);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming incremental PCA: replay, export and benchmark"};
  app.require_subcommand(1);

  std::string input = "-";
  std::string out;
  double rate = 0.0;
  bool timings = false;
  tools::PipelineFlags flags;

  auto* replay_cmd = app.add_subcommand("replay", "Run a stream file and print one line per frame");
  auto* export_cmd = app.add_subcommand("export", "Run a stream file and write every snapshot");
  for (auto* cmd : {replay_cmd, export_cmd}) {
    cmd->add_option("--input", input, "Stream file, one event per line ('-' for stdin)")
        ->capture_default_str();
    cmd->add_option("--rate", rate, "Events per second (0: as fast as possible)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", out, "Output file (default stdout)");
    flags.add_to(*cmd, false);
  }
  export_cmd->add_flag("--timings", timings, "Include stage timings (not reproducible)");

  BenchOptions bench;
  std::uint64_t bench_seed = 0;
  auto* bench_cmd = app.add_subcommand("bench", "Stage timings over a (D, n) grid");
  bench_cmd->add_option("--grid-d", bench.dims, "Feature counts")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--grid-n", bench.points, "Stored point counts")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--reps", bench.reps, "Repetitions per cell")->capture_default_str();
  bench_cmd->add_option("--components", bench.components, "k")->capture_default_str();
  bench_cmd->add_option("--batch", bench.batch, "m")->capture_default_str();
  bench_cmd->add_option("--seed", bench_seed, "Data seed")->capture_default_str();
  bench_cmd->add_option("--out", out, "Also write the grid as JSON lines");

  std::string csv;
  std::string synthetic;
  ProgressiveStreamOptions progressive;
  auto* generate_cmd = app.add_subcommand("generate", "Write a stream file");
  auto* source = generate_cmd->add_option_group("source");
  source->add_option("--csv", csv, "Convert a CSV table (header row, optional label column)");
  source->add_option("--synthetic", synthetic, "progressive | uniform")
      ->check(CLI::IsMember({"progressive", "uniform"}));
  source->require_option(1);
  generate_cmd->add_option("--points", progressive.points, "Point count")->capture_default_str();
  generate_cmd->add_option("--dims", progressive.dims, "Feature count")->capture_default_str();
  generate_cmd->add_option("--seed", progressive.seed, "Seed")->capture_default_str();
  generate_cmd->add_option("--out", out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*replay_cmd || *export_cmd) {
      const auto events = tools::load_events(input);
      const PipelineConfig config = flags.config(infer_dims(events));
      Output sink(out);
      const auto start = std::chrono::steady_clock::now();
      std::size_t index = 0;
      Pipeline pipeline(config);
      std::vector<SnapshotPtr> frames;
      for (const StreamEvent& event : events) {
        ++index;
        if (rate > 0.0) {
          std::this_thread::sleep_until(
              start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>((index - 1) / rate)));
        }
        SnapshotPtr snapshot;
        try {
          snapshot = pipeline.ingest(event);
        } catch (const RejectedEvent& e) {
          throw std::runtime_error(fmt::format("{}: event {}: {}", input, index, e.what()));
        }
        if (!snapshot) continue;
        if (*replay_cmd) {
          sink.stream() << summary(*snapshot) << '\n';
        } else {
          sink.stream() << serialize(*snapshot, timings) << '\n';
        }
      }
      sink.stream().flush();
      if (!sink.stream()) throw std::runtime_error("write failed");
      return 0;
    }
    if (*bench_cmd) {
      bench.seed = bench_seed;
      const auto cells = bench_grid(bench, [](const BenchCell& c) {
        fmt::print(stderr, "D={} n={} done\n", c.dims, c.points);
      });
      print_grid(std::cout, cells);
      if (!out.empty()) {
        Output sink(out);
        for (const BenchCell& c : cells) {
          auto stage = [](const StageSummary& s) {
            return nlohmann::json{{"mean", s.mean}, {"median", s.median}};
          };
          sink.stream() << nlohmann::json{{"D", c.dims},          {"n", c.points},
                                          {"reps", c.reps},       {"a1", stage(c.a1)},
                                          {"a2", stage(c.a2)},    {"a3", stage(c.a3)},
                                          {"b1", stage(c.b1)},    {"b2", stage(c.b2)},
                                          {"full", stage(c.full)}, {"partial", stage(c.partial)}}
                               .dump()
                        << '\n';
        }
      }
      return 0;
    }
    if (*generate_cmd) {
      std::vector<StreamEvent> events;
      if (!csv.empty()) {
        std::ifstream in(csv);
        if (!in) throw std::runtime_error("cannot open " + csv);
        events = events_from_csv(in);
      } else if (synthetic == "progressive") {
        events = progressive_stream(progressive);
      } else {
        events = complete_events(
            uniform_points(progressive.points, progressive.dims, progressive.seed));
      }
      Output sink(out);
      write_events(sink.stream(), events);
      return 0;
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "streampca: {}\n", e.what());
    return 1;
  }
  return 0;
}
