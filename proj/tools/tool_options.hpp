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

#pragma once

#include "streampca/pipeline.hpp"
#include "streampca/replay.hpp"
#include "streampca/stream_event.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace streampca::tools {

// Pipeline flags shared by the CLI and the server.
struct PipelineFlags {
  int dims = 0;  // 0: infer from the input
  int components = 2;
  int batch = 2;
  double forget = 1.0;
  std::string retention = "keep-all";
  std::uint64_t seed = 0;
  double coalesce = 0.0;
  bool no_align = false;
  int max_iterations = 1000;
  std::size_t profile_cap = 0;  // 0: every stored point anchors a placement

  void add_to(CLI::App& app, bool with_env) {
    auto env = [&](CLI::Option* o, const char* name) {
      if (with_env) o->envname(name);
      return o;
    };
    env(app.add_option("--dims", dims, "Feature count D (default: longest values array)"),
        "STREAMPCA_DIMS")
        ->check(CLI::NonNegativeNumber);
    env(app.add_option("--components", components, "Layout dimensions k")->capture_default_str(),
        "STREAMPCA_COMPONENTS");
    env(app.add_option("--batch", batch, "Points per model update m")->capture_default_str(),
        "STREAMPCA_BATCH");
    env(app.add_option("--forget", forget, "Forgetting factor f in (0, 1]")->capture_default_str(),
        "STREAMPCA_FORGET");
    app.add_option("--retention", retention,
                   "keep-all, or effective: drop points beyond ceil(m / (1 - f))")
        ->check(CLI::IsMember({"keep-all", "effective"}))
        ->capture_default_str();
    env(app.add_option("--seed", seed, "Seed for subsampling decisions")->capture_default_str(),
        "STREAMPCA_SEED");
    app.add_option("--coalesce", coalesce,
                   "Minimum stream-time gap between partial frames (0: emit all)")
        ->capture_default_str();
    app.add_flag("--no-align", no_align, "Skip Procrustes alignment between frames");
    app.add_option("--max-iterations", max_iterations, "Estimator iteration cap")
        ->capture_default_str();
    env(app.add_option("--profile-cap", profile_cap,
                       "Place partial points against at most this many sampled stored points"),
        "STREAMPCA_PROFILE_CAP");
  }

  PipelineConfig config(int inferred_dims) const {
    PipelineConfig c;
    c.dims = dims > 0 ? dims : inferred_dims;
    c.components = components;
    c.batch = batch;
    c.forgetting = forget;
    c.retention = retention == "effective" ? Retention::kForgetBeyondEffectiveHistory
                                           : Retention::kKeepAll;
    c.seed = seed;
    c.coalesce_window = coalesce;
    c.align = !no_align;
    c.estimator.max_iterations = max_iterations;
    if (profile_cap > 0) {
      c.subsample_profiles = true;
      c.profile_cap = profile_cap;
    }
    c.validate();
    return c;
  }
};

// Reads a stream file ("-" for stdin); any malformed line is fatal.
inline std::vector<StreamEvent> load_events(const std::string& path) {
  ReadResult result;
  if (path == "-") {
    result = read_events(std::cin);
  } else {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    result = read_events(in);
  }
  if (!result.errors.empty()) {
    std::string message = path + ": " + std::to_string(result.errors.size()) + " malformed line(s)";
    for (std::size_t i = 0; i < result.errors.size() && i < 5; ++i) {
      message += "\n  " + result.errors[i];
    }
    throw std::runtime_error(message);
  }
  return std::move(result.events);
}

}  // namespace streampca::tools
