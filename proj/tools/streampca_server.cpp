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

#include "streampca/server.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>

int main(int argc, char** argv) {
  using namespace streampca;
  CLI::App app{"Serve streaming PCA layouts over /stream"};

  std::string listen = "127.0.0.1:8080";
  std::string input;
  double rate = 10.0;
  std::size_t max_queue = 100000;
  std::string log_level = "info";
  tools::PipelineFlags flags;

  app.add_option("--listen", listen, "host:port")->envname("STREAMPCA_LISTEN")->capture_default_str();
  app.add_option("--input", input, "Stream file replayed at --rate; live events go to POST /events")
      ->envname("STREAMPCA_INPUT");
  app.add_option("--rate", rate, "Replay events per second (0: as fast as possible)")
      ->envname("STREAMPCA_RATE")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--max-queue", max_queue, "Live events allowed to wait for the pipeline")
      ->capture_default_str();
  app.add_option("--log-level", log_level, "trace | debug | info | warn | error")
      ->envname("STREAMPCA_LOG_LEVEL")
      ->capture_default_str();
  flags.add_to(app, true);
  CLI11_PARSE(app, argc, argv);

  spdlog::set_level(spdlog::level::from_str(log_level));
  try {
    ServerOptions options;
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("--listen needs host:port");
    options.address = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::invalid_argument("--listen port out of range");
    options.port = static_cast<unsigned short>(port);
    options.rate = rate;
    options.max_queued_events = max_queue;

    int inferred = 0;
    if (!input.empty()) {
      // Unlike the offline CLI, the service skips malformed lines.
      std::ifstream in(input);
      if (!in) throw std::runtime_error("cannot open " + input);
      ReadResult read = read_events(in);
      for (const std::string& error : read.errors) spdlog::warn("{}: {}", input, error);
      options.replay = std::move(read.events);
      inferred = infer_dims(options.replay);
    }
    if (flags.dims == 0 && inferred == 0) {
      throw std::invalid_argument("--dims is required without an --input file");
    }
    options.pipeline = flags.config(inferred);
    Server server(std::move(options));
    server.run();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
