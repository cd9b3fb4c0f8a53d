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
#include "streampca/snapshot.hpp"
#include "streampca/stream_event.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace streampca {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  PipelineConfig pipeline;
  std::vector<StreamEvent> replay;  // played once from start()
  double rate = 0.0;                // replay events per second; 0 = as fast as possible
  std::size_t max_queued_events = 100000;  // live events waiting for the writer
};

/// Runs one pipeline and serves its snapshots.
///
///   GET  /healthz  -> {"seq": N, "stored": n}
///   GET  /stream   -> WebSocket. Server sends {"kind": "snapshot", ...,
///                     "focus": {...} | null}, "ack" and "error" messages;
///                     clients send {"kind": "select", "seq": N,
///                     "mode": "...", "ids": [...]}.
///   POST /events   -> line-delimited events appended to the stream.
///
/// A single writer thread ingests events; one I/O thread owns all
/// connections. Each client holds at most one unsent snapshot, so a slow
/// reader skips frames instead of queueing them.
class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Bound port (useful with port 0).
  unsigned short port() const;

  void start();
  void stop();
  /// start() and block until stop() or SIGINT/SIGTERM.
  void run();

  /// Thread-safe. False when the live queue is full; nothing is enqueued then.
  bool submit(std::vector<StreamEvent> events);

  std::shared_ptr<const LayoutSnapshot> latest() const;
  std::uint64_t processed_events() const;
  bool wait_for_processed(std::uint64_t count, std::chrono::milliseconds timeout) const;
  /// Blocks until every snapshot emitted so far has been handed to the
  /// connection layer.
  bool wait_for_published(std::chrono::milliseconds timeout) const;
  std::size_t sessions() const;

  struct Impl;  // defined in server.cpp

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace streampca
