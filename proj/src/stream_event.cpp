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

#include "streampca/stream_event.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <stdexcept>

namespace streampca {

StreamEvent parse_event(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("event is not a JSON object");

  StreamEvent event;
  const auto id = j.find("id");
  if (id == j.end() || !id->is_string()) {
    throw std::invalid_argument("event needs a string \"id\"");
  }
  event.id = id->get<std::string>();
  if (event.id.empty()) throw std::invalid_argument("event \"id\" is empty");

  const auto values = j.find("values");
  if (values == j.end() || !values->is_array()) {
    throw std::invalid_argument("event needs a \"values\" array");
  }
  event.values.reserve(values->size());
  for (const auto& v : *values) {
    if (!v.is_number()) throw std::invalid_argument("\"values\" must hold numbers only");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw std::invalid_argument("\"values\" must be finite");
    event.values.push_back(x);
  }

  if (const auto t = j.find("t"); t != j.end()) {
    if (!t->is_number()) throw std::invalid_argument("\"t\" must be a number");
    event.t = t->get<double>();
  }
  if (const auto g = j.find("group"); g != j.end() && !g->is_null()) {
    if (!g->is_string()) throw std::invalid_argument("\"group\" must be a string");
    event.group = g->get<std::string>();
  }
  return event;
}

std::string format_event(const StreamEvent& event) {
  nlohmann::json j = {{"id", event.id}, {"values", event.values}, {"t", event.t}};
  if (event.group) j["group"] = *event.group;
  return j.dump();
}

ReadResult read_events(std::istream& in) {
  ReadResult out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.events.push_back(parse_event(line));
    } catch (const std::invalid_argument& e) {
      out.errors.push_back("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace streampca
