#pragma once

#include <iosfwd>
#include <mutex>
#include <string_view>

#include <json.hpp>

namespace peacock {

/// Machine-readable progress stream: one JSON object per line with a
/// wall-clock timestamp and an event name. A null stream discards events.
class JsonLogger {
 public:
  explicit JsonLogger(std::ostream* out = nullptr) : out_(out) {}

  void event(std::string_view name, nlohmann::json fields = nlohmann::json::object());
  bool enabled() const { return out_ != nullptr; }

 private:
  std::ostream* out_;
  std::mutex mutex_;
};

}  // namespace peacock
