#include "peacock/log.hpp"

#include <chrono>
#include <ostream>

namespace peacock {

void JsonLogger::event(std::string_view name, nlohmann::json fields) {
  if (!out_) return;
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  nlohmann::json line = nlohmann::json::object();
  line["ts"] = std::chrono::duration<double>(now).count();
  line["event"] = name;
  for (auto& [key, value] : fields.items()) line[key] = std::move(value);
  std::lock_guard lock(mutex_);
  *out_ << line.dump() << '\n';
  out_->flush();
}

}  // namespace peacock
