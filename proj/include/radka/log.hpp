// Copyright 2026 The Radka Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal stderr logger. Level comes from RADKA_LOG (debug|info|warn|error,
// default info).

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace radka::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3 };

inline Level level_from_env() {
  const char* env = std::getenv("RADKA_LOG");
  if (!env) return Level::Info;
  const std::string_view v(env);
  if (v == "debug") return Level::Debug;
  if (v == "warn") return Level::Warn;
  if (v == "error") return Level::Error;
  return Level::Info;
}

inline Level& threshold() {
  static Level lvl = level_from_env();
  return lvl;
}

inline void write(Level lvl, std::string_view msg) {
  if (lvl < threshold()) return;
  static std::mutex mu;
  static constexpr const char* names[] = {"debug", "info", "warn", "error"};
  std::lock_guard lock(mu);
  std::cerr << "[radka " << names[static_cast<int>(lvl)] << "] " << msg << '\n';
}

inline void debug(std::string_view m) { write(Level::Debug, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void warn(std::string_view m) { write(Level::Warn, m); }
inline void error(std::string_view m) { write(Level::Error, m); }

}  // namespace radka::log
