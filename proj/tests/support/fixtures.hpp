#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "echosim/domain.hpp"
#include "echosim/io.hpp"

namespace echosim::testing {

inline Topic ai_topic() {
  Topic t;
  t.id = "t_ai";
  t.question = "whether or not AI should be given human rights";
  t.scale = StanceScale::from_entries({{"Absolutely must not give", 2},
                                       {"Better not to give", 1},
                                       {"Neutral", 0},
                                       {"Better to give", -1},
                                       {"Absolutely must give", -2}});
  return t;
}

inline ReasonBank tiny_bank() {
  ReasonBank b;
  b.topic_id = "t_ai";
  for (StanceValue s = kMinStance; s <= kMaxStance; ++s) {
    b.reasons[s] = {"reason one for " + std::to_string(s), "reason two for " + std::to_string(s)};
  }
  return b;
}

inline RunConfig base_config() {
  RunConfig c;
  c.topic = ai_topic();
  c.reason_bank = tiny_bank();
  return c;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("echosim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace echosim::testing
