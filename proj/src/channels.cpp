#include "sensecast/channels.hpp"

namespace sensecast {

std::size_t channel_index(std::string_view name) {
  for (std::size_t i = 0; i < kChannels.size(); ++i) {
    if (kChannels[i].name == name) return i;
  }
  return kNumChannels;
}

std::array<GroupSlice, kNumGroups> group_slices() {
  return {{
      {"physical_activity", 0, 6},
      {"chair_movement", 6, 6},
      {"environment", 12, 3},
  }};
}

}  // namespace sensecast
