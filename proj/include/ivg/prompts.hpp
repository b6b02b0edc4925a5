#pragma once

#include <array>
#include <string_view>

namespace ivg {

// Fixed role/task instructions. Byte-exact; never edited at runtime.
struct PromptRegistry {
  static constexpr std::string_view kAsking = "Be helpful, and ask for clarification if unsure.";
  static constexpr std::string_view kLocating = "Be helpful, and output bounding box only.";
  static constexpr std::string_view kAnswering = "Be helpful, and answer questions.";
  static constexpr std::string_view kCaptioning = "What do you see?";
  static constexpr std::string_view kStopping = "Is it clear?";

  static constexpr std::array<std::string_view, 5> all() {
    return {kAsking, kLocating, kAnswering, kCaptioning, kStopping};
  }
};

}  // namespace ivg
