#pragma once

#include <optional>
#include <vector>

#include "pcpa/corpus.hpp"

namespace pcpa {

/// Per-sentence model output. Absent targets mean the pointer chose the
/// self slot (no outgoing link).
struct SentencePrediction {
  AccType type = AccType::NonArg;
  std::optional<int> ipr_target;  // ordinal in the same post
  std::optional<int> ipi_target;  // ordinal in the parent post
};

struct ThreadPrediction {
  std::vector<std::vector<SentencePrediction>> posts;
};

}  // namespace pcpa
