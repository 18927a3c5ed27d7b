#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gr::guidance {

enum class Metric { kNC, kLSA, kDSA, kRandom };

std::string_view to_string(Metric metric);
/// Accepts NC, LSA, DSA, RANDOM (case-insensitive).
Metric parse_metric(std::string_view text);

struct GuidanceScore {
  std::size_t input_id = 0;
  Metric metric = Metric::kRandom;
  double value = 0.0;

  friend bool operator==(const GuidanceScore&, const GuidanceScore&) = default;
};

using GuidanceScores = std::vector<GuidanceScore>;

/// Value of ids[k] is its rank in a PCG32(seed) shuffle, so sorting by value
/// replays that shuffle.
GuidanceScores random_score(std::span<const std::size_t> ids, std::uint64_t seed);

/// Input ids by descending score; equal scores keep ascending id order.
/// Throws on mixed metrics, duplicate ids or non-finite values.
std::vector<std::size_t> order_inputs(const GuidanceScores& scores);

/// CSV with header `input_id,metric,value`, values to 9 significant digits.
void write_scores_csv(std::ostream& out, const GuidanceScores& scores);
GuidanceScores read_scores_csv(std::istream& in);

}  // namespace gr::guidance
