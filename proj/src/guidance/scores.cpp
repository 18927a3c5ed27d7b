#include "gr/guidance/scores.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "gr/error.hpp"
#include "gr/pcg32.hpp"

namespace gr::guidance {

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kNC: return "NC";
    case Metric::kLSA: return "LSA";
    case Metric::kDSA: return "DSA";
    case Metric::kRandom: return "RANDOM";
  }
  return "?";
}

Metric parse_metric(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "NC") return Metric::kNC;
  if (upper == "LSA") return Metric::kLSA;
  if (upper == "DSA") return Metric::kDSA;
  if (upper == "RANDOM") return Metric::kRandom;
  fail(ErrorCode::kInvalidArgument, "unknown metric '" + std::string(text) + "'");
}

GuidanceScores random_score(std::span<const std::size_t> ids, std::uint64_t seed) {
  std::vector<std::size_t> rank(ids.size());
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  Pcg32 rng(seed);
  rng.shuffle(std::span<std::size_t>(rank));
  GuidanceScores out;
  out.reserve(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    out.push_back({ids[k], Metric::kRandom, static_cast<double>(rank[k])});
  }
  return out;
}

std::vector<std::size_t> order_inputs(const GuidanceScores& scores) {
  std::set<std::size_t> seen;
  for (const auto& s : scores) {
    if (s.metric != scores.front().metric) {
      fail(ErrorCode::kInvalidArgument, "order_inputs needs scores of a single metric");
    }
    if (!seen.insert(s.input_id).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate score for input " + std::to_string(s.input_id) +
                                            " (" + std::string(to_string(s.metric)) + ")");
    }
    if (!std::isfinite(s.value)) {
      fail(ErrorCode::kNonFinite, "score for input " + std::to_string(s.input_id) + " is not finite");
    }
  }
  std::vector<const GuidanceScore*> sorted;
  sorted.reserve(scores.size());
  for (const auto& s : scores) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(), [](const GuidanceScore* a, const GuidanceScore* b) {
    if (a->value != b->value) return a->value > b->value;
    return a->input_id < b->input_id;
  });
  std::vector<std::size_t> ids;
  ids.reserve(sorted.size());
  for (const auto* s : sorted) ids.push_back(s->input_id);
  return ids;
}

void write_scores_csv(std::ostream& out, const GuidanceScores& scores) {
  out << "input_id,metric,value\n";
  char buf[64];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%.9g", s.value);
    out << s.input_id << ',' << to_string(s.metric) << ',' << buf << '\n';
  }
}

GuidanceScores read_scores_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "input_id,metric,value") {
    fail(ErrorCode::kConfig, "scores CSV must start with 'input_id,metric,value'");
  }
  GuidanceScores out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, metric, value;
    if (!std::getline(row, id, ',') || !std::getline(row, metric, ',') || !std::getline(row, value)) {
      fail(ErrorCode::kConfig, "malformed scores row '" + line + "'");
    }
    try {
      out.push_back({std::stoull(id), parse_metric(metric), std::stod(value)});
    } catch (const std::logic_error&) {
      fail(ErrorCode::kConfig, "malformed scores row '" + line + "'");
    }
  }
  return out;
}

}  // namespace gr::guidance
