#include <map>

#include "postedit/error.hpp"
#include "postedit/metrics.hpp"
#include "postedit/unicode.hpp"

namespace postedit::metrics {

namespace {

std::u32string prepare(std::string_view text, bool ignore_whitespace) {
  std::u32string cps = unicode::to_u32(text);
  if (ignore_whitespace) std::erase_if(cps, unicode::is_space);
  return cps;
}

std::map<std::u32string, std::size_t> char_ngrams(const std::u32string& text, std::size_t n) {
  std::map<std::u32string, std::size_t> counts;
  if (text.size() < n) return counts;
  for (std::size_t i = 0; i + n <= text.size(); ++i) ++counts[text.substr(i, n)];
  return counts;
}

}  // namespace

double chrf_corpus(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                   const ChrfConfig& config) {
  if (hypotheses.size() != references.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses vs " +
                                               std::to_string(references.size()) + " references");
  }
  if (config.char_n == 0) throw Error(ErrorCode::InvalidArgument, "chrF char_n must be positive");
  std::vector<std::size_t> matches(config.char_n, 0);
  std::vector<std::size_t> hyp_total(config.char_n, 0);
  std::vector<std::size_t> ref_total(config.char_n, 0);
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const std::u32string hyp = prepare(hypotheses[s], config.ignore_whitespace);
    const std::u32string ref = prepare(references[s], config.ignore_whitespace);
    for (std::size_t n = 1; n <= config.char_n; ++n) {
      const auto h = char_ngrams(hyp, n);
      const auto r = char_ngrams(ref, n);
      for (const auto& [gram, count] : h) {
        hyp_total[n - 1] += count;
        auto it = r.find(gram);
        if (it != r.end()) matches[n - 1] += std::min(count, it->second);
      }
      for (const auto& [gram, count] : r) ref_total[n - 1] += count;
    }
  }

  // Average precision and recall over the orders that exist on both sides.
  double precision = 0.0;
  double recall = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 0; n < config.char_n; ++n) {
    if (hyp_total[n] == 0 || ref_total[n] == 0) continue;
    precision += static_cast<double>(matches[n]) / static_cast<double>(hyp_total[n]);
    recall += static_cast<double>(matches[n]) / static_cast<double>(ref_total[n]);
    ++orders;
  }
  if (orders == 0) return 0.0;
  precision /= static_cast<double>(orders);
  recall /= static_cast<double>(orders);
  if (precision == 0.0 && recall == 0.0) return 0.0;
  const double b2 = config.beta * config.beta;
  return 100.0 * (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

}  // namespace postedit::metrics
