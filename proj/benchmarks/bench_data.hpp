#pragma once

#include <random>
#include <string>
#include <vector>

namespace bench {

inline std::vector<std::string> vocabulary(std::size_t n, unsigned seed = 1) {
  static const char* kSyllables[] = {"ka", "lo", "mi", "ra", "te", "zu", "vo", "ne", "pa", "dor", "lin", "vek"};
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> pick(0, 11);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(kSyllables[pick(rng)]) + kSyllables[pick(rng)] +
                                                    kSyllables[pick(rng)]);
  out.push_back("for");
  out.push_back("and");
  return out;
}

inline std::string text(std::mt19937& rng, const std::vector<std::string>& vocab, std::size_t words) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += vocab[pick(rng)];
  }
  return s;
}

}  // namespace bench
