#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace riskrules {

using Engine = std::mt19937_64;

/// Engine seeded from a master seed plus any number of stream ids, so that
/// child streams (bootstrap replicate r, retry a, ...) are reproducible and
/// independent of the order in which they are requested.
inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * stream.size());
    auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto s : stream) push(s);
    std::seed_seq seq(words.begin(), words.end());
    return Engine(seq);
}

} // namespace riskrules
