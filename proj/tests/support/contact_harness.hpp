#pragma once

#include <random>

#include "modarc/contact_reward.hpp"

namespace modarc::oracle {

// Bucket-wise true mean: -1 beyond either edge, rising linearly from -1 at
// the left edge to +1 at the right edge. Rewards are drawn from {-1, 0, +1}
// with that mean.
inline double synthetic_mean(int bucket, int half) {
  if (bucket < -half || bucket > half) return -1.0;
  return double(bucket) / half;
}

inline int synthetic_argmax(int half) { return half; }

// Streams `per_bucket` contacts per bucket through record_contact and
// settle_rewards, with each reward arriving before the horizon closes.
inline ContactRewardTable synthetic_table(int half, int per_bucket, std::mt19937_64& rng,
                                          ContactConfig config = {}) {
  ContactRewardTable table(half, config);
  std::vector<int> order;
  for (int b = -half - 1; b <= half + 1; ++b) {
    for (int i = 0; i < per_bucket; ++i) order.push_back(b);
  }
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> u(0, 1);
  long tick = 0;
  for (int b : order) {
    const bool miss = b < -half || b > half;
    table.record_contact({10, 20, {b, -1}, tick, miss});
    const double m = synthetic_mean(b, half);
    const double draw = u(rng);
    const double amount = m >= 0 ? (draw < m ? 1.0 : 0.0) : (draw < -m ? -1.0 : 0.0);
    tick += 10;
    if (amount != 0.0) {
      const RewardEvent r{amount, tick};
      table.settle_rewards(std::span(&r, 1), tick);
    }
    tick += config.horizon + 1;
    table.settle_rewards({}, tick);
  }
  table.flush();
  return table;
}

inline int expected_argmax(const ContactRewardTable& table) {
  int best = table.min_bucket();
  for (int b = table.min_bucket() + 1; b <= table.max_bucket(); ++b) {
    if (table.expected_reward(b) > table.expected_reward(best)) best = b;
  }
  return best;
}

}  // namespace modarc::oracle
