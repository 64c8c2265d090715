#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "modarc/arcade_env.hpp"

namespace modarc {

struct ContactConfig {
  long horizon = 120;        // ticks a contact stays open for reward credit
  double prior = 0.5;        // value of buckets with no data
  int kernel_radius = 2;
  double tau = 0.3;
  double tau_decay = 0.999;  // per episode
  double tau_floor = 0.05;
};

struct BucketStat {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations from the mean

  double variance() const { return count > 1 ? m2 / double(count - 1) : 0.0; }
  void add(double x);

  friend bool operator==(const BucketStat&, const BucketStat&) = default;
};

struct PendingContact {
  int bucket = 0;
  long tick = 0;
  long deadline = 0;
  double credited = 0.0;
  std::vector<double> offsets;  // raw dx of events merged into this tick
};

// Delayed-reward statistics over 1-px buckets of the contact offset along
// the controllable shape's major axis. Buckets run from -(half + 1) to
// half + 1; the two outermost ones hold misses ("beyond the edge").
class ContactRewardTable {
 public:
  ContactRewardTable(int half_extent, ContactConfig config = {});

  int half_extent() const { return half_; }
  int min_bucket() const { return -half_ - 1; }
  int max_bucket() const { return half_ + 1; }
  bool admissible(int bucket) const { return bucket >= -half_ && bucket <= half_; }
  int bucket_of(double dx) const;

  void record_contact(const ContactEvent& event);
  void settle_rewards(std::span<const RewardEvent> rewards, long current_tick);
  // Settles every open contact regardless of deadline.
  void flush();

  const BucketStat& stat(int bucket) const;
  BucketStat& stat(int bucket);
  const std::vector<PendingContact>& pending() const { return pending_; }
  long dropped_rewards() const { return dropped_; }

  // Count-weighted triangular-kernel mean over neighbors on the same side of
  // the shape edge; the prior when the window holds no data.
  double expected_reward(int bucket) const;
  // Softmax over admissible buckets.
  std::vector<double> probabilities(double tau) const;
  Vec2i sample_contact_point(double tau, std::mt19937_64& rng) const;

  const ContactConfig& config() const { return config_; }

  // bucket_dx,count,mean,variance
  void write_csv(const std::filesystem::path& path) const;
  static ContactRewardTable read_csv(const std::filesystem::path& path, ContactConfig config = {});

 private:
  void settle(const PendingContact& p);

  int half_;
  ContactConfig config_;
  std::vector<BucketStat> bins_;
  std::vector<PendingContact> pending_;
  long dropped_ = 0;
};

}  // namespace modarc
