#include "modarc/contact_reward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "modarc/error.hpp"

namespace modarc {

void BucketStat::add(double x) {
  ++count;
  const double d = x - mean;
  mean += d / double(count);
  m2 += d * (x - mean);
}

ContactRewardTable::ContactRewardTable(int half_extent, ContactConfig config)
    : half_(half_extent), config_(config), bins_(std::size_t(2 * half_extent + 3)) {
  if (half_extent < 0) throw ConfigError("contact half extent must be >= 0");
  if (config_.horizon < 1) throw ConfigError("attribution horizon must be >= 1");
}

int ContactRewardTable::bucket_of(double dx) const {
  const int b = static_cast<int>(std::floor(dx + 0.5));
  return std::clamp(b, min_bucket(), max_bucket());
}

const BucketStat& ContactRewardTable::stat(int bucket) const {
  return bins_.at(std::size_t(bucket - min_bucket()));
}
BucketStat& ContactRewardTable::stat(int bucket) {
  return bins_.at(std::size_t(bucket - min_bucket()));
}

void ContactRewardTable::record_contact(const ContactEvent& event) {
  const double dx = event.offset.x;
  if (!pending_.empty() && pending_.back().tick == event.tick) {
    auto& p = pending_.back();
    p.offsets.push_back(dx);
    const double mean = std::accumulate(p.offsets.begin(), p.offsets.end(), 0.0) /
                        double(p.offsets.size());
    p.bucket = bucket_of(mean);
    return;
  }
  pending_.push_back({bucket_of(dx), event.tick, event.tick + config_.horizon, 0.0, {dx}});
}

void ContactRewardTable::settle(const PendingContact& p) { stat(p.bucket).add(p.credited); }

void ContactRewardTable::settle_rewards(std::span<const RewardEvent> rewards, long current_tick) {
  for (const auto& r : rewards) {
    auto it = std::find_if(pending_.rbegin(), pending_.rend(), [&](const PendingContact& p) {
      return p.tick <= r.tick && r.tick <= p.deadline;
    });
    if (it == pending_.rend()) {
      ++dropped_;
      continue;
    }
    it->credited += r.amount;
  }
  auto expired = std::stable_partition(pending_.begin(), pending_.end(),
                                       [&](const PendingContact& p) {
                                         return p.deadline >= current_tick;
                                       });
  for (auto it = expired; it != pending_.end(); ++it) settle(*it);
  pending_.erase(expired, pending_.end());
}

void ContactRewardTable::flush() {
  for (const auto& p : pending_) settle(p);
  pending_.clear();
}

double ContactRewardTable::expected_reward(int bucket) const {
  bucket = std::clamp(bucket, min_bucket(), max_bucket());
  const bool inside = admissible(bucket);
  double num = 0.0, den = 0.0;
  for (int j = -config_.kernel_radius; j <= config_.kernel_radius; ++j) {
    const int b = bucket + j;
    if (b < min_bucket() || b > max_bucket() || admissible(b) != inside) continue;
    const auto& s = stat(b);
    if (s.count == 0) continue;
    const double w = double(config_.kernel_radius + 1 - std::abs(j)) * double(s.count);
    num += w * s.mean;
    den += w;
  }
  return den > 0.0 ? num / den : config_.prior;
}

std::vector<double> ContactRewardTable::probabilities(double tau) const {
  if (!(tau > 0.0)) throw ConfigError("softmax temperature must be > 0");
  std::vector<double> logits;
  for (int b = -half_; b <= half_; ++b) logits.push_back(expected_reward(b) / tau);
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) total += (l = std::exp(l - top));
  for (auto& l : logits) l /= total;
  return logits;
}

Vec2i ContactRewardTable::sample_contact_point(double tau, std::mt19937_64& rng) const {
  const auto p = probabilities(tau);
  std::discrete_distribution<int> dist(p.begin(), p.end());
  return {dist(rng) - half_, 0};
}

void ContactRewardTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "bucket_dx,count,mean,variance\n";
  char buf[128];
  for (int b = min_bucket(); b <= max_bucket(); ++b) {
    const auto& s = stat(b);
    std::snprintf(buf, sizeof buf, "%d,%ld,%.17g,%.17g\n", b, s.count, s.mean, s.variance());
    out << buf;
  }
}

ContactRewardTable ContactRewardTable::read_csv(const std::filesystem::path& path,
                                                ContactConfig config) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<int, BucketStat>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    int b = 0;
    long count = 0;
    double mean = 0, var = 0;
    if (std::sscanf(line.c_str(), "%d,%ld,%lf,%lf", &b, &count, &mean, &var) != 4) {
      throw ParseError("malformed contact table row", lineno);
    }
    rows.push_back({b, {count, mean, count > 1 ? var * double(count - 1) : 0.0}});
  }
  if (rows.empty()) throw ParseError("empty contact table", lineno);
  ContactRewardTable table(-rows.front().first - 1, config);
  for (const auto& [b, s] : rows) table.stat(b) = s;
  return table;
}

}  // namespace modarc
