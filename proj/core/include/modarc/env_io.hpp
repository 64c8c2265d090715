#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "modarc/arcade_env.hpp"
#include "modarc/frame.hpp"

namespace modarc {

using Rgb = std::array<std::uint8_t, 3>;
const std::array<Rgb, palette::size>& palette_colors();

// Binary portable pixmap (P6).
void write_ppm(const std::filesystem::path& path, const Frame& frame);
Frame read_ppm(const std::filesystem::path& path);

// Packed frame stream: "MFRM", u32 version, u32 count, then per frame
// u32 width, u32 height and width*height palette bytes.
void write_frame_log(const std::filesystem::path& path, std::span<const Frame> frames);
std::vector<Frame> read_frame_log(const std::filesystem::path& path);

// Append-only CSV event log with header `tick,event_type,fields`.
class EventLog {
 public:
  explicit EventLog(const std::filesystem::path& path);

  void log_rewards(std::span<const RewardEvent> rewards);
  void log_contacts(std::span<const ContactEvent> contacts);
  void log(long tick, const std::string& type, const std::string& fields);

 private:
  std::ofstream out_;
};

}  // namespace modarc
