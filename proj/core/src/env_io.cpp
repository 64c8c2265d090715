#include "modarc/env_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <sstream>

#include "modarc/error.hpp"

namespace modarc {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                         char((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated frame log", 0);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

std::string ppm_token(std::istream& in) {
  std::string tok;
  while (in) {
    int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  return tok;
}

}  // namespace

const std::array<Rgb, palette::size>& palette_colors() {
  static const std::array<Rgb, palette::size> colors = {{
      {0, 0, 0},        // background
      {142, 142, 142},  // wall
      {200, 72, 72},    // brick
      {84, 92, 214},    // bumper
      {236, 236, 236},  // ball
      {92, 186, 92},    // paddle
      {213, 130, 74},   // opponent
      {198, 108, 58},   // flippers
  }};
  return colors;
}

void write_ppm(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
  const auto& colors = palette_colors();
  for (auto c : frame.cells) {
    const Rgb& rgb = colors.at(c);
    out.write(reinterpret_cast<const char*>(rgb.data()), 3);
  }
}

Frame read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  if (ppm_token(in) != "P6") throw ParseError("not a binary PPM: " + path.string(), 1);
  const int w = std::stoi(ppm_token(in));
  const int h = std::stoi(ppm_token(in));
  if (ppm_token(in) != "255") throw ParseError("unsupported PPM max value", 1);
  in.get();
  Frame frame(w, h);
  const auto& colors = palette_colors();
  for (auto& cell : frame.cells) {
    Rgb rgb;
    if (!in.read(reinterpret_cast<char*>(rgb.data()), 3)) {
      throw ParseError("truncated PPM pixel data", 1);
    }
    auto it = std::find(colors.begin(), colors.end(), rgb);
    if (it == colors.end()) throw ParseError("PPM color outside the palette", 1);
    cell = static_cast<std::uint8_t>(it - colors.begin());
  }
  return frame;
}

void write_frame_log(const std::filesystem::path& path, std::span<const Frame> frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("MFRM", 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    put_u32(out, static_cast<std::uint32_t>(f.width));
    put_u32(out, static_cast<std::uint32_t>(f.height));
    out.write(reinterpret_cast<const char*>(f.cells.data()),
              static_cast<std::streamsize>(f.cells.size()));
  }
}

std::vector<Frame> read_frame_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MFRM", 4) != 0) {
    throw ParseError("bad frame log magic", 0);
  }
  if (get_u32(in) != 1) throw ParseError("unsupported frame log version", 0);
  const auto count = get_u32(in);
  std::vector<Frame> frames;
  frames.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const int w = static_cast<int>(get_u32(in));
    const int h = static_cast<int>(get_u32(in));
    Frame f(w, h);
    if (!in.read(reinterpret_cast<char*>(f.cells.data()),
                 static_cast<std::streamsize>(f.cells.size()))) {
      throw ParseError("truncated frame " + std::to_string(i), 0);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

EventLog::EventLog(const std::filesystem::path& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw IoError("cannot open event log " + path.string());
  if (fresh) out_ << "tick,event_type,fields\n";
}

void EventLog::log(long tick, const std::string& type, const std::string& fields) {
  out_ << tick << ',' << type << ',' << fields << '\n';
}

void EventLog::log_rewards(std::span<const RewardEvent> rewards) {
  for (const auto& r : rewards) {
    std::ostringstream f;
    f << "amount=" << r.amount;
    log(r.tick, "reward", f.str());
  }
}

void EventLog::log_contacts(std::span<const ContactEvent> contacts) {
  for (const auto& c : contacts) {
    std::ostringstream f;
    f << "controllable=" << c.controllable_id << ";other=" << c.other_id
      << ";dx=" << c.offset.x << ";dy=" << c.offset.y << ";miss=" << (c.miss ? 1 : 0);
    log(c.tick, c.miss ? "miss" : "contact", f.str());
  }
}

}  // namespace modarc
