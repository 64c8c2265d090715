#include <gtest/gtest.h>

#include "modarc/arcade_env.hpp"
#include "modarc/env_io.hpp"
#include "modarc/error.hpp"
#include "modarc/kv_config.hpp"
#include "test_util.hpp"

namespace modarc {
namespace {

using testing::scratch_dir;
using testing::slurp;

TEST(Ppm, RoundTripsEveryEnvironment) {
  const auto dir = scratch_dir();
  for (auto env : {EnvName::duel, EnvName::bricks, EnvName::pinball_lite}) {
    const Frame f = render(reset(env, 2));
    const auto path = dir / (std::string(to_string(env)) + ".ppm");
    write_ppm(path, f);
    EXPECT_EQ(read_ppm(path), f);
  }
}

TEST(Ppm, RejectsForeignFiles) {
  const auto dir = scratch_dir();
  std::ofstream(dir / "x.ppm") << "P3\n1 1\n255\n0 0 0\n";
  EXPECT_THROW(read_ppm(dir / "x.ppm"), ParseError);
  EXPECT_THROW(read_ppm(dir / "missing.ppm"), IoError);
}

TEST(FrameLog, RoundTrip) {
  const auto dir = scratch_dir();
  EnvState s = reset(EnvName::bricks, 1);
  std::vector<Frame> frames;
  for (int i = 0; i < 5; ++i) {
    frames.push_back(render(s));
    s = step(s, "right").state;
  }
  write_frame_log(dir / "f.bin", frames);
  EXPECT_EQ(read_frame_log(dir / "f.bin"), frames);
}

TEST(EventLogFile, AppendsWithSingleHeader) {
  const auto dir = scratch_dir();
  const auto path = dir / "events.csv";
  {
    EventLog log(path);
    std::vector<RewardEvent> r{{1.0, 3}};
    log.log_rewards(r);
  }
  {
    EventLog log(path);
    std::vector<ContactEvent> c{{10, 20, {-3, -1}, 7, false}};
    log.log_contacts(c);
  }
  EXPECT_EQ(slurp(path),
            "tick,event_type,fields\n3,reward,amount=1\n"
            "7,contact,controllable=10;other=20;dx=-3;dy=-1;miss=0\n");
}

TEST(KvConfigParse, CommentsListsAndErrors) {
  auto cfg = KvConfig::parse("# c\na = 1\n b= x y # tail\nlist = 1, 2,3\n");
  EXPECT_EQ(cfg.get_int("a", 0), 1);
  EXPECT_EQ(cfg.get_string("b", ""), "x y");
  EXPECT_EQ(cfg.get_int_list("list", {}), (std::vector<long>{1, 2, 3}));
  try {
    KvConfig::parse("a = 1\n\nbroken\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(KvConfig::parse("a=1\na=2\n"), ParseError);
}

}  // namespace
}  // namespace modarc
