// Random message generator shared by the protocol tests and the acceptance run.
#ifndef COBOT_TESTS_GENERATORS_HPP
#define COBOT_TESTS_GENERATORS_HPP

#include <random>
#include <string>

#include "cobot/protocol.hpp"

namespace gen {

using namespace cobot;
using namespace cobot::protocol;

class MessageGenerator {
 public:
  explicit MessageGenerator(std::uint64_t seed) : rng_(seed) {}

  // Mix of ordinary magnitudes and awkward doubles (subnormals, huge, integral, -0).
  double real() {
    switch (pick(10)) {
      case 0: return 0.0;
      case 1: return -0.0;
      case 2: return static_cast<double>(static_cast<std::int64_t>(rng_() % 2000001) - 1000000);
      case 3: return std::ldexp(uniform(-1, 1), static_cast<int>(pick(2000)) - 1000);
      case 4: return std::numeric_limits<double>::denorm_min() * static_cast<double>(pick(1000) + 1);
      case 5: return uniform(-1, 1) * std::numeric_limits<double>::max();
      default: return uniform(-10, 10);
    }
  }
  double unit() { return uniform(-1, 1); }

  std::string text() {
    static const std::string alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _-/.:\"\\\t{}[],";
    static const char* unicode[] = {"\xc3\xa9", "\xe2\x86\x92", "\xf0\x9f\xa4\x96"};  // é → 🤖
    std::string s;
    const std::size_t n = pick(24);
    for (std::size_t i = 0; i < n; ++i) {
      if (pick(12) == 0)
        s += unicode[pick(3)];
      else if (pick(40) == 0)
        s += static_cast<char>(pick(32));  // control character, must be escaped
      else
        s += alphabet[pick(alphabet.size())];
    }
    return s;
  }

  template <std::size_t N>
  std::array<double, N> reals() {
    std::array<double, N> a{};
    for (auto& v : a) v = real();
    return a;
  }

  WirePose pose() { return WirePose{reals<3>(), reals<4>()}; }

  Payload payload(std::size_t variant) {
    switch (variant) {
      case 0: {
        Hello h;
        h.scenario = text();
        h.scheme = text();
        h.dt = real();
        const std::size_t n = pick(8);
        for (std::size_t i = 0; i < n; ++i) h.arm.push_back(WireJoint{reals<3>(), reals<3>(), real(), real()});
        return h;
      }
      case 1: {
        SceneState s;
        s.joints = reals<kNumJoints>();
        s.ee = pose();
        s.block = pose();
        s.phase = static_cast<Phase>(pick(kNumPhases));
        s.grasped = pick(2);
        s.gripper_closed = pick(2);
        return s;
      }
      case 2: {
        Actuators a;
        a.intensities = reals<kNumActuators>();
        a.timestamp_ms = static_cast<std::int64_t>(rng_());
        a.source = text();
        return a;
      }
      case 3: {
        Arrows a;
        const std::size_t n = pick(4);
        for (std::size_t i = 0; i < n; ++i)
          a.glyphs.push_back(WireArrow{reals<3>(), reals<3>(), pick(2) ? ArrowColor::Green : ArrowColor::Red});
        return a;
      }
      case 4: {
        Input in;
        in.sample.axis1 = pick(5) == 0 ? (pick(2) ? 1.0 : -1.0) : unit();
        in.sample.axis2 = unit();
        in.sample.mode_switch_pressed = pick(2);
        in.sample.grip_toggle_pressed = pick(2);
        in.sample.timestamp_ms = static_cast<std::int64_t>(rng_() >> 1) * (pick(2) ? 1 : -1);
        return in;
      }
      case 5: return ModeSwitch{static_cast<std::uint32_t>(rng_()), text()};
      case 6: return TaskEventMsg{text()};
      case 7: return Metrics{static_cast<int>(rng_() % 100000), real()};
      default: return Bye{text()};
    }
  }

  Message message(std::size_t variant) {
    Message m;
    m.session = text();
    m.seq = rng_();
    m.tick = rng_() >> pick(64);
    m.payload = payload(variant);
    return m;
  }

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

 private:
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  std::mt19937_64 rng_;
};

inline constexpr std::size_t kNumVariants = std::variant_size_v<cobot::protocol::Payload>;

}  // namespace gen

#endif  // COBOT_TESTS_GENERATORS_HPP
