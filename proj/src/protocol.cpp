#include "cobot/protocol.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace cobot::protocol {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Canonical writer: sorted keys (nlohmann objects are std::map backed) and
// shortest round-trip doubles via std::to_chars.

void writeDouble(std::string& out, double d) {
  if (!std::isfinite(d)) throw std::invalid_argument("cannot encode non-finite number");
  if (d == 0.0) {
    out += '0';
    return;
  }
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  if (ec != std::errc{}) throw std::invalid_argument("number formatting failed");
  out.append(buf, end);
}

void writeCanonical(std::string& out, const json& j) {
  switch (j.type()) {
    case json::value_t::null: out += "null"; break;
    case json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; break;
    case json::value_t::number_integer: out += std::to_string(j.get<std::int64_t>()); break;
    case json::value_t::number_unsigned: out += std::to_string(j.get<std::uint64_t>()); break;
    case json::value_t::number_float: writeDouble(out, j.get<double>()); break;
    case json::value_t::string:
      try {
        out += j.dump();
      } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("cannot encode string: ") + e.what());
      }
      break;
    case json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        writeCanonical(out, v);
      }
      out += ']';
      break;
    }
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        writeCanonical(out, it.value());
      }
      out += '}';
      break;
    }
    default:
      throw std::invalid_argument("unsupported json value");
  }
}

template <std::size_t N>
json arrayJson(const std::array<double, N>& a) {
  json j = json::array();
  for (double v : a) j.push_back(v);
  return j;
}

json poseJson(const WirePose& p) { return json{{"p", arrayJson(p.position)}, {"q", arrayJson(p.orientation)}}; }

// ---------------------------------------------------------------------------
// Strict field reader.

class Fields {
 public:
  Fields(const json& obj, std::string_view what) : obj_(obj), what_(what) {
    if (!obj_.is_object()) fail("expected an object");
  }

  void expectKeys(std::initializer_list<std::string_view> keys) const {
    std::set<std::string, std::less<>> allowed(keys.begin(), keys.end());
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!allowed.count(it.key())) fail("unexpected field '" + it.key() + "'");
    for (auto k : keys)
      if (!obj_.contains(std::string(k))) fail("missing field '" + std::string(k) + "'");
  }

  const json& at(std::string_view key) const {
    auto it = obj_.find(std::string(key));
    if (it == obj_.end()) fail("missing field '" + std::string(key) + "'");
    return *it;
  }

  double number(std::string_view key) const { return asNumber(at(key), key); }

  std::int64_t integer(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail("field '" + std::string(key) + "' must be an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
      fail("field '" + std::string(key) + "' out of range");
    return v.get<std::int64_t>();
  }

  std::uint64_t unsignedInt(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_number_unsigned()) fail("field '" + std::string(key) + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_boolean()) fail("field '" + std::string(key) + "' must be a boolean");
    return v.get<bool>();
  }

  std::string string(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_string()) fail("field '" + std::string(key) + "' must be a string");
    return v.get<std::string>();
  }

  template <std::size_t N>
  std::array<double, N> numbers(std::string_view key) const {
    return numbersOf<N>(at(key), key);
  }

  template <std::size_t N>
  std::array<double, N> numbersOf(const json& v, std::string_view key) const {
    if (!v.is_array() || v.size() != N)
      fail("field '" + std::string(key) + "' must be an array of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = asNumber(v[i], key);
    return out;
  }

  WirePose pose(std::string_view key) const {
    Fields f(at(key), key);
    f.expectKeys({"p", "q"});
    WirePose p;
    p.position = f.numbers<3>("p");
    p.orientation = f.numbers<4>("q");
    return p;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(std::string(what_) + ": " + msg); }

 private:
  double asNumber(const json& v, std::string_view key) const {
    if (!v.is_number()) fail("field '" + std::string(key) + "' must be a number");
    return v.get<double>();
  }

  const json& obj_;
  std::string_view what_;
};

struct PayloadEncoder {
  json& j;

  void operator()(const Hello& h) const {
    j["version"] = h.version;
    j["scenario"] = h.scenario;
    j["scheme"] = h.scheme;
    j["dt"] = h.dt;
    json arm = json::array();
    for (const auto& joint : h.arm)
      arm.push_back(json{{"axis", arrayJson(joint.axis)},
                         {"offset", arrayJson(joint.offset)},
                         {"limits", json::array({joint.lower, joint.upper})}});
    j["arm"] = std::move(arm);
  }
  void operator()(const SceneState& s) const {
    j["joints"] = arrayJson(s.joints);
    j["ee"] = poseJson(s.ee);
    j["block"] = poseJson(s.block);
    j["phase"] = std::string(phaseName(s.phase));
    j["grasped"] = s.grasped;
    j["gripper_closed"] = s.gripper_closed;
  }
  void operator()(const Actuators& a) const {
    j["intensities"] = arrayJson(a.intensities);
    j["ts"] = a.timestamp_ms;
    j["source"] = a.source;
  }
  void operator()(const Arrows& a) const {
    json glyphs = json::array();
    for (const auto& g : a.glyphs)
      glyphs.push_back(json{{"origin", arrayJson(g.origin)},
                            {"vector", arrayJson(g.vector)},
                            {"color", std::string(arrowColorName(g.color))}});
    j["glyphs"] = std::move(glyphs);
  }
  void operator()(const Input& in) const {
    j["axis1"] = in.sample.axis1;
    j["axis2"] = in.sample.axis2;
    j["switch"] = in.sample.mode_switch_pressed;
    j["grip"] = in.sample.grip_toggle_pressed;
    j["ts"] = in.sample.timestamp_ms;
  }
  void operator()(const ModeSwitch& m) const {
    j["index"] = m.index;
    j["label"] = m.label;
  }
  void operator()(const TaskEventMsg& e) const { j["name"] = e.name; }
  void operator()(const Metrics& m) const {
    j["switches"] = m.switch_count;
    j["elapsed"] = m.elapsed;
  }
  void operator()(const Bye& b) const { j["reason"] = b.reason; }
};

struct TagName {
  std::string_view operator()(const Hello&) const { return "hello"; }
  std::string_view operator()(const SceneState&) const { return "scene"; }
  std::string_view operator()(const Actuators&) const { return "actuators"; }
  std::string_view operator()(const Arrows&) const { return "arrows"; }
  std::string_view operator()(const Input&) const { return "input"; }
  std::string_view operator()(const ModeSwitch&) const { return "mode_switch"; }
  std::string_view operator()(const TaskEventMsg&) const { return "task_event"; }
  std::string_view operator()(const Metrics&) const { return "metrics"; }
  std::string_view operator()(const Bye&) const { return "bye"; }
};

Payload decodePayload(const std::string& tag, const Fields& f) {
  if (tag == "hello") {
    f.expectKeys({"sid", "seq", "tick", "type", "version", "scenario", "scheme", "dt", "arm"});
    Hello h;
    h.version = static_cast<int>(f.integer("version"));
    if (h.version != kVersion)
      throw VersionError("protocol version " + std::to_string(h.version) + " not supported (expected " +
                         std::to_string(kVersion) + ")");
    h.scenario = f.string("scenario");
    h.scheme = f.string("scheme");
    h.dt = f.number("dt");
    const json& arm = f.at("arm");
    if (!arm.is_array()) f.fail("field 'arm' must be an array");
    for (const auto& item : arm) {
      Fields jf(item, "arm joint");
      jf.expectKeys({"axis", "offset", "limits"});
      WireJoint wj;
      wj.axis = jf.numbers<3>("axis");
      wj.offset = jf.numbers<3>("offset");
      const auto lim = jf.numbers<2>("limits");
      wj.lower = lim[0];
      wj.upper = lim[1];
      h.arm.push_back(wj);
    }
    return h;
  }
  if (tag == "scene") {
    f.expectKeys({"sid", "seq", "tick", "type", "joints", "ee", "block", "phase", "grasped", "gripper_closed"});
    SceneState s;
    s.joints = f.numbers<kNumJoints>("joints");
    s.ee = f.pose("ee");
    s.block = f.pose("block");
    auto phase = parsePhase(f.string("phase"));
    if (!phase) f.fail("unknown task phase");
    s.phase = *phase;
    s.grasped = f.boolean("grasped");
    s.gripper_closed = f.boolean("gripper_closed");
    return s;
  }
  if (tag == "actuators") {
    f.expectKeys({"sid", "seq", "tick", "type", "intensities", "ts", "source"});
    Actuators a;
    a.intensities = f.numbers<kNumActuators>("intensities");
    a.timestamp_ms = f.integer("ts");
    a.source = f.string("source");
    return a;
  }
  if (tag == "arrows") {
    f.expectKeys({"sid", "seq", "tick", "type", "glyphs"});
    Arrows a;
    const json& glyphs = f.at("glyphs");
    if (!glyphs.is_array()) f.fail("field 'glyphs' must be an array");
    for (const auto& item : glyphs) {
      Fields gf(item, "glyph");
      gf.expectKeys({"origin", "vector", "color"});
      WireArrow g;
      g.origin = gf.numbers<3>("origin");
      g.vector = gf.numbers<3>("vector");
      auto color = parseArrowColor(gf.string("color"));
      if (!color) gf.fail("unknown arrow color");
      g.color = *color;
      a.glyphs.push_back(g);
    }
    return a;
  }
  if (tag == "input") {
    f.expectKeys({"sid", "seq", "tick", "type", "axis1", "axis2", "switch", "grip", "ts"});
    Input in;
    in.sample.axis1 = f.number("axis1");
    in.sample.axis2 = f.number("axis2");
    if (std::abs(in.sample.axis1) > 1.0 || std::abs(in.sample.axis2) > 1.0) f.fail("input axes outside [-1, 1]");
    in.sample.mode_switch_pressed = f.boolean("switch");
    in.sample.grip_toggle_pressed = f.boolean("grip");
    in.sample.timestamp_ms = f.integer("ts");
    return in;
  }
  if (tag == "mode_switch") {
    f.expectKeys({"sid", "seq", "tick", "type", "index", "label"});
    ModeSwitch m;
    const std::uint64_t idx = f.unsignedInt("index");
    if (idx > UINT32_MAX) f.fail("mode index out of range");
    m.index = static_cast<std::uint32_t>(idx);
    m.label = f.string("label");
    return m;
  }
  if (tag == "task_event") {
    f.expectKeys({"sid", "seq", "tick", "type", "name"});
    return TaskEventMsg{f.string("name")};
  }
  if (tag == "metrics") {
    f.expectKeys({"sid", "seq", "tick", "type", "switches", "elapsed"});
    Metrics m;
    m.switch_count = static_cast<int>(f.integer("switches"));
    m.elapsed = f.number("elapsed");
    return m;
  }
  if (tag == "bye") {
    f.expectKeys({"sid", "seq", "tick", "type", "reason"});
    return Bye{f.string("reason")};
  }
  throw UnknownTag("unknown message type '" + tag + "'");
}

}  // namespace

WirePose WirePose::from(const Posed& p) {
  WirePose w;
  w.position = {p.position.x(), p.position.y(), p.position.z()};
  w.orientation = {p.orientation.w(), p.orientation.x(), p.orientation.y(), p.orientation.z()};
  return w;
}

Posed WirePose::toPose() const {
  Posed p;
  p.position = Eigen::Vector3d(position[0], position[1], position[2]);
  p.orientation = Eigen::Quaterniond(orientation[0], orientation[1], orientation[2], orientation[3]);
  return p;
}

WireArrow WireArrow::from(const ArrowGlyph& g) {
  WireArrow w;
  w.origin = {g.origin.x(), g.origin.y(), g.origin.z()};
  w.vector = {g.vector.x(), g.vector.y(), g.vector.z()};
  w.color = g.color;
  return w;
}

std::string_view tagOf(const Payload& p) { return std::visit(TagName{}, p); }

std::string encode(const Message& m) {
  json j = json::object();
  j["sid"] = m.session;
  j["seq"] = m.seq;
  j["tick"] = m.tick;
  j["type"] = std::string(tagOf(m.payload));
  std::visit(PayloadEncoder{j}, m.payload);
  std::string out;
  out.reserve(256);
  writeCanonical(out, j);
  return out;
}

Message decode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed message: ") + e.what());
  }
  Fields f(j, "message");
  Message m;
  m.session = f.string("sid");
  m.seq = f.unsignedInt("seq");
  m.tick = f.unsignedInt("tick");
  m.payload = decodePayload(f.string("type"), f);
  return m;
}

void record(const std::vector<Message>& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& m : log) out << encode(m) << '\n';
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<Message> readLog(const std::string& path) {
  std::vector<Message> out;
  replay(path, 0.0, [&](const Message& m) { out.push_back(m); });
  return out;
}

void replay(const std::string& path, double multiplier, const std::function<void(const Message&)>& deliver) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const auto start = std::chrono::steady_clock::now();
  double dt = 0.01;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    Message m;
    try {
      m = decode(line);
    } catch (const VersionError& e) {
      throw VersionError(e.what(), line_no);
    } catch (const UnknownTag& e) {
      throw UnknownTag(e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (const auto* h = m.as<Hello>(); h && h->dt > 0.0) dt = h->dt;
    if (multiplier > 0.0) {
      const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>(static_cast<double>(m.tick) * dt * multiplier));
      std::this_thread::sleep_until(due);
    }
    deliver(m);
  }
  if (in.bad()) throw IoError("read from '" + path + "' failed");
}

}  // namespace cobot::protocol
