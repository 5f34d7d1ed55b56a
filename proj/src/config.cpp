#include "cobot/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cobot {

using nlohmann::json;

namespace {

// Reads optional fields of one object, rejecting keys it was never asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown field '" + it.key() + "'");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) out = toNumber(*v, key);
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + ": expected a boolean");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void unsignedInt(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(where(key) + ": expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  template <typename Vec>
  void vector(const std::string& key, Vec& out) {
    if (const json* v = find(key)) {
      const auto n = static_cast<std::size_t>(out.size());
      if (!v->is_array() || v->size() != n)
        throw ConfigError(where(key) + ": expected an array of " + std::to_string(n) + " numbers");
      for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = toNumber((*v)[i], key);
    }
  }

  void interval(const std::string& key, double& lo, double& hi) {
    Eigen::Vector2d v(lo, hi);
    vector(key, v);
    lo = v.x();
    hi = v.y();
  }

  void quaternion(const std::string& key, Eigen::Quaterniond& q) {
    Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
    vector(key, v);
    q = Eigen::Quaterniond(v(0), v(1), v(2), v(3));
  }

  Section child(const std::string& key) {
    static const json kEmpty = json::object();
    const json* v = find(key);
    return Section(v ? *v : kEmpty, path_ + "." + key);
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

 private:
  double toNumber(const json& v, const std::string& key) const {
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json quat(const Eigen::Quaterniond& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

}  // namespace

SessionConfig parseConfig(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  SessionConfig cfg;
  {
    Section top(root, "config");
    std::uint64_t schema = 0;
    top.unsignedInt("schema_version", schema);
    if (schema != static_cast<std::uint64_t>(kConfigSchemaVersion))
      throw ConfigError("config.schema_version must be " + std::to_string(kConfigSchemaVersion));
    top.string("name", cfg.name);

    {
      Section arm = top.child("arm");
      {
        Section base = arm.child("base");
        base.vector("position", cfg.arm.base.position);
        base.quaternion("orientation", cfg.arm.base.orientation);
      }
      if (const json* joints = arm.find("joints")) {
        if (!joints->is_array() || joints->size() != kNumJoints)
          throw ConfigError("config.arm.joints: expected an array of 7 joints");
        for (std::size_t i = 0; i < kNumJoints; ++i) {
          Section js((*joints)[i], "config.arm.joints[" + std::to_string(i) + "]");
          auto& jd = cfg.arm.joints[i];
          js.vector("axis", jd.axis);
          js.vector("offset", jd.offset);
          js.interval("limits", jd.lower, jd.upper);
        }
      }
      Section ik = arm.child("ik");
      ik.number("damping", cfg.control.ik.damping);
      ik.number("max_linear_speed", cfg.control.ik.max_linear_speed);
      ik.number("max_angular_speed", cfg.control.ik.max_angular_speed);
    }
    {
      Section scene = top.child("scene");
      {
        Section table = scene.child("table");
        table.number("height", cfg.scene.table.height);
        table.interval("x", cfg.scene.table.x_min, cfg.scene.table.x_max);
        table.interval("y", cfg.scene.table.y_min, cfg.scene.table.y_max);
      }
      {
        Section block = scene.child("block");
        block.vector("xy", cfg.scene.block.xy);
        block.number("side", cfg.scene.block.side);
        block.number("yaw", cfg.scene.block.yaw);
      }
      {
        Section target = scene.child("target");
        target.vector("center", cfg.scene.target.center);
        target.number("radius", cfg.scene.target.radius);
      }
      scene.number("keepout_radius", cfg.scene.keepout_radius);
      scene.vector("home", cfg.scene.home);
    }
    {
      Section p = top.child("planner");
      p.number("clearance", cfg.planner.clearance);
      p.number("transport_height", cfg.planner.transport_height);
      p.number("dwell", cfg.planner.dwell);
      p.number("waypoint_spacing", cfg.planner.waypoint_spacing);
      p.number("max_linear_speed", cfg.planner.limits.max_linear_speed);
      p.number("max_linear_accel", cfg.planner.limits.max_linear_accel);
      p.number("max_angular_speed", cfg.planner.limits.max_angular_speed);
      p.number("max_angular_accel", cfg.planner.limits.max_angular_accel);
    }
    {
      Section t = top.child("task");
      t.number("approach", cfg.tolerances.approach);
      t.number("grasp", cfg.tolerances.grasp);
      t.number("lift", cfg.tolerances.lift);
      t.number("transport", cfg.tolerances.transport);
      t.number("resting", cfg.tolerances.resting);
      t.number("retreat", cfg.tolerances.retreat);
    }
    {
      Section s = top.child("session");
      s.number("dt", cfg.session.dt);
      s.number("haptic_rate", cfg.session.haptic_rate);
      s.number("timeout", cfg.session.timeout);
      s.boolean("autonomy", cfg.session.autonomy);
      s.unsignedInt("seed", cfg.session.seed);
    }
    {
      Section c = top.child("control");
      std::string scheme(schemeName(cfg.session.scheme));
      c.string("scheme", scheme);
      auto parsed = parseScheme(scheme);
      if (!parsed) throw ConfigError("config.control.scheme must be 'cardinal' or 'adaptive'");
      cfg.session.scheme = *parsed;
      c.number("characteristic_length", cfg.control.characteristic_length);
      c.number("switch_threshold", cfg.control.switch_threshold);
      c.number("deadband", cfg.control.deadband);
      c.number("grasp_reach", cfg.control.grasp_reach);
      c.number("progress_window", cfg.control.progress_window);
    }
    {
      Section f = top.child("feedback");
      f.boolean("visual", cfg.session.visual);
      f.boolean("haptic", cfg.session.haptic);
      f.number("min_gain", cfg.feedback.min_gain);
      f.number("horizon", cfg.feedback.horizon);
      f.number("arrow_scale", cfg.feedback.arrow_scale);
      f.number("hold_threshold", cfg.feedback.hold_threshold);
      f.quaternion("glove_alignment", cfg.feedback.alignment.orientation);
    }
  }
  cfg.validate();
  return cfg;
}

SessionConfig loadConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseConfig(ss.str());
}

std::string dumpConfig(const SessionConfig& cfg) {
  json joints = json::array();
  for (const auto& j : cfg.arm.joints)
    joints.push_back({{"axis", vec(j.axis)}, {"offset", vec(j.offset)}, {"limits", json::array({j.lower, j.upper})}});

  json root = {
      {"schema_version", kConfigSchemaVersion},
      {"name", cfg.name},
      {"arm",
       {{"base", {{"position", vec(cfg.arm.base.position)}, {"orientation", quat(cfg.arm.base.orientation)}}},
        {"joints", joints},
        {"ik",
         {{"damping", cfg.control.ik.damping},
          {"max_linear_speed", cfg.control.ik.max_linear_speed},
          {"max_angular_speed", cfg.control.ik.max_angular_speed}}}}},
      {"scene",
       {{"table",
         {{"height", cfg.scene.table.height},
          {"x", json::array({cfg.scene.table.x_min, cfg.scene.table.x_max})},
          {"y", json::array({cfg.scene.table.y_min, cfg.scene.table.y_max})}}},
        {"block", {{"xy", vec(cfg.scene.block.xy)}, {"side", cfg.scene.block.side}, {"yaw", cfg.scene.block.yaw}}},
        {"target", {{"center", vec(cfg.scene.target.center)}, {"radius", cfg.scene.target.radius}}},
        {"keepout_radius", cfg.scene.keepout_radius},
        {"home", vec(cfg.scene.home)}}},
      {"planner",
       {{"clearance", cfg.planner.clearance},
        {"transport_height", cfg.planner.transport_height},
        {"dwell", cfg.planner.dwell},
        {"waypoint_spacing", cfg.planner.waypoint_spacing},
        {"max_linear_speed", cfg.planner.limits.max_linear_speed},
        {"max_linear_accel", cfg.planner.limits.max_linear_accel},
        {"max_angular_speed", cfg.planner.limits.max_angular_speed},
        {"max_angular_accel", cfg.planner.limits.max_angular_accel}}},
      {"task",
       {{"approach", cfg.tolerances.approach},
        {"grasp", cfg.tolerances.grasp},
        {"lift", cfg.tolerances.lift},
        {"transport", cfg.tolerances.transport},
        {"resting", cfg.tolerances.resting},
        {"retreat", cfg.tolerances.retreat}}},
      {"session",
       {{"dt", cfg.session.dt},
        {"haptic_rate", cfg.session.haptic_rate},
        {"timeout", cfg.session.timeout},
        {"autonomy", cfg.session.autonomy},
        {"seed", cfg.session.seed}}},
      {"control",
       {{"scheme", std::string(schemeName(cfg.session.scheme))},
        {"characteristic_length", cfg.control.characteristic_length},
        {"switch_threshold", cfg.control.switch_threshold},
        {"deadband", cfg.control.deadband},
        {"grasp_reach", cfg.control.grasp_reach},
        {"progress_window", cfg.control.progress_window}}},
      {"feedback",
       {{"visual", cfg.session.visual},
        {"haptic", cfg.session.haptic},
        {"min_gain", cfg.feedback.min_gain},
        {"horizon", cfg.feedback.horizon},
        {"arrow_scale", cfg.feedback.arrow_scale},
        {"hold_threshold", cfg.feedback.hold_threshold},
        {"glove_alignment", quat(cfg.feedback.alignment.orientation)}}}};
  return root.dump(2) + "\n";
}

}  // namespace cobot
