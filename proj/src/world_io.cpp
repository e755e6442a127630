#include "scod/world_io.hpp"

#include "scod/error.hpp"
#include "scod/kvtext.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace scod {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

Polygon parse_polygon(const KvSection& s, const std::string& key) {
  const auto v = s.numbers(key);
  if (v.size() < 6 || v.size() % 2 != 0) throw Error(ErrorKind::Format, "'" + key + "' needs x y pairs");
  Polygon poly;
  for (std::size_t i = 0; i < v.size(); i += 2) poly.emplace_back(v[i], v[i + 1]);
  try {
    return make_convex(std::move(poly));
  } catch (const Error& e) {
    throw Error(ErrorKind::Format, std::string("line ") + std::to_string(s.line) + ": " + e.what());
  }
}

Rgb parse_color(const KvSection& s) {
  const auto v = s.numbers("color");
  if (v.size() != 3) throw Error(ErrorKind::Format, "color needs 3 components");
  Rgb c{};
  for (int i = 0; i < 3; ++i) {
    if (v[i] < 0 || v[i] > 255 || v[i] != static_cast<int>(v[i])) {
      throw Error(ErrorKind::Format, "color components must be integers in [0,255]");
    }
    c[i] = static_cast<std::uint8_t>(v[i]);
  }
  return c;
}

Pose parse_pose(const KvSection& s) {
  const auto v = s.numbers("pose");
  if (v.size() != 3) throw Error(ErrorKind::Format, "pose needs x y heading");
  return {Vec2(v[0], v[1]), normalize_angle(v[2])};
}

Box2 parse_rect(const KvSection& s, const std::string& key) {
  const auto v = s.numbers(key);
  if (v.size() != 4 || v[0] >= v[2] || v[1] >= v[3]) {
    throw Error(ErrorKind::Format, "'" + key + "' needs x0 y0 x1 y1 with x0 < x1, y0 < y1");
  }
  return Box2(Vec2(v[0], v[1]), Vec2(v[2], v[3]));
}

std::string join(const std::vector<double>& v, const char* sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

std::string polygon_text(const Polygon& poly) {
  std::string out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (i) out += ", ";
    out += format_double(poly[i].x()) + " " + format_double(poly[i].y());
  }
  return out;
}

std::string color_text(const Rgb& c) {
  return std::to_string(c[0]) + " " + std::to_string(c[1]) + " " + std::to_string(c[2]);
}

}  // namespace

WorldSpec parse_world_spec(std::string_view text) {
  const auto sections = parse_kv(text);
  WorldSpec spec;
  bool have_agent = false;

  const KvSection& top = sections.front();
  top.require_known({"layout", "bounds"});
  spec.layout = top.get("layout");
  spec.bounds = parse_rect(top, "bounds");

  for (std::size_t i = 1; i < sections.size(); ++i) {
    const KvSection& s = sections[i];
    if (s.name == "agent") {
      if (have_agent) throw Error(ErrorKind::Format, "duplicate [agent] section");
      have_agent = true;
      s.require_known({"pose", "joints", "link_lengths", "base_radius", "link_radius", "joint_limits",
                       "max_rotation_speed", "max_translation_speed", "max_joint_speed"});
      AgentConfig& a = spec.initial_agent;
      a.base = parse_pose(s);
      a.joints = s.numbers("joints");
      a.link_lengths = s.numbers("link_lengths");
      a.base_radius = s.number("base_radius");
      a.link_radius = s.number("link_radius");
      const auto lim = s.numbers("joint_limits");
      if (lim.size() != 2 * a.joints.size()) throw Error(ErrorKind::Format, "joint_limits needs one lo hi pair per joint");
      a.joint_limits.clear();
      for (std::size_t k = 0; k < lim.size(); k += 2) a.joint_limits.push_back({lim[k], lim[k + 1]});
      spec.max_velocity.base_rotation = s.number_or("max_rotation_speed", spec.max_velocity.base_rotation);
      spec.max_velocity.base_translation = s.number_or("max_translation_speed", spec.max_velocity.base_translation);
      spec.max_velocity.joint = s.number_or("max_joint_speed", spec.max_velocity.joint);
    } else if (s.name == "immovable") {
      s.require_known({"vertices", "color", "height"});
      ImmovableObject obj;
      obj.shape = parse_polygon(s, "vertices");
      obj.color = parse_color(s);
      obj.height = s.number_or("height", obj.height);
      spec.immovable.push_back(std::move(obj));
    } else if (s.name == "movable") {
      s.require_known({"vertices", "pose", "color", "height"});
      MovableObject m;
      try {
        m.id = std::stoi(s.arg);
      } catch (const std::exception&) {
        throw Error(ErrorKind::Format, "[movable] needs a numeric id at line " + std::to_string(s.line));
      }
      m.shape = parse_polygon(s, "vertices");
      m.pose = parse_pose(s);
      m.color = parse_color(s);
      m.height = s.number_or("height", m.height);
      spec.movables.push_back(std::move(m));
    } else if (s.name == "region") {
      s.require_known({"rect", "heading"});
      if (s.arg.empty()) throw Error(ErrorKind::Format, "[region] needs a name");
      spec.regions.push_back({s.arg, parse_rect(s, "rect"), normalize_angle(s.number_or("heading", 0.0))});
    } else {
      throw Error(ErrorKind::Format, "unknown section [" + s.name + "] at line " + std::to_string(s.line));
    }
  }
  if (!have_agent) throw Error(ErrorKind::Format, "missing [agent] section");
  try {
    validate(spec);
  } catch (const Error& e) {
    throw Error(ErrorKind::Format, e.what());
  }
  return spec;
}

WorldSpec load_world_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open world file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_world_spec(ss.str());
}

std::string format_world_spec(const WorldSpec& spec) {
  std::vector<KvSection> out(1);
  out[0].set("layout", spec.layout);
  out[0].set("bounds", join({spec.bounds.min().x(), spec.bounds.min().y(), spec.bounds.max().x(),
                             spec.bounds.max().y()}));

  const AgentConfig& a = spec.initial_agent;
  KvSection agent{"agent", "", 0, {}};
  agent.set("pose", join({a.base.position.x(), a.base.position.y(), a.base.heading}));
  agent.set("joints", join(a.joints));
  agent.set("link_lengths", join(a.link_lengths));
  agent.set("base_radius", format_double(a.base_radius));
  agent.set("link_radius", format_double(a.link_radius));
  std::string limits;
  for (std::size_t k = 0; k < a.joint_limits.size(); ++k) {
    if (k) limits += ", ";
    limits += format_double(a.joint_limits[k].lo) + " " + format_double(a.joint_limits[k].hi);
  }
  agent.set("joint_limits", limits);
  agent.set("max_rotation_speed", format_double(spec.max_velocity.base_rotation));
  agent.set("max_translation_speed", format_double(spec.max_velocity.base_translation));
  agent.set("max_joint_speed", format_double(spec.max_velocity.joint));
  out.push_back(agent);

  for (const ImmovableObject& obj : spec.immovable) {
    KvSection s{"immovable", "", 0, {}};
    s.set("vertices", polygon_text(obj.shape));
    s.set("color", color_text(obj.color));
    s.set("height", format_double(obj.height));
    out.push_back(std::move(s));
  }
  for (const MovableObject& m : spec.movables) {
    KvSection s{"movable", std::to_string(m.id), 0, {}};
    s.set("vertices", polygon_text(m.shape));
    s.set("pose", join({m.pose.position.x(), m.pose.position.y(), m.pose.heading}));
    s.set("color", color_text(m.color));
    s.set("height", format_double(m.height));
    out.push_back(std::move(s));
  }
  for (const Region& r : spec.regions) {
    KvSection s{"region", r.name, 0, {}};
    s.set("rect", join({r.rect.min().x(), r.rect.min().y(), r.rect.max().x(), r.rect.max().y()}));
    s.set("heading", format_double(r.heading));
    out.push_back(std::move(s));
  }
  return format_kv(out);
}

namespace {

void encode_pose(ByteWriter& w, const Pose& p) {
  w.f64(p.position.x());
  w.f64(p.position.y());
  w.f64(p.heading);
}

Pose decode_pose(ByteReader& r) {
  Pose p;
  p.position.x() = r.f64();
  p.position.y() = r.f64();
  p.heading = r.f64();
  return p;
}

void encode_polygon(ByteWriter& w, const Polygon& poly) {
  w.u32(static_cast<std::uint32_t>(poly.size()));
  for (const Vec2& v : poly) {
    w.f64(v.x());
    w.f64(v.y());
  }
}

void encode_agent(ByteWriter& w, const AgentConfig& a) {
  encode_pose(w, a.base);
  w.u32(static_cast<std::uint32_t>(a.joints.size()));
  for (std::size_t k = 0; k < a.joints.size(); ++k) {
    w.f64(a.joints[k]);
    w.f64(a.link_lengths[k]);
    w.f64(a.joint_limits[k].lo);
    w.f64(a.joint_limits[k].hi);
  }
  w.f64(a.base_radius);
  w.f64(a.link_radius);
}

AgentConfig decode_agent(ByteReader& r) {
  AgentConfig a;
  a.base = decode_pose(r);
  const std::uint32_t n = r.u32();
  if (n > 64) throw Error(ErrorKind::Format, "implausible joint count");
  for (std::uint32_t k = 0; k < n; ++k) {
    a.joints.push_back(r.f64());
    a.link_lengths.push_back(r.f64());
    const double lo = r.f64();
    a.joint_limits.push_back({lo, r.f64()});
  }
  a.base_radius = r.f64();
  a.link_radius = r.f64();
  return a;
}

}  // namespace

void encode_spec(ByteWriter& w, const WorldSpec& spec) {
  w.str(spec.layout);
  w.f64(spec.bounds.min().x());
  w.f64(spec.bounds.min().y());
  w.f64(spec.bounds.max().x());
  w.f64(spec.bounds.max().y());
  encode_agent(w, spec.initial_agent);
  w.f64(spec.max_velocity.base_rotation);
  w.f64(spec.max_velocity.base_translation);
  w.f64(spec.max_velocity.joint);
  w.u32(static_cast<std::uint32_t>(spec.immovable.size()));
  for (const ImmovableObject& obj : spec.immovable) {
    encode_polygon(w, obj.shape);
    for (auto c : obj.color) w.u8(c);
    w.f64(obj.height);
  }
  w.u32(static_cast<std::uint32_t>(spec.movables.size()));
  for (const MovableObject& m : spec.movables) {
    w.i32(m.id);
    encode_polygon(w, m.shape);
    encode_pose(w, m.pose);
    for (auto c : m.color) w.u8(c);
    w.f64(m.height);
  }
  w.u32(static_cast<std::uint32_t>(spec.regions.size()));
  for (const Region& reg : spec.regions) {
    w.str(reg.name);
    w.f64(reg.rect.min().x());
    w.f64(reg.rect.min().y());
    w.f64(reg.rect.max().x());
    w.f64(reg.rect.max().y());
    w.f64(reg.heading);
  }
}

void encode_state(ByteWriter& w, const WorldState& state) {
  w.u64(state.spec_fingerprint);
  encode_agent(w, state.agent);
  w.u32(static_cast<std::uint32_t>(state.movable_poses.size()));
  for (const auto& [id, pose] : state.movable_poses) {
    w.i32(id);
    encode_pose(w, pose);
  }
  w.u8(static_cast<std::uint8_t>((state.flags.immovable_contact ? 1 : 0) | (state.flags.movable_contact ? 2 : 0)));
}

WorldState decode_state(ByteReader& r) {
  WorldState s;
  s.spec_fingerprint = r.u64();
  s.agent = decode_agent(r);
  const std::uint32_t n = r.u32();
  if (n > r.remaining()) throw Error(ErrorKind::Format, "implausible movable count");
  for (std::uint32_t i = 0; i < n; ++i) {
    const int id = r.i32();
    s.movable_poses.emplace(id, decode_pose(r));
  }
  const std::uint8_t flags = r.u8();
  s.flags.immovable_contact = flags & 1;
  s.flags.movable_contact = flags & 2;
  return s;
}

}  // namespace scod
