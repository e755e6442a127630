#include "scod/dataset.hpp"

#include "scod/binio.hpp"
#include "scod/error.hpp"
#include "scod/image_io.hpp"
#include "scod/kvtext.hpp"
#include "scod/world_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace scod {

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::NoDifference: return "NoDifference";
    case Scenario::CompletelyDifferent: return "CompletelyDifferent";
    case Scenario::MovedObjects: return "MovedObjects";
  }
  return "Unknown";
}

WorldState random_placement(const WorldSpec& spec, Rng& rng, int max_attempts) {
  WorldState s = initial_state(spec);
  const Box2& b = spec.bounds;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    s.agent.base.position = Vec2(rng.uniform(b.min().x(), b.max().x()), rng.uniform(b.min().y(), b.max().y()));
    s.agent.base.heading = rng.uniform(-kPi, kPi);
    if (agent_placement_free(spec, s, s.agent)) return s;
  }
  throw Error(ErrorKind::PlacementFailure, "no collision-free agent placement found");
}

namespace {

GeneratedTuple pack(Scenario scenario, const WorldState& s1, const WorldState& s2, Observation o1, Observation o2,
                    std::set<int> moved) {
  GeneratedTuple g;
  g.tuple.scenario = scenario;
  switch (scenario) {
    case Scenario::NoDifference:
      g.tuple.mask1 = Mask::Zero(o1.ids.rows(), o1.ids.cols());
      g.tuple.mask2 = g.tuple.mask1;
      break;
    case Scenario::CompletelyDifferent:
      g.tuple.mask1 = Mask::Ones(o1.ids.rows(), o1.ids.cols());
      g.tuple.mask2 = g.tuple.mask1;
      break;
    case Scenario::MovedObjects: {
      auto [m1, m2] = gt_masks(o1.ids, o2.ids, moved);
      g.tuple.mask1 = std::move(m1);
      g.tuple.mask2 = std::move(m2);
      break;
    }
  }
  g.tuple.obs1 = std::move(o1.rgb);
  g.tuple.obs2 = std::move(o2.rgb);
  g.ids1 = std::move(o1.ids);
  g.ids2 = std::move(o2.ids);
  g.moved = std::move(moved);
  g.state1 = s1;
  g.state2 = s2;
  return g;
}

long id_pixels(const IdImage& ids, int id) { return (ids == id).count(); }

bool movable_pose_free(const WorldSpec& spec, const WorldState& state, int id, const Pose& pose) {
  const Polygon poly = transform(spec.movable(id).shape, pose);
  for (const Vec2& v : poly) {
    if (!spec.bounds.contains(v)) return false;
  }
  for (const ImmovableObject& obj : spec.immovable) {
    if (collide_polygons(obj.shape, poly)) return false;
  }
  for (const MovableObject& m : spec.movables) {
    if (m.id == id) continue;
    if (collide_polygons(movable_polygon(spec, state, m.id), poly)) return false;
  }
  for (const Disc& d : agent_discs(state.agent)) {
    if (collide_disc_polygon(d.center, d.radius, poly)) return false;
  }
  return true;
}

}  // namespace

GeneratedTuple gen_no_difference(const WorldSpec& spec, Rng& rng, const GeneratorConfig& cfg) {
  const WorldState s = random_placement(spec, rng, cfg.max_attempts);
  Observation obs = render(s, spec, cfg.cam);
  Observation copy = obs;
  return pack(Scenario::NoDifference, s, s, std::move(obs), std::move(copy), {});
}

GeneratedTuple gen_completely_different(const WorldSpec& spec, Rng& rng, const GeneratorConfig& cfg) {
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const WorldState s1 = random_placement(spec, rng, cfg.max_attempts);
    WorldState s2;
    if (rng.uniform() < cfg.turn_in_place_probability) {
      s2 = s1;
      const double turn = (rng.coin() ? 1.0 : -1.0) * rng.uniform(cfg.turn_min, cfg.turn_max);
      s2.agent.base.heading = normalize_angle(s1.agent.base.heading + turn);
      if (!agent_placement_free(spec, s2, s2.agent)) continue;
    } else {
      s2 = random_placement(spec, rng, cfg.max_attempts);
    }
    Observation o1 = render(s1, spec, cfg.cam);
    Observation o2 = render(s2, spec, cfg.cam);
    if (pixel_difference_fraction(o1.rgb, o2.rgb) < cfg.min_pixel_difference) continue;
    return pack(Scenario::CompletelyDifferent, s1, s2, std::move(o1), std::move(o2), {});
  }
  throw Error(ErrorKind::PlacementFailure, "no sufficiently different placement pair found");
}

GeneratedTuple gen_moved_objects(const WorldSpec& spec, Rng& rng, int k_max, const GeneratorConfig& cfg) {
  if (spec.movables.empty()) throw Error(ErrorKind::PlacementFailure, "world has no movable objects");
  if (k_max < 1) throw Error(ErrorKind::InvalidArgument, "k_max must be at least 1");
  const double half_fov = 0.5 * cfg.cam.fov_deg * kPi / 180.0;

  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    // Face a random movable from a random bearing and distance.
    WorldState s1 = initial_state(spec);
    const MovableObject& target = spec.movables[rng.index(spec.movables.size())];
    const Vec2 center = centroid(movable_polygon(spec, s1, target.id));
    const double bearing = rng.uniform(-kPi, kPi);
    const double dist = rng.uniform(cfg.min_view_distance, cfg.max_view_distance);
    s1.agent.base.position = center + dist * direction(bearing);
    s1.agent.base.heading = normalize_angle(bearing + kPi + rng.uniform(-0.9, 0.9) * half_fov);
    if (!agent_placement_free(spec, s1, s1.agent)) continue;

    Observation o1 = render(s1, spec, cfg.cam);
    std::vector<int> visible;
    for (const MovableObject& m : spec.movables) {
      if (id_pixels(o1.ids, m.id) > 0) visible.push_back(m.id);
    }
    if (visible.empty()) continue;

    rng.shuffle(visible.begin(), visible.end());
    const int k = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(std::min<std::size_t>(k_max, visible.size()))));

    for (int perturb_try = 0; perturb_try < 20; ++perturb_try) {
      WorldState s2 = s1;
      std::set<int> moved;
      bool ok = true;
      for (int i = 0; i < k && ok; ++i) {
        const int id = visible[static_cast<std::size_t>(i)];
        const Pose old = s2.movable_poses.at(id);
        bool placed = false;
        for (int t = 0; t < 20 && !placed; ++t) {
          Pose p = old;
          const double mag = rng.uniform(cfg.min_translation, cfg.max_translation);
          p.position += mag * direction(rng.uniform(-kPi, kPi));
          p.heading = normalize_angle(old.heading + rng.uniform(-cfg.max_rotation, cfg.max_rotation));
          if (movable_pose_free(spec, s2, id, p)) {
            s2.movable_poses[id] = p;
            placed = true;
          }
        }
        ok = placed;
        moved.insert(id);
      }
      if (!ok) continue;
      Observation o2 = render(s2, spec, cfg.cam);
      const bool all_in_view =
          std::all_of(moved.begin(), moved.end(), [&](int id) { return id_pixels(o2.ids, id) > 0; });
      if (!all_in_view) continue;
      return pack(Scenario::MovedObjects, s1, s2, std::move(o1), std::move(o2), std::move(moved));
    }
  }
  throw Error(ErrorKind::PlacementFailure, "no visible movable could be perturbed");
}

std::vector<Scenario> scenario_schedule(const ScenarioCounts& counts) {
  if (counts.no_difference < 0 || counts.completely_different < 0 || counts.moved_objects < 0) {
    throw Error(ErrorKind::InvalidArgument, "scenario counts must be non-negative");
  }
  int left[3] = {counts.no_difference, counts.completely_different, counts.moved_objects};
  std::vector<Scenario> out;
  out.reserve(static_cast<std::size_t>(counts.total()));
  while (left[0] + left[1] + left[2] > 0) {
    for (int s = 0; s < 3; ++s) {
      if (left[s] > 0) {
        out.push_back(static_cast<Scenario>(s));
        --left[s];
      }
    }
  }
  return out;
}

GeneratedTuple generate_tuple(const WorldSpec& spec, Scenario scenario, std::uint64_t seed, std::uint64_t index,
                              int k_max, const GeneratorConfig& cfg) {
  Rng rng(derive_seed(seed, index));
  switch (scenario) {
    case Scenario::NoDifference: return gen_no_difference(spec, rng, cfg);
    case Scenario::CompletelyDifferent: return gen_completely_different(spec, rng, cfg);
    case Scenario::MovedObjects: return gen_moved_objects(spec, rng, k_max, cfg);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown scenario");
}

namespace {

constexpr std::string_view kDatasetMagic = "SCDS";

void encode_camera(ByteWriter& w, const CameraParams& cam) {
  w.f64(cam.fov_deg);
  w.u32(static_cast<std::uint32_t>(cam.width));
  w.u32(static_cast<std::uint32_t>(cam.height));
  w.f64(cam.eye_height_fraction);
  w.f64(cam.far_clip);
}

CameraParams decode_camera(ByteReader& r) {
  CameraParams cam;
  cam.fov_deg = r.f64();
  cam.width = static_cast<int>(r.u32());
  cam.height = static_cast<int>(r.u32());
  cam.eye_height_fraction = r.f64();
  cam.far_clip = r.f64();
  cam.validate();
  return cam;
}

void encode_tuple(ByteWriter& w, const MaskTuple& t) {
  w.u8(static_cast<std::uint8_t>(t.scenario));
  w.blob(encode_ppm(t.obs1));
  w.blob(encode_ppm(t.obs2));
  w.blob(encode_mask_pgm(t.mask1));
  w.blob(encode_mask_pgm(t.mask2));
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  ByteWriter w;
  w.raw(kDatasetMagic);
  w.u8(kDatasetVersion);
  encode_camera(w, ds.cam);
  w.u32(static_cast<std::uint32_t>(ds.tuples.size()));
  for (const MaskTuple& t : ds.tuples) encode_tuple(w, t);
  return w.take();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kDatasetMagic.begin())) throw Error(ErrorKind::Format, "bad SCDS magic");
  if (r.u8() != kDatasetVersion) throw Error(ErrorKind::Format, "unsupported SCDS version");
  Dataset ds;
  ds.cam = decode_camera(r);
  const std::uint32_t count = r.u32();
  if (count > r.remaining()) throw Error(ErrorKind::Format, "implausible tuple count");
  ds.tuples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    MaskTuple t;
    const std::uint8_t s = r.u8();
    if (s > 2) throw Error(ErrorKind::Format, "bad scenario tag");
    t.scenario = static_cast<Scenario>(s);
    t.obs1 = decode_ppm(r.blob());
    t.obs2 = decode_ppm(r.blob());
    t.mask1 = decode_mask_pgm(r.blob());
    t.mask2 = decode_mask_pgm(r.blob());
    const auto w = ds.cam.width;
    const auto h = ds.cam.height;
    if (t.obs1.width() != w || t.obs1.height() != h || t.obs2.width() != w || t.obs2.height() != h ||
        t.mask1.cols() != w || t.mask1.rows() != h || t.mask2.cols() != w || t.mask2.rows() != h) {
      throw Error(ErrorKind::Format, "tuple image size differs from dataset camera");
    }
    ds.tuples.push_back(std::move(t));
  }
  if (!r.done()) throw Error(ErrorKind::Format, "trailing bytes after dataset");
  return ds;
}

Dataset read_dataset(const std::string& path) { return decode_dataset(read_file(path)); }

std::string DatasetManifest::to_text() const {
  std::vector<KvSection> s(1);
  s[0].set("format", "SCDS");
  s[0].set("version", std::to_string(kDatasetVersion));
  s[0].set("layout", layout);
  s[0].set("spec_fingerprint", std::to_string(spec_fingerprint));
  s[0].set("seed", std::to_string(seed));
  s[0].set("tuple_count", std::to_string(tuple_count));
  s[0].set("no_difference", std::to_string(counts.no_difference));
  s[0].set("completely_different", std::to_string(counts.completely_different));
  s[0].set("moved_objects", std::to_string(counts.moved_objects));
  s[0].set("k_max", std::to_string(k_max));
  s[0].set("fov_deg", format_double(cam.fov_deg));
  s[0].set("width", std::to_string(cam.width));
  s[0].set("height", std::to_string(cam.height));
  s[0].set("eye_height_fraction", format_double(cam.eye_height_fraction));
  s[0].set("far_clip", format_double(cam.far_clip));
  return format_kv(s);
}

DatasetManifest DatasetManifest::parse(std::string_view text) {
  const auto sections = parse_kv(text);
  if (sections.size() != 1) throw Error(ErrorKind::Format, "manifest has unexpected sections");
  const KvSection& s = sections[0];
  s.require_known({"format", "version", "layout", "spec_fingerprint", "seed", "tuple_count", "no_difference",
                   "completely_different", "moved_objects", "k_max", "fov_deg", "width", "height",
                   "eye_height_fraction", "far_clip"});
  DatasetManifest m;
  m.layout = s.get("layout");
  m.spec_fingerprint = std::stoull(s.get("spec_fingerprint"));
  m.seed = std::stoull(s.get("seed"));
  m.tuple_count = static_cast<int>(s.integer("tuple_count"));
  m.counts = {static_cast<int>(s.integer("no_difference")), static_cast<int>(s.integer("completely_different")),
              static_cast<int>(s.integer("moved_objects"))};
  m.k_max = static_cast<int>(s.integer("k_max"));
  m.cam.fov_deg = s.number("fov_deg");
  m.cam.width = static_cast<int>(s.integer("width"));
  m.cam.height = static_cast<int>(s.integer("height"));
  m.cam.eye_height_fraction = s.number("eye_height_fraction");
  m.cam.far_clip = s.number("far_clip");
  return m;
}

DatasetManifest build_dataset(const WorldSpec& spec, const ScenarioCounts& counts, std::uint64_t seed,
                              const std::string& out_path, const BuildOptions& opts) {
  const auto schedule = scenario_schedule(counts);
  Dataset ds;
  ds.cam = opts.generator.cam;
  ds.tuples.reserve(schedule.size());
  ByteWriter ids;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    GeneratedTuple g = generate_tuple(spec, schedule[i], seed, i, opts.k_max, opts.generator);
    if (opts.write_debug_ids) {
      for (const IdImage* img : {&g.ids1, &g.ids2}) {
        for (Eigen::Index k = 0; k < img->size(); ++k) ids.i32(img->data()[k]);
      }
    }
    ds.tuples.push_back(std::move(g.tuple));
  }
  write_file(out_path, encode_dataset(ds));
  if (opts.write_debug_ids) write_file(out_path + ".ids", ids.bytes());

  DatasetManifest m;
  m.counts = counts;
  m.seed = seed;
  m.spec_fingerprint = spec.fingerprint();
  m.layout = spec.layout;
  m.cam = ds.cam;
  m.k_max = opts.k_max;
  m.tuple_count = static_cast<int>(ds.tuples.size());
  write_text_file(out_path + ".manifest", m.to_text());
  return m;
}

}  // namespace scod
