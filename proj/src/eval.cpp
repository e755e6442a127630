#include "scod/eval.hpp"

#include "scod/binio.hpp"
#include "scod/error.hpp"
#include "scod/rng.hpp"
#include "scod/world_io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace scod {

double iou(const Mask& pred, const Mask& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "iou of masks with different sizes");
  }
  const auto p = pred != 0;
  const auto g = gt != 0;
  const auto inter = (p && g).count();
  const auto uni = (p || g).count();
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ClassCounts ClassCounts::thirds(int n) {
  ClassCounts c{n / 3, n / 3, n / 3};
  const int rest = n - 3 * (n / 3);
  if (rest > 0) ++c.identical;
  if (rest > 1) ++c.different;
  return c;
}

std::uint64_t TestSet::fingerprint() const {
  ByteWriter w;
  w.raw(name);
  w.u64(spec.fingerprint());
  w.f64(cam.fov_deg);
  w.u32(static_cast<std::uint32_t>(cam.width));
  w.u32(static_cast<std::uint32_t>(cam.height));
  w.u64(seed);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const SCRecord& r : records) encode_state(w, r.start);
  return fnv1a64(w.bytes());
}

namespace {

const Region& require_region(const WorldSpec& spec, const std::string& name) {
  const Region* r = spec.find_region(name);
  if (!r) throw Error(ErrorKind::InvalidArgument, "layout " + spec.layout + " has no region '" + name + "'");
  return *r;
}

Vec2 sample_in(const Box2& box, Rng& rng) {
  return {rng.uniform(box.min().x(), box.max().x()), rng.uniform(box.min().y(), box.max().y())};
}

struct Candidate {
  bool placed = false;
  WorldState start;
};

Candidate place_free(const WorldSpec& spec, const Region& region, Rng& rng) {
  Candidate c{false, initial_state(spec)};
  c.start.agent.base = {sample_in(region.rect, rng), normalize_angle(region.heading + rng.uniform(-kPi, kPi))};
  c.placed = agent_placement_free(spec, c.start, c.start.agent);
  return c;
}

Candidate place_wall(const WorldSpec& spec, const Region& region, Rng& rng) {
  Candidate c{false, initial_state(spec)};
  c.start.agent.base = {sample_in(region.rect, rng), normalize_angle(region.heading + rng.uniform(-0.15, 0.15))};
  c.placed = agent_placement_free(spec, c.start, c.start.agent);
  return c;
}

Candidate place_near_object(const WorldSpec& spec, const TestSetConfig& cfg, Rng& rng) {
  Candidate c{false, initial_state(spec)};
  if (spec.movables.empty()) return c;
  const MovableObject& m = spec.movables[rng.index(spec.movables.size())];
  const Vec2 center = centroid(movable_polygon(spec, c.start, m.id));
  const double bearing = rng.uniform(-kPi, kPi);
  const double dist = rng.uniform(cfg.object_distance_min, cfg.object_distance_max);
  c.start.agent.base = {center + dist * direction(bearing), normalize_angle(bearing + kPi + rng.uniform(-0.5, 0.5))};
  c.placed = spec.bounds.contains(c.start.agent.base.position) && agent_placement_free(spec, c.start, c.start.agent);
  return c;
}

int component_count(const Mask& m) { return static_cast<int>(extract_detection(m).size()); }

double fraction(const Mask& m) { return static_cast<double>((m != 0).count()) / static_cast<double>(m.size()); }

}  // namespace

TestSet build_test_set(const WorldSpec& spec, const TestSetConfig& cfg, std::uint64_t seed) {
  cfg.cam.validate();
  cfg.thresholds.validate();
  TestSet set;
  set.name = cfg.name;
  set.spec = spec;
  set.cam = cfg.cam;
  set.seed = seed;
  const Region& free = require_region(spec, "free");
  const Region& wall = require_region(spec, "wall");
  const std::vector<int> order2 = cfg.seq.order2();
  Rng rng(seed);

  const std::array<std::pair<OutcomeKind, int>, 3> plan{{{OutcomeKind::Identical, cfg.counts.identical},
                                                         {OutcomeKind::Different, cfg.counts.different},
                                                         {OutcomeKind::MovedObject, cfg.counts.moved_object}}};
  for (const auto& [kind, wanted] : plan) {
    int have = 0;
    for (int attempt = 0; have < wanted; ++attempt) {
      if (attempt >= cfg.max_attempts) {
        throw Error(ErrorKind::PlacementFailure,
                    "could not fill the " + std::string(to_string(kind)) + " class of " + cfg.name);
      }
      Candidate cand = kind == OutcomeKind::Identical   ? place_free(spec, free, rng)
                       : kind == OutcomeKind::Different ? place_wall(spec, wall, rng)
                                                        : place_near_object(spec, cfg, rng);
      const std::uint64_t seq_seed = rng.next();
      if (!cand.placed) continue;
      SCRecord rec = run_experiment(spec, cand.start, sample_sequence(seq_seed, cfg.seq), order2, cfg.cam);
      if (rec.gt.kind != kind) continue;
      if (kind == OutcomeKind::Different &&
          pixel_difference_fraction(rec.obs1.rgb, rec.obs2.rgb) < cfg.min_different_pixels) {
        continue;
      }
      if (kind == OutcomeKind::MovedObject) {
        if (rec.gt.moved.size() != 1) continue;
        const auto [m1, m2] = gt_masks(rec.obs1.ids, rec.obs2.ids, rec.gt.moved);
        if ((m1 == 0).all() || (m2 == 0).all()) {
          ++set.rejected_out_of_view;
          continue;
        }
        if (component_count(m1) > 1 || component_count(m2) > 1) continue;
        if (classify_fractions(fraction(m1), fraction(m2), cfg.thresholds).kind != kind) {
          ++set.rejected_marginal;
          continue;
        }
      }
      set.records.push_back(std::move(rec));
      ++have;
    }
  }
  return set;
}

void check_disjoint_shapes(const WorldSpec& a, const WorldSpec& b) {
  for (const MovableObject& ma : a.movables) {
    for (const MovableObject& mb : b.movables) {
      if (ma.shape.size() != mb.shape.size()) continue;
      bool same = true;
      for (std::size_t i = 0; i < ma.shape.size() && same; ++i) same = (ma.shape[i] - mb.shape[i]).norm() < 1e-9;
      if (same) {
        throw Error(ErrorKind::InvalidArgument, "layouts " + a.layout + " and " + b.layout + " share a shape template");
      }
    }
  }
}

std::pair<TestSet, TestSet> build_test_sets(const WorldSpec& train_spec, const WorldSpec& gen_spec,
                                            std::uint64_t seed, const CameraParams& base_cam) {
  check_disjoint_shapes(train_spec, gen_spec);
  TestSetConfig in_cfg;
  in_cfg.name = "in-distribution";
  in_cfg.cam = base_cam;
  in_cfg.cam.fov_deg = 45.0;
  in_cfg.counts = ClassCounts::thirds(50);

  TestSetConfig gen_cfg = in_cfg;
  gen_cfg.name = "generalization";
  gen_cfg.cam.fov_deg = 90.0;
  gen_cfg.counts = ClassCounts::thirds(150);

  return {build_test_set(train_spec, in_cfg, derive_seed(seed, 0)),
          build_test_set(gen_spec, gen_cfg, derive_seed(seed, 1))};
}

double ClassScore::accuracy() const {
  return count > 0 ? static_cast<double>(correct) / count : std::numeric_limits<double>::quiet_NaN();
}

EvalReport evaluate(const Predictor& predictor, const TestSet& set, const OutcomeThresholds& thr,
                    const std::string& predictor_name) {
  thr.validate();
  EvalReport rep;
  rep.set_name = set.name;
  rep.predictor = predictor_name;
  ByteWriter fp;
  fp.u64(set.fingerprint());
  fp.f64(thr.low);
  fp.f64(thr.high);
  rep.fingerprint = fnv1a64(fp.bytes());

  double iou_sum = 0.0;
  for (const SCRecord& rec : set.records) {
    const MaskPrediction pred = predictor(rec);
    const SCOutcome out = classify(pred.prob1, pred.prob2, thr);
    ClassScore& score = rep.classes[static_cast<std::size_t>(rec.gt.kind)];
    ++score.count;
    if (out.kind == rec.gt.kind) ++score.correct;
    if (rec.gt.kind == OutcomeKind::MovedObject) {
      const auto [g1, g2] = gt_masks(rec.obs1.ids, rec.obs2.ids, rec.gt.moved);
      iou_sum += 0.5 * (iou(largest_component(binarize(pred.prob1)), g1) + iou(largest_component(binarize(pred.prob2)), g2));
      ++rep.iou_count;
    }
  }
  rep.mean_iou = rep.iou_count > 0 ? iou_sum / rep.iou_count : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

std::string format_report_csv(std::span<const EvalReport> reports) {
  std::ostringstream out;
  out.precision(6);
  out << "set,predictor,movable_iou,immovable_accuracy,free_space_accuracy,moved_object_accuracy,"
         "n_identical,n_different,n_moved_object,fingerprint\n";
  for (const EvalReport& r : reports) {
    out << r.set_name << ',' << r.predictor << ',' << r.mean_iou << ','
        << r.score(OutcomeKind::Different).accuracy() << ',' << r.score(OutcomeKind::Identical).accuracy() << ','
        << r.score(OutcomeKind::MovedObject).accuracy() << ',' << r.score(OutcomeKind::Identical).count << ','
        << r.score(OutcomeKind::Different).count << ',' << r.score(OutcomeKind::MovedObject).count << ','
        << r.fingerprint << '\n';
  }
  return out.str();
}

std::string format_report_table(std::span<const EvalReport> reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-10s %16s %18s %12s\n", "set", "predictor", "movable (IoU)",
                "immovable (acc)", "free (acc)");
  out << line;
  for (const EvalReport& r : reports) {
    std::snprintf(line, sizeof line, "%-18s %-10s %16.3f %18.3f %12.3f\n", r.set_name.c_str(), r.predictor.c_str(),
                  r.mean_iou, r.score(OutcomeKind::Different).accuracy(), r.score(OutcomeKind::Identical).accuracy());
    out << line;
  }
  return out.str();
}

}  // namespace scod
