#include "scod/scexp.hpp"

#include "scod/binio.hpp"
#include "scod/error.hpp"
#include "scod/image_io.hpp"
#include "scod/rng.hpp"
#include "scod/world_io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scod {

std::string_view to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Identical: return "Identical";
    case OutcomeKind::Different: return "Different";
    case OutcomeKind::MovedObject: return "MovedObject";
  }
  return "Unknown";
}

std::vector<int> reversal_permutation(int length) {
  std::vector<int> p(static_cast<std::size_t>(length));
  std::iota(p.rbegin(), p.rend(), 0);
  return p;
}

std::vector<int> SequenceConfig::order2() const {
  return order == OrderKind::Reverse ? reversal_permutation(length) : permutation;
}

ActionSequence sample_sequence(std::uint64_t seed, std::span<const int> dof_set, int length, double amp_min,
                               double amp_max, double dt) {
  if (dof_set.empty()) throw Error(ErrorKind::EmptyDofSet, "dof set is empty");
  if (length < 2) throw Error(ErrorKind::InvalidArgument, "sequence length must be at least 2");
  if (!(amp_min > 0.0 && amp_max >= amp_min)) throw Error(ErrorKind::InvalidArgument, "amplitude range must be positive");
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");

  Rng rng(seed);
  ActionSequence seq;
  seq.dt = dt;
  seq.actions.reserve(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    const int dof = dof_set[rng.index(dof_set.size())];
    const double sign = rng.coin() ? 1.0 : -1.0;
    seq.actions.push_back({dof, sign * rng.uniform(amp_min, amp_max)});
  }
  return seq;
}

ActionSequence sample_sequence(std::uint64_t seed, const SequenceConfig& cfg) {
  return sample_sequence(seed, cfg.dof_set, cfg.length, cfg.amp_min, cfg.amp_max, cfg.dt);
}

namespace {

void check_permutation(const std::vector<int>& order, std::size_t n) {
  if (order.size() != n) throw Error(ErrorKind::InvalidArgument, "permutation length differs from sequence");
  std::vector<bool> seen(n, false);
  for (int i : order) {
    if (i < 0 || static_cast<std::size_t>(i) >= n || seen[i]) throw Error(ErrorKind::InvalidArgument, "not a permutation");
    seen[i] = true;
  }
  bool identity = true;
  for (std::size_t i = 0; i < n; ++i) identity &= order[i] == static_cast<int>(i);
  if (identity) throw Error(ErrorKind::InvalidArgument, "second order must differ from the first");
}

bool angle_differs(double a, double b, double tol) { return std::abs(normalize_angle(a - b)) > tol; }

}  // namespace

WorldState rollout(const WorldSpec& spec, const WorldState& start, const ActionSequence& seq,
                   std::span<const int> order) {
  WorldState s = start;
  s.flags = {};
  for (int i : order) s = step(s, spec, seq.actions.at(static_cast<std::size_t>(i)), seq.dt).state;
  return s;
}

SCRecord run_experiment(const WorldSpec& spec, const WorldState& start, const ActionSequence& seq,
                        const std::vector<int>& order2, const CameraParams& cam) {
  if (start.spec_fingerprint != spec.fingerprint()) {
    throw Error(ErrorKind::SpecMismatch, "start state belongs to a different world spec");
  }
  check_permutation(order2, seq.actions.size());
  std::vector<int> order1(seq.actions.size());
  std::iota(order1.begin(), order1.end(), 0);

  SCRecord rec;
  rec.start = snapshot(start);
  rec.seq = seq;
  rec.order2 = order2;
  rec.finals.first = rollout(spec, restore(spec, rec.start), seq, order1);
  rec.finals.second = rollout(spec, restore(spec, rec.start), seq, order2);
  rec.obs1 = render(rec.finals.first, spec, cam);
  rec.obs2 = render(rec.finals.second, spec, cam);
  rec.gt = label_outcome(rec.finals.first, rec.finals.second);
  return rec;
}

SCRecord run_experiment(World& world, const ActionSequence& seq, const std::vector<int>& order2,
                        const CameraParams& cam) {
  const WorldState before = world.snapshot();
  SCRecord rec = run_experiment(world.spec(), before, seq, order2, cam);
  world.restore(before);
  return rec;
}

SCOutcome label_outcome(const WorldState& final1, const WorldState& final2) {
  if (final1.spec_fingerprint != final2.spec_fingerprint) {
    throw Error(ErrorKind::SpecMismatch, "final states come from different specs");
  }
  const AgentConfig& a = final1.agent;
  const AgentConfig& b = final2.agent;
  if (a.joints.size() != b.joints.size()) throw Error(ErrorKind::SpecMismatch, "agent joint counts differ");

  bool agent_differs = (a.base.position - b.base.position).cwiseAbs().maxCoeff() > kAgentPositionTolerance ||
                       angle_differs(a.base.heading, b.base.heading, kAgentAngleTolerance);
  for (std::size_t k = 0; k < a.joints.size(); ++k) {
    agent_differs |= std::abs(a.joints[k] - b.joints[k]) > kAgentAngleTolerance;
  }
  if (agent_differs) return SCOutcome::different();

  std::set<int> moved;
  for (const auto& [id, p1] : final1.movable_poses) {
    auto it = final2.movable_poses.find(id);
    if (it == final2.movable_poses.end()) throw Error(ErrorKind::SpecMismatch, "movable sets differ");
    const Pose& p2 = it->second;
    if ((p1.position - p2.position).cwiseAbs().maxCoeff() > kObjectPositionTolerance ||
        angle_differs(p1.heading, p2.heading, kObjectAngleTolerance)) {
      moved.insert(id);
    }
  }
  if (!moved.empty()) return SCOutcome::moved_object(std::move(moved));
  return SCOutcome::identical();
}

namespace {

constexpr std::string_view kRecordMagic = "SCRC";

void encode_record(ByteWriter& w, const SCRecord& rec) {
  encode_state(w, rec.start);
  w.u32(static_cast<std::uint32_t>(rec.seq.actions.size()));
  w.f64(rec.seq.dt);
  for (const Action& a : rec.seq.actions) {
    w.i32(a.dof_index);
    w.f64(a.velocity);
  }
  w.u32(static_cast<std::uint32_t>(rec.order2.size()));
  for (int i : rec.order2) w.u32(static_cast<std::uint32_t>(i));
  encode_state(w, rec.finals.first);
  encode_state(w, rec.finals.second);
  w.blob(encode_ppm(rec.obs1.rgb));
  w.blob(encode_ppm(rec.obs2.rgb));
  w.u8(static_cast<std::uint8_t>(rec.gt.kind));
  w.u32(static_cast<std::uint32_t>(rec.gt.moved.size()));
  for (int id : rec.gt.moved) w.i32(id);
}

SCRecord decode_record(ByteReader& r) {
  SCRecord rec;
  rec.start = decode_state(r);
  const std::uint32_t n = r.u32();
  if (n > r.remaining()) throw Error(ErrorKind::Format, "implausible action count");
  rec.seq.dt = r.f64();
  for (std::uint32_t i = 0; i < n; ++i) {
    const int dof = r.i32();
    rec.seq.actions.push_back({dof, r.f64()});
  }
  const std::uint32_t m = r.u32();
  if (m > r.remaining()) throw Error(ErrorKind::Format, "implausible permutation length");
  for (std::uint32_t i = 0; i < m; ++i) rec.order2.push_back(static_cast<int>(r.u32()));
  rec.finals.first = decode_state(r);
  rec.finals.second = decode_state(r);
  rec.obs1.rgb = decode_ppm(r.blob());
  rec.obs2.rgb = decode_ppm(r.blob());
  const std::uint8_t kind = r.u8();
  if (kind > 2) throw Error(ErrorKind::Format, "bad outcome tag");
  rec.gt.kind = static_cast<OutcomeKind>(kind);
  const std::uint32_t k = r.u32();
  if (k > r.remaining()) throw Error(ErrorKind::Format, "implausible moved-id count");
  for (std::uint32_t i = 0; i < k; ++i) rec.gt.moved.insert(r.i32());
  return rec;
}

}  // namespace

std::vector<std::uint8_t> encode_record_batch(std::span<const SCRecord> records) {
  ByteWriter w;
  w.raw(kRecordMagic);
  w.u8(kRecordBatchVersion);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const SCRecord& rec : records) {
    ByteWriter chunk;
    encode_record(chunk, rec);
    w.blob(chunk.bytes());
  }
  return w.take();
}

std::vector<SCRecord> decode_record_batch(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kRecordMagic.begin())) throw Error(ErrorKind::Format, "bad SCRC magic");
  if (r.u8() != kRecordBatchVersion) throw Error(ErrorKind::Format, "unsupported SCRC version");
  const std::uint32_t count = r.u32();
  std::vector<SCRecord> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    ByteReader chunk(r.blob());
    out.push_back(decode_record(chunk));
    if (!chunk.done()) throw Error(ErrorKind::Format, "trailing bytes in SCRC chunk");
  }
  if (!r.done()) throw Error(ErrorKind::Format, "trailing bytes after SCRC records");
  return out;
}

void write_record_batch(const std::string& path, std::span<const SCRecord> records) {
  write_file(path, encode_record_batch(records));
}

std::vector<SCRecord> read_record_batch(const std::string& path) { return decode_record_batch(read_file(path)); }

}  // namespace scod
