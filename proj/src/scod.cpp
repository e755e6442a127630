#include "scod/scod.hpp"

#include "scod/error.hpp"
#include "scod/image_io.hpp"
#include "scod/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace scod {

void OutcomeThresholds::validate() const {
  if (!(low > 0.0 && low < high && high < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "thresholds must satisfy 0 < low < high < 1");
  }
}

double positive_fraction(const ProbImage& prob, double binarize_at) {
  if (prob.size() == 0) return 0.0;
  return static_cast<double>((prob > static_cast<float>(binarize_at)).count()) / static_cast<double>(prob.size());
}

Mask binarize(const ProbImage& prob, double binarize_at) {
  return (prob > static_cast<float>(binarize_at)).cast<std::uint8_t>();
}

SCOutcome classify_fractions(double f1, double f2, const OutcomeThresholds& thr) {
  if (f1 < thr.low && f2 < thr.low) return SCOutcome::identical();
  if (f1 > thr.high && f2 > thr.high) return SCOutcome::different();
  return SCOutcome::moved_object({});
}

SCOutcome classify(const ProbImage& prob1, const ProbImage& prob2, const OutcomeThresholds& thr,
                   double binarize_at) {
  thr.validate();
  return classify_fractions(positive_fraction(prob1, binarize_at), positive_fraction(prob2, binarize_at), thr);
}

Mask Component::to_mask(int height, int width) const {
  Mask m = Mask::Zero(height, width);
  for (int p : pixels) m.data()[p] = 1;
  return m;
}

std::vector<Component> extract_detection(const Mask& mask) {
  const int H = static_cast<int>(mask.rows()), W = static_cast<int>(mask.cols());
  std::vector<int> label(static_cast<std::size_t>(H) * W, -1);
  std::vector<Component> out;
  std::vector<int> stack;
  for (int start = 0; start < H * W; ++start) {
    if (mask.data()[start] == 0 || label[static_cast<std::size_t>(start)] >= 0) continue;
    const int id = static_cast<int>(out.size());
    Component comp;
    stack.assign(1, start);
    label[static_cast<std::size_t>(start)] = id;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      comp.pixels.push_back(p);
      const int y = p / W, x = p % W;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
          const int q = ny * W + nx;
          if (mask.data()[q] == 0 || label[static_cast<std::size_t>(q)] >= 0) continue;
          label[static_cast<std::size_t>(q)] = id;
          stack.push_back(q);
        }
      }
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    out.push_back(std::move(comp));
  }
  std::stable_sort(out.begin(), out.end(), [](const Component& a, const Component& b) { return a.area() > b.area(); });
  return out;
}

Mask largest_component(const Mask& mask) {
  const auto comps = extract_detection(mask);
  if (comps.empty()) return Mask::Zero(mask.rows(), mask.cols());
  return comps.front().to_mask(static_cast<int>(mask.rows()), static_cast<int>(mask.cols()));
}

Predictor oracle_predictor() {
  return [](const SCRecord& rec) {
    const IdImage& ids1 = rec.obs1.ids;
    const IdImage& ids2 = rec.obs2.ids;
    if (ids1.size() == 0 || ids2.size() == 0) throw Error(ErrorKind::InvalidArgument, "oracle needs id buffers");
    MaskPrediction m;
    switch (rec.gt.kind) {
      case OutcomeKind::Identical:
        m.prob1 = ProbImage::Zero(ids1.rows(), ids1.cols());
        m.prob2 = ProbImage::Zero(ids2.rows(), ids2.cols());
        break;
      case OutcomeKind::Different:
        m.prob1 = ProbImage::Ones(ids1.rows(), ids1.cols());
        m.prob2 = ProbImage::Ones(ids2.rows(), ids2.cols());
        break;
      case OutcomeKind::MovedObject: {
        auto [m1, m2] = gt_masks(ids1, ids2, rec.gt.moved);
        m.prob1 = m1.cast<float>();
        m.prob2 = m2.cast<float>();
        break;
      }
    }
    return m;
  };
}

Predictor learned_predictor(nn::Params<float> params) {
  params.check();
  return [p = std::move(params)](const SCRecord& rec) {
    auto [a, b] = predict_masks(p, rec.obs1.rgb, rec.obs2.rgb);
    return MaskPrediction{std::move(a), std::move(b)};
  };
}

Predictor naive_predictor(int threshold) {
  return [threshold](const SCRecord& rec) {
    auto [m1, m2] = naive_subtract(rec.obs1.rgb, rec.obs2.rgb, threshold);
    return MaskPrediction{m1.cast<float>(), m2.cast<float>()};
  };
}

Predictor zeros_predictor() {
  return [](const SCRecord& rec) {
    const int H = rec.obs1.rgb.height(), W = rec.obs1.rgb.width();
    return MaskPrediction{ProbImage::Zero(H, W), ProbImage::Zero(H, W)};
  };
}

ScodResult run_scod(const WorldSpec& spec, const WorldState& start, const Predictor& predictor,
                    const SequenceConfig& seq_cfg, const CameraParams& cam, std::uint64_t seed,
                    const OutcomeThresholds& thr) {
  ScodResult r;
  r.record = run_experiment(spec, start, sample_sequence(seed, seq_cfg), seq_cfg.order2(), cam);
  r.masks = predictor(r.record);
  r.predicted = classify(r.masks.prob1, r.masks.prob2, thr);
  return r;
}

GridConfig GridConfig::covering(const Box2& bounds, double resolution) {
  if (!(resolution > 0.0)) throw Error(ErrorKind::InvalidArgument, "grid resolution must be positive");
  GridConfig g;
  g.origin = bounds.min();
  g.resolution = resolution;
  g.nx = static_cast<int>(std::ceil(bounds.sizes().x() / resolution - 1e-9));
  g.ny = static_cast<int>(std::ceil(bounds.sizes().y() / resolution - 1e-9));
  return g;
}

Vec2 GridConfig::center(int ix, int iy) const {
  return origin + resolution * Vec2(ix + 0.5, iy + 0.5);
}

CommutationMap commutation_map(const WorldSpec& spec, const GridConfig& grid, int trials_per_cell,
                               const SequenceConfig& seq_cfg, const Predictor& predictor, const CameraParams& cam,
                               std::uint64_t seed, const OutcomeThresholds& thr) {
  if (trials_per_cell < 1) throw Error(ErrorKind::InvalidArgument, "trials per cell must be at least 1");
  if (grid.nx < 1 || grid.ny < 1 || !(grid.resolution > 0.0)) throw Error(ErrorKind::InvalidArgument, "empty grid");
  thr.validate();
  CommutationMap map;
  map.grid = grid;
  map.cells.resize(static_cast<std::size_t>(grid.nx) * grid.ny);
  const WorldState base = initial_state(spec);
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const auto index = static_cast<std::uint64_t>(iy * grid.nx + ix);
      WorldState start = base;
      start.agent.base = {grid.center(ix, iy), normalize_angle(grid.heading)};
      if (!spec.bounds.contains(start.agent.base.position) || !agent_placement_free(spec, start, start.agent)) continue;
      CommutationCell& cell = map.cells[index];
      const std::uint64_t cell_seed = derive_seed(seed, index);
      for (int t = 0; t < trials_per_cell; ++t) {
        const ScodResult r =
            run_scod(spec, start, predictor, seq_cfg, cam, derive_seed(cell_seed, static_cast<std::uint64_t>(t)), thr);
        ++cell.trials;
        if (r.predicted.kind == OutcomeKind::Different) ++cell.different;
      }
    }
  }
  return map;
}

std::vector<std::uint8_t> encode_map_pgm(const CommutationMap& map) {
  const GridConfig& g = map.grid;
  Image<std::uint8_t> img = Image<std::uint8_t>::Zero(g.ny, g.nx);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const CommutationCell& c = map.cell(ix, iy);
      if (c.empty()) continue;
      img(g.ny - 1 - iy, ix) = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - c.p_different())));
    }
  }
  return encode_pgm(img);
}

std::string format_map_csv(const CommutationMap& map) {
  std::ostringstream out;
  out.precision(9);
  out << "cell_x,cell_y,trials,p_different\n";
  for (int iy = 0; iy < map.grid.ny; ++iy) {
    for (int ix = 0; ix < map.grid.nx; ++ix) {
      const CommutationCell& c = map.cell(ix, iy);
      out << ix << ',' << iy << ',' << c.trials << ',' << c.p_different() << '\n';
    }
  }
  return out.str();
}

namespace {

template <typename F>
double mean_over(const CommutationMap& map, const Box2& rect, F value) {
  double sum = 0.0;
  int n = 0;
  for (int iy = 0; iy < map.grid.ny; ++iy) {
    for (int ix = 0; ix < map.grid.nx; ++ix) {
      const CommutationCell& c = map.cell(ix, iy);
      if (c.empty() || !rect.contains(map.grid.center(ix, iy))) continue;
      sum += value(c);
      ++n;
    }
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double mean_p_different(const CommutationMap& map, const Box2& rect) {
  return mean_over(map, rect, [](const CommutationCell& c) { return c.p_different(); });
}

double mean_intensity(const CommutationMap& map, const Box2& rect) {
  return mean_over(map, rect, [](const CommutationCell& c) { return std::round(255.0 * (1.0 - c.p_different())); });
}

}  // namespace scod
