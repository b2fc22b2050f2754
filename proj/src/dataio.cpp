// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "boxrank/error.hpp"
#include "boxrank/parallel.hpp"
#include "boxrank/rng.hpp"
#include "boxrank/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace boxrank {

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IoError(msg("cannot create directory ", path, ": ", ec.message()));
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

json box_to_json(const Box& b) {
  return json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

Box box_from_json(const json& j, size_t line_no) {
  if (!j.is_array() || j.size() != 4)
    throw DataError(msg("line ", line_no, ": box must be [x0,y0,x1,y1]"));
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
        j[3].get<double>()};
  if (!b.valid())
    throw DataError(msg("line ", line_no, ": coordinate order violated (",
                        b.x_min, ",", b.y_min, ",", b.x_max, ",", b.y_max,
                        ")"));
  return b;
}

json parse_line(const std::string& line, size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(msg("line ", line_no, ": malformed JSON at byte ",
                        e.byte, ": ", e.what()));
  }
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream is(path);
  if (!is) throw IoError(msg("cannot open ", path));
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    fn(line, line_no);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError(msg("cannot write ", path));
  return os;
}

}  // namespace

void save_annotations(const std::vector<ImageAnnotations>& anns,
                      const std::string& path) {
  std::ofstream os = open_out(path);
  for (const auto& a : anns) {
    json j;
    j["image_id"] = a.image_id;
    json boxes = json::array();
    json cats = json::array();
    for (const auto& o : a.objects) {
      boxes.push_back(box_to_json(o.box));
      cats.push_back(o.category);
    }
    j["boxes"] = boxes;
    j["categories"] = cats;
    os << j.dump() << "\n";
  }
  if (!os) throw IoError(msg("write failed: ", path));
}

std::vector<ImageAnnotations> load_annotations(const std::string& path) {
  std::vector<ImageAnnotations> out;
  for_each_line(path, [&](const std::string& line, size_t line_no) {
    const json j = parse_line(line, line_no);
    if (!j.contains("image_id") || !j.contains("boxes") ||
        !j.contains("categories"))
      throw DataError(msg("line ", line_no,
                          ": annotation needs image_id/boxes/categories"));
    ImageAnnotations a;
    a.image_id = j["image_id"].get<std::string>();
    const json& boxes = j["boxes"];
    const json& cats = j["categories"];
    if (boxes.size() != cats.size())
      throw DataError(msg("line ", line_no, ": boxes/categories length"));
    for (size_t i = 0; i < boxes.size(); ++i) {
      GroundTruth gt;
      gt.box = box_from_json(boxes[i], line_no);
      gt.category = cats[i].get<int>();
      if (gt.category < 0)
        throw DataError(msg("line ", line_no, ": negative category"));
      a.objects.push_back(gt);
    }
    out.push_back(std::move(a));
  });
  return out;
}

void save_proposals(const std::vector<ProposalSet>& proposals,
                    const std::string& path) {
  std::ofstream os = open_out(path);
  for (const auto& p : proposals) {
    json j;
    j["image_id"] = p.image_id;
    json boxes = json::array();
    for (const Box& b : p.boxes) boxes.push_back(box_to_json(b));
    j["boxes"] = boxes;
    j["scores"] = p.scores;
    if (!p.source.empty()) j["source"] = p.source;
    if (!p.objectness.empty()) j["objectness"] = p.objectness;
    if (!p.ranker.empty()) j["ranker"] = p.ranker;
    os << j.dump() << "\n";
  }
  if (!os) throw IoError(msg("write failed: ", path));
}

std::vector<ProposalSet> load_proposals(const std::string& path) {
  std::vector<ProposalSet> out;
  for_each_line(path, [&](const std::string& line, size_t line_no) {
    const json j = parse_line(line, line_no);
    if (!j.contains("image_id") || !j.contains("boxes") ||
        !j.contains("scores"))
      throw DataError(msg("line ", line_no,
                          ": proposal record needs image_id/boxes/scores"));
    ProposalSet p;
    p.image_id = j["image_id"].get<std::string>();
    for (const auto& jb : j["boxes"])
      p.boxes.push_back(box_from_json(jb, line_no));
    p.scores = j["scores"].get<std::vector<double>>();
    if (p.scores.size() != p.boxes.size())
      throw DataError(msg("line ", line_no, ": boxes/scores length"));
    if (j.contains("source")) p.source = j["source"].get<std::string>();
    if (j.contains("objectness"))
      p.objectness = j["objectness"].get<std::vector<double>>();
    if (j.contains("ranker")) p.ranker = j["ranker"].get<std::string>();
    // Source pools are ordered by their own score; reranked files are
    // ordered by objectness instead, so skip the check for them.
    if (p.ranker.empty())
      for (size_t i = 1; i < p.scores.size(); ++i)
        if (p.scores[i] > p.scores[i - 1])
          throw DataError(msg("line ", line_no,
                              ": source scores not descending at entry ", i));
    if (p.objectness.size() > p.boxes.size())
      throw DataError(msg("line ", line_no, ": objectness longer than boxes"));
    out.push_back(std::move(p));
  });
  return out;
}

void save_image_index(const std::vector<ImageEntry>& entries,
                      const std::string& path) {
  std::ofstream os = open_out(path);
  for (const auto& e : entries) {
    json j;
    j["image_id"] = e.id;
    j["file"] = e.file;
    j["width"] = e.width;
    j["height"] = e.height;
    os << j.dump() << "\n";
  }
  if (!os) throw IoError(msg("write failed: ", path));
}

std::vector<ImageEntry> load_image_index(const std::string& path) {
  std::vector<ImageEntry> out;
  for_each_line(path, [&](const std::string& line, size_t line_no) {
    const json j = parse_line(line, line_no);
    ImageEntry e;
    e.id = j.at("image_id").get<std::string>();
    e.file = j.at("file").get<std::string>();
    e.width = j.at("width").get<int>();
    e.height = j.at("height").get<int>();
    if (e.width <= 0 || e.height <= 0)
      throw DataError(msg("line ", line_no, ": image dims must be positive"));
    out.push_back(std::move(e));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

std::string Dataset::images_dir(const std::string& root,
                                const std::string& split) {
  return root + "/images/" + split;
}
std::string Dataset::index_path(const std::string& root,
                                const std::string& split) {
  return images_dir(root, split) + "/index.jsonl";
}
std::string Dataset::annotations_path(const std::string& root,
                                      const std::string& split) {
  return root + "/annotations/" + split + "/annotations.jsonl";
}
std::string Dataset::proposals_path(const std::string& root,
                                    const std::string& split,
                                    const std::string& name) {
  return root + "/proposals/" + split + "/" + name + ".jsonl";
}

Dataset Dataset::open(const std::string& root, const std::string& split) {
  Dataset d;
  d.root_ = root;
  d.split_ = split;
  d.images_ = load_image_index(index_path(root, split));
  for (size_t i = 0; i < d.images_.size(); ++i) {
    if (!d.index_.emplace(d.images_[i].id, i).second)
      throw DataError(msg("duplicate image id ", d.images_[i].id));
  }
  d.annotations_ = load_annotations(annotations_path(root, split));
  for (size_t i = 0; i < d.annotations_.size(); ++i) {
    const auto& a = d.annotations_[i];
    if (d.index_.count(a.image_id) == 0)
      throw DataError(msg("annotation for unknown image id ", a.image_id));
    if (!d.ann_index_.emplace(a.image_id, i).second)
      throw DataError(msg("duplicate annotations for image ", a.image_id));
    const ImageEntry& e = d.images_[d.index_[a.image_id]];
    for (const auto& o : a.objects)
      if (o.box.x_max > e.width || o.box.y_max > e.height ||
          o.box.x_min < 0 || o.box.y_min < 0)
        throw DataError(msg("gt box outside image ", a.image_id));
  }
  return d;
}

const ImageEntry& Dataset::image_entry(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw DataError(msg("unknown image id ", id));
  return images_[it->second];
}

const ImageAnnotations& Dataset::annotations_for(const std::string& id) const {
  const auto it = ann_index_.find(id);
  if (it == ann_index_.end())
    throw DataError(msg("no annotations for image ", id));
  return annotations_[it->second];
}

ImageU8 Dataset::load_image(const std::string& id) const {
  const ImageEntry& e = image_entry(id);
  ImageU8 img = load_png(images_dir(root_, split_) + "/" + e.file);
  if (img.width != e.width || img.height != e.height)
    throw DataError(msg("image ", id, " dims ", img.width, "x", img.height,
                        " disagree with index ", e.width, "x", e.height));
  return img;
}

// ---------------------------------------------------------------------------
// Synthetic scenes

void SynthConfig::validate() const {
  if (num_images < 1) throw ConfigError("num_images must be positive");
  if (width < 100 || height < 100)
    throw ConfigError("synthetic images must be at least 100px per side");
  if (min_objects < 1 || max_objects < min_objects)
    throw ConfigError("bad objects-per-image range");
  if (category_count < 1) throw ConfigError("category count must be positive");
  if (clutter < 0.0) throw ConfigError("clutter density must be >= 0");
}

namespace {

struct Rgb {
  uint8_t r, g, b;
};

constexpr Rgb kObjectColors[8] = {
    {200, 45, 45},  {230, 140, 35}, {215, 205, 55}, {55, 180, 75},
    {45, 190, 200}, {60, 95, 215},  {145, 65, 205}, {210, 65, 160},
};

Rgb scale_color(Rgb c, double f) {
  auto s = [&](uint8_t v) {
    return static_cast<uint8_t>(std::clamp(v * f, 0.0, 255.0));
  };
  return Rgb{s(c.r), s(c.g), s(c.b)};
}

void put_px(ImageU8& img, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  img.at(x, y, 0) = c.r;
  img.at(x, y, 1) = c.g;
  img.at(x, y, 2) = c.b;
}

void draw_segment(ImageU8& img, double x0, double y0, double x1, double y1,
                  int thickness, Rgb c) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  const int steps = std::max(2, static_cast<int>(len * 2));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const int cx = static_cast<int>(x0 + (x1 - x0) * t);
    const int cy = static_cast<int>(y0 + (y1 - y0) * t);
    for (int dy = 0; dy < thickness; ++dy)
      for (int dx = 0; dx < thickness; ++dx)
        put_px(img, cx + dx, cy + dy, c);
  }
}

void draw_blob(ImageU8& img, int cx, int cy, int radius, Rgb c) {
  for (int y = cy - radius; y <= cy + radius; ++y)
    for (int x = cx - radius; x <= cx + radius; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius)
        put_px(img, x, y, c);
}

// Deterministic per-pixel hash for speckle textures.
uint32_t pixel_hash(uint64_t seed, int x, int y) {
  return static_cast<uint32_t>(
      derive_seed(seed, (static_cast<uint64_t>(y) << 20) ^
                            static_cast<uint64_t>(x)));
}

enum class ShapeKind { ellipse, rectangle, triangle, ring };

struct ShapeSpec {
  ShapeKind kind;
  int x0, y0, x1, y1;        // footprint (half-open pixel bounds)
  int variant;               // orientation / limb-vs-ring choice
};

// Membership test for the shape footprint; local coordinates.
bool shape_covers(const ShapeSpec& s, int x, int y) {
  const double w = s.x1 - s.x0, h = s.y1 - s.y0;
  const double lx = x - s.x0 + 0.5, ly = y - s.y0 + 0.5;
  switch (s.kind) {
    case ShapeKind::ellipse: {
      const double nx = (lx - w / 2) / (w / 2), ny = (ly - h / 2) / (h / 2);
      return nx * nx + ny * ny <= 1.0;
    }
    case ShapeKind::rectangle:
      return true;
    case ShapeKind::triangle: {
      // Four orientations: apex up/down/left/right.
      double ax, ay, bx, by, cx, cy;
      switch (s.variant % 4) {
        case 0: ax = w / 2; ay = 0; bx = 0; by = h; cx = w; cy = h; break;
        case 1: ax = w / 2; ay = h; bx = 0; by = 0; cx = w; cy = 0; break;
        case 2: ax = 0; ay = h / 2; bx = w; by = 0; cx = w; cy = h; break;
        default: ax = w; ay = h / 2; bx = 0; by = 0; cx = 0; cy = h; break;
      }
      auto side = [&](double px, double py, double qx, double qy) {
        return (qx - px) * (ly - py) - (qy - py) * (lx - px);
      };
      const double d1 = side(ax, ay, bx, by);
      const double d2 = side(bx, by, cx, cy);
      const double d3 = side(cx, cy, ax, ay);
      const bool neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
      const bool pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
      return !(neg && pos);
    }
    case ShapeKind::ring: {
      if (s.variant % 2 == 0) {
        // Annulus.
        const double nx = (lx - w / 2) / (w / 2), ny = (ly - h / 2) / (h / 2);
        const double d = nx * nx + ny * ny;
        return d <= 1.0 && d >= 0.3;
      }
      // Limb composite: an L of two rectangles.
      const bool vertical = lx <= 0.4 * w;
      const bool horizontal = ly >= 0.6 * h;
      return vertical || horizontal;
    }
  }
  return false;
}

struct RenderedObject {
  Box gt;
  int category;
};

// Draws one textured shape; returns the tight bbox of its mask.
RenderedObject render_object(ImageU8& img, Rng& rng, int category,
                             const ShapeSpec& spec, uint64_t speckle_seed) {
  const Rgb base = kObjectColors[category % 8];
  const Rgb dark = scale_color(base, 0.45);
  const Rgb light = scale_color(base, 1.35);
  const int tex = static_cast<int>(rng.uniform_int(3));
  const int period = 4 + static_cast<int>(rng.uniform_int(5));
  const int dir = static_cast<int>(rng.uniform_int(3));

  const int w = spec.x1 - spec.x0, h = spec.y1 - spec.y0;
  std::vector<uint8_t> mask(static_cast<size_t>(w) * h, 0);
  for (int y = spec.y0; y < spec.y1; ++y)
    for (int x = spec.x0; x < spec.x1; ++x)
      if (shape_covers(spec, x, y))
        mask[static_cast<size_t>(y - spec.y0) * w + (x - spec.x0)] = 1;

  int mnx = w, mny = h, mxx = -1, mxy = -1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask[static_cast<size_t>(y) * w + x]) continue;
      mnx = std::min(mnx, x);
      mny = std::min(mny, y);
      mxx = std::max(mxx, x);
      mxy = std::max(mxy, y);
      // Border when any 2-neighborhood cell leaves the mask.
      bool border = false;
      for (int dy = -2; dy <= 2 && !border; ++dy)
        for (int dx = -2; dx <= 2 && !border; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h ||
              !mask[static_cast<size_t>(ny) * w + nx])
            border = true;
        }
      Rgb c;
      if (border) {
        c = dark;
      } else if (tex == 0) {
        const int axis = dir == 0 ? x : (dir == 1 ? y : x + y);
        c = (axis / period) % 2 == 0 ? base : light;
      } else if (tex == 1) {
        c = ((x / period) + (y / period)) % 2 == 0 ? base : dark;
      } else {
        const uint32_t hv = pixel_hash(speckle_seed, x, y);
        c = (hv & 3u) == 0u ? light : ((hv & 3u) == 1u ? dark : base);
      }
      put_px(img, spec.x0 + x, spec.y0 + y, c);
    }

  RenderedObject obj;
  obj.category = category;
  obj.gt = Box{static_cast<double>(spec.x0 + mnx),
               static_cast<double>(spec.y0 + mny),
               static_cast<double>(spec.x0 + mxx + 1),
               static_cast<double>(spec.y0 + mxy + 1)};
  return obj;
}

ImageU8 render_scene(const SynthConfig& cfg, Rng& rng,
                     std::vector<GroundTruth>* gts) {
  ImageU8 img;
  img.width = cfg.width;
  img.height = cfg.height;
  img.pixels.resize(static_cast<size_t>(cfg.width) * cfg.height * 3);

  // Muted gradient background with mild per-pixel noise.
  const int mode = static_cast<int>(rng.uniform_int(3));
  Rgb c0{static_cast<uint8_t>(90 + rng.uniform_int(60)),
         static_cast<uint8_t>(90 + rng.uniform_int(60)),
         static_cast<uint8_t>(90 + rng.uniform_int(60))};
  Rgb c1{static_cast<uint8_t>(90 + rng.uniform_int(60)),
         static_cast<uint8_t>(90 + rng.uniform_int(60)),
         static_cast<uint8_t>(90 + rng.uniform_int(60))};
  const uint64_t noise_seed = rng.next_u64();
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      double t = mode == 0
                     ? static_cast<double>(x) / cfg.width
                     : (mode == 1 ? static_cast<double>(y) / cfg.height
                                  : (x + y) /
                                        static_cast<double>(cfg.width +
                                                            cfg.height));
      const uint32_t hv = pixel_hash(noise_seed, x, y);
      const int noise = static_cast<int>(hv % 17) - 8;
      auto mix = [&](uint8_t a, uint8_t b) {
        return static_cast<uint8_t>(
            std::clamp(a + (b - a) * t + noise, 0.0, 255.0));
      };
      put_px(img, x, y, Rgb{mix(c0.r, c1.r), mix(c0.g, c1.g),
                            mix(c0.b, c1.b)});
    }

  // Edge-rich clutter: short segments and small blobs that excite the
  // gradient map without forming complete objects.
  const int n_clutter = static_cast<int>(
      cfg.clutter * cfg.width * cfg.height / 900.0);
  for (int i = 0; i < n_clutter; ++i) {
    const int kind = static_cast<int>(rng.uniform_int(3));
    const Rgb c{static_cast<uint8_t>(30 + rng.uniform_int(200)),
                static_cast<uint8_t>(30 + rng.uniform_int(200)),
                static_cast<uint8_t>(30 + rng.uniform_int(200))};
    const double x = rng.uniform(0.0, cfg.width);
    const double y = rng.uniform(0.0, cfg.height);
    if (kind == 0) {
      const double ang = rng.uniform(0.0, 6.28318530717958647692);
      const double len = rng.uniform(12.0, 50.0);
      draw_segment(img, x, y, x + std::cos(ang) * len, y + std::sin(ang) * len,
                   1 + static_cast<int>(rng.uniform_int(2)), c);
    } else if (kind == 1) {
      draw_blob(img, static_cast<int>(x), static_cast<int>(y),
                2 + static_cast<int>(rng.uniform_int(4)), c);
    } else {
      // Open corner: two joined segments, a part-like contour.
      const double len = rng.uniform(10.0, 35.0);
      draw_segment(img, x, y, x + len, y, 1, c);
      draw_segment(img, x, y, x, y + len, 1, c);
    }
  }

  // Objects.
  const int n_objects =
      cfg.min_objects +
      static_cast<int>(rng.uniform_int(
          static_cast<uint64_t>(cfg.max_objects - cfg.min_objects + 1)));
  std::vector<Box> placed;
  for (int i = 0; i < n_objects; ++i) {
    const int category =
        static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cfg.category_count)));
    const double max_side =
        std::min(110.0, 0.45 * std::min(cfg.width, cfg.height));
    for (int attempt = 0; attempt < 30; ++attempt) {
      const double side = rng.uniform(28.0, max_side);
      const double aspect = rng.uniform(0.6, 1.667);
      const double w = std::min(side * std::sqrt(aspect),
                                static_cast<double>(cfg.width - 6));
      const double h = std::min(side / std::sqrt(aspect),
                                static_cast<double>(cfg.height - 6));
      const double x0 = rng.uniform(3.0, cfg.width - w - 3.0);
      const double y0 = rng.uniform(3.0, cfg.height - h - 3.0);
      const Box cand{x0, y0, x0 + w, y0 + h};
      bool ok = true;
      for (const Box& p : placed)
        if (iou(cand, p) > 0.25) {
          ok = false;
          break;
        }
      if (!ok) continue;
      ShapeSpec spec;
      spec.kind = static_cast<ShapeKind>(category % 4);
      spec.x0 = static_cast<int>(x0);
      spec.y0 = static_cast<int>(y0);
      spec.x1 = static_cast<int>(x0 + w);
      spec.y1 = static_cast<int>(y0 + h);
      spec.variant = static_cast<int>(rng.uniform_int(4));
      const RenderedObject obj =
          render_object(img, rng, category, spec, rng.next_u64());
      placed.push_back(obj.gt);
      gts->push_back(GroundTruth{obj.category, obj.gt});
      break;
    }
  }
  return img;
}

}  // namespace

Dataset gen_synthetic(const SynthConfig& cfg, const std::string& root,
                      const std::string& split) {
  cfg.validate();
  ensure_dir(Dataset::images_dir(root, split));
  ensure_dir(root + "/annotations/" + split);

  std::vector<ImageEntry> entries(static_cast<size_t>(cfg.num_images));
  std::vector<ImageAnnotations> anns(static_cast<size_t>(cfg.num_images));
  parallel_for(cfg.num_images, [&](int64_t i) {
    Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(i)));
    std::vector<GroundTruth> gts;
    const ImageU8 img = render_scene(cfg, rng, &gts);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05d", static_cast<int>(i));
    const std::string id = name;
    save_png(img, Dataset::images_dir(root, split) + "/" + id + ".png");
    entries[static_cast<size_t>(i)] =
        ImageEntry{id, id + ".png", cfg.width, cfg.height};
    anns[static_cast<size_t>(i)] = ImageAnnotations{id, std::move(gts)};
  });
  save_image_index(entries, Dataset::index_path(root, split));
  save_annotations(anns, Dataset::annotations_path(root, split));
  return Dataset::open(root, split);
}

// ---------------------------------------------------------------------------
// Baseline proposer

ProposalSet baseline_propose(const ImageU8& image,
                             const std::string& image_id,
                             const BaselineConfig& cfg) {
  if (cfg.num_proposals < 1)
    throw ConfigError("baseline: need at least one proposal");
  SamplerConfig windows_cfg;
  windows_cfg.alpha = cfg.alpha;
  windows_cfg.min_window_side = cfg.min_side;
  const std::vector<Box> windows =
      gen_sliding_windows(image.width, image.height, windows_cfg);

  const std::vector<float> grad =
      sobel_magnitude(luma(image), image.width, image.height);
  const IntegralImage integral(grad, image.width, image.height);

  // Interior edge density minus a boundary-straggling penalty.
  std::vector<double> scores(windows.size());
  for (size_t i = 0; i < windows.size(); ++i) {
    const Box& b = windows[i];
    const int x0 = static_cast<int>(std::lround(b.x_min));
    const int y0 = static_cast<int>(std::lround(b.y_min));
    const int x1 = static_cast<int>(std::lround(b.x_max));
    const int y1 = static_cast<int>(std::lround(b.y_max));
    const double short_side = std::min(b.width(), b.height());
    const int m = std::max(2, static_cast<int>(std::lround(0.15 * short_side)));
    const int mo = std::max(1, m / 2);
    const double inner_area =
        std::max(1.0, static_cast<double>(x1 - x0 - 2 * m) * (y1 - y0 - 2 * m));
    const double inner =
        integral.box_sum(x0 + m, y0 + m, x1 - m, y1 - m) / inner_area;
    const double outer_sum =
        integral.box_sum(x0 - mo, y0 - mo, x1 + mo, y1 + mo);
    const double core_sum =
        integral.box_sum(x0 + mo, y0 + mo, x1 - mo, y1 - mo);
    const double band_area = std::max(
        1.0, static_cast<double>(x1 - x0 + 2 * mo) * (y1 - y0 + 2 * mo) -
                 static_cast<double>(std::max(0, x1 - x0 - 2 * mo)) *
                     std::max(0, y1 - y0 - 2 * mo));
    const double straddle = (outer_sum - core_sum) / band_area;
    scores[i] = inner - 0.7 * straddle;
  }

  std::vector<size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  ProposalSet out;
  out.image_id = image_id;
  out.source = "edge-density-baseline";
  for (size_t oi = 0;
       oi < order.size() &&
       out.boxes.size() < static_cast<size_t>(cfg.num_proposals);
       ++oi) {
    const Box& cand = windows[order[oi]];
    bool keep = true;
    for (const Box& kept : out.boxes)
      if (iou(cand, kept) > cfg.nms_iou) {
        keep = false;
        break;
      }
    if (keep) {
      out.boxes.push_back(cand);
      out.scores.push_back(scores[order[oi]]);
    }
  }
  return out;
}

}  // namespace boxrank
