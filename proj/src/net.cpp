// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#include "boxrank/net.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "boxrank/rng.hpp"

namespace boxrank {

const char* profile_name(Profile p) {
  return p == Profile::full ? "full" : "small";
}

Profile profile_from_name(const std::string& name) {
  if (name == "full") return Profile::full;
  if (name == "small") return Profile::small;
  throw ConfigError(msg("unknown profile '", name, "'"));
}

NetConfig NetConfig::make(Profile p, uint64_t seed) {
  NetConfig cfg;
  cfg.profile = p;
  cfg.init_seed = seed;
  if (p == Profile::small) {
    cfg.conv1_channels = 96 / 4;
    cfg.conv2_channels = 256 / 4;
    cfg.fc6_width = 1024 / 4;
  }
  return cfg;
}

void NetConfig::validate() const {
  const int c1 = profile == Profile::full ? 96 : 24;
  const int c2 = profile == Profile::full ? 256 : 64;
  const int f6 = profile == Profile::full ? 1024 : 256;
  if (conv1_channels != c1 || conv2_channels != c2 || fc6_width != f6)
    throw ConfigError(msg("profile ", profile_name(profile),
                          " requires channels (", c1, ",", c2, ",", f6,
                          "), got (", conv1_channels, ",", conv2_channels,
                          ",", fc6_width, ")"));
  if (conv1_pad < 0 || conv2_pad < 0)
    throw ConfigError("conv paddings must be non-negative");
  if (roi_grid < 1) throw ConfigError("roi grid must be >= 1");
  if (!(init_std > 0.0)) throw ConfigError("init std must be positive");
  if (input_side < 11)
    throw ConfigError(msg("input side ", input_side, " below conv1 kernel"));
  if (conv1_out() < 3 || conv2_out() < 1)
    throw ConfigError(msg("input side ", input_side,
                          " too small for the layer stack"));
}

std::string NetConfig::canonical() const {
  std::ostringstream os;
  os << "profile=" << profile_name(profile) << ";input_side=" << input_side
     << ";conv1_channels=" << conv1_channels
     << ";conv2_channels=" << conv2_channels << ";fc6_width=" << fc6_width
     << ";conv1_pad=" << conv1_pad << ";conv2_pad=" << conv2_pad
     << ";roi_grid=" << roi_grid << ";init_seed=" << init_seed
     << ";init_std=" << init_std;
  return os.str();
}

NetConfig NetConfig::from_canonical(const std::string& text) {
  NetConfig cfg;
  std::istringstream is(text);
  std::string field;
  while (std::getline(is, field, ';')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos)
      throw DataError(msg("bad config field '", field, "'"));
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "profile")
      cfg.profile = profile_from_name(val);
    else if (key == "input_side")
      cfg.input_side = std::stoi(val);
    else if (key == "conv1_channels")
      cfg.conv1_channels = std::stoi(val);
    else if (key == "conv2_channels")
      cfg.conv2_channels = std::stoi(val);
    else if (key == "fc6_width")
      cfg.fc6_width = std::stoi(val);
    else if (key == "conv1_pad")
      cfg.conv1_pad = std::stoi(val);
    else if (key == "conv2_pad")
      cfg.conv2_pad = std::stoi(val);
    else if (key == "roi_grid")
      cfg.roi_grid = std::stoi(val);
    else if (key == "init_seed")
      cfg.init_seed = std::stoull(val);
    else if (key == "init_std")
      cfg.init_std = std::stod(val);
    else
      throw DataError(msg("unknown config field '", key, "'"));
  }
  return cfg;
}

uint64_t NetConfig::hash() const {
  // FNV-1a over the canonical form.
  const std::string s = canonical();
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

void fill_gaussian(Tensor<float>& t, Rng& rng, double stddev) {
  for (int64_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<float>(rng.normal(0.0, stddev));
}

}  // namespace

NetParams build_net(const NetConfig& cfg) {
  cfg.validate();
  NetParams p;
  p.config = cfg;
  p.conv1_w = Tensor<float>({cfg.conv1_channels, 3, 11, 11});
  p.conv1_b = Tensor<float>({cfg.conv1_channels});
  p.conv2_w = Tensor<float>({cfg.conv2_channels, cfg.conv1_channels, 5, 5});
  p.conv2_b = Tensor<float>({cfg.conv2_channels});
  p.fc6_w = Tensor<float>({cfg.fc6_inputs(), cfg.fc6_width});
  p.fc6_b = Tensor<float>({cfg.fc6_width});
  p.fc7_w = Tensor<float>({cfg.fc6_width, 2});
  p.fc7_b = Tensor<float>({2});
  Rng rng(cfg.init_seed);
  fill_gaussian(p.conv1_w, rng, cfg.init_std);
  fill_gaussian(p.conv2_w, rng, cfg.init_std);
  fill_gaussian(p.fc6_w, rng, cfg.init_std);
  fill_gaussian(p.fc7_w, rng, cfg.init_std);
  return p;
}

Net::Net(const NetParams& params)
    : config_(params.config), mean_(params.channel_mean),
      stage_(params.train_stage), iter_(params.iteration) {
  config_.validate();
  conv1_ = features_.add<ConvLayer<float>>("conv1", 3, config_.conv1_channels,
                                           11, 4, config_.conv1_pad);
  features_.add<ReluLayer<float>>();
  features_.add<MaxPoolLayer<float>>(3, 2);
  conv2_ = features_.add<ConvLayer<float>>("conv2", config_.conv1_channels,
                                           config_.conv2_channels, 5, 1,
                                           config_.conv2_pad);
  features_.add<ReluLayer<float>>();
  fc6_ = classifier_.add<FcLayer<float>>("fc6", config_.fc6_inputs(),
                                         config_.fc6_width);
  classifier_.add<ReluLayer<float>>();
  fc7_ = classifier_.add<FcLayer<float>>("fc7", config_.fc6_width, 2);

  auto copy_into = [](Param<float>& dst, const Tensor<float>& src,
                      const char* what) {
    if (!dst.value.same_shape(src))
      throw DimensionError(msg("checkpoint tensor ", what,
                               " does not match the configured net"));
    dst.value = src;
  };
  copy_into(conv1_->weight(), params.conv1_w, "conv1_w");
  copy_into(conv1_->bias(), params.conv1_b, "conv1_b");
  copy_into(conv2_->weight(), params.conv2_w, "conv2_w");
  copy_into(conv2_->bias(), params.conv2_b, "conv2_b");
  copy_into(fc6_->weight(), params.fc6_w, "fc6_w");
  copy_into(fc6_->bias(), params.fc6_b, "fc6_b");
  copy_into(fc7_->weight(), params.fc7_w, "fc7_w");
  copy_into(fc7_->bias(), params.fc7_b, "fc7_b");
}

Tensor<float> Net::forward_crop(const Tensor<float>& x) {
  if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != config_.input_side ||
      x.dim(3) != config_.input_side)
    throw DimensionError(msg("crop input must be [N,3,", config_.input_side,
                             ",", config_.input_side, "]"));
  if (config_.conv2_out() != config_.roi_grid)
    throw DimensionError(msg(
        "crop path needs roi_grid == conv2 output (", config_.conv2_out(),
        "), got ", config_.roi_grid));
  const Tensor<float> fmap = features_.forward(x);
  const int n = fmap.dim(0);
  return classifier_.forward(
      fmap.reshaped({n, static_cast<int>(fmap.size() / n)}));
}

NetParams Net::snapshot() const {
  NetParams p;
  p.config = config_;
  p.channel_mean = mean_;
  p.train_stage = stage_;
  p.iteration = iter_;
  p.conv1_w = conv1_->weight().value;
  p.conv1_b = conv1_->bias().value;
  p.conv2_w = conv2_->weight().value;
  p.conv2_b = conv2_->bias().value;
  p.fc6_w = fc6_->weight().value;
  p.fc6_b = fc6_->bias().value;
  p.fc7_w = fc7_->weight().value;
  p.fc7_b = fc7_->bias().value;
  return p;
}

Tensor<float> preprocess_crop(const ImageU8& img, const Box& box,
                              const NetConfig& cfg,
                              const std::array<float, 3>& channel_mean) {
  check_box(box, "preprocess crop box");
  if (box.x_min < 0 || box.y_min < 0 || box.x_max > img.width ||
      box.y_max > img.height)
    throw GeometryError("crop box outside the image");
  Tensor<float> t = warp_region(img, box, cfg.input_side, cfg.input_side);
  const int64_t plane = static_cast<int64_t>(cfg.input_side) * cfg.input_side;
  for (int c = 0; c < 3; ++c) {
    float* p = t.data() + c * plane;
    for (int64_t i = 0; i < plane; ++i) p[i] -= channel_mean[static_cast<size_t>(c)];
  }
  return t;
}

float forward_objectness(Net& net, const Tensor<float>& input) {
  const Tensor<float> logits = net.forward_crop(input);
  const float l0 = logits[0];
  const float l1 = logits[1];
  const float m = std::max(l0, l1);
  const float e0 = std::exp(l0 - m);
  const float e1 = std::exp(l1 - m);
  return e1 / (e0 + e1);
}

// ---------------------------------------------------------------------------
// Checkpoint format, little-endian:
//   "DBOX" | u32 version | u64 config_hash | u32 profile | u32 input_side |
//   f32 mean[3] | u32 roi_grid | u32 train_stage | u64 iteration |
//   u32 cfg_len | cfg canonical bytes | u32 n_tensors |
//   per tensor: u32 name_len, name, u32 rank, u32 dims[rank], f32 data[]

namespace {

constexpr uint32_t kVersionTag = 1;

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  put_u32(os, static_cast<uint32_t>(v));
  put_u32(os, static_cast<uint32_t>(v >> 32));
}

void put_f32(std::ostream& os, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(os, v);
}

struct Reader {
  explicit Reader(std::istream& is) : is(is) {}
  std::istream& is;
  int64_t offset = 0;

  void read(void* dst, int64_t n) {
    is.read(reinterpret_cast<char*>(dst), n);
    if (is.gcount() != n)
      throw DataError(msg("checkpoint truncated at byte ", offset));
    offset += n;
  }
  uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
  }
  uint64_t u64() {
    const uint64_t lo = u32();
    return lo | (static_cast<uint64_t>(u32()) << 32);
  }
  float f32() {
    const uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
};

void put_tensor(std::ostream& os, const std::string& name,
                const Tensor<float>& t) {
  put_u32(os, static_cast<uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(os, static_cast<uint32_t>(t.rank()));
  for (int d : t.shape()) put_u32(os, static_cast<uint32_t>(d));
  for (int64_t i = 0; i < t.size(); ++i) put_f32(os, t[i]);
}

Tensor<float> get_tensor(Reader& r, const std::string& expect_name) {
  const uint32_t name_len = r.u32();
  if (name_len > 256) throw DataError("checkpoint tensor name too long");
  std::string name(name_len, '\0');
  r.read(name.data(), name_len);
  if (name != expect_name)
    throw DataError(msg("checkpoint tensor order: expected ", expect_name,
                        ", found ", name));
  const uint32_t rank = r.u32();
  if (rank == 0 || rank > 4) throw DataError("checkpoint tensor rank");
  std::vector<int> dims;
  for (uint32_t i = 0; i < rank; ++i) {
    const uint32_t d = r.u32();
    if (d == 0 || d > (1u << 28)) throw DataError("checkpoint tensor dim");
    dims.push_back(static_cast<int>(d));
  }
  Tensor<float> t(dims);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = r.f32();
  return t;
}

}  // namespace

void save_checkpoint(const NetParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(msg("cannot write checkpoint ", path));
  os.write("DBOX", 4);
  put_u32(os, kVersionTag);
  put_u64(os, params.config.hash());
  put_u32(os, params.config.profile == Profile::full ? 0u : 1u);
  put_u32(os, static_cast<uint32_t>(params.config.input_side));
  for (float m : params.channel_mean) put_f32(os, m);
  put_u32(os, static_cast<uint32_t>(params.config.roi_grid));
  put_u32(os, params.train_stage);
  put_u64(os, params.iteration);
  const std::string cfg = params.config.canonical();
  put_u32(os, static_cast<uint32_t>(cfg.size()));
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  put_u32(os, 8);
  put_tensor(os, "conv1_w", params.conv1_w);
  put_tensor(os, "conv1_b", params.conv1_b);
  put_tensor(os, "conv2_w", params.conv2_w);
  put_tensor(os, "conv2_b", params.conv2_b);
  put_tensor(os, "fc6_w", params.fc6_w);
  put_tensor(os, "fc6_b", params.fc6_b);
  put_tensor(os, "fc7_w", params.fc7_w);
  put_tensor(os, "fc7_b", params.fc7_b);
  if (!os) throw IoError(msg("write failed: ", path));
}

NetParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(msg("cannot open checkpoint ", path));
  Reader r(is);
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, "DBOX", 4) != 0)
    throw DataError(msg("bad checkpoint magic in ", path));
  const uint32_t version = r.u32();
  if (version != kVersionTag)
    throw DataError(msg("unsupported checkpoint version ", version));
  const uint64_t hash = r.u64();
  const uint32_t profile_tag = r.u32();
  const uint32_t input_side = r.u32();
  NetParams p;
  for (int c = 0; c < 3; ++c) p.channel_mean[static_cast<size_t>(c)] = r.f32();
  const uint32_t roi_grid = r.u32();
  p.train_stage = r.u32();
  p.iteration = r.u64();
  const uint32_t cfg_len = r.u32();
  if (cfg_len > 4096) throw DataError("checkpoint config blob too long");
  std::string cfg(cfg_len, '\0');
  r.read(cfg.data(), cfg_len);
  p.config = NetConfig::from_canonical(cfg);
  if (p.config.hash() != hash)
    throw DataError(msg("checkpoint config hash mismatch in ", path));
  if ((p.config.profile == Profile::full ? 0u : 1u) != profile_tag ||
      static_cast<uint32_t>(p.config.input_side) != input_side ||
      static_cast<uint32_t>(p.config.roi_grid) != roi_grid)
    throw DataError(msg("checkpoint header disagrees with config in ", path));
  const uint32_t n_tensors = r.u32();
  if (n_tensors != 8) throw DataError("checkpoint must carry 8 tensors");
  p.conv1_w = get_tensor(r, "conv1_w");
  p.conv1_b = get_tensor(r, "conv1_b");
  p.conv2_w = get_tensor(r, "conv2_w");
  p.conv2_b = get_tensor(r, "conv2_b");
  p.fc6_w = get_tensor(r, "fc6_w");
  p.fc6_b = get_tensor(r, "fc6_b");
  p.fc7_w = get_tensor(r, "fc7_w");
  p.fc7_b = get_tensor(r, "fc7_b");
  return p;
}

}  // namespace boxrank
