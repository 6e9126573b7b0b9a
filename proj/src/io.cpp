#include "bias/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace bias {

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

[[noreturn]] void fail(const fs::path& p, const std::string& what) { throw IoError(p.string() + ": " + what); }

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(p, "cannot open for reading");
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(p, "cannot open for writing");
  return out;
}

// Next header token of a netpbm file, skipping whitespace and comments.
std::string pnm_token(std::istream& in, const fs::path& p) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) fail(p, "truncated header");
  return tok;
}

int pnm_int(std::istream& in, const fs::path& p) {
  const std::string t = pnm_token(in, p);
  try {
    std::size_t used = 0;
    const int v = std::stoi(t, &used);
    if (used == t.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  fail(p, "bad header field '" + t + "'");
}

struct Raster {
  int width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> bytes;
};

Raster read_pnm(const fs::path& p) {
  auto in = open_in(p);
  const std::string magic = pnm_token(in, p);
  Raster r;
  if (magic == "P6")
    r.channels = 3;
  else if (magic == "P5")
    r.channels = 1;
  else
    fail(p, "unsupported netpbm type '" + magic + "'");
  r.width = pnm_int(in, p);
  r.height = pnm_int(in, p);
  if (pnm_int(in, p) != 255) fail(p, "only maxval 255 is supported");
  r.bytes.resize(static_cast<std::size_t>(r.width) * r.height * r.channels);
  in.read(reinterpret_cast<char*>(r.bytes.data()), static_cast<std::streamsize>(r.bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(r.bytes.size())) fail(p, "truncated pixel data");
  return r;
}

Raster read_png(const fs::path& p, bool color) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, p.c_str())) fail(p, std::string("PNG decode failed: ") + img.message);
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Raster r;
  r.width = static_cast<int>(img.width);
  r.height = static_cast<int>(img.height);
  r.channels = color ? 3 : 1;
  r.bytes.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, r.bytes.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    fail(p, "PNG decode failed: " + msg);
  }
  return r;
}

GrayMap read_pfm(const fs::path& p) {
  auto in = open_in(p);
  if (pnm_token(in, p) != "Pf") fail(p, "only grayscale PFM (Pf) is supported");
  const int w = pnm_int(in, p), h = pnm_int(in, p);
  const std::string scale_tok = pnm_token(in, p);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    fail(p, "bad PFM scale");
  }
  const bool little = scale < 0;
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (in.gcount() != static_cast<std::streamsize>(raw.size() * 4)) fail(p, "truncated pixel data");
  const bool swap = little != (std::endian::native == std::endian::little);
  GrayMap m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint32_t v = raw[static_cast<std::size_t>(h - 1 - y) * w + x];
      if (swap) v = __builtin_bswap32(v);
      m(y, x) = std::bit_cast<float>(v);
    }
  return m;
}

Raster read_raster(const fs::path& p, bool color) {
  const std::string ext = lower_ext(p);
  if (ext == ".png") return read_png(p, color);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return read_pnm(p);
  fail(p, "unsupported image format");
}

std::vector<std::uint8_t> quantize(const GrayMap& m) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(m.data()[i], 0.0, 1.0)));
  return bytes;
}

void write_raster(const fs::path& p, const std::uint8_t* data, int w, int h, int channels) {
  const std::string ext = lower_ext(p);
  if (ext == ".png") {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(w);
    img.height = static_cast<png_uint_32>(h);
    img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&img, p.c_str(), 0, data, 0, nullptr))
      fail(p, std::string("PNG encode failed: ") + img.message);
    return;
  }
  if ((ext == ".pgm" && channels == 1) || (ext == ".ppm" && channels == 3)) {
    auto out = open_out(p);
    out << (channels == 3 ? "P6" : "P5") << '\n' << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(w) * h * channels);
    if (!out) fail(p, "write failed");
    return;
  }
  fail(p, "unsupported output format");
}

bool is_image(const fs::path& p) {
  const std::string e = lower_ext(p);
  return e == ".png" || e == ".ppm" || e == ".pgm" || e == ".pfm";
}

}  // namespace

FrameRGB read_rgb_image(const fs::path& path) {
  const Raster r = read_raster(path, true);
  if (r.channels == 3) return FrameRGB::from_rgb24(r.bytes.data(), r.width, r.height);
  FrameRGB f(r.width, r.height);
  for (int i = 0; i < r.width * r.height; ++i) f.r.data()[i] = f.g.data()[i] = f.b.data()[i] = r.bytes[i];
  return f;
}

GrayMap read_gray_image(const fs::path& path) {
  if (lower_ext(path) == ".pfm") return read_pfm(path);
  const Raster r = read_raster(path, false);
  GrayMap m(r.height, r.width);
  if (r.channels == 1) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.bytes[i] / 255.0;
  } else {
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = (0.299 * r.bytes[3 * i] + 0.587 * r.bytes[3 * i + 1] + 0.114 * r.bytes[3 * i + 2]) / 255.0;
  }
  return m;
}

void write_gray8(const fs::path& path, const GrayMap& map) {
  const auto bytes = quantize(map);
  write_raster(path, bytes.data(), static_cast<int>(map.cols()), static_cast<int>(map.rows()), 1);
}

void write_pfm(const fs::path& path, const GrayMap& m) {
  auto out = open_out(path);
  const int w = static_cast<int>(m.cols()), h = static_cast<int>(m.rows());
  out << "Pf\n" << w << ' ' << h << "\n-1.0\n";
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint32_t v = std::bit_cast<std::uint32_t>(static_cast<float>(m(y, x)));
      if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
      raw[static_cast<std::size_t>(h - 1 - y) * w + x] = v;
    }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!out) fail(path, "write failed");
}

void write_ppm(const fs::path& path, const FrameRGB& f) {
  const int w = f.width(), h = f.height();
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * 3);
  for (int i = 0; i < w * h; ++i) {
    bytes[3 * i] = static_cast<std::uint8_t>(std::lround(std::clamp(f.r.data()[i], 0.0, 255.0)));
    bytes[3 * i + 1] = static_cast<std::uint8_t>(std::lround(std::clamp(f.g.data()[i], 0.0, 255.0)));
    bytes[3 * i + 2] = static_cast<std::uint8_t>(std::lround(std::clamp(f.b.data()[i], 0.0, 255.0)));
  }
  write_raster(path, bytes.data(), w, h, 3);
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(dir, "not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

FrameSource open_frames(const std::string& path, std::optional<RawDims> dims) {
  std::error_code ec;
  if (path != "-" && fs::is_directory(path, ec)) {
    auto files = std::make_shared<std::vector<fs::path>>(list_images(path));
    if (files->empty()) fail(path, "no image frames found");
    auto next = std::make_shared<std::size_t>(0);
    auto first = std::make_shared<std::optional<Extent>>();
    return [files, next, first]() -> std::optional<FrameRGB> {
      if (*next >= files->size()) return std::nullopt;
      const fs::path& p = (*files)[(*next)++];
      FrameRGB f = read_rgb_image(p);
      if (!*first)
        *first = f.extent();
      else if (f.extent() != **first)
        fail(p, "size " + std::to_string(f.width()) + "x" + std::to_string(f.height()) + " differs from " +
                    std::to_string((*first)->width) + "x" + std::to_string((*first)->height));
      return f;
    };
  }
  if (!dims || dims->width <= 0 || dims->height <= 0)
    fail(path, "raw RGB24 input needs --width and --height");
  std::shared_ptr<std::istream> in;
  if (path == "-") {
    in = std::shared_ptr<std::istream>(&std::cin, [](std::istream*) {});
  } else {
    auto file = std::make_shared<std::ifstream>(path, std::ios::binary);
    if (!*file) fail(path, "cannot open for reading");
    in = file;
  }
  const RawDims d = *dims;
  return [in, d, path]() -> std::optional<FrameRGB> {
    const std::size_t n = static_cast<std::size_t>(d.width) * d.height * 3;
    std::vector<std::uint8_t> buf(n);
    in->read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in->gcount());
    if (got == 0) return std::nullopt;
    if (got != n) fail(path, "trailing partial frame (" + std::to_string(got) + " of " + std::to_string(n) + " bytes)");
    return FrameRGB::from_rgb24(buf.data(), d.width, d.height);
  };
}

FrameRGB synthetic_frame(int width, int height, int index) {
  if (width <= 0 || height <= 0) throw DimensionError("synthetic frame needs positive dimensions");
  FrameRGB f(width, height);
  // Static texture: hash of the pixel position, so every frame shares it.
  auto texture = [](int x, int y) {
    std::uint32_t h = static_cast<std::uint32_t>(x) * 73856093u ^ static_cast<std::uint32_t>(y) * 19349663u;
    h ^= h >> 13;
    h *= 0x5bd1e995u;
    h ^= h >> 15;
    return static_cast<double>(h % 17) - 8.0;
  };
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double base = std::round(90.0 + 60.0 * x / width + 30.0 * y / height) + texture(x, y);
      f.r(y, x) = base;
      f.g(y, x) = base + 5.0;
      f.b(y, x) = base - 5.0;
    }
  struct Disc {
    double x0, y0, vx, vy, radius, r, g, b;
  };
  const Disc discs[] = {{0.2, 0.3, 2.0, 0.5, 0.04, 220, 40, 40},
                        {0.7, 0.6, -1.5, 1.0, 0.05, 40, 60, 220},
                        {0.5, 0.8, 1.0, -1.0, 0.03, 230, 220, 40}};
  for (const auto& d : discs) {
    const double cx = std::fmod(d.x0 * width + d.vx * index + 4.0 * width, static_cast<double>(width));
    const double cy = std::fmod(d.y0 * height + d.vy * index + 4.0 * height, static_cast<double>(height));
    const double rad = d.radius * width;
    for (int y = std::max(0, static_cast<int>(cy - rad)); y <= std::min(height - 1, static_cast<int>(cy + rad)); ++y)
      for (int x = std::max(0, static_cast<int>(cx - rad)); x <= std::min(width - 1, static_cast<int>(cx + rad)); ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= rad * rad) {
          f.r(y, x) = d.r;
          f.g(y, x) = d.g;
          f.b(y, x) = d.b;
        }
  }
  // A dark vertical bar sliding right.
  const int bar = (width / 10 + 3 * index) % width;
  for (int y = height / 4; y < 3 * height / 4; ++y)
    for (int x = bar; x < std::min(width, bar + std::max(1, width / 80)); ++x) f.r(y, x) = f.g(y, x) = f.b(y, x) = 20.0;
  return f;
}

std::vector<FrameRGB> read_frames(const std::string& path, std::optional<RawDims> dims) {
  const FrameSource src = open_frames(path, dims);
  std::vector<FrameRGB> out;
  while (auto f = src()) out.push_back(std::move(*f));
  return out;
}

EmitFlags parse_emit(const std::string& list) {
  EmitFlags f;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (item == "all")
      f = {true, true, true, true, true, true};
    else if (item == "saliency")
      f.saliency = true;
    else if (item == "static")
      f.stat = true;
    else if (item == "dynamic")
      f.dynamic = true;
    else if (item == "fixation")
      f.fixation = true;
    else if (item == "foci")
      f.foci = true;
    else if (item == "timing")
      f.timing = true;
    else
      throw ConfigError("unknown emit kind '" + item + "'");
  }
  return f;
}

OutputWriter::OutputWriter(const fs::path& out_dir, EmitFlags flags, bool float_out)
    : dir_(out_dir), flags_(flags), float_out_(float_out) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) fail(dir_, "cannot create directory: " + ec.message());
  const std::pair<bool, const char*> kinds[] = {
      {flags.saliency, "saliency"}, {flags.stat, "static"}, {flags.dynamic, "dynamic"}, {flags.fixation, "fixation"}};
  for (const auto& [on, name] : kinds) {
    if (!on) continue;
    fs::create_directories(dir_ / name, ec);
    if (ec) fail(dir_ / name, "cannot create directory: " + ec.message());
  }
  if (flags.foci) {
    foci_ = open_out(dir_ / "foci.csv");
    foci_ << std::setprecision(17) << "frame,mu_x,mu_y,sigma_x,sigma_y,amplitude\n";
  }
  if (flags.timing) {
    timing_ = open_out(dir_ / "timing.csv");
    timing_ << std::setprecision(9) << "frame,channels,features,motion,fusion,fixation,total\n";
  }
}

OutputWriter::~OutputWriter() {
  try {
    close();
  } catch (...) {
  }
}

void OutputWriter::write_map(const std::string& kind, long frame, const GrayMap& m) {
  std::ostringstream name;
  name << std::setw(6) << std::setfill('0') << frame + 1 << (float_out_ ? ".pfm" : ".png");
  const fs::path p = dir_ / kind / name.str();
  if (float_out_) {
    write_pfm(p, m);
    return;
  }
  const double peak = m.size() ? m.maxCoeff() : 0.0;
  write_gray8(p, peak > 0.0 ? GrayMap(m / peak) : m);
}

void OutputWriter::write(const FrameResult& r) {
  if (flags_.saliency) write_map("saliency", r.frame_index, r.master_map);
  if (flags_.stat) write_map("static", r.frame_index, r.static_map);
  if (flags_.dynamic) write_map("dynamic", r.frame_index, r.dynamic_map);
  if (flags_.fixation) write_map("fixation", r.frame_index, r.fixation_map);
  if (flags_.foci)
    for (const auto& f : r.foci)
      foci_ << r.frame_index + 1 << ',' << f.mu_x << ',' << f.mu_y << ',' << f.sigma_x << ',' << f.sigma_y << ','
            << f.amplitude << '\n';
  if (flags_.timing) {
    const auto& t = r.timings;
    timing_ << r.frame_index + 1 << ',' << t.channels << ',' << t.features << ',' << t.motion << ',' << t.fusion << ','
            << t.fixation << ',' << t.total << '\n';
  }
}

void OutputWriter::close() {
  if (foci_.is_open()) {
    foci_.close();
    if (!foci_) fail(dir_ / "foci.csv", "write failed");
  }
  if (timing_.is_open()) {
    timing_.close();
    if (!timing_) fail(dir_ / "timing.csv", "write failed");
  }
}

void write_outputs(const std::vector<FrameResult>& results, const fs::path& out_dir, EmitFlags flags,
                   bool float_out) {
  OutputWriter w(out_dir, flags, float_out);
  for (const auto& r : results) w.write(r);
  w.close();
}

FixationTable read_fixation_list(const fs::path& path) {
  auto in = open_in(path);
  FixationTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long frame;
    double x, y;
    if (!(ls >> frame)) continue;
    if (!(ls >> x >> y) || frame < 1)
      fail(path, "line " + std::to_string(lineno) + ": expected 'frame x y' with frame >= 1");
    t[static_cast<int>(frame - 1)].push_back({static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))});
  }
  return t;
}

std::vector<FixationPoint> fixations_from_mask(const fs::path& path) {
  const GrayMap m = read_gray_image(path);
  std::vector<FixationPoint> pts;
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x)
      if (m(y, x) > 0.0) pts.push_back({x, y});
  return pts;
}

VideoGroundTruth load_video_ground_truth(const fs::path& dir) {
  VideoGroundTruth gt;
  gt.name = dir.filename().string();
  std::error_code ec;
  if (fs::is_regular_file(dir / "fixations.txt", ec)) {
    gt.fixations = read_fixation_list(dir / "fixations.txt");
  } else if (fs::is_directory(dir / "fixation", ec)) {
    const auto files = list_images(dir / "fixation");
    for (std::size_t i = 0; i < files.size(); ++i) {
      auto pts = fixations_from_mask(files[i]);
      if (!pts.empty()) gt.fixations[static_cast<int>(i)] = std::move(pts);
    }
  } else {
    fail(dir, "no fixations.txt or fixation/ directory");
  }
  if (fs::is_directory(dir / "maps", ec)) {
    const auto files = list_images(dir / "maps");
    for (std::size_t i = 0; i < files.size(); ++i) gt.density_maps[static_cast<int>(i)] = files[i];
  }
  return gt;
}

std::vector<fs::path> list_videos(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) fail(root, "not a directory");
  std::vector<fs::path> out;
  bool has_images = false;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) out.push_back(e.path());
    if (e.is_regular_file() && is_image(e.path())) has_images = true;
  }
  if (has_images) return {root};
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bias
