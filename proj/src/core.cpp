#include "bias/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace bias {

FrameRGB FrameRGB::from_rgb24(const std::uint8_t* data, int width, int height) {
  FrameRGB f(width, height);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = data + static_cast<std::size_t>(y) * width * 3;
    for (int x = 0; x < width; ++x) {
      f.r(y, x) = row[3 * x];
      f.g(y, x) = row[3 * x + 1];
      f.b(y, x) = row[3 * x + 2];
    }
  }
  return f;
}

FrameRGB FrameRGB::uniform(int width, int height, double r, double g, double b) {
  FrameRGB f;
  f.r = GrayMap::Constant(height, width, r);
  f.g = GrayMap::Constant(height, width, g);
  f.b = GrayMap::Constant(height, width, b);
  return f;
}

void validate_frame(const FrameRGB& frame, int levels) {
  const Extent e = frame.extent();
  if (extent_of(frame.g) != e || extent_of(frame.b) != e)
    throw DimensionError("frame planes differ in size");
  const long need = 1L << levels;
  if (e.width < need || e.height < need)
    throw DimensionError("frame " + std::to_string(e.width) + "x" + std::to_string(e.height) +
                         " too small for " + std::to_string(levels) + " pyramid levels");
  for (const GrayMap* p : {&frame.r, &frame.g, &frame.b}) {
    if (!p->isFinite().all() || (p->minCoeff() < 0.0) || (p->maxCoeff() > 255.0))
      throw DimensionError("frame values must be finite and within [0, 255]");
  }
}

int PipelineConfig::accumulation_scale() const {
  return *std::min_element(center_scales.begin(), center_scales.end());
}

int PipelineConfig::deepest_scale() const {
  return *std::max_element(center_scales.begin(), center_scales.end()) +
         *std::max_element(deltas.begin(), deltas.end());
}

int PipelineConfig::max_tau() const { return *std::max_element(tau_set.begin(), tau_set.end()); }

std::vector<int> PipelineConfig::used_scales() const {
  std::set<int> s;
  for (int c : center_scales) {
    s.insert(c);
    for (int d : deltas) s.insert(c + d);
  }
  return {s.begin(), s.end()};
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

PipelineConfig validate_config(PipelineConfig cfg) {
  require(cfg.pyramid_levels >= 1 && cfg.pyramid_levels <= 16, "pyramid_levels out of range");
  require(!cfg.center_scales.empty(), "center_scales empty");
  require(!cfg.deltas.empty(), "deltas empty");
  for (int c : cfg.center_scales) require(c >= 0, "center scale negative");
  for (int d : cfg.deltas) require(d >= 1, "delta must be positive");
  for (int c : cfg.center_scales)
    for (int d : cfg.deltas) require(c + d <= cfg.pyramid_levels, "c+δ exceeds pyramid depth");
  require(!cfg.tau_set.empty(), "tau_set empty");
  for (int t : cfg.tau_set) require(t >= 1, "tau must be positive");
  require(std::isfinite(cfg.gamma) && cfg.gamma > 0.0 && cfg.gamma <= 1.0, "gamma out of range");
  const auto& w = cfg.fusion_weights;
  require(std::isfinite(w.joint) && std::isfinite(w.stat) && std::isfinite(w.dynamic),
          "fusion weights must be finite");
  require(w.joint >= 0.0 && w.stat >= 0.0 && w.dynamic >= 0.0, "fusion weights negative");
  require(w.joint + w.stat + w.dynamic > 0.0, "fusion weights all zero");
  require(std::isfinite(cfg.ewma_alpha) && cfg.ewma_alpha > 0.0 && cfg.ewma_alpha <= 1.0,
          "ewma_alpha out of range");
  require(cfg.threads >= 1, "threads must be positive");
  const auto& g = cfg.gwta;
  require(g.max_steps >= 1, "gwta.max_steps must be >= 1");
  require(g.residual_stop > 0.0 && g.residual_stop < 1.0, "gwta.residual_stop out of range");
  require(g.max_foci >= 1, "gwta.max_foci must be >= 1");
  require(g.step_mu >= 0.0 && g.step_sigma >= 0.0, "gwta step lengths negative");
  require(g.lambda_coeff >= 0.0, "gwta.lambda_coeff negative");
  require(g.sigma_min > 0.0, "gwta.sigma_min must be positive");
  require(g.sigma_init_frac > 0.0 && g.sigma_max_frac > 0.0, "gwta sigma fractions must be positive");
  require(g.sigma_init_frac <= g.sigma_max_frac, "gwta.sigma_init_frac exceeds sigma_max_frac");
  std::sort(cfg.center_scales.begin(), cfg.center_scales.end());
  cfg.center_scales.erase(std::unique(cfg.center_scales.begin(), cfg.center_scales.end()),
                          cfg.center_scales.end());
  std::sort(cfg.deltas.begin(), cfg.deltas.end());
  cfg.deltas.erase(std::unique(cfg.deltas.begin(), cfg.deltas.end()), cfg.deltas.end());
  std::sort(cfg.tau_set.begin(), cfg.tau_set.end());
  cfg.tau_set.erase(std::unique(cfg.tau_set.begin(), cfg.tau_set.end()), cfg.tau_set.end());
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("bad number for " + key + ": '" + v + "'");
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& s : split_list(v)) out.push_back(parse_int(key, s));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  auto& g = cfg.gwta;
  if (key == "center_scales") cfg.center_scales = parse_int_list(key, v);
  else if (key == "deltas") cfg.deltas = parse_int_list(key, v);
  else if (key == "tau_set") cfg.tau_set = parse_int_list(key, v);
  else if (key == "gamma") cfg.gamma = parse_double(key, v);
  else if (key == "fusion_weights") {
    const auto parts = split_list(v);
    if (parts.size() != 3) throw ConfigError("fusion_weights needs three values a,b,c");
    cfg.fusion_weights = {parse_double(key, parts[0]), parse_double(key, parts[1]),
                          parse_double(key, parts[2])};
  } else if (key == "ewma_alpha") cfg.ewma_alpha = parse_double(key, v);
  else if (key == "enable_gwta") cfg.enable_gwta = parse_bool(key, v);
  else if (key == "enable_ewma") cfg.enable_ewma = parse_bool(key, v);
  else if (key == "enable_center_prior") cfg.enable_center_prior = parse_bool(key, v);
  else if (key == "threads") cfg.threads = parse_int(key, v);
  else if (key == "pyramid_levels") cfg.pyramid_levels = parse_int(key, v);
  else if (key == "gwta.step_mu") g.step_mu = parse_double(key, v);
  else if (key == "gwta.step_sigma") g.step_sigma = parse_double(key, v);
  else if (key == "gwta.lambda_coeff") g.lambda_coeff = parse_double(key, v);
  else if (key == "gwta.max_steps") g.max_steps = parse_int(key, v);
  else if (key == "gwta.residual_stop") g.residual_stop = parse_double(key, v);
  else if (key == "gwta.max_foci") g.max_foci = parse_int(key, v);
  else if (key == "gwta.sigma_init_frac") g.sigma_init_frac = parse_double(key, v);
  else if (key == "gwta.sigma_min") g.sigma_min = parse_double(key, v);
  else if (key == "gwta.sigma_max_frac") g.sigma_max_frac = parse_double(key, v);
  else throw ConfigError("unknown config key: " + key);
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return validate_config(cfg);
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const PipelineConfig& cfg) {
  const auto prec = out.precision(std::numeric_limits<double>::max_digits10);
  const auto& g = cfg.gwta;
  const auto& w = cfg.fusion_weights;
  out << "center_scales = " << join(cfg.center_scales) << '\n'
      << "deltas = " << join(cfg.deltas) << '\n'
      << "tau_set = " << join(cfg.tau_set) << '\n'
      << "gamma = " << cfg.gamma << '\n'
      << "fusion_weights = " << join(std::vector<double>{w.joint, w.stat, w.dynamic}) << '\n'
      << "ewma_alpha = " << cfg.ewma_alpha << '\n'
      << "enable_gwta = " << (cfg.enable_gwta ? "true" : "false") << '\n'
      << "enable_ewma = " << (cfg.enable_ewma ? "true" : "false") << '\n'
      << "enable_center_prior = " << (cfg.enable_center_prior ? "true" : "false") << '\n'
      << "threads = " << cfg.threads << '\n'
      << "pyramid_levels = " << cfg.pyramid_levels << '\n'
      << "gwta.step_mu = " << g.step_mu << '\n'
      << "gwta.step_sigma = " << g.step_sigma << '\n'
      << "gwta.lambda_coeff = " << g.lambda_coeff << '\n'
      << "gwta.max_steps = " << g.max_steps << '\n'
      << "gwta.residual_stop = " << g.residual_stop << '\n'
      << "gwta.max_foci = " << g.max_foci << '\n'
      << "gwta.sigma_init_frac = " << g.sigma_init_frac << '\n'
      << "gwta.sigma_min = " << g.sigma_min << '\n'
      << "gwta.sigma_max_frac = " << g.sigma_max_frac << '\n';
  out.precision(prec);
}

std::string to_string(const PipelineConfig& cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  return os.str();
}

}  // namespace bias
