#include "enh/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "enh/png_io.hpp"

namespace enh {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": bad number '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config key " + key + ": bad number '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  size_t pos = 0;
  long long out;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": bad integer '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config key " + key + ": bad integer '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  size_t pos = 0;
  unsigned long long out;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": bad integer '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config key " + key + ": bad integer '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key " + key + ": bad boolean '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
  if (out.empty())
    throw std::invalid_argument("config key " + key + ": empty list");
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

EngineConfig parse_config(const std::string& text) {
  EngineConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));

    if (key == "schedule.family") cfg.schedule_family = val;
    else if (key == "schedule.steps") cfg.schedule_steps = static_cast<int>(parse_int(key, val));
    else if (key == "schedule.beta_start") cfg.beta_start = parse_real(key, val);
    else if (key == "schedule.beta_end") cfg.beta_end = parse_real(key, val);
    else if (key == "schedule.respace") cfg.respace = static_cast<int>(parse_int(key, val));
    else if (key == "predictor.kind") cfg.predictor_kind = val;
    else if (key == "predictor.mean") cfg.predictor_mean = parse_real(key, val);
    else if (key == "predictor.mean_image") cfg.predictor_mean_image = val;
    else if (key == "predictor.sigma") cfg.predictor_sigma = parse_real(key, val);
    else if (key == "predictor.mixture_means") cfg.mixture_means = parse_list(key, val);
    else if (key == "predictor.mixture_weights") cfg.mixture_weights = parse_list(key, val);
    else if (key == "predictor.weights") cfg.denoiser_weights = val;
    else if (key == "guidance.s") cfg.sample.guidance.scale = parse_real(key, val);
    else if (key == "guidance.lambda_exp") cfg.sample.guidance.lambda_exp = parse_real(key, val);
    else if (key == "guidance.lambda_smooth") cfg.sample.guidance.lambda_smooth = parse_real(key, val);
    else if (key == "guidance.E") cfg.sample.guidance.exposure_target = parse_real(key, val);
    else if (key == "guidance.region") cfg.sample.guidance.region = static_cast<int>(parse_int(key, val));
    else if (key == "guidance.lr_f") cfg.sample.guidance.lr_f = parse_real(key, val);
    else if (key == "guidance.lr_m") cfg.sample.guidance.lr_m = parse_real(key, val);
    else if (key == "guidance.f_min") cfg.sample.guidance.f_min = parse_real(key, val);
    else if (key == "guidance.f_max") cfg.sample.guidance.f_max = parse_real(key, val);
    else if (key == "guidance.random_init") cfg.sample.random_init = parse_bool(key, val);
    else if (key == "guidance.update_params") cfg.sample.update_params = parse_bool(key, val);
    else if (key == "guidance.clamp_x0") cfg.sample.clamp_x0 = parse_bool(key, val);
    else if (key == "guidance.fd_gradient") cfg.sample.fd_gradient = parse_bool(key, val);
    else if (key == "guidance.fd_step") cfg.sample.fd_step = parse_real(key, val);
    else if (key == "patch.p") cfg.sample.patch = static_cast<int>(parse_int(key, val));
    else if (key == "patch.r") cfg.sample.stride = static_cast<int>(parse_int(key, val));
    else if (key == "run.seed") cfg.seed = parse_u64(key, val);
    else if (key == "run.workers") cfg.sample.workers = static_cast<int>(parse_int(key, val));
    else if (key == "run.trace") cfg.trace_path = val;
    else if (key == "run.output") cfg.output_path = val;
    else throw std::invalid_argument("unknown config key: " + key);
  }
  validate_config(cfg);
  return cfg;
}

EngineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const EngineConfig& cfg) {
  std::ostringstream out;
  out << "schedule.family = " << cfg.schedule_family << "\n";
  out << "schedule.steps = " << cfg.schedule_steps << "\n";
  out << "schedule.beta_start = " << fmt(cfg.beta_start) << "\n";
  out << "schedule.beta_end = " << fmt(cfg.beta_end) << "\n";
  out << "schedule.respace = " << cfg.respace << "\n";
  out << "predictor.kind = " << cfg.predictor_kind << "\n";
  out << "predictor.mean = " << fmt(cfg.predictor_mean) << "\n";
  out << "predictor.mean_image = " << cfg.predictor_mean_image << "\n";
  out << "predictor.sigma = " << fmt(cfg.predictor_sigma) << "\n";
  out << "predictor.mixture_means = " << fmt_list(cfg.mixture_means) << "\n";
  out << "predictor.mixture_weights = " << fmt_list(cfg.mixture_weights) << "\n";
  out << "predictor.weights = " << cfg.denoiser_weights << "\n";
  const GuidanceConfig& g = cfg.sample.guidance;
  out << "guidance.s = " << fmt(g.scale) << "\n";
  out << "guidance.lambda_exp = " << fmt(g.lambda_exp) << "\n";
  out << "guidance.lambda_smooth = " << fmt(g.lambda_smooth) << "\n";
  out << "guidance.E = " << fmt(g.exposure_target) << "\n";
  out << "guidance.region = " << g.region << "\n";
  out << "guidance.lr_f = " << fmt(g.lr_f) << "\n";
  out << "guidance.lr_m = " << fmt(g.lr_m) << "\n";
  out << "guidance.f_min = " << fmt(g.f_min) << "\n";
  out << "guidance.f_max = " << fmt(g.f_max) << "\n";
  out << "guidance.random_init = " << (cfg.sample.random_init ? "true" : "false") << "\n";
  out << "guidance.update_params = " << (cfg.sample.update_params ? "true" : "false") << "\n";
  out << "guidance.clamp_x0 = " << (cfg.sample.clamp_x0 ? "true" : "false") << "\n";
  out << "guidance.fd_gradient = " << (cfg.sample.fd_gradient ? "true" : "false") << "\n";
  out << "guidance.fd_step = " << fmt(cfg.sample.fd_step) << "\n";
  out << "patch.p = " << cfg.sample.patch << "\n";
  out << "patch.r = " << cfg.sample.stride << "\n";
  out << "run.seed = " << cfg.seed << "\n";
  out << "run.workers = " << cfg.sample.workers << "\n";
  out << "run.trace = " << cfg.trace_path << "\n";
  out << "run.output = " << cfg.output_path << "\n";
  return out.str();
}

void validate_config(const EngineConfig& cfg) {
  if (cfg.schedule_family != "linear")
    throw std::invalid_argument("schedule.family must be 'linear'");
  if (cfg.schedule_steps < 1)
    throw std::invalid_argument("schedule.steps must be >= 1");
  if (!(cfg.beta_start > 0.0 && cfg.beta_start <= cfg.beta_end && cfg.beta_end < 1.0))
    throw std::invalid_argument("schedule beta range invalid");
  if (cfg.respace < 0 || cfg.respace > cfg.schedule_steps)
    throw std::invalid_argument("schedule.respace out of range");
  if (cfg.predictor_kind != "gaussian" && cfg.predictor_kind != "mixture" &&
      cfg.predictor_kind != "denoiser")
    throw std::invalid_argument("predictor.kind must be gaussian, mixture, or denoiser");
  if (!(cfg.predictor_sigma >= 0.0))
    throw std::invalid_argument("predictor.sigma must be >= 0");
  if (cfg.mixture_means.empty() ||
      cfg.mixture_means.size() != cfg.mixture_weights.size())
    throw std::invalid_argument("mixture means and weights must match and be nonempty");
  if (cfg.predictor_kind == "denoiser" && cfg.denoiser_weights.empty())
    throw std::invalid_argument("predictor.weights path required for the denoiser");
  const GuidanceConfig& g = cfg.sample.guidance;
  if (!(g.scale >= 0.0)) throw std::invalid_argument("guidance.s must be >= 0");
  if (!(g.lambda_exp >= 0.0 && g.lambda_smooth >= 0.0))
    throw std::invalid_argument("guidance loss weights must be >= 0");
  if (!(g.exposure_target > 0.0 && g.exposure_target < 1.0))
    throw std::invalid_argument("guidance.E must lie in (0, 1)");
  if (g.region < 1) throw std::invalid_argument("guidance.region must be >= 1");
  if (!(g.lr_f > 0.0 && g.lr_m > 0.0))
    throw std::invalid_argument("learning rates must be > 0");
  if (!(g.f_min > 0.0 && g.f_min <= g.f_max))
    throw std::invalid_argument("gain bounds invalid");
  if (!(cfg.sample.fd_step > 0.0))
    throw std::invalid_argument("guidance.fd_step must be > 0");
  if (cfg.sample.patch < 1) throw std::invalid_argument("patch.p must be >= 1");
  if (cfg.sample.stride < 1 || cfg.sample.stride > cfg.sample.patch)
    throw std::invalid_argument("patch.r must lie in [1, patch.p]");
  if (cfg.sample.workers < 1) throw std::invalid_argument("run.workers must be >= 1");
}

NoiseSchedule make_schedule(const EngineConfig& cfg) {
  NoiseSchedule s =
      NoiseSchedule::linear(cfg.schedule_steps, cfg.beta_start, cfg.beta_end);
  if (cfg.respace > 0 && cfg.respace < cfg.schedule_steps)
    return s.respaced(cfg.respace);
  return s;
}

std::unique_ptr<NoisePredictor> make_predictor(const EngineConfig& cfg) {
  if (cfg.predictor_kind == "gaussian") {
    if (!cfg.predictor_mean_image.empty())
      return std::make_unique<GaussianPredictor>(
          load_image(cfg.predictor_mean_image), cfg.predictor_sigma);
    return std::make_unique<GaussianPredictor>(cfg.predictor_mean,
                                               cfg.predictor_sigma);
  }
  if (cfg.predictor_kind == "mixture")
    return std::make_unique<MixturePredictor>(cfg.mixture_means,
                                              cfg.mixture_weights,
                                              cfg.predictor_sigma);
  return std::make_unique<ConvDenoiser>(ConvDenoiser::load(cfg.denoiser_weights));
}

}  // namespace enh
