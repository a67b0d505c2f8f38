#include "tvinr/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "tvinr/errors.hpp"

namespace tvinr {

namespace {
std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
  double d = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("key '" + key + "': bad number '" + v + "'");
  return d;
}

long to_long(const std::string& v, const std::string& key) {
  long d = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("key '" + key + "': bad integer '" + v + "'");
  return d;
}
}  // namespace

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(to_double(tok, "list"));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_double_list(s)) out.push_back(int(v));
  return out;
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "lrelu_01" || s == "lrelu01") return Activation::LeakyRelu01;
  if (s == "gelu") return Activation::Gelu;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu01: return "lrelu_01";
    case Activation::Gelu: return "gelu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

const char* to_string(TaskKind t) {
  return t == TaskKind::Imputation ? "imputation" : "forecasting";
}

TaskKind task_from_string(const std::string& s) {
  if (s == "imputation") return TaskKind::Imputation;
  if (s == "forecasting") return TaskKind::Forecasting;
  throw ConfigError("unknown task '" + s + "'");
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "task") {
    task = task_from_string(value);
    task_explicit = true;
    return;
  }
  if (key == "seed") {
    seed = std::uint64_t(to_long(value, key));
    seed_explicit = true;
    return;
  }
  if (key == "dim_z") dim_z = int(to_long(value, key));
  else if (key == "d_model") d_model = int(to_long(value, key));
  else if (key == "heads") heads = int(to_long(value, key));
  else if (key == "enc_layers") enc_layers = int(to_long(value, key));
  else if (key == "hyper_layers") hyper_layers = parse_int_list(value);
  else if (key == "gen_layers") gen_layers = parse_int_list(value);
  else if (key == "gen_activation") gen_activation = activation_from_string(value);
  else if (key == "hyper_activation") hyper_activation = activation_from_string(value);
  else if (key == "fourier_m") fourier_m = int(to_long(value, key));
  else if (key == "fourier_sigma") fourier_sigma = to_double(value, key);
  else if (key == "lr") lr = to_double(value, key);
  else if (key == "batch_size") batch_size = int(to_long(value, key));
  else if (key == "epochs") epochs = int(to_long(value, key));
  else if (key == "beta") beta = to_double(value, key);
  else if (key == "beta_warmup") beta_warmup = int(to_long(value, key));
  else if (key == "tau_set") tau_set = parse_double_list(value);
  else if (key == "horizons") horizons = parse_int_list(value);
  else if (key == "history") history = int(to_long(value, key));
  else if (key == "dim_c") dim_c = int(to_long(value, key));
  else if (key == "cov_layers") cov_layers = parse_int_list(value);
  else if (key == "causal") causal = (value == "true" || value == "1");
  else throw ConfigError("unknown config key '" + key + "'");
}

void TrainConfig::validate() const {
  if (lr <= 0) throw ConfigError("lr must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (beta < 0) throw ConfigError("beta must be >= 0");
  if (beta_warmup < 0) throw ConfigError("beta_warmup must be >= 0");
  if (dim_z < 1 || d_model < 1 || heads < 1 || enc_layers < 1)
    throw ConfigError("model dims must be >= 1");
  if (d_model % heads != 0) throw ConfigError("d_model must be divisible by heads");
  if (fourier_m < 1) throw ConfigError("fourier_m must be >= 1");
  if (gen_layers.empty()) throw ConfigError("gen_layers must not be empty");
  for (int w : gen_layers)
    if (w < 1) throw ConfigError("generator widths must be >= 1");
  for (int w : hyper_layers)
    if (w < 1) throw ConfigError("hypernetwork widths must be >= 1");
  if (task == TaskKind::Imputation) {
    if (tau_set.empty()) throw ConfigError("tau_set must not be empty");
    for (double t : tau_set)
      if (t < 0.0 || t > 1.0) throw ConfigError("tau values must lie in [0,1]");
  } else {
    if (horizons.empty()) throw ConfigError("horizons must not be empty");
    if (history < 1) throw ConfigError("history must be >= 1");
    for (int f : horizons)
      if (f < 1) throw ConfigError("horizons must be >= 1");
  }
}

std::string TrainConfig::serialize() const {
  std::ostringstream os;
  auto list_i = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  std::string taus;
  {
    char buf[32];
    for (std::size_t i = 0; i < tau_set.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", tau_set[i]);
      taus += (i ? "," : "") + std::string(buf);
    }
  }
  char num[32];
  os << "task = " << to_string(task) << "\n";
  os << "dim_z = " << dim_z << "\n";
  os << "d_model = " << d_model << "\n";
  os << "heads = " << heads << "\n";
  os << "enc_layers = " << enc_layers << "\n";
  os << "hyper_layers = " << list_i(hyper_layers) << "\n";
  os << "gen_layers = " << list_i(gen_layers) << "\n";
  os << "gen_activation = " << to_string(gen_activation) << "\n";
  os << "hyper_activation = " << to_string(hyper_activation) << "\n";
  os << "fourier_m = " << fourier_m << "\n";
  std::snprintf(num, sizeof(num), "%.17g", fourier_sigma);
  os << "fourier_sigma = " << num << "\n";
  std::snprintf(num, sizeof(num), "%.17g", lr);
  os << "lr = " << num << "\n";
  os << "batch_size = " << batch_size << "\n";
  os << "epochs = " << epochs << "\n";
  std::snprintf(num, sizeof(num), "%.17g", beta);
  os << "beta = " << num << "\n";
  os << "beta_warmup = " << beta_warmup << "\n";
  os << "tau_set = " << taus << "\n";
  os << "horizons = " << list_i(horizons) << "\n";
  os << "history = " << history << "\n";
  os << "seed = " << seed << "\n";
  os << "dim_c = " << dim_c << "\n";
  os << "cov_layers = " << list_i(cov_layers) << "\n";
  os << "causal = " << (causal ? "true" : "false") << "\n";
  return os.str();
}

void TrainConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(n) + ": expected key = value");
    set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

void TrainConfig::apply_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value: " + t);
    set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

}  // namespace tvinr
