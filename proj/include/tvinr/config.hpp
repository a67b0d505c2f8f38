#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tvinr {

enum class Activation { Relu, LeakyRelu01, Gelu, Tanh };
enum class TaskKind { Imputation, Forecasting };

Activation activation_from_string(const std::string& s);
const char* to_string(Activation a);
TaskKind task_from_string(const std::string& s);
const char* to_string(TaskKind t);
std::vector<double> parse_double_list(const std::string& s);
std::vector<int> parse_int_list(const std::string& s);

/// Every knob of the model and its training loop. Defaults are the L=200
/// imputation setting; the config file format is `key = value` per line,
/// '#' comments allowed.
struct TrainConfig {
  TaskKind task = TaskKind::Imputation;

  int dim_z = 32;
  int d_model = 128;
  int heads = 2;
  int enc_layers = 2;
  std::vector<int> hyper_layers = {128, 256};
  std::vector<int> gen_layers = {64, 64, 64};
  Activation gen_activation = Activation::Relu;
  Activation hyper_activation = Activation::Gelu;
  int fourier_m = 256;
  double fourier_sigma = 2.0;

  double lr = 1e-4;
  int batch_size = 256;
  int epochs = 2000;
  double beta = 1.0;
  // KL annealing: effective beta ramps linearly from 0 to beta over this many
  // epochs. 0 keeps the exact objective from the first step.
  int beta_warmup = 0;

  std::vector<double> tau_set = {0.05, 0.30, 0.50, 0.75, 0.90, 1.0};
  std::vector<int> horizons = {96, 192, 336, 720};
  int history = 512;

  std::uint64_t seed = 0;

  // Covariate encoder (active only when samples carry covariates).
  int dim_c = 4;
  std::vector<int> cov_layers = {8, 8};

  bool causal = false;

  // Which of the required-on-the-CLI keys were actually set (file or flag).
  bool task_explicit = false;
  bool seed_explicit = false;

  void set(const std::string& key, const std::string& value);
  void apply_file(const std::string& path);
  void apply_text(const std::string& text);
  void validate() const;
  std::string serialize() const;
};

}  // namespace tvinr
