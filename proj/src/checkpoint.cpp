#include "tvinr/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tvinr/errors.hpp"

namespace tvinr {

namespace {

static_assert(sizeof(double) == 8, "64-bit IEEE doubles required");

void encode_le(double v, unsigned char out[8]) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  if constexpr (std::endian::native == std::endian::big) {
    for (int i = 0; i < 8; ++i) out[i] = (bits >> (8 * i)) & 0xff;
  } else {
    std::memcpy(out, &bits, 8);
  }
}

double decode_le(const unsigned char in[8]) {
  std::uint64_t bits;
  if constexpr (std::endian::native == std::endian::big) {
    bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | in[i];
  } else {
    std::memcpy(&bits, in, 8);
  }
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const TvInrModel& model,
                     const CheckpointMeta& meta) {
  const ParameterStore& store = model.params();
  std::ostringstream header;
  header << "TVINR1\n";
  header << "dims " << model.data_dims() << "\n";
  header << "covdims " << model.cov_dims() << "\n";
  header << "epoch " << meta.epoch << "\n";
  char num[40];
  std::snprintf(num, sizeof(num), "%.17g", meta.best_val);
  header << "best_val " << num << "\n";
  header << "rngstate " << meta.rng_state << "\n";
  header << "config-begin\n" << model.config().serialize() << "config-end\n";
  std::size_t offset = 0;
  for (int i = 0; i < store.size(); ++i) {
    const auto& e = store.entry(i);
    header << "tensor " << e.name << " " << e.value.rows() << " " << e.value.cols() << " "
           << offset << "\n";
    offset += e.value.size() * 8;
  }
  header << "payload " << offset << "\n";

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << header.str();
    std::vector<unsigned char> buf;
    for (int i = 0; i < store.size(); ++i) {
      const Tensor& t = store.entry(i).value;
      buf.resize(t.size() * 8);
      for (std::size_t j = 0; j < t.size(); ++j) encode_le(t[j], buf.data() + j * 8);
      out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    }
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move " + tmp + " into place");
}

TvInrModel load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::string line;
  if (!std::getline(in, line) || line != "TVINR1")
    throw std::runtime_error(path + " is not a TVINR1 checkpoint");

  int dims = -1, covdims = -1;
  CheckpointMeta m;
  std::string config_text;
  struct TensorRec {
    std::string name;
    int rows, cols;
    std::size_t offset;
  };
  std::vector<TensorRec> tensors;
  std::size_t payload = 0;
  bool in_config = false;
  while (std::getline(in, line)) {
    if (in_config) {
      if (line == "config-end") {
        in_config = false;
      } else {
        config_text += line;
        config_text += "\n";
      }
      continue;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dims") ls >> dims;
    else if (key == "covdims") ls >> covdims;
    else if (key == "epoch") ls >> m.epoch;
    else if (key == "best_val") ls >> m.best_val;
    else if (key == "rngstate") std::getline(ls, m.rng_state);
    else if (key == "config-begin") in_config = true;
    else if (key == "tensor") {
      TensorRec r;
      ls >> r.name >> r.rows >> r.cols >> r.offset;
      tensors.push_back(r);
    } else if (key == "payload") {
      ls >> payload;
      break;
    } else {
      throw std::runtime_error("unknown checkpoint header key '" + key + "'");
    }
  }
  if (dims < 1 || covdims < 0 || config_text.empty() || tensors.empty())
    throw std::runtime_error("incomplete checkpoint header in " + path);
  if (!m.rng_state.empty() && m.rng_state[0] == ' ') m.rng_state.erase(0, 1);

  TrainConfig cfg;
  cfg.apply_text(config_text);
  TvInrModel model = TvInrModel::create(cfg, dims, covdims);
  ParameterStore& store = model.params();
  if (int(tensors.size()) != store.size())
    throw std::runtime_error("checkpoint tensor count mismatch in " + path);

  std::vector<unsigned char> blob(payload);
  in.read(reinterpret_cast<char*>(blob.data()), std::streamsize(payload));
  if (std::size_t(in.gcount()) != payload)
    throw std::runtime_error("truncated checkpoint payload in " + path);

  for (const auto& r : tensors) {
    const int idx = store.index_of(r.name);
    if (idx < 0) throw std::runtime_error("unknown tensor '" + r.name + "' in " + path);
    Tensor& t = store.entry(idx).value;
    if (t.rows() != r.rows || t.cols() != r.cols)
      throw std::runtime_error("tensor shape mismatch for '" + r.name + "' in " + path);
    if (r.offset + t.size() * 8 > payload)
      throw std::runtime_error("tensor '" + r.name + "' outside payload in " + path);
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = decode_le(blob.data() + r.offset + j * 8);
  }
  model.sync_fourier_from_store();
  if (meta) *meta = m;
  return model;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return h;
}

void write_file_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move " + tmp + " into place");
}

}  // namespace tvinr
