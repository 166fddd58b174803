// SPDX-License-Identifier: Apache-2.0
#include "aod/neural/model_io.hpp"

#include <cstring>
#include <fstream>

namespace aod {

namespace {

constexpr char kModelMagic[8] = {'A', 'O', 'D', 'N', 'N', 'v', '1', '\n'};

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("model file: truncated");
  return value;
}

}  // namespace

void save_model(const ModelFile& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("model file: cannot open for writing: " + path);
  os.write(kModelMagic, sizeof(kModelMagic));
  write_pod(os, model.format_version);
  write_pod<std::uint32_t>(os, model.mode == PilotMode::kDml ? 0u : 1u);
  write_pod(os, model.num_antennas);
  write_pod(os, model.num_slots);
  write_pod(os, model.num_blocks);
  write_pod(os, model.net.input_rows);
  write_pod(os, model.net.input_cols);
  write_pod(os, model.net.conv1_channels);
  write_pod(os, model.net.conv2_channels);
  write_pod(os, model.net.hidden_width);
  write_pod(os, model.net.scale_sigma);
  write_pod(os, model.net.scale_xi);
  write_pod(os, model.scaling.scale_y);
  write_pod(os, model.scaling.scale_x);
  write_pod(os, model.train_config.learning_rate);
  write_pod(os, model.train_config.weight_decay);
  write_pod(os, model.train_config.grad_clip_norm);
  write_pod(os, model.train_config.batch_size);
  write_pod(os, model.train_config.epochs);
  write_pod(os, model.train_config.seed);
  write_pod<std::uint64_t>(os, model.params.size());
  os.write(reinterpret_cast<const char*>(model.params.data()),
           static_cast<std::streamsize>(sizeof(double) * model.params.size()));
  if (!os) throw std::runtime_error("model file: write failed: " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("model file: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
    throw std::runtime_error("model file: bad magic: " + path);

  ModelFile model;
  model.format_version = read_pod<std::uint32_t>(is);
  if (model.format_version != 1)
    throw std::runtime_error("model file: unsupported format version");
  model.mode = read_pod<std::uint32_t>(is) == 0u ? PilotMode::kDml : PilotMode::kSml;
  model.num_antennas = read_pod<int>(is);
  model.num_slots = read_pod<int>(is);
  model.num_blocks = read_pod<int>(is);
  model.net.input_rows = read_pod<int>(is);
  model.net.input_cols = read_pod<int>(is);
  model.net.conv1_channels = read_pod<int>(is);
  model.net.conv2_channels = read_pod<int>(is);
  model.net.hidden_width = read_pod<int>(is);
  model.net.scale_sigma = read_pod<double>(is);
  model.net.scale_xi = read_pod<double>(is);
  model.scaling.scale_y = read_pod<double>(is);
  model.scaling.scale_x = read_pod<double>(is);
  model.train_config.mode = model.mode;
  model.train_config.learning_rate = read_pod<double>(is);
  model.train_config.weight_decay = read_pod<double>(is);
  model.train_config.grad_clip_norm = read_pod<double>(is);
  model.train_config.batch_size = read_pod<int>(is);
  model.train_config.epochs = read_pod<int>(is);
  model.train_config.seed = read_pod<std::uint64_t>(is);
  const auto count = read_pod<std::uint64_t>(is);
  const CompactNet net(model.net);
  if (count != net.num_params())
    throw std::runtime_error("model file: parameter count does not match architecture");
  model.params.resize(count);
  is.read(reinterpret_cast<char*>(model.params.data()),
          static_cast<std::streamsize>(sizeof(double) * model.params.size()));
  if (!is) throw std::runtime_error("model file: truncated parameters");
  return model;
}

}  // namespace aod
