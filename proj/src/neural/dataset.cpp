// SPDX-License-Identifier: Apache-2.0
#include "aod/neural/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace aod {

void DatasetSpec::validate() const {
  if (num_thetas < 1 || num_ranges < 1 || num_beamformer_sets < 1 || num_symbol_sets < 1 ||
      num_noise < 1)
    throw std::invalid_argument("DatasetSpec: all enumeration counts must be >= 1");
  if (!(theta_lo_rad < theta_hi_rad)) throw std::invalid_argument("DatasetSpec: bad theta range");
  if (!(range_lo_m >= ref_range_m)) throw std::invalid_argument("DatasetSpec: ranges below r0");
  if (num_slots < 1 || num_blocks < 1) throw std::invalid_argument("DatasetSpec: bad (L, Q)");
  if (!(tx_power_w > 0.0)) throw std::invalid_argument("DatasetSpec: tx_power_w must be > 0");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("DatasetSpec: test_fraction must be in [0, 1)");
}

Dataset generate_dataset(const DatasetSpec& spec, const ArrayGeometry& geometry, Rng& rng) {
  spec.validate();
  geometry.validate();

  Dataset ds;
  ds.spec = spec;
  ds.geometry = geometry;
  ds.sigma2 = noise_variance_watts(spec.noise_psd_dbm_per_hz, spec.bandwidth_hz);

  // Sampled parameter pools, each from its own sub-stream.
  Rng theta_rng = rng.substream(1);
  std::vector<double> thetas(static_cast<std::size_t>(spec.num_thetas));
  for (auto& t : thetas) t = theta_rng.uniform(spec.theta_lo_rad, spec.theta_hi_rad);

  Rng range_rng = rng.substream(2);
  std::vector<double> ranges(static_cast<std::size_t>(spec.num_ranges));
  for (auto& r : ranges) r = range_rng.uniform(spec.range_lo_m, spec.range_hi_m);

  std::vector<std::vector<CVec>> beamformer_sets(
      static_cast<std::size_t>(spec.num_beamformer_sets));
  for (int b = 0; b < spec.num_beamformer_sets; ++b) {
    Rng bf_rng = rng.substream(3, static_cast<std::uint64_t>(b));
    Eigen::MatrixXd phases(spec.num_slots, geometry.num_antennas);
    for (int l = 0; l < spec.num_slots; ++l)
      for (int m = 0; m < geometry.num_antennas; ++m) phases(l, m) = bf_rng.uniform(-1.0, 1.0);
    beamformer_sets[static_cast<std::size_t>(b)] =
        make_beamformers(spec.tx_power_w, geometry.num_antennas, phases);
  }

  std::vector<CVec> symbol_sets(static_cast<std::size_t>(spec.num_symbol_sets));
  for (int s = 0; s < spec.num_symbol_sets; ++s) {
    Rng sym_rng = rng.substream(4, static_cast<std::uint64_t>(s));
    CVec c(spec.num_blocks);
    for (int q = 0; q < spec.num_blocks; ++q) c(q) = sym_rng.cnormal();
    symbol_sets[static_cast<std::size_t>(s)] = c;
  }

  ds.samples.reserve(spec.total_samples());
  std::uint64_t sample_index = 0;
  for (int ti = 0; ti < spec.num_thetas; ++ti) {
    for (int ri = 0; ri < spec.num_ranges; ++ri) {
      const double xi =
          channel_gain(ranges[static_cast<std::size_t>(ri)], spec.ref_range_m, spec.pathloss_exp,
                       geometry.carrier_freq_hz);
      for (int bi = 0; bi < spec.num_beamformer_sets; ++bi) {
        for (int si = 0; si < spec.num_symbol_sets; ++si) {
          PilotSchedule schedule;
          schedule.beamformers = beamformer_sets[static_cast<std::size_t>(bi)];
          schedule.block_symbols = symbol_sets[static_cast<std::size_t>(si)];
          const PilotFeature feature = build_pilot_feature(schedule, spec.mode);

          Scenario scenario;
          scenario.theta_rad = thetas[static_cast<std::size_t>(ti)];
          scenario.range_m = ranges[static_cast<std::size_t>(ri)];
          scenario.ref_range_m = spec.ref_range_m;
          scenario.pathloss_exp = spec.pathloss_exp;
          scenario.channel_gain_xi = Complex(xi, 0.0);
          scenario.noise_var_w = ds.sigma2;
          scenario.tx_power_w = spec.tx_power_w;

          for (int ni = 0; ni < spec.num_noise; ++ni) {
            Rng noise_rng = rng.substream(5, sample_index);
            LabeledSample sample;
            sample.data.pilot_feature = feature.x;
            sample.data.y = simulate_observations(geometry, scenario, schedule, noise_rng).y;
            sample.data.num_slots = spec.num_slots;
            sample.theta_true_rad = scenario.theta_rad;
            sample.range_m = scenario.range_m;
            sample.xi_true = xi;
            ds.samples.push_back(std::move(sample));
            ++sample_index;
          }
        }
      }
    }
  }

  // Seeded shuffle, then split.
  const int n = static_cast<int>(ds.samples.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng split_rng = rng.substream(6);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(split_rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  const int num_test = static_cast<int>(std::llround(spec.test_fraction * n));
  ds.test_indices.assign(order.begin(), order.begin() + num_test);
  ds.train_indices.assign(order.begin() + num_test, order.end());
  return ds;
}

namespace {

constexpr char kCacheMagic[8] = {'A', 'O', 'D', 'D', 'S', 'v', '1', '\n'};

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("dataset cache: truncated file");
  return value;
}

void write_cmat(std::ostream& os, const CMat& m) {
  write_pod<std::int64_t>(os, m.rows());
  write_pod<std::int64_t>(os, m.cols());
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(Complex) * static_cast<std::size_t>(m.size())));
}

CMat read_cmat(std::istream& is) {
  const auto rows = read_pod<std::int64_t>(is);
  const auto cols = read_pod<std::int64_t>(is);
  if (rows < 0 || cols < 0 || rows > 1 << 20 || cols > 1 << 20)
    throw std::runtime_error("dataset cache: corrupt matrix header");
  CMat m(rows, cols);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(Complex) * static_cast<std::size_t>(m.size())));
  if (!is) throw std::runtime_error("dataset cache: truncated matrix");
  return m;
}

}  // namespace

void save_dataset_cache(const Dataset& dataset, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("dataset cache: cannot open for writing: " + path);
  os.write(kCacheMagic, sizeof(kCacheMagic));
  write_pod<std::uint32_t>(os, 1);  // format version
  write_pod(os, dataset.spec);
  write_pod(os, dataset.geometry);
  write_pod(os, dataset.sigma2);
  write_pod<std::uint64_t>(os, dataset.samples.size());
  for (const auto& sample : dataset.samples) {
    write_cmat(os, sample.data.pilot_feature);
    write_cmat(os, sample.data.y);
    write_pod(os, sample.data.num_slots);
    write_pod(os, sample.theta_true_rad);
    write_pod(os, sample.range_m);
    write_pod(os, sample.xi_true);
  }
  const auto write_indices = [&](const std::vector<int>& idx) {
    write_pod<std::uint64_t>(os, idx.size());
    os.write(reinterpret_cast<const char*>(idx.data()),
             static_cast<std::streamsize>(sizeof(int) * idx.size()));
  };
  write_indices(dataset.train_indices);
  write_indices(dataset.test_indices);
  if (!os) throw std::runtime_error("dataset cache: write failed: " + path);
}

Dataset load_dataset_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("dataset cache: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
    throw std::runtime_error("dataset cache: bad magic: " + path);
  const auto version = read_pod<std::uint32_t>(is);
  if (version != 1) throw std::runtime_error("dataset cache: unsupported format version");

  Dataset ds;
  ds.spec = read_pod<DatasetSpec>(is);
  ds.geometry = read_pod<ArrayGeometry>(is);
  ds.sigma2 = read_pod<double>(is);
  const auto count = read_pod<std::uint64_t>(is);
  ds.samples.resize(count);
  for (auto& sample : ds.samples) {
    sample.data.pilot_feature = read_cmat(is);
    sample.data.y = read_cmat(is);
    sample.data.num_slots = read_pod<int>(is);
    sample.theta_true_rad = read_pod<double>(is);
    sample.range_m = read_pod<double>(is);
    sample.xi_true = read_pod<double>(is);
  }
  const auto read_indices = [&](std::vector<int>& idx) {
    const auto n = read_pod<std::uint64_t>(is);
    idx.resize(n);
    is.read(reinterpret_cast<char*>(idx.data()),
            static_cast<std::streamsize>(sizeof(int) * idx.size()));
    if (!is) throw std::runtime_error("dataset cache: truncated indices");
  };
  read_indices(ds.train_indices);
  read_indices(ds.test_indices);
  return ds;
}

}  // namespace aod
