// SPDX-License-Identifier: Apache-2.0
#include "aod/bench/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace aod::bench {

ExperimentKind parse_kind(const std::string& name) {
  if (name == "mae_vs_power") return ExperimentKind::kMaeVsPower;
  if (name == "mae_vs_slots") return ExperimentKind::kMaeVsSlots;
  if (name == "runtime") return ExperimentKind::kRuntime;
  if (name == "scrlb_curve") return ExperimentKind::kScrlbCurve;
  if (name == "train") return ExperimentKind::kTrain;
  throw ConfigError("unknown experiment kind: " + name);
}

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kMaeVsPower: return "mae_vs_power";
    case ExperimentKind::kMaeVsSlots: return "mae_vs_slots";
    case ExperimentKind::kRuntime: return "runtime";
    case ExperimentKind::kScrlbCurve: return "scrlb_curve";
    case ExperimentKind::kTrain: return "train";
  }
  return "unknown";
}

namespace {

const std::set<std::string> kKnownMethods = {"dml",    "sml",    "dft",   "music",
                                             "esprit", "nn_dml", "nn_sml", "scrlb"};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  const double d = parse_double(key, value);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d) throw ConfigError("config: expected integer for " + key);
  return i;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad unsigned value for " + key + ": '" + value + "'");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (num_antennas < 1 || num_slots < 1 || num_blocks < 1)
    throw ConfigError("config: M, L, Q must all be >= 1");
  if (trials < 1) throw ConfigError("config: trials must be >= 1");
  if (kind != ExperimentKind::kTrain && kind != ExperimentKind::kRuntime && sweep.empty())
    throw ConfigError("config: sweep must be nonempty");
  if (methods.empty()) throw ConfigError("config: methods must be nonempty");
  for (const auto& m : methods)
    if (kKnownMethods.find(m) == kKnownMethods.end())
      throw ConfigError("config: unknown method: " + m);
  if (kind == ExperimentKind::kMaeVsSlots) {
    for (double v : sweep)
      if (v < 1.0 || v != std::floor(v))
        throw ConfigError("config: slot sweep values must be positive integers");
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ConfigError("config: test_fraction must be in [0, 1)");
  if (kind == ExperimentKind::kTrain && train_mode != "dml" && train_mode != "sml")
    throw ConfigError("config: train mode must be dml or sml");
  if (runtime_reps < 1) throw ConfigError("config: runtime_reps must be >= 1");
  if (grid_points < 2) throw ConfigError("config: grid_points must be >= 2");
  if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  bool in_section = false;
  bool kind_seen = false;
  std::istringstream stream(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[experiment]")
        throw ConfigError("config: unknown section at line " + std::to_string(line_no));
      in_section = true;
      continue;
    }
    if (!in_section)
      throw ConfigError("config: key outside [experiment] section at line " +
                        std::to_string(line_no));
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "kind") {
      cfg.kind = parse_kind(value);
      kind_seen = true;
    } else if (key == "seed") {
      cfg.seed = parse_u64(key, value);
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "num_antennas") {
      cfg.num_antennas = parse_int(key, value);
    } else if (key == "num_slots") {
      cfg.num_slots = parse_int(key, value);
    } else if (key == "num_blocks") {
      cfg.num_blocks = parse_int(key, value);
    } else if (key == "spacing_over_wavelength") {
      cfg.spacing_over_wavelength = parse_double(key, value);
    } else if (key == "carrier_freq_hz") {
      cfg.carrier_freq_hz = parse_double(key, value);
    } else if (key == "theta_deg") {
      if (value == "random") {
        cfg.theta_random = true;
      } else {
        cfg.theta_random = false;
        cfg.theta_deg = parse_double(key, value);
      }
    } else if (key == "range_m") {
      if (value == "random") {
        cfg.range_random = true;
      } else {
        cfg.range_random = false;
        cfg.range_m = parse_double(key, value);
      }
    } else if (key == "range_lo_m") {
      cfg.range_lo_m = parse_double(key, value);
    } else if (key == "range_hi_m") {
      cfg.range_hi_m = parse_double(key, value);
    } else if (key == "ref_range_m") {
      cfg.ref_range_m = parse_double(key, value);
    } else if (key == "pathloss_exp") {
      cfg.pathloss_exp = parse_double(key, value);
    } else if (key == "noise_psd_dbm_per_hz") {
      cfg.noise_psd_dbm_per_hz = parse_double(key, value);
    } else if (key == "bandwidth_hz") {
      cfg.bandwidth_hz = parse_double(key, value);
    } else if (key == "sweep") {
      cfg.sweep.clear();
      for (const auto& item : split_list(value)) cfg.sweep.push_back(parse_double(key, item));
    } else if (key == "p_dbm") {
      cfg.p_dbm = parse_double(key, value);
    } else if (key == "trials") {
      cfg.trials = parse_int(key, value);
    } else if (key == "methods") {
      cfg.methods = split_list(value);
    } else if (key == "n_fft") {
      cfg.n_fft = parse_int(key, value);
    } else if (key == "n_music") {
      cfg.n_music = parse_int(key, value);
    } else if (key == "grid_points") {
      cfg.grid_points = parse_int(key, value);
    } else if (key == "refine_tol_rad") {
      cfg.refine_tol_rad = parse_double(key, value);
    } else if (key == "sml_inner_iters") {
      cfg.sml_inner_iters = parse_int(key, value);
    } else if (key == "runtime_reps") {
      cfg.runtime_reps = parse_int(key, value);
    } else if (key == "model_dml") {
      cfg.model_dml = value;
    } else if (key == "model_sml") {
      cfg.model_sml = value;
    } else if (key == "mode") {
      cfg.train_mode = value;
    } else if (key == "num_thetas") {
      cfg.num_thetas = parse_int(key, value);
    } else if (key == "num_ranges") {
      cfg.num_ranges = parse_int(key, value);
    } else if (key == "num_beamformer_sets") {
      cfg.num_beamformer_sets = parse_int(key, value);
    } else if (key == "num_symbol_sets") {
      cfg.num_symbol_sets = parse_int(key, value);
    } else if (key == "num_noise") {
      cfg.num_noise = parse_int(key, value);
    } else if (key == "test_fraction") {
      cfg.test_fraction = parse_double(key, value);
    } else if (key == "learning_rate") {
      cfg.learning_rate = parse_double(key, value);
    } else if (key == "weight_decay") {
      cfg.weight_decay = parse_double(key, value);
    } else if (key == "grad_clip_norm") {
      cfg.grad_clip_norm = parse_double(key, value);
    } else if (key == "batch_size") {
      cfg.batch_size = parse_int(key, value);
    } else if (key == "epochs") {
      cfg.epochs = parse_int(key, value);
    } else if (key == "hidden_width") {
      cfg.hidden_width = parse_int(key, value);
    } else if (key == "model_out") {
      cfg.model_out = value;
    } else if (key == "dataset_cache") {
      cfg.dataset_cache = value;
    } else {
      throw ConfigError("config: unknown key '" + key + "' at line " + std::to_string(line_no));
    }
  }
  if (!kind_seen) throw ConfigError("config: missing required key 'kind'");
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::string default_config_text(ExperimentKind kind) {
  std::ostringstream os;
  os << "# aodlab experiment configuration (defaults)\n";
  os << "[experiment]\n";
  os << "kind = " << kind_name(kind) << "\n";
  os << "seed = 1\n";
  os << "out_dir = out\n";
  os << "\n# geometry / schedule\n";
  os << "num_antennas = 8\n";
  os << "num_slots = 6\n";
  os << "num_blocks = 4\n";
  os << "spacing_over_wavelength = 0.5\n";
  os << "carrier_freq_hz = 28e9\n";
  os << "\n# scenario (theta_deg / range_m also accept 'random')\n";
  os << "theta_deg = 23.4\n";
  os << "range_m = 32.1\n";
  os << "range_lo_m = 20\n";
  os << "range_hi_m = 50\n";
  os << "ref_range_m = 1\n";
  os << "pathloss_exp = 3\n";
  os << "noise_psd_dbm_per_hz = -165\n";
  os << "bandwidth_hz = 1.2e5\n";
  switch (kind) {
    case ExperimentKind::kMaeVsPower:
      os << "\nsweep = 0,5,15,25  # transmit power, dBm\n";
      os << "trials = 500\n";
      os << "methods = dml,sml,dft,music,esprit,scrlb\n";
      break;
    case ExperimentKind::kMaeVsSlots:
      os << "\nsweep = 2,3,4,6,8,12  # slots per block L\n";
      os << "p_dbm = 15\n";
      os << "trials = 500\n";
      os << "methods = dml,sml,dft,music,esprit,scrlb\n";
      break;
    case ExperimentKind::kRuntime:
      os << "\np_dbm = 15\n";
      os << "runtime_reps = 25\n";
      os << "methods = dml,sml,dft,music,esprit\n";
      break;
    case ExperimentKind::kScrlbCurve:
      os << "\nsweep = 0,5,10,15,20,25,30  # transmit power, dBm\n";
      os << "trials = 100\n";
      os << "methods = scrlb\n";
      break;
    case ExperimentKind::kTrain:
      os << "\nmode = dml\n";
      os << "p_dbm = 15\n";
      os << "num_thetas = 20\n";
      os << "num_ranges = 22\n";
      os << "num_beamformer_sets = 2\n";
      os << "num_symbol_sets = 2\n";
      os << "num_noise = 3\n";
      os << "test_fraction = 0.2\n";
      os << "learning_rate = 3e-4\n";
      os << "weight_decay = 1e-4\n";
      os << "grad_clip_norm = 10\n";
      os << "batch_size = 256\n";
      os << "epochs = 100\n";
      os << "hidden_width = 128\n";
      os << "model_out = model.aodnn\n";
      os << "dataset_cache =  # optional binary cache path\n";
      break;
  }
  os << "\n# estimator knobs\n";
  os << "n_fft = 256\n";
  os << "n_music = 256\n";
  os << "grid_points = 512\n";
  os << "refine_tol_rad = 1e-5\n";
  os << "sml_inner_iters = 3\n";
  os << "\n# model files for nn_dml / nn_sml methods\n";
  os << "model_dml =\n";
  os << "model_sml =\n";
  return os.str();
}

}  // namespace aod::bench
