#include "flowddi/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace flowddi {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// section -> key -> value, with strict key validation done by the caller.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

RawConfig parse_ini(std::istream& in) {
  RawConfig raw;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("config line " + std::to_string(line_no) +
                         ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ParseError("config line " + std::to_string(line_no) + ": empty section name");
      raw[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected key = value");
    if (section.empty())
      throw ParseError("config line " + std::to_string(line_no) +
                       ": key outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError("config line " + std::to_string(line_no) + ": empty key or value");
    if (!raw[section].emplace(key, value).second)
      throw ParseError("config line " + std::to_string(line_no) + ": duplicate key " +
                       section + "." + key);
  }
  return raw;
}

class ConfigReader {
 public:
  explicit ConfigReader(RawConfig raw) : raw_(std::move(raw)) {}

  bool has(const std::string& section, const std::string& key) const {
    auto s = raw_.find(section);
    return s != raw_.end() && s->second.count(key) > 0;
  }

  std::string required(const std::string& section, const std::string& key) {
    if (!has(section, key)) {
      missing_.insert(section + "." + key);
      return "";
    }
    return take(section, key);
  }

  std::string optional(const std::string& section, const std::string& key,
                       const std::string& fallback) {
    if (!has(section, key)) return fallback;
    return take(section, key);
  }

  std::uint64_t required_u64(const std::string& s, const std::string& k) {
    return to_u64(s, k, required(s, k));
  }
  std::uint64_t optional_u64(const std::string& s, const std::string& k,
                             std::uint64_t fallback) {
    if (!has(s, k)) return fallback;
    return to_u64(s, k, take(s, k));
  }
  double required_double(const std::string& s, const std::string& k) {
    return to_double(s, k, required(s, k));
  }
  double optional_double(const std::string& s, const std::string& k, double fallback) {
    if (!has(s, k)) return fallback;
    return to_double(s, k, take(s, k));
  }

  void finish() const {
    if (!missing_.empty()) {
      std::string msg = "config is missing required keys:";
      for (const auto& key : missing_) msg += " " + key;
      throw ParseError(msg);
    }
    for (const auto& [section, keys] : raw_)
      for (const auto& [key, value] : keys)
        if (!consumed_.count(section + "." + key))
          throw ParseError("config has unknown key: " + section + "." + key);
  }

 private:
  std::string take(const std::string& section, const std::string& key) {
    consumed_.insert(section + "." + key);
    return raw_.at(section).at(key);
  }

  std::uint64_t to_u64(const std::string& s, const std::string& k, const std::string& v) {
    if (v.empty()) return 0;
    try {
      std::size_t pos = 0;
      const std::uint64_t out = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ParseError("config key " + s + "." + k + " is not an integer: " + v);
    }
  }

  double to_double(const std::string& s, const std::string& k, const std::string& v) {
    if (v.empty()) return 0.0;
    try {
      std::size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ParseError("config key " + s + "." + k + " is not a number: " + v);
    }
  }

  RawConfig raw_;
  std::set<std::string> consumed_;
  std::set<std::string> missing_;
};

std::uint64_t fnv1a_bytes(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

VgaeConfig read_vgae_section(ConfigReader& r, const std::string& section) {
  VgaeConfig cfg;
  cfg.latent_dim = r.required_u64(section, "latent_dim");
  cfg.hidden_dim = r.optional_u64(section, "hidden_dim", cfg.hidden_dim);
  cfg.encoder_layers = r.optional_u64(section, "encoder_layers", cfg.encoder_layers);
  cfg.learning_rate = r.optional_double(section, "learning_rate", cfg.learning_rate);
  cfg.epochs = r.optional_u64(section, "epochs", cfg.epochs);
  cfg.kl_weight = r.optional_double(section, "kl_weight", cfg.kl_weight);
  cfg.batch_size = r.optional_u64(section, "batch_size", cfg.batch_size);
  cfg.grad_clip = r.optional_double(section, "grad_clip", cfg.grad_clip);
  cfg.optimizer = r.optional(section, "optimizer", cfg.optimizer);
  cfg.init = r.optional(section, "init", cfg.init);
  return cfg;
}

}  // namespace

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  std::istringstream stream(bytes);

  ConfigReader r(parse_ini(stream));
  PipelineConfig cfg;
  cfg.train_path = r.required("paths", "train");
  cfg.valid_path = r.required("paths", "valid");
  cfg.test_path = r.required("paths", "test");
  cfg.vocab_path = r.required("paths", "vocab");
  cfg.out_dir = r.required("paths", "out");

  cfg.vgae_pretrain = read_vgae_section(r, "vgae_pretrain");
  cfg.vgae_final = read_vgae_section(r, "vgae_final");

  cfg.gfn.knn_k = r.required_u64("gfn", "knn_k");
  cfg.gfn.epochs = r.optional_u64("gfn", "epochs", cfg.gfn.epochs);
  cfg.gfn.learning_rate = r.optional_double("gfn", "learning_rate", cfg.gfn.learning_rate);
  cfg.gfn.batch = r.optional_u64("gfn", "batch", cfg.gfn.batch);
  cfg.gfn.exploration_epsilon =
      r.optional_double("gfn", "exploration_epsilon", cfg.gfn.exploration_epsilon);

  cfg.reward.alpha = r.required_double("reward", "alpha");
  cfg.reward.epsilon_floor =
      r.optional_double("reward", "epsilon_floor", cfg.reward.epsilon_floor);

  cfg.n_synthetic = r.required_u64("augment", "n_synthetic");

  cfg.coverage_m = r.optional_u64("metrics", "coverage_m", cfg.coverage_m);
  cfg.true_distribution =
      r.optional("metrics", "true_distribution", cfg.true_distribution);
  if (cfg.true_distribution != "uniform" && cfg.true_distribution != "full")
    throw ParseError("config key metrics.true_distribution must be 'uniform' or 'full'");

  cfg.seed = r.optional_u64("run", "seed", cfg.seed);
  r.finish();

  apply_seed_override(cfg, cfg.seed);
  // Paths in the config are relative to the config file's directory.
  const auto base = path.parent_path();
  for (auto* p : {&cfg.train_path, &cfg.valid_path, &cfg.test_path, &cfg.vocab_path,
                  &cfg.out_dir})
    if (p->is_relative()) *p = base / *p;

  cfg.config_hash = hex64(fnv1a_bytes(bytes));
  return cfg;
}

void apply_seed_override(PipelineConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  // Stage seeds are copies of the global seed so two stages with equal
  // configs and data reproduce each other exactly.
  cfg.vgae_pretrain.seed = seed;
  cfg.vgae_final.seed = seed;
  cfg.gfn.seed = seed;
  cfg.gfn.alpha = cfg.reward.alpha;
  cfg.gfn.reward_floor = cfg.reward.epsilon_floor;
}

void apply_out_override(PipelineConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.out_dir = out_dir;
}

void write_config_template(const std::filesystem::path& path,
                           const std::filesystem::path& data_dir,
                           std::size_t n_synthetic, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write config: " + path.string());
  const std::string dir = data_dir.empty() ? "." : data_dir.string();
  out << "[paths]\n"
      << "train = " << dir << "/train.tsv\n"
      << "valid = " << dir << "/valid.tsv\n"
      << "test = " << dir << "/test.tsv\n"
      << "vocab = " << dir << "/vocab.tsv\n"
      << "out = " << dir << "/run\n"
      << "\n[vgae_pretrain]\n"
      << "latent_dim = 16\nhidden_dim = 32\nencoder_layers = 2\n"
      << "learning_rate = 0.01\nepochs = 600\nkl_weight = 0.3\nbatch_size = 0\n"
      << "\n[vgae_final]\n"
      << "latent_dim = 16\nhidden_dim = 32\nencoder_layers = 2\n"
      << "learning_rate = 0.003\nepochs = 300\nkl_weight = 0.3\nbatch_size = 0\n"
      << "init = pretrain\n"
      << "\n[gfn]\n"
      << "knn_k = 20\nepochs = 3000\nlearning_rate = 0.05\nbatch = 16\n"
      << "exploration_epsilon = 0.0\n"
      << "\n[reward]\n"
      << "alpha = 1.0\nepsilon_floor = 1e-12\n"
      << "\n[augment]\n"
      << "n_synthetic = " << n_synthetic << "\n"
      << "\n[metrics]\n"
      << "coverage_m = 1\ntrue_distribution = uniform\n"
      << "\n[run]\n"
      << "seed = " << seed << "\n";
}

}  // namespace flowddi
