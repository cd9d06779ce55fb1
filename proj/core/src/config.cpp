#include "rdrsr/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rdrsr {

namespace {

uint64_t fnv1a(const std::string& s, uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string RunConfig::config_hash() const {
  std::ostringstream os;
  os << dataset << '|' << d << '|' << t << '|' << k << '|' << o << '|' << temperature
     << '|' << lambda_o << '|' << beta << '|' << num_blocks << '|' << learning_rate
     << '|' << batch_size << '|' << epochs << '|' << patience << '|' << seed << '|'
     << fixed_h << '|' << static_cast<int>(eval_mode) << '|' << literal_pair_mean
     << '|' << min_user_interactions << '|' << min_item_interactions;
  uint64_t h = fnv1a(os.str(), 14695981039346656037ULL);
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "dataset") cfg.dataset = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "d") cfg.d = std::stoi(value);
    else if (key == "t") cfg.t = std::stoi(value);
    else if (key == "k") cfg.k = std::stoi(value);
    else if (key == "o") cfg.o = std::stoi(value);
    else if (key == "temperature") cfg.temperature = std::stod(value);
    else if (key == "lambda_o") cfg.lambda_o = std::stod(value);
    else if (key == "beta") cfg.beta = std::stod(value);
    else if (key == "num_blocks") cfg.num_blocks = std::stoi(value);
    else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
    else if (key == "batch_size") cfg.batch_size = std::stoi(value);
    else if (key == "epochs") cfg.epochs = std::stoi(value);
    else if (key == "patience") cfg.patience = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "fixed_h") cfg.fixed_h = std::stoi(value);
    else if (key == "eval_mode") {
      if (value == "full") cfg.eval_mode = EvalMode::kFull;
      else if (value == "sampled") cfg.eval_mode = EvalMode::kSampled;
      else throw std::invalid_argument("eval_mode must be 'full' or 'sampled'");
    }
    else if (key == "literal_pair_mean") cfg.literal_pair_mean = value == "1" || value == "true";
    else if (key == "min_user_interactions") cfg.min_user_interactions = std::stoi(value);
    else if (key == "min_item_interactions") cfg.min_item_interactions = std::stoi(value);
    else throw std::invalid_argument("unknown config key '" + key + "'");
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value '" + value + "' for config key '" + key + "'");
  }
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
    if (trimmed.empty()) continue;
    if (eq == std::string::npos)
      throw std::runtime_error("config: missing '=' at " + path + ":" + std::to_string(lineno));
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r\n"));
      const auto e = s.find_last_not_of(" \t\r\n");
      if (e != std::string::npos) s.erase(e + 1);
      return s;
    };
    apply_config_kv(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

std::string eval_mode_name(EvalMode m) {
  return m == EvalMode::kFull ? "full" : "sampled";
}

}  // namespace rdrsr
