#include "polyreach/study_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace polyreach {

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

std::string strip_quotes(const std::string& value, const std::string& key) {
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
    return value.substr(1, value.size() - 2);
  if (!value.empty() && value.front() != '"') return value;  // bare word tolerated
  throw std::invalid_argument("study file: malformed string for key " + key);
}

std::vector<std::string> split_array(const std::string& value, const std::string& key) {
  if (value.size() < 2 || value.front() != '[' || value.back() != ']')
    throw std::invalid_argument("study file: key " + key + " expects [ ... ]");
  std::vector<std::string> items;
  std::stringstream ss(value.substr(1, value.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

double parse_number(const std::string& value, const std::string& key) {
  try {
    size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return parsed;
  } catch (...) {
    throw std::invalid_argument("study file: bad number for key " + key + ": " + value);
  }
}

void apply_one(StudyConfig& config, const std::string& key, const std::string& value) {
  if (key == "model") {
    config.model_name = strip_quotes(value, key);
  } else if (key == "alpha") {
    config.alpha = parse_number(value, key);
  } else if (key == "alpha_s") {
    config.alpha_s = parse_number(value, key);
  } else if (key == "d") {
    config.degree = static_cast<int>(parse_number(value, key));
  } else if (key == "n") {
    config.n_data = static_cast<Index>(parse_number(value, key));
  } else if (key == "nr") {
    config.n_r = static_cast<Index>(parse_number(value, key));
  } else if (key == "k") {
    config.k_list.clear();
    if (!value.empty() && value.front() == '[') {
      for (const auto& item : split_array(value, key))
        config.k_list.push_back(static_cast<int>(parse_number(item, key)));
    } else {
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ','))
        config.k_list.push_back(static_cast<int>(parse_number(trim(item), key)));
    }
  } else if (key == "trials") {
    config.trials = static_cast<int>(parse_number(value, key));
  } else if (key == "seed") {
    config.seed = static_cast<std::uint64_t>(parse_number(value, key));
  } else if (key == "m_eval") {
    config.m_eval = static_cast<Index>(parse_number(value, key));
  } else if (key == "methods") {
    config.methods.clear();
    if (!value.empty() && value.front() == '[') {
      for (const auto& item : split_array(value, key))
        config.methods.push_back(method_from_name(strip_quotes(item, key)));
    } else {
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ','))
        config.methods.push_back(method_from_name(strip_quotes(trim(item), key)));
    }
  } else if (key == "out") {
    config.output_dir = strip_quotes(value, key);
  } else if (key == "cv") {
    const std::string mode = strip_quotes(value, key);
    if (mode == "first-trial")
      config.cv_mode = StudyConfig::CvMode::kFirstTrial;
    else if (mode == "per-trial")
      config.cv_mode = StudyConfig::CvMode::kPerTrial;
    else if (mode == "fixed")
      config.cv_mode = StudyConfig::CvMode::kFixed;
    else
      throw std::invalid_argument("study file: cv must be first-trial, per-trial or fixed");
  } else if (key == "sigma_x") {
    config.sigma_x = parse_number(value, key);
  } else if (key == "sigma_w") {
    config.sigma_w = parse_number(value, key);
  } else if (key == "lambda") {
    config.lambda = parse_number(value, key);
  } else if (key == "sigma_grid") {
    config.sigma_grid.clear();
    for (const auto& item : split_array(value, key))
      config.sigma_grid.push_back(parse_number(item, key));
  } else if (key == "lambda_grid") {
    config.lambda_grid.clear();
    for (const auto& item : split_array(value, key))
      config.lambda_grid.push_back(parse_number(item, key));
  } else if (key == "folds") {
    config.folds = static_cast<int>(parse_number(value, key));
  } else if (key == "max_centers") {
    config.max_centers = static_cast<Index>(parse_number(value, key));
  } else if (key == "threads") {
    config.threads = static_cast<int>(parse_number(value, key));
  } else {
    throw std::invalid_argument("study file: unknown key " + key);
  }
}

}  // namespace

StudyConfig parse_study_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open study file: " + path);
  StudyConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("study file line " + std::to_string(line_no) +
                                  ": expected key = value");
    apply_one(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

void apply_study_overrides(StudyConfig& config, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) apply_one(config, key, value);
}

std::string study_config_to_string(const StudyConfig& config) {
  std::ostringstream out;
  out << "model = \"" << config.model_name << "\"\n";
  out << "alpha = " << config.alpha << "\n";
  out << "alpha_s = " << config.alpha_s << "\n";
  out << "d = " << config.degree << "\n";
  out << "n = " << config.n_data << "\n";
  out << "nr = " << config.n_r << "\n";
  out << "k = [";
  for (size_t i = 0; i < config.k_list.size(); ++i)
    out << (i ? ", " : "") << config.k_list[i];
  out << "]\n";
  out << "trials = " << config.trials << "\n";
  out << "seed = " << config.seed << "\n";
  out << "m_eval = " << config.m_eval << "\n";
  out << "methods = [";
  for (size_t i = 0; i < config.methods.size(); ++i)
    out << (i ? ", " : "") << '"' << method_name(config.methods[i]) << '"';
  out << "]\n";
  const char* cv = config.cv_mode == StudyConfig::CvMode::kFirstTrial ? "first-trial"
                   : config.cv_mode == StudyConfig::CvMode::kPerTrial ? "per-trial"
                                                                      : "fixed";
  out << "cv = \"" << cv << "\"\n";
  out << "sigma_x = " << config.sigma_x << "\n";
  out << "sigma_w = " << config.sigma_w << "\n";
  out << "lambda = " << config.lambda << "\n";
  out << "folds = " << config.folds << "\n";
  out << "max_centers = " << config.max_centers << "\n";
  return out.str();
}

}  // namespace polyreach
