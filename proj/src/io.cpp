#include "pagar/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pagar/error.hpp"

namespace pagar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return trim(hash == std::string::npos ? line : line.substr(0, hash));
}

// Next non-empty line with comments removed; false at end of input.
bool next_line(std::istream& in, std::string& line) {
  std::string raw;
  while (std::getline(in, raw)) {
    line = strip_comment(raw);
    if (!line.empty()) return true;
  }
  return false;
}

std::vector<double> parse_numbers(const std::string& line) {
  std::istringstream ss(line);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgument("not a number: '" + tok + "'");
    }
  }
  return out;
}

std::size_t as_index(double v, const std::string& what) {
  if (v < 0.0 || v != std::floor(v)) throw InvalidArgument(what + " must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return in;
}

bool has_allowed_prefix(const std::string& key) {
  static const char* const top[] = {"seed", "out", "workers", "log_level", "command"};
  for (const char* t : top)
    if (key == t) return true;
  static const char* const prefixes[] = {"env.", "pagar.", "irl.", "sweep."};
  for (const char* p : prefixes)
    if (key.rfind(p, 0) == 0 && key.size() > std::string(p).size()) return true;
  return false;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_matrix(std::ostream& out, const Table& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_double(m(i, j));
    out << '\n';
  }
}

Table read_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (next_line(in, line)) {
    rows.push_back(parse_numbers(line));
    require(rows.back().size() == rows.front().size(), "matrix rows have different lengths");
  }
  require(!rows.empty(), "matrix is empty");
  Table m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_mdp(std::ostream& out, const TabularMdp& mdp) {
  out << "states " << mdp.n_states() << '\n' << "actions " << mdp.n_actions() << '\n';
  out << "gamma " << format_double(mdp.gamma()) << '\n';
  out << "horizon " << (mdp.horizon() ? std::to_string(*mdp.horizon()) : std::string("none")) << '\n';
  out << "initial";
  for (Eigen::Index s = 0; s < mdp.initial().size(); ++s) out << ' ' << format_double(mdp.initial()(s));
  out << '\n';
  out << "terminal";
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    if (mdp.terminal(s)) out << ' ' << s;
  out << '\n';
  out << "available\n";
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) out << (a ? " " : "") << (mdp.available(s, a) ? 1 : 0);
    out << '\n';
  }
  out << "transition\n";
  write_matrix(out, mdp.transition());
}

TabularMdp read_mdp(std::istream& in) {
  std::size_t n_states = 0, n_actions = 0;
  std::optional<double> gamma;
  std::optional<std::size_t> horizon;
  std::vector<double> initial;
  std::vector<std::size_t> terminal;
  std::vector<bool> available;
  Table transition;
  std::string line;
  auto read_rows = [&](std::size_t count, std::size_t width, const std::string& what) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < count; ++i) {
      if (!next_line(in, line)) throw InvalidArgument("truncated " + what + " block");
      rows.push_back(parse_numbers(line));
      require(rows.back().size() == width, what + " row has the wrong length");
    }
    return rows;
  };
  while (next_line(in, line)) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    std::string rest;
    std::getline(ss, rest);
    const auto nums = [&] { return parse_numbers(rest); };
    if (key == "states") {
      n_states = as_index(nums().at(0), "states");
    } else if (key == "actions") {
      n_actions = as_index(nums().at(0), "actions");
    } else if (key == "gamma") {
      gamma = nums().at(0);
    } else if (key == "horizon") {
      if (trim(rest) != "none") horizon = as_index(nums().at(0), "horizon");
    } else if (key == "initial") {
      initial = nums();
    } else if (key == "terminal") {
      for (double v : nums()) terminal.push_back(as_index(v, "terminal state"));
    } else if (key == "available") {
      require(n_states > 0 && n_actions > 0, "'available' must follow 'states' and 'actions'");
      for (const auto& row : read_rows(n_states, n_actions, "available"))
        for (double v : row) available.push_back(v != 0.0);
    } else if (key == "transition") {
      require(n_states > 0 && n_actions > 0, "'transition' must follow 'states' and 'actions'");
      const auto rows = read_rows(n_states * n_actions, n_states, "transition");
      transition.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_states));
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < n_states; ++j)
          transition(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    } else {
      throw InvalidArgument("unknown MDP file key: " + key);
    }
  }
  require(n_states > 0 && n_actions > 0, "MDP file must give states and actions");
  require(gamma.has_value(), "MDP file must give gamma");
  require(transition.size() > 0, "MDP file must give a transition block");
  require(initial.size() == n_states, "initial distribution has the wrong length");
  std::vector<bool> term(n_states, false);
  for (std::size_t s : terminal) {
    require(s < n_states, "terminal state out of range");
    term[s] = true;
  }
  Vector init = Eigen::Map<const Vector>(initial.data(), static_cast<Eigen::Index>(initial.size()));
  return TabularMdp(n_states, n_actions, std::move(transition), std::move(init), std::move(term), *gamma, horizon,
                    std::move(available));
}

TabularMdp read_mdp_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_mdp(in);
}

void write_demos(std::ostream& out, const DemoSet& demos) {
  for (std::size_t i = 0; i < demos.size(); ++i) {
    out << "w=" << format_double(demos.weight(i));
    for (const Step& st : demos.trajectories[i].steps) {
      out << ' ' << st.state;
      if (st.action != kNoAction) out << ' ' << st.action;
    }
    out << '\n';
  }
}

DemoSet read_demos(std::istream& in) {
  std::vector<Trajectory> trajs;
  std::vector<double> weights;
  bool any_weight = false;
  std::string line;
  while (next_line(in, line)) {
    double w = 1.0;
    if (line.rfind("w=", 0) == 0) {
      const auto space = line.find_first_of(" \t");
      const auto nums = parse_numbers(line.substr(2, space == std::string::npos ? std::string::npos : space - 2));
      require(nums.size() == 1, "malformed demo weight");
      w = nums[0];
      any_weight = true;
      line = space == std::string::npos ? std::string() : line.substr(space);
    }
    const auto nums = parse_numbers(line);
    require(!nums.empty(), "empty demonstration");
    Trajectory t;
    for (std::size_t k = 0; k < nums.size(); k += 2) {
      Step st;
      st.state = as_index(nums[k], "demo state");
      if (k + 1 < nums.size()) st.action = as_index(nums[k + 1], "demo action");
      t.steps.push_back(st);
    }
    trajs.push_back(std::move(t));
    weights.push_back(w);
  }
  require(!trajs.empty(), "demo file holds no demonstrations");
  return DemoSet(std::move(trajs), any_weight ? std::move(weights) : std::vector<double>{});
}

DemoSet read_demos_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_demos(in);
}

Config Config::parse(std::istream& in) {
  Config cfg;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_comment(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (cfg.has(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    cfg.set(key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!has_allowed_prefix(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

std::optional<std::string> Config::lookup(const std::string& key) const {
  used_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return lookup(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto v = lookup(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + *v + "'");
  }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto v = lookup(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
  if (res.ec != std::errc() || res.ptr != v->data() + v->size())
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + *v + "'");
  return out;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + *v + "'");
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& fallback) const {
  const auto v = lookup(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' expects a list of numbers, got '" + *v + "'");
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "' holds an empty list");
  return out;
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
  out << "iter,lambda,irl_loss,j_pagar,regret_estimate";
  for (const auto& name : trace.metric_names) out << ',' << name;
  out << '\n';
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << format_double(r.lambda) << ',' << format_double(r.irl_value) << ','
        << format_double(r.j_pagar) << ',' << format_double(r.regret);
    for (double m : r.metrics) out << ',' << format_double(m);
    out << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace pagar
