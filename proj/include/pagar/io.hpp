#pragma once

// Plain-text formats: MDP files, numeric matrices, demonstrations, flat
// key-value configs and CSV traces.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pagar/irl.hpp"
#include "pagar/mdp.hpp"
#include "pagar/solver.hpp"

namespace pagar {

// MDP file:
//   states N / actions A / gamma G / horizon H|none
//   initial p_0 ... p_{N-1}
//   terminal s ...          (optional)
//   available               (optional, then N rows of A zeros/ones)
//   transition              (then N*A rows of N probabilities, row s*A+a)
// Blank lines and '#' comments are ignored.
void write_mdp(std::ostream& out, const TabularMdp& mdp);
TabularMdp read_mdp(std::istream& in);
TabularMdp read_mdp_file(const std::filesystem::path& path);

// Whitespace-separated rows, full double precision.
void write_matrix(std::ostream& out, const Table& m);
Table read_matrix(std::istream& in);

// One demonstration per line: "s0 a0 s1 a1 ... sT [aT]", optionally prefixed
// by "w=<weight>".
void write_demos(std::ostream& out, const DemoSet& demos);
DemoSet read_demos(std::istream& in);
DemoSet read_demos_file(const std::filesystem::path& path);

// Flat "key = value" config. Keys are either top level (seed, out, workers,
// log_level, command) or carry one of the prefixes env., pagar., irl., sweep.
class Config {
 public:
  static Config parse(std::istream& in);
  static Config from_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list of doubles.
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

  // Keys never read through a getter; the CLI rejects these as typos.
  std::vector<std::string> unused() const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::optional<std::string> lookup(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

// Column order: iter, lambda, irl_loss, j_pagar, regret_estimate, then metrics.
void write_trace_csv(std::ostream& out, const TrainTrace& trace);

// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Shortest round-tripping decimal form.
std::string format_double(double v);

}  // namespace pagar
