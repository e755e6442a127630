#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scod {

/// One `[name arg]` block of a sectioned key-value text file. Keys before the
/// first header land in a section with an empty name.
struct KvSection {
  std::string name;
  std::string arg;
  int line = 0;
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(std::string_view key) const;
  const std::string& get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string fallback) const;
  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;
  long integer(std::string_view key) const;
  long integer_or(std::string_view key, long fallback) const;
  std::vector<double> numbers(std::string_view key) const;

  /// Throws Error(Format) naming the first key not in `allowed`.
  void require_known(const std::set<std::string>& allowed) const;
  void set(const std::string& key, const std::string& value);
};

/// Grammar: `#` comments, blank lines, `[name]` or `[name arg]` headers and
/// `key = value` lines. Duplicate keys inside one section are rejected.
std::vector<KvSection> parse_kv(std::string_view text);

std::string format_kv(const std::vector<KvSection>& sections);

std::vector<double> parse_numbers(std::string_view text);
std::string trim(std::string_view s);

}  // namespace scod
