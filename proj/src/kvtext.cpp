#include "scod/kvtext.hpp"

#include "scod/error.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace scod {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

namespace {

std::string where(const KvSection& s) {
  std::string w = s.name.empty() ? std::string("top level") : "[" + s.name + (s.arg.empty() ? "" : " " + s.arg) + "]";
  return w + " (line " + std::to_string(s.line) + ")";
}

double to_number(std::string_view token) {
  double v = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorKind::Format, "not a number: '" + std::string(token) + "'");
  }
  return v;
}

}  // namespace

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == ',' || text[i] == ';')) ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t' && text[j] != ',' && text[j] != ';') ++j;
    if (j > i) out.push_back(to_number(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

bool KvSection::has(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return true;
  }
  return false;
}

const std::string& KvSection::get(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  throw Error(ErrorKind::Format, "missing key '" + std::string(key) + "' in " + where(*this));
}

std::string KvSection::get_or(std::string_view key, std::string fallback) const {
  return has(key) ? get(key) : std::move(fallback);
}

double KvSection::number(std::string_view key) const {
  const auto v = parse_numbers(get(key));
  if (v.size() != 1) throw Error(ErrorKind::Format, "key '" + std::string(key) + "' expects one number");
  return v[0];
}

double KvSection::number_or(std::string_view key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long KvSection::integer(std::string_view key) const {
  const double v = number(key);
  if (v != std::floor(v)) throw Error(ErrorKind::Format, "key '" + std::string(key) + "' expects an integer");
  return static_cast<long>(v);
}

long KvSection::integer_or(std::string_view key, long fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::vector<double> KvSection::numbers(std::string_view key) const { return parse_numbers(get(key)); }

void KvSection::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : entries) {
    if (!allowed.count(k)) throw Error(ErrorKind::Format, "unknown key '" + k + "' in " + where(*this));
  }
}

void KvSection::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

std::vector<KvSection> parse_kv(std::string_view text) {
  std::vector<KvSection> sections(1);
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorKind::Format, "bad section header at line " + std::to_string(line_no));
      const std::string inner = trim(std::string_view(line).substr(1, line.size() - 2));
      const auto space = inner.find_first_of(" \t");
      KvSection s;
      s.name = inner.substr(0, space);
      s.arg = space == std::string::npos ? "" : trim(std::string_view(inner).substr(space));
      s.line = line_no;
      if (s.name.empty()) throw Error(ErrorKind::Format, "empty section name at line " + std::to_string(line_no));
      sections.push_back(std::move(s));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Format, "expected key = value at line " + std::to_string(line_no));
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::Format, "empty key at line " + std::to_string(line_no));
    KvSection& cur = sections.back();
    if (cur.has(key)) throw Error(ErrorKind::Format, "duplicate key '" + key + "' at line " + std::to_string(line_no));
    cur.entries.emplace_back(key, value);
  }
  return sections;
}

std::string format_kv(const std::vector<KvSection>& sections) {
  std::ostringstream out;
  bool first = true;
  for (const KvSection& s : sections) {
    if (s.name.empty() && s.entries.empty()) continue;
    if (!s.name.empty()) {
      if (!first) out << '\n';
      out << '[' << s.name << (s.arg.empty() ? "" : " " + s.arg) << "]\n";
    }
    for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
    first = false;
  }
  return out.str();
}

}  // namespace scod
