#pragma once

// Record-oriented record reading shared by the text-file parsers.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "chargeprice/error.hpp"

namespace chargeprice::detail {

struct Record {
  int number;
  std::vector<std::string> fields;
};

inline std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits into data records and <TAG> value metadata; drops comments.
inline std::vector<Record> tokenize(std::istream& in, std::map<std::string, std::string>* meta,
                           const std::string& source) {
  std::vector<Record> out;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    auto cut = raw.find('~');
    if (cut != std::string::npos) raw.erase(cut);
    std::string s = strip(raw);
    if (s.empty()) continue;
    if (s.front() == '<') {
      auto close = s.find('>');
      if (close == std::string::npos) throw ParseError(source, number, "unterminated metadata tag");
      if (!meta) throw ParseError(source, number, "metadata not allowed in this file");
      (*meta)[s.substr(1, close - 1)] = strip(s.substr(close + 1));
      continue;
    }
    std::replace(s.begin(), s.end(), ';', ' ');
    std::istringstream ss(s);
    Record line{number, {}};
    for (std::string tok; ss >> tok;) line.fields.push_back(tok);
    if (!line.fields.empty()) out.push_back(std::move(line));
  }
  return out;
}

inline double to_double(const std::string& tok, const std::string& source, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw ParseError(source, line, "expected a number, got '" + tok + "'");
  return v;
}

inline int to_int(const std::string& tok, const std::string& source, int line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(source, line, "expected an integer, got '" + tok + "'");
  return v;
}

inline void expect_fields(const Record& l, std::size_t n, const std::string& source) {
  if (l.fields.size() < n)
    throw ParseError(source, l.number,
                     "expected " + std::to_string(n) + " fields, got " + std::to_string(l.fields.size()));
}

inline std::ifstream open(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open file " + p.string());
  return in;
}

}  // namespace chargeprice::detail
