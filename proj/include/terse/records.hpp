#pragma once

// Line-delimited record IO. One JSON object per line, UTF-8. Parse or
// invariant failures surface as SchemaError carrying the 1-based line number.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "terse/core.hpp"

namespace terse {

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <class T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const ValidationError& e) {
      throw SchemaError(lineno, e.what());
    } catch (const json::exception& e) {
      throw SchemaError(lineno, e.what());
    }
  }
  return out;
}

template <class T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const T& r : records) {
    out << json(r).dump() << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
  return json::parse(slurp(path));
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace terse
