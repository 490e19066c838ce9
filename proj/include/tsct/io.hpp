#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>

#include <json.hpp>

#include "errors.hpp"

namespace tsct {

/// Shortest form that still carries 17 significant digits.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

  inline void write_json(std::string& out, const nlohmann::json& j, int indent, int depth) {
    auto newline = [&](int d) {
      if (indent >= 0) {
        out += '\n';
        out.append(static_cast<std::size_t>(indent * d), ' ');
      }
    };
    const char* colon = indent >= 0 ? ": " : ":";
    switch (j.type()) {
      case nlohmann::json::value_t::object: {
        if (j.empty()) {
          out += "{}";
          return;
        }
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
          if (!first) { out += ','; }
          first = false;
          newline(depth + 1);
          out += nlohmann::json(it.key()).dump();
          out += colon;
          write_json(out, it.value(), indent, depth + 1);
        }
        newline(depth);
        out += '}';
        return;
      }
      case nlohmann::json::value_t::array: {
        if (j.empty()) {
          out += "[]";
          return;
        }
        out += '[';
        bool first = true;
        for (const auto& v : j) {
          if (!first) { out += ','; }
          first = false;
          newline(depth + 1);
          write_json(out, v, indent, depth + 1);
        }
        newline(depth);
        out += ']';
        return;
      }
      case nlohmann::json::value_t::number_float: {
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
          out += "null";
          return;
        }
        std::string s = format_double(v);
        if (s.find_first_of(".e") == std::string::npos) { s += ".0"; }
        out += s;
        return;
      }
      default: out += j.dump();
    }
  }

} // namespace detail

/// Like json::dump, but floats carry 17 significant digits.
inline std::string json_text(const nlohmann::json& j, int indent = -1) {
  std::string out;
  detail::write_json(out, j, indent, 0);
  return out;
}

/// Write to a sibling temp file, then rename over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
  const auto tag = std::hash<std::thread::id>{}(std::this_thread::get_id());
  const std::filesystem::path tmp = path.string() + ".tmp" + std::to_string(tag % 1000000);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) { throw IoError("cannot write " + tmp.string()); }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) { throw IoError("write failed for " + tmp.string()); }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move temp file onto " + path.string());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) { write_file_atomic(path, text); }

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError("cannot open " + path.string()); }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace tsct
