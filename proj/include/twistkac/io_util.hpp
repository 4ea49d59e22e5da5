#ifndef TWISTKAC_IO_UTIL_HPP
#define TWISTKAC_IO_UTIL_HPP

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace twistkac {

/// Floats are printed with 17 significant digits so every output round-trips.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Minimal ordered JSON writer. nlohmann::json is used for parsing; output
/// goes through this writer to keep the 17-digit float contract.
class JsonWriter {
 public:
  struct Value;
  using Object = std::vector<std::pair<std::string, Value>>;
  using Array = std::vector<Value>;

  struct Value {
    std::variant<std::nullptr_t, bool, long long, double, std::string, Object, Array> v;
    Value() : v(nullptr) {}
    Value(bool b) : v(b) {}
    template <class T>
      requires(std::is_integral_v<T> && !std::is_same_v<T, bool>)
    Value(T i) : v(static_cast<long long>(i)) {}
    Value(double d) : v(d) {}
    Value(const char* s) : v(std::string(s)) {}
    Value(std::string s) : v(std::move(s)) {}
    Value(Object o) : v(std::move(o)) {}
    Value(Array a) : v(std::move(a)) {}
  };

  static std::string dump(const Value& value, int indent = 0) {
    std::string out;
    write(value, out, indent, 0);
    out.push_back('\n');
    return out;
  }

 private:
  static void write_escaped(const std::string& s, std::string& out) {
    out.push_back('"');
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out.push_back(c);
      }
    }
    out.push_back('"');
  }

  static void write(const Value& value, std::string& out, int indent, int depth) {
    const std::string pad(indent * depth, ' ');
    const std::string pad1(indent * (depth + 1), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::nullptr_t>) {
            out += "null";
          } else if constexpr (std::is_same_v<T, bool>) {
            out += v ? "true" : "false";
          } else if constexpr (std::is_same_v<T, long long>) {
            out += std::to_string(v);
          } else if constexpr (std::is_same_v<T, double>) {
            out += fmt17(v);
          } else if constexpr (std::is_same_v<T, std::string>) {
            write_escaped(v, out);
          } else if constexpr (std::is_same_v<T, Object>) {
            out += "{";
            bool first = true;
            for (const auto& [k, val] : v) {
              if (!first) out += ",";
              first = false;
              out += nl;
              out += pad1;
              write_escaped(k, out);
              out += indent > 0 ? ": " : ":";
              write(val, out, indent, depth + 1);
            }
            out += nl;
            out += pad;
            out += "}";
          } else if constexpr (std::is_same_v<T, Array>) {
            out += "[";
            bool first = true;
            for (const auto& val : v) {
              if (!first) out += indent > 0 ? ", " : ",";
              first = false;
              write(val, out, indent, depth + 1);
            }
            out += "]";
          }
        },
        value.v);
  }
};

}  // namespace twistkac

#endif
