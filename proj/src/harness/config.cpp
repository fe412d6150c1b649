#include "memkit/harness/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "memkit/errors.hpp"

namespace memkit::harness {

using nlohmann::json;

namespace {

struct Cursor {
  const std::string& s;
  std::size_t i = 0;
  int line = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ArgumentError("config line " + std::to_string(line) + ": " + what);
  }
  void skip_ws() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
  bool at_end_of_line() {
    skip_ws();
    return i >= s.size() || s[i] == '#';
  }
};

bool bare_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

std::vector<std::string> parse_key(Cursor& c) {
  std::vector<std::string> parts;
  for (;;) {
    c.skip_ws();
    std::string part;
    if (c.i < c.s.size() && c.s[c.i] == '"') {
      const std::size_t start = c.i++;
      while (c.i < c.s.size() && c.s[c.i] != '"') c.i += c.s[c.i] == '\\' ? 2 : 1;
      if (c.i >= c.s.size()) c.fail("unterminated quoted key");
      part = json::parse(c.s.substr(start, ++c.i - start)).get<std::string>();
    } else {
      while (c.i < c.s.size() && bare_char(c.s[c.i])) part += c.s[c.i++];
      if (part.empty()) c.fail("expected a key");
    }
    parts.push_back(part);
    c.skip_ws();
    if (c.i < c.s.size() && c.s[c.i] == '.') {
      ++c.i;
      continue;
    }
    return parts;
  }
}

json parse_value(Cursor& c) {
  c.skip_ws();
  if (c.i >= c.s.size()) c.fail("missing value");
  const char ch = c.s[c.i];
  if (ch == '"') {
    const std::size_t start = c.i++;
    while (c.i < c.s.size() && c.s[c.i] != '"') c.i += c.s[c.i] == '\\' ? 2 : 1;
    if (c.i >= c.s.size()) c.fail("unterminated string");
    // TOML basic strings share JSON's escape syntax.
    try {
      return json::parse(c.s.substr(start, ++c.i - start));
    } catch (const json::exception&) {
      c.fail("bad string escape");
    }
  }
  if (ch == '[') {
    ++c.i;
    json arr = json::array();
    for (;;) {
      c.skip_ws();
      if (c.i < c.s.size() && c.s[c.i] == ']') {
        ++c.i;
        return arr;
      }
      arr.push_back(parse_value(c));
      c.skip_ws();
      if (c.i < c.s.size() && c.s[c.i] == ',') {
        ++c.i;
        continue;
      }
      if (c.i < c.s.size() && c.s[c.i] == ']') {
        ++c.i;
        return arr;
      }
      c.fail("expected ',' or ']' in array");
    }
  }
  std::string tok;
  while (c.i < c.s.size() && !std::isspace(static_cast<unsigned char>(c.s[c.i])) && c.s[c.i] != ',' &&
         c.s[c.i] != ']' && c.s[c.i] != '#')
    tok += c.s[c.i++];
  if (tok == "true") return true;
  if (tok == "false") return false;
  std::string digits;
  for (char d : tok)
    if (d != '_') digits += d;
  if (digits.empty()) c.fail("missing value");
  const bool is_float = digits.find_first_of(".eE") != std::string::npos;
  try {
    std::size_t used = 0;
    if (is_float) {
      const double v = std::stod(digits, &used);
      if (used == digits.size()) return v;
    } else if (digits[0] == '-') {
      const long long v = std::stoll(digits, &used);
      if (used == digits.size()) return v;
    } else {
      const unsigned long long v = std::stoull(digits, &used);
      if (used == digits.size()) return v;
    }
  } catch (const std::exception&) {
  }
  c.fail("bad value '" + tok + "'");
}

json* descend(json& root, const std::vector<std::string>& path, std::size_t count, Cursor& c) {
  json* node = &root;
  for (std::size_t k = 0; k < count; ++k) {
    json& next = (*node)[path[k]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) c.fail("'" + path[k] + "' is not a table");
    node = &next;
  }
  return node;
}

void emit_table(std::ostringstream& out, const json& table, const std::string& prefix) {
  for (const auto& [k, v] : table.items())
    if (!v.is_object()) out << k << " = " << v.dump() << "\n";
  for (const auto& [k, v] : table.items()) {
    if (!v.is_object()) continue;
    const std::string name = prefix.empty() ? k : prefix + "." + k;
    out << "\n[" << name << "]\n";
    emit_table(out, v, name);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

json parse_toml(const std::string& text) {
  json root = json::object();
  json* table = &root;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    Cursor c{raw, 0, line_no};
    if (c.at_end_of_line()) continue;
    if (raw[c.i] == '[') {
      ++c.i;
      const auto path = parse_key(c);
      if (c.i >= raw.size() || raw[c.i] != ']') c.fail("expected ']'");
      ++c.i;
      if (!c.at_end_of_line()) c.fail("trailing text after table header");
      table = descend(root, path, path.size(), c);
      continue;
    }
    const auto key = parse_key(c);
    if (c.i >= raw.size() || raw[c.i] != '=') c.fail("expected '='");
    ++c.i;
    json value = parse_value(c);
    if (!c.at_end_of_line()) c.fail("trailing text after value");
    json* parent = descend(*table, key, key.size() - 1, c);
    if (parent->contains(key.back())) c.fail("duplicate key '" + key.back() + "'");
    (*parent)[key.back()] = std::move(value);
  }
  return root;
}

std::string to_toml(const json& doc) {
  if (!doc.is_object()) throw ArgumentError("to_toml: document must be a table");
  std::ostringstream out;
  emit_table(out, doc, "");
  std::string s = out.str();
  if (!s.empty() && s[0] == '\n') s.erase(0, 1);
  return s;
}

RunConfig config_from_json(const json& doc_in, bool desk_scale) {
  json doc = doc_in;
  if (desk_scale) {
    if (!doc.contains("desk_scale")) throw ArgumentError("config has no [desk_scale] overlay");
    doc.merge_patch(doc.at("desk_scale"));
  }
  doc.erase("desk_scale");
  for (const auto& [k, v] : doc.items())
    if (k != "run" && k != "model" && k != "task" && k != "optimizer")
      throw ArgumentError("config: unknown table [" + k + "]");
  for (const char* t : {"run", "model", "task"})
    if (!doc.contains(t) || !doc.at(t).is_object()) throw ArgumentError(std::string("config: missing [") + t + "]");
  const json& run = doc.at("run");
  for (const auto& [k, v] : run.items())
    if (k != "name" && k != "seed" && k != "iterations" && k != "batch" && k != "eval_every" &&
        k != "eval_samples" && k != "out_dir" && k != "metrics")
      throw ArgumentError("config: unknown run key '" + k + "'");
  for (const char* k : {"name", "seed", "iterations", "batch"})
    if (!run.contains(k)) throw ArgumentError(std::string("config: run.") + k + " is required");
  for (const char* t : {"model", "task"})
    if (!doc.at(t).contains("kind")) throw ArgumentError(std::string("config: ") + t + ".kind is required");

  RunConfig cfg;
  try {
    cfg.name = run.at("name").get<std::string>();
    cfg.seed = run.at("seed").get<std::uint64_t>();
    cfg.iterations = run.at("iterations").get<std::size_t>();
    cfg.batch = run.at("batch").get<std::size_t>();
    cfg.eval_every = get_or<std::size_t>(run, "eval_every", 100);
    cfg.eval_samples = get_or<std::size_t>(run, "eval_samples", 1000);
    cfg.out_dir = get_or<std::string>(run, "out_dir", "runs/" + cfg.name);
    cfg.metrics = get_or<std::vector<std::string>>(run, "metrics", {});
    cfg.model = doc.at("model");
    cfg.task = doc.at("task");
    if (doc.contains("optimizer")) {
      const json& o = doc.at("optimizer");
      for (const auto& [k, v] : o.items())
        if (k != "kind" && k != "lr" && k != "clip")
          throw ArgumentError("config: unknown optimizer key '" + k + "'");
      cfg.optimizer = optim::default_spec(optim::parse_optimizer(get_or<std::string>(o, "kind", "adam")));
      cfg.optimizer.lr = get_or<double>(o, "lr", cfg.optimizer.lr);
      cfg.optimizer.clip = get_or<double>(o, "clip", cfg.optimizer.clip);
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: wrong value type: ") + e.what());
  }
  if (cfg.batch < 1 || cfg.eval_every < 1) throw ArgumentError("config: batch and eval_every must be >= 1");
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json run = {{"name", cfg.name},           {"seed", cfg.seed},
              {"iterations", cfg.iterations}, {"batch", cfg.batch},
              {"eval_every", cfg.eval_every}, {"eval_samples", cfg.eval_samples},
              {"out_dir", cfg.out_dir}};
  if (!cfg.metrics.empty()) run["metrics"] = cfg.metrics;
  json opt = {{"kind", optim::to_string(cfg.optimizer.kind)}, {"lr", cfg.optimizer.lr}, {"clip", cfg.optimizer.clip}};
  return {{"run", run}, {"model", cfg.model}, {"task", cfg.task}, {"optimizer", opt}};
}

std::string config_text(const RunConfig& cfg) { return to_toml(config_to_json(cfg)); }

RunConfig load_config(const std::filesystem::path& path, bool desk_scale) {
  std::ifstream in(path);
  if (!in) throw IoError("file not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(parse_toml(buf.str()), desk_scale);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  json doc = config_to_json(cfg);
  doc["run"].erase("out_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_toml(doc))));
  return buf;
}

}  // namespace memkit::harness
