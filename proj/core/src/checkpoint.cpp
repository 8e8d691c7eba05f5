#include "groundrl/checkpoint.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "groundrl/errors.hpp"

namespace groundrl {

namespace {

constexpr const char* kGateNames = "bias step prev_in_context has_continuation copied_fraction relevant_open";
constexpr const char* kCopyNames =
    "query_match after_query_match continues_1 continues_2 in_query relative_position is_marker "
    "doc_matches_query";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_array(std::ostringstream& os, const char* name, const std::vector<double>& values) {
  os << name << '[' << values.size() << "] =";
  for (double v : values) os << ' ' << format_double(v);
  os << '\n';
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

long parse_int(const std::string& text, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (errno != 0 || end == text.c_str() || *end != '\0') {
    throw FormatError("checkpoint: key '" + key + "' is not an integer: " + text);
  }
  return v;
}

std::vector<double> parse_array(const std::string& text, std::size_t expected, const std::string& key) {
  std::vector<double> out;
  const char* p = text.c_str();
  while (*p != '\0') {
    while (*p == ' ' || *p == '\t') ++p;
    if (*p == '\0') break;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(p, &end);
    if (end == p || (errno == ERANGE && std::abs(v) > 1.0)) throw FormatError("checkpoint: bad number in '" + key + "'");
    out.push_back(v);
    p = end;
  }
  if (out.size() != expected) {
    throw FormatError("checkpoint: '" + key + "' declares " + std::to_string(expected) + " values, found " +
                      std::to_string(out.size()));
  }
  return out;
}

}  // namespace

std::string write_checkpoint(const Checkpoint& checkpoint) {
  std::ostringstream os;
  os << "# groundrl copy-mixture policy checkpoint\n";
  os << "format_version = " << kCheckpointFormatVersion << '\n';
  os << "policy = copy-mixture\n";
  os << "version_tag = " << checkpoint.params.version << '\n';
  os << "vocab_size = " << checkpoint.vocab.size() << '\n';
  os << "max_docs = " << checkpoint.vocab.max_docs() << '\n';
  os << "gate_features = " << kGateNames << '\n';
  write_array(os, "gate", checkpoint.params.gate);
  write_array(os, "unigram", checkpoint.params.unigram);
  os << "copy_features = " << kCopyNames << '\n';
  write_array(os, "copy", checkpoint.params.copy);
  return os.str();
}

Checkpoint read_checkpoint(std::string_view text) {
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::pair<std::size_t, std::string>> arrays;
  std::istringstream is{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw FormatError("checkpoint: line " + std::to_string(line_no) + " is not 'key = value'");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    const auto bracket = key.find('[');
    if (bracket != std::string::npos) {
      if (key.back() != ']') throw FormatError("checkpoint: malformed array key '" + key + "'");
      const std::string count = key.substr(bracket + 1, key.size() - bracket - 2);
      const std::string name = key.substr(0, bracket);
      arrays[name] = {static_cast<std::size_t>(parse_int(count, name)), value};
    } else {
      scalars[key] = value;
    }
  }

  auto require = [&](const std::string& key) -> const std::string& {
    auto it = scalars.find(key);
    if (it == scalars.end()) throw FormatError("checkpoint: missing key '" + key + "'");
    return it->second;
  };
  const long version = parse_int(require("format_version"), "format_version");
  if (version != kCheckpointFormatVersion) {
    throw FormatError("checkpoint: unsupported format_version " + std::to_string(version));
  }
  if (require("policy") != "copy-mixture") throw FormatError("checkpoint: unknown policy kind");
  if (require("gate_features") != kGateNames || require("copy_features") != kCopyNames) {
    throw FormatError("checkpoint: feature layout differs from this build");
  }

  const Vocabulary vocab(static_cast<int>(parse_int(require("vocab_size"), "vocab_size")),
                         static_cast<int>(parse_int(require("max_docs"), "max_docs")));
  Checkpoint cp{vocab, PolicyParameters::zeros(vocab.size())};
  cp.params.version = require("version_tag");
  auto array = [&](const std::string& name, std::size_t expected) {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw FormatError("checkpoint: missing array '" + name + "'");
    if (it->second.first != expected) {
      throw FormatError("checkpoint: array '" + name + "' has length " + std::to_string(it->second.first) +
                        ", expected " + std::to_string(expected));
    }
    return parse_array(it->second.second, expected, name);
  };
  cp.params.gate = array("gate", kGateFeatureCount);
  cp.params.unigram = array("unigram", static_cast<std::size_t>(vocab.size()));
  cp.params.copy = array("copy", kCopyFeatureCount);
  if (!cp.params.all_finite()) throw FormatError("checkpoint: non-finite parameter");
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << write_checkpoint(checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_checkpoint(ss.str());
}

}  // namespace groundrl
