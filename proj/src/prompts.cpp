// SPDX-License-Identifier: Apache-2.0
#include "synthpose/prompts.hpp"

#include "synthpose/common.hpp"
#include "synthpose/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace synthpose {

extern const char* const kDefaultAttributesJson;  // generated from data/default_attributes.json

namespace {

const std::vector<std::string>& canonical_attributes() {
  static const std::vector<std::string> names = {
      "age group",   "ethnicity",      "body type",        "hair length",
      "hair color",  "hair type",      "clothing color",   "clothing pattern"};
  return names;
}

// JSON objects are sorted by nlohmann; keep file order with ordered_json.
AttributeSpace space_from_json_text(const std::string& text, const std::string& origin) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw SchemaError(origin + ": " + e.what());
  }
  if (!doc.is_object()) throw SchemaError(origin + ": attribute space must be a JSON object");
  AttributeSpace space;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!it.value().is_array()) throw SchemaError(origin + ": '" + it.key() + "' must be a list");
    std::vector<std::string> values;
    for (const auto& v : it.value()) values.push_back(v.get<std::string>());
    space.attributes.emplace_back(it.key(), std::move(values));
  }
  space.validate();
  return space;
}

std::string generic_sentence(const std::map<std::string, std::string>& assignment,
                             const std::string& scenario) {
  std::ostringstream os;
  os << scenario << " athlete";
  const char* sep = ": ";
  for (const auto& [k, v] : assignment) {
    os << sep << k << " " << v;
    sep = ", ";
  }
  return os.str();
}

}  // namespace

void AttributeSpace::validate() const {
  std::set<std::string> names;
  for (const auto& [name, values] : attributes) {
    if (!names.insert(name).second) throw SchemaError("attribute '" + name + "' listed twice");
    if (values.empty()) throw SchemaError("attribute '" + name + "' has no values");
    std::set<std::string> seen;
    for (const auto& v : values) {
      if (!seen.insert(v).second)
        throw SchemaError("attribute '" + name + "' repeats value '" + v + "'");
    }
  }
}

const std::vector<std::string>& AttributeSpace::values(const std::string& name) const {
  for (const auto& [n, v] : attributes)
    if (n == name) return v;
  throw InvalidArgument("unknown attribute '" + name + "'");
}

AttributeSpace default_attribute_space() {
  return space_from_json_text(kDefaultAttributesJson, "default attribute space");
}

AttributeSpace load_attribute_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return space_from_json_text(ss.str(), path.string());
}

int default_stride(int length) {
  for (int s = 2; s < length; ++s)
    if (std::gcd(s, length) == 1) return s;
  return 1;
}

std::string render_sentence(const std::map<std::string, std::string>& assignment,
                            const std::string& scenario) {
  for (const auto& name : canonical_attributes()) {
    if (!assignment.contains(name))
      throw InvalidArgument("render_sentence: assignment is missing attribute '" + name + "'");
  }
  const auto& a = assignment;
  std::ostringstream os;
  os << a.at("age group") << " " << a.at("ethnicity") << " " << a.at("body type")
     << " person with " << a.at("hair length") << " " << a.at("hair color") << " "
     << a.at("hair type") << " hair, wearing a " << a.at("clothing color") << " "
     << a.at("clothing pattern") << " " << scenario << " uniform";
  for (const auto& [k, v] : a) {
    if (std::find(canonical_attributes().begin(), canonical_attributes().end(), k) ==
        canonical_attributes().end())
      os << ", " << k << " " << v;
  }
  return os.str();
}

std::vector<PromptTemplate> generate_prompts(const AttributeSpace& space, int n,
                                             const std::string& scenario,
                                             const std::optional<std::vector<int>>& strides,
                                             std::uint64_t seed) {
  space.validate();
  if (n < 1) throw InvalidArgument("generate_prompts: n must be >= 1");
  const std::size_t count = space.attributes.size();
  std::vector<int> step(count);
  if (strides) {
    if (strides->size() != count)
      throw InvalidArgument("generate_prompts: expected " + std::to_string(count) + " strides");
    for (std::size_t a = 0; a < count; ++a) {
      const int len = static_cast<int>(space.attributes[a].second.size());
      const int s = (*strides)[a];
      if (s < 1 || std::gcd(s, len) != 1)
        throw InvalidArgument("generate_prompts: stride " + std::to_string(s) +
                              " for attribute '" + space.attributes[a].first +
                              "' is not coprime with its " + std::to_string(len) + " values");
      step[a] = s;
    }
  } else {
    for (std::size_t a = 0; a < count; ++a)
      step[a] = default_stride(static_cast<int>(space.attributes[a].second.size()));
  }

  std::mt19937_64 rng(seed);
  std::vector<int> offset(count);
  for (std::size_t a = 0; a < count; ++a) {
    const auto len = space.attributes[a].second.size();
    offset[a] = static_cast<int>(rng() % len);
  }

  bool canonical = true;
  for (const auto& name : canonical_attributes()) {
    bool found = false;
    for (const auto& [k, v] : space.attributes) found = found || k == name;
    canonical = canonical && found;
  }

  std::vector<PromptTemplate> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    PromptTemplate p;
    p.index = i;
    p.scenario = scenario;
    for (std::size_t a = 0; a < count; ++a) {
      const auto& values = space.attributes[a].second;
      const auto len = static_cast<long long>(values.size());
      const long long idx = (offset[a] + static_cast<long long>(i) * step[a]) % len;
      p.assignment[space.attributes[a].first] = values[static_cast<std::size_t>(idx)];
    }
    p.sentence = canonical ? render_sentence(p.assignment, scenario)
                           : generic_sentence(p.assignment, scenario);
    out.push_back(std::move(p));
  }
  return out;
}

std::string prompt_to_json_line(const PromptTemplate& prompt) {
  json j;
  j["index"] = prompt.index;
  j["scenario"] = prompt.scenario;
  j["assignment"] = prompt.assignment;
  j["sentence"] = prompt.sentence;
  return j.dump();
}

PromptTemplate prompt_from_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    PromptTemplate p;
    p.index = j.at("index").get<int>();
    p.scenario = j.at("scenario").get<std::string>();
    p.assignment = j.at("assignment").get<std::map<std::string, std::string>>();
    p.sentence = j.at("sentence").get<std::string>();
    return p;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("prompt line: ") + e.what());
  }
}

void write_prompts_jsonl(const std::vector<PromptTemplate>& prompts,
                         const std::filesystem::path& path) {
  std::string text;
  for (const auto& p : prompts) text += prompt_to_json_line(p) + "\n";
  write_text_file(text, path);
}

std::vector<PromptTemplate> read_prompts_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<PromptTemplate> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(prompt_from_json_line(line));
  }
  return out;
}

}  // namespace synthpose
