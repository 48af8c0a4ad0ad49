// SPDX-License-Identifier: Apache-2.0
#include "synthpose/common.hpp"
#include "synthpose/prompts.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

using namespace synthpose;

namespace {

AttributeSpace make_space(const std::vector<std::pair<std::string, int>>& lengths) {
  AttributeSpace s;
  for (const auto& [name, len] : lengths) {
    std::vector<std::string> values;
    for (int i = 0; i < len; ++i) values.push_back(name + std::to_string(i));
    s.attributes.emplace_back(name, values);
  }
  return s;
}

std::map<std::string, int> value_counts(const std::vector<PromptTemplate>& prompts, const std::string& attr) {
  std::map<std::string, int> c;
  for (const auto& p : prompts) ++c[p.assignment.at(attr)];
  return c;
}

std::map<std::string, std::string> full_assignment() {
  return {{"age group", "young adult"}, {"ethnicity", "Nordic"},       {"body type", "athletic"},
          {"hair length", "short"},     {"hair color", "auburn"},      {"hair type", "curly"},
          {"clothing color", "teal"},   {"clothing pattern", "striped"}};
}

}  // namespace

TEST_CASE("default attribute space") {
  const AttributeSpace s = default_attribute_space();
  CHECK(s.attributes.size() == 8);
  for (const char* name : {"ethnicity", "hair type", "hair length", "hair color", "clothing color",
                           "clothing pattern", "body type", "age group"})
    CHECK_FALSE(s.values(name).empty());
}

TEST_CASE("default_stride") {
  CHECK(default_stride(1) == 1);
  CHECK(default_stride(2) == 1);
  CHECK(default_stride(3) == 2);
  CHECK(default_stride(4) == 3);
  CHECK(default_stride(6) == 5);
  CHECK(default_stride(8) == 3);
  CHECK(default_stride(9) == 2);
}

TEST_CASE("generate_prompts: single attribute full cycle") {
  const AttributeSpace s = make_space({{"a", 4}});
  const auto prompts = generate_prompts(s, 4, "tennis", std::vector<int>{1}, 3);
  const auto counts = value_counts(prompts, "a");
  CHECK(counts.size() == 4);
  for (const auto& [v, c] : counts) CHECK(c == 1);
}

TEST_CASE("generate_prompts: coprime lengths enumerate every pair") {
  const AttributeSpace s = make_space({{"a", 2}, {"b", 3}});
  const auto prompts = generate_prompts(s, 6, "tennis", std::vector<int>{1, 1}, 11);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : prompts) seen.emplace(p.assignment.at("a"), p.assignment.at("b"));
  CHECK(seen.size() == 6);
}

TEST_CASE("generate_prompts: n = 8 over 4 values gives two of each") {
  const AttributeSpace s = make_space({{"a", 4}});
  for (std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    const auto counts = value_counts(generate_prompts(s, 8, "golf", std::nullopt, seed), "a");
    CHECK(counts.size() == 4);
    for (const auto& [v, c] : counts) CHECK(c == 2);
  }
}

TEST_CASE("generate_prompts: balance on the default space for many n") {
  const AttributeSpace s = default_attribute_space();
  for (int n : {1, 7, 50, 119, 360}) {
    const auto prompts = generate_prompts(s, n, "baseball", std::nullopt, 5);
    for (const auto& [name, values] : s.attributes) {
      const auto counts = value_counts(prompts, name);
      const double ideal = static_cast<double>(n) / static_cast<double>(values.size());
      for (const auto& v : values) {
        const int c = counts.contains(v) ? counts.at(v) : 0;
        CHECK(std::abs(c - ideal) <= 1.0);
      }
    }
  }
}

TEST_CASE("generate_prompts: tuple period equals the lcm of pairwise coprime lengths") {
  const AttributeSpace s = make_space({{"a", 2}, {"b", 3}, {"c", 5}, {"d", 7}});
  const auto prompts = generate_prompts(s, 420, "run", std::vector<int>{1, 1, 1, 1}, 9);
  std::set<std::map<std::string, std::string>> first;
  for (int i = 0; i < 210; ++i) first.insert(prompts[i].assignment);
  CHECK(first.size() == 210);
  for (int i = 0; i < 210; ++i) CHECK(prompts[i].assignment == prompts[i + 210].assignment);
}

TEST_CASE("generate_prompts: determinism and seed dependence") {
  const AttributeSpace s = default_attribute_space();
  const auto a = generate_prompts(s, 30, "tennis", std::nullopt, 42);
  const auto b = generate_prompts(s, 30, "tennis", std::nullopt, 42);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].sentence == b[i].sentence);
    CHECK(a[i].index == static_cast<int>(i));
  }
  const auto c = generate_prompts(s, 30, "tennis", std::nullopt, 43);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].sentence != c[i].sentence;
  CHECK(differs);
}

TEST_CASE("generate_prompts: errors") {
  const AttributeSpace s = make_space({{"a", 4}, {"hair", 6}});
  CHECK_THROWS_AS(generate_prompts(s, 0, "x", std::nullopt, 1), InvalidArgument);
  CHECK_THROWS_WITH_AS(generate_prompts(s, 5, "x", std::vector<int>{1, 3}, 1),
                       doctest::Contains("'hair'"), InvalidArgument);
  CHECK_THROWS_AS(generate_prompts(s, 5, "x", std::vector<int>{1}, 1), InvalidArgument);
}

TEST_CASE("render_sentence") {
  const auto a = full_assignment();
  const std::string s = render_sentence(a, "tennis");
  CHECK_FALSE(s.empty());
  for (const auto& [k, v] : a) CHECK(s.find(v) != std::string::npos);
  CHECK(s.find("tennis") != std::string::npos);
  CHECK(render_sentence(a, "tennis") == s);
  auto missing = a;
  missing.erase("hair color");
  CHECK_THROWS_WITH_AS(render_sentence(missing, "tennis"), doctest::Contains("hair color"),
                       InvalidArgument);
}

TEST_CASE("attribute space files") {
  const auto dir = std::filesystem::temp_directory_path();
  SUBCASE("file order is preserved") {
    const auto path = dir / "synthpose_test_space.json";
    std::ofstream(path) << R"({"zeta": ["a", "b"], "alpha": ["c"]})";
    const AttributeSpace s = load_attribute_space(path);
    REQUIRE(s.attributes.size() == 2);
    CHECK(s.attributes[0].first == "zeta");
  }
  SUBCASE("duplicate values are rejected") {
    const auto path = dir / "synthpose_test_space_dup.json";
    std::ofstream(path) << R"({"a": ["x", "x"]})";
    CHECK_THROWS_AS(load_attribute_space(path), SchemaError);
  }
  SUBCASE("empty list is rejected") {
    const auto path = dir / "synthpose_test_space_empty.json";
    std::ofstream(path) << R"({"a": []})";
    CHECK_THROWS_AS(load_attribute_space(path), SchemaError);
  }
}

TEST_CASE("prompt JSONL round-trip") {
  const auto prompts = generate_prompts(default_attribute_space(), 12, "soccer", std::nullopt, 2);
  const auto path = std::filesystem::temp_directory_path() / "synthpose_test_prompts.jsonl";
  write_prompts_jsonl(prompts, path);
  const auto back = read_prompts_jsonl(path);
  REQUIRE(back.size() == prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    CHECK(back[i].assignment == prompts[i].assignment);
    CHECK(back[i].sentence == prompts[i].sentence);
    CHECK(back[i].index == prompts[i].index);
  }
}
