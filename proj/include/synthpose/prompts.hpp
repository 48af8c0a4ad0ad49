// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace synthpose {

/// Ordered attribute name -> ordered candidate values.
struct AttributeSpace {
  std::vector<std::pair<std::string, std::vector<std::string>>> attributes;

  void validate() const;
  [[nodiscard]] const std::vector<std::string>& values(const std::string& name) const;
};

struct PromptTemplate {
  std::map<std::string, std::string> assignment;
  std::string scenario;
  std::string sentence;
  int index = 0;
};

/// Attribute space shipped in data/default_attributes.json (compiled in).
AttributeSpace default_attribute_space();

AttributeSpace load_attribute_space(const std::filesystem::path& path);

/// Smallest stride > 1 coprime to `length`, or 1 when none exists.
int default_stride(int length);

/// Cyclic-iterator prompt generation: prompt i takes value
/// (offset_a + i * stride_a) mod len_a for every attribute a.
std::vector<PromptTemplate> generate_prompts(const AttributeSpace& space, int n,
                                             const std::string& scenario,
                                             const std::optional<std::vector<int>>& strides,
                                             std::uint64_t seed);

std::string render_sentence(const std::map<std::string, std::string>& assignment,
                            const std::string& scenario);

std::string prompt_to_json_line(const PromptTemplate& prompt);
PromptTemplate prompt_from_json_line(const std::string& line);
void write_prompts_jsonl(const std::vector<PromptTemplate>& prompts,
                         const std::filesystem::path& path);
std::vector<PromptTemplate> read_prompts_jsonl(const std::filesystem::path& path);

}  // namespace synthpose
