#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "ponte/error.hpp"

namespace ponte {

inline constexpr std::string_view kTextSlot = "{text}";
inline constexpr std::string_view kConditionSlot = "{condition}";

namespace detail {

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace detail

struct PromptTemplate {
  std::string id;
  std::string pattern;
  bool requires_condition = false;

  /// Validates the slot layout and derives requires_condition from it.
  static PromptTemplate make(std::string id, std::string pattern) {
    if (id.empty()) fail(ErrorCode::InvalidTemplate, "template id is empty");
    if (detail::count_occurrences(pattern, kTextSlot) != 1) {
      fail(ErrorCode::InvalidTemplate, "template '" + id + "' must contain {text} exactly once");
    }
    const auto conditions = detail::count_occurrences(pattern, kConditionSlot);
    if (conditions > 1) {
      fail(ErrorCode::InvalidTemplate, "template '" + id + "' contains {condition} more than once");
    }
    if (pattern.empty() || pattern.back() != '"') {
      fail(ErrorCode::InvalidTemplate, "template '" + id + "' must end with an opening double quote");
    }
    return PromptTemplate{std::move(id), std::move(pattern), conditions == 1};
  }

  friend bool operator==(const PromptTemplate &, const PromptTemplate &) = default;
};

struct ConditionalPrompt {
  std::string template_id;
  std::string text;
  std::string condition;
  std::string rendered;

  friend bool operator==(const ConditionalPrompt &, const ConditionalPrompt &) = default;
};

/// The twelve conditional templates (T1..T12) followed by the unconditional
/// PromptEOL baseline. Order is part of the contract.
inline const std::vector<PromptTemplate> &registry() {
  static const std::vector<PromptTemplate> templates = [] {
    std::vector<PromptTemplate> out;
    const char *patterns[] = {
        R"(This text: "{text}" means in terms of {condition}: ")",
        R"(This text: "{text}" means with respect to {condition}: ")",
        R"(This text: "{text}" means in one word in terms of {condition}: ")",
        R"(This text: "{text}" means in one word with respect to {condition}: ")",
        R"(This text: "{text}" means in terms of {condition} in one word: ")",
        R"(This text: "{text}" means with respect to {condition} in one word: ")",
        R"(Express this text "{text}" in terms of {condition}: ")",
        R"(Express this text "{text}" with respect to {condition}: ")",
        R"(Express this text "{text}" in one word in terms of {condition}: ")",
        R"(Express this text "{text}" in one word with respect to {condition}: ")",
        R"(Express this text "{text}" in terms of {condition} in one word: ")",
        R"(Express this text "{text}" with respect to {condition} in one word: ")",
    };
    int index = 1;
    for (const char *pattern : patterns) {
      out.push_back(PromptTemplate::make("T" + std::to_string(index++), pattern));
    }
    out.push_back(PromptTemplate::make("PromptEOL", R"(This sentence: "{text}" means in one word: ")"));
    return out;
  }();
  return templates;
}

inline const PromptTemplate &find_template(const std::vector<PromptTemplate> &templates, std::string_view id) {
  for (const auto &t : templates) {
    if (t.id == id) return t;
  }
  fail(ErrorCode::UnknownTemplate, "no template with id '" + std::string(id) + "'");
}

inline ConditionalPrompt render(const PromptTemplate &tmpl, std::string_view text, std::string_view condition) {
  if (text.empty()) fail(ErrorCode::EmptyText, "text to embed is empty");
  if (tmpl.requires_condition && condition.empty()) {
    fail(ErrorCode::MissingCondition, "template '" + tmpl.id + "' requires a condition");
  }
  if (!tmpl.requires_condition && !condition.empty()) {
    fail(ErrorCode::UnexpectedCondition, "template '" + tmpl.id + "' takes no condition");
  }
  if (text.find_first_of("{}") != std::string_view::npos ||
      condition.find_first_of("{}") != std::string_view::npos) {
    fail(ErrorCode::BraceInInput, "braces are not supported in text or condition");
  }

  std::string rendered;
  rendered.reserve(tmpl.pattern.size() + text.size() + condition.size());
  std::string_view rest = tmpl.pattern;
  while (!rest.empty()) {
    if (rest.starts_with(kTextSlot)) {
      rendered += text;
      rest.remove_prefix(kTextSlot.size());
    } else if (rest.starts_with(kConditionSlot)) {
      rendered += condition;
      rest.remove_prefix(kConditionSlot.size());
    } else {
      rendered += rest.front();
      rest.remove_prefix(1);
    }
  }
  return ConditionalPrompt{tmpl.id, std::string(text), std::string(condition), std::move(rendered)};
}

/// Parses `id<TAB>pattern` lines. Blank lines and lines starting with '#' are
/// skipped.
inline std::vector<PromptTemplate> parse_templates(std::istream &in) {
  std::vector<PromptTemplate> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      fail(ErrorCode::InvalidTemplate, "line " + std::to_string(line_no) + ": expected id<TAB>pattern");
    }
    try {
      auto tmpl = PromptTemplate::make(line.substr(0, tab), line.substr(tab + 1));
      for (const auto &existing : out) {
        if (existing.id == tmpl.id) fail(ErrorCode::InvalidTemplate, "duplicate id '" + tmpl.id + "'");
      }
      out.push_back(std::move(tmpl));
    } catch (const Error &e) {
      fail(ErrorCode::InvalidTemplate, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<PromptTemplate> load_templates(const std::string &path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open template file " + path);
  return parse_templates(in);
}

}  // namespace ponte
