#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nophish {

struct HtmlElement {
  std::string name;  // lower-case tag name
  std::vector<std::pair<std::string, std::string>> attributes;  // lower-case names, decoded values

  /// First attribute with this (lower-case) name.
  std::optional<std::string_view> attr(std::string_view name) const;
  bool has_attr(std::string_view name) const { return attr(name).has_value(); }
};

/// Start tags in document order. Content of <script>, <style>, <textarea> and
/// <title> is raw text and never produces elements.
struct HtmlDocument {
  std::vector<HtmlElement> elements;
};

/// Tolerant tokenizer: unclosed tags, stray '<', unterminated quotes and bad
/// nesting never fail; whatever can be recognised is returned.
HtmlDocument parse_html(std::string_view html);

/// Decodes the common named entities and numeric character references.
std::string decode_entities(std::string_view s);

}  // namespace nophish
