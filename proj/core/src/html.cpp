#include "nophish/html.hpp"

#include <array>
#include <cstdint>

#include "text.hpp"

namespace nophish {

namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool is_tag_name_char(char c) {
  return is_alpha(c) || (c >= '0' && c <= '9') || c == '-' || c == ':' || c == '_';
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

constexpr std::array<std::pair<std::string_view, std::string_view>, 7> kNamedEntities{{
    {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", "\xC2\xA0"}, {"colon", ":"},
}};

bool is_raw_text_element(std::string_view name) {
  return name == "script" || name == "style" || name == "textarea" || name == "title" || name == "xmp";
}

// Index just past the closing tag of a raw-text element, or the end of input.
std::size_t skip_raw_text(std::string_view html, std::size_t from, std::string_view name) {
  std::size_t pos = from;
  while (true) {
    pos = html.find("</", pos);
    if (pos == std::string_view::npos) return html.size();
    if (text::iequals(html.substr(pos + 2, name.size()), name)) {
      const auto close = html.find('>', pos);
      return close == std::string_view::npos ? html.size() : close + 1;
    }
    pos += 2;
  }
}

}  // namespace

std::optional<std::string_view> HtmlElement::attr(std::string_view attr_name) const {
  for (const auto& [key, value] : attributes) {
    if (key == attr_name) return std::string_view(value);
  }
  return std::nullopt;
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back('&');
      continue;
    }
    const auto body = s.substr(i + 1, semi - i - 1);
    bool decoded = false;
    if (body.size() >= 2 && body[0] == '#') {
      std::uint32_t cp = 0;
      bool ok = true;
      if (body[1] == 'x' || body[1] == 'X') {
        if (body.size() == 2) ok = false;
        for (char c : body.substr(2)) {
          if (!std::isxdigit(static_cast<unsigned char>(c)) || cp > 0x10FFFF) {
            ok = false;
            break;
          }
          cp = cp * 16 + static_cast<std::uint32_t>(std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : (text::lower(c) - 'a' + 10));
        }
      } else {
        for (char c : body.substr(1)) {
          if (c < '0' || c > '9' || cp > 0x10FFFF) {
            ok = false;
            break;
          }
          cp = cp * 10 + static_cast<std::uint32_t>(c - '0');
        }
      }
      if (ok) {
        append_utf8(out, cp);
        decoded = true;
      }
    } else {
      for (const auto& [name, value] : kNamedEntities) {
        if (text::iequals(body, name)) {
          out.append(value);
          decoded = true;
          break;
        }
      }
    }
    if (decoded) {
      i = semi;
    } else {
      out.push_back('&');
    }
  }
  return out;
}

HtmlDocument parse_html(std::string_view html) {
  HtmlDocument doc;
  const std::size_t n = html.size();
  std::size_t i = 0;
  while (i < n) {
    const auto lt = html.find('<', i);
    if (lt == std::string_view::npos) break;
    i = lt;
    if (html.substr(i, 4) == "<!--") {
      const auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? n : end + 3;
      continue;
    }
    if (i + 1 < n && (html[i + 1] == '!' || html[i + 1] == '?' || html[i + 1] == '/')) {
      const auto end = html.find('>', i + 1);
      i = end == std::string_view::npos ? n : end + 1;
      continue;
    }
    if (i + 1 >= n || !is_alpha(html[i + 1])) {
      ++i;
      continue;
    }

    HtmlElement element;
    std::size_t p = i + 1;
    while (p < n && is_tag_name_char(html[p])) element.name.push_back(text::lower(html[p++]));

    while (p < n) {
      while (p < n && (text::is_space(html[p]) || html[p] == '/')) ++p;
      if (p >= n) break;
      if (html[p] == '>') {
        ++p;
        break;
      }
      if (html[p] == '<') break;  // tag left open; let the next tag start here
      std::string name;
      while (p < n && !text::is_space(html[p]) && html[p] != '=' && html[p] != '>' && html[p] != '/' &&
             html[p] != '<') {
        name.push_back(text::lower(html[p++]));
      }
      if (name.empty()) {
        ++p;
        continue;
      }
      std::size_t q = p;
      while (q < n && text::is_space(html[q])) ++q;
      std::string value;
      if (q < n && html[q] == '=') {
        ++q;
        while (q < n && text::is_space(html[q])) ++q;
        if (q < n && (html[q] == '"' || html[q] == '\'')) {
          const char quote = html[q];
          const auto close = html.find(quote, q + 1);
          if (close == std::string_view::npos) {
            // Unterminated quote: take the value up to the next '>'.
            const auto gt = html.find('>', q + 1);
            const auto stop = gt == std::string_view::npos ? n : gt;
            value = decode_entities(html.substr(q + 1, stop - q - 1));
            q = stop;
          } else {
            value = decode_entities(html.substr(q + 1, close - q - 1));
            q = close + 1;
          }
        } else {
          const auto start = q;
          while (q < n && !text::is_space(html[q]) && html[q] != '>') ++q;
          value = decode_entities(html.substr(start, q - start));
        }
        p = q;
      }
      element.attributes.emplace_back(std::move(name), std::move(value));
    }
    i = p;
    const bool raw = is_raw_text_element(element.name);
    const std::string name = element.name;
    doc.elements.push_back(std::move(element));
    if (raw) i = skip_raw_text(html, i, name);
  }
  return doc;
}

}  // namespace nophish
