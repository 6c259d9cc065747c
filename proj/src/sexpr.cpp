#include "prk/sexpr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace prk {

namespace {

std::string render_error(SourcePos pos, const std::string& message, const std::string& token) {
  std::ostringstream os;
  os << "line " << pos.line << ", column " << pos.column << ": " << message;
  if (!token.empty()) os << " (at '" << token << "')";
  return os.str();
}

bool is_delimiter(char c) {
  return c == '(' || c == ')' || c == ';' || c == '"' || std::isspace(static_cast<unsigned char>(c));
}

class Reader {
public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<Sexpr> read_all() {
    std::vector<Sexpr> out;
    skip_space();
    while (!at_end()) {
      out.push_back(read());
      skip_space();
    }
    return out;
  }

private:
  bool at_end() const { return i_ >= text_.size(); }
  char peek() const { return text_[i_]; }

  void advance() {
    if (text_[i_] == '\n') {
      ++pos_.line;
      pos_.column = 1;
    } else {
      ++pos_.column;
    }
    ++i_;
  }

  void skip_space() {
    while (!at_end()) {
      char c = peek();
      if (c == ';') {
        while (!at_end() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Sexpr read() {
    SourcePos start = pos_;
    char c = peek();
    if (c == '(') {
      advance();
      std::vector<Sexpr> items;
      skip_space();
      while (true) {
        if (at_end()) throw ParseError(start, "unterminated list", "(");
        if (peek() == ')') {
          advance();
          break;
        }
        items.push_back(read());
        skip_space();
      }
      return Sexpr::list(std::move(items), start);
    }
    if (c == ')') throw ParseError(start, "unexpected closing parenthesis", ")");
    if (c == '"') {
      advance();
      std::string s;
      while (true) {
        if (at_end()) throw ParseError(start, "unterminated string", "\"" + s);
        char d = peek();
        advance();
        if (d == '"') break;
        if (d == '\\') {
          if (at_end()) throw ParseError(start, "unterminated string", "\"" + s);
          d = peek();
          advance();
          if (d == 'n') d = '\n';
        }
        s.push_back(d);
      }
      Sexpr a = Sexpr::atom(std::move(s), start);
      a.quoted = true;
      return a;
    }
    std::string s;
    while (!at_end() && !is_delimiter(peek())) {
      s.push_back(peek());
      advance();
    }
    return Sexpr::atom(std::move(s), start);
  }

  std::string_view text_;
  std::size_t i_ = 0;
  SourcePos pos_;
};

}  // namespace

ParseError::ParseError(SourcePos pos, std::string message, std::string token)
    : std::runtime_error(render_error(pos, message, token)),
      pos_(pos),
      message_(std::move(message)),
      token_(std::move(token)) {}

Sexpr Sexpr::atom(std::string text, SourcePos pos) {
  Sexpr s;
  s.kind = Kind::Atom;
  s.text = std::move(text);
  s.pos = pos;
  return s;
}

Sexpr Sexpr::list(std::vector<Sexpr> items, SourcePos pos) {
  Sexpr s;
  s.kind = Kind::List;
  s.items = std::move(items);
  s.pos = pos;
  return s;
}

std::optional<double> Sexpr::try_number() const {
  if (!is_atom() || quoted || text.empty()) return std::nullopt;
  double v = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

double Sexpr::number() const {
  if (auto v = try_number()) return *v;
  fail("expected a number");
}

std::string Sexpr::str() const {
  if (is_atom()) return quoted ? "\"" + text + "\"" : text;
  std::string out = "(";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ' ';
    out += items[i].str();
  }
  out += ')';
  return out;
}

void Sexpr::fail(const std::string& message) const {
  std::string tok = str();
  if (tok.size() > 40) tok = tok.substr(0, 37) + "...";
  throw ParseError(pos, message, tok);
}

std::vector<Sexpr> read_sexprs(std::string_view text) { return Reader(text).read_all(); }

Sexpr read_sexpr(std::string_view text) {
  auto all = read_sexprs(text);
  if (all.size() != 1) {
    throw ParseError({}, "expected exactly one form, found " + std::to_string(all.size()), "");
  }
  return std::move(all.front());
}

KeywordArgs::KeywordArgs(const Sexpr& form, std::size_t start) : form_(&form) {
  std::size_t i = start;
  while (i < form.size() && !form[i].is_keyword()) positional_.push_back(&form[i++]);
  while (i < form.size()) {
    const Sexpr& key = form[i];
    if (!key.is_keyword()) key.fail("expected a keyword");
    if (i + 1 >= form.size()) key.fail("keyword without a value");
    for (auto& [k, v] : pairs_) {
      if (k->text == key.text) key.fail("duplicate keyword");
    }
    pairs_.emplace_back(&key, &form[i + 1]);
    i += 2;
  }
}

const Sexpr* KeywordArgs::get(std::string_view key) const {
  for (auto& [k, v] : pairs_) {
    if (k->text == key) return v;
  }
  return nullptr;
}

const Sexpr& KeywordArgs::require(std::string_view key) const {
  if (const Sexpr* v = get(key)) return *v;
  form_->fail("missing " + std::string(key));
}

void KeywordArgs::reject_unknown(std::initializer_list<std::string_view> allowed) const {
  for (auto& [k, v] : pairs_) {
    if (std::find(allowed.begin(), allowed.end(), k->text) == allowed.end()) {
      k->fail("unknown keyword");
    }
  }
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string quote_if_needed(std::string_view s) {
  bool bare = !s.empty() && std::none_of(s.begin(), s.end(), is_delimiter);
  if (bare) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace prk
