#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prk {

struct SourcePos {
  int line = 1;
  int column = 1;
};

/// Error carrying the source position and the token it was raised at.
class ParseError : public std::runtime_error {
public:
  ParseError(SourcePos pos, std::string message, std::string token);

  SourcePos pos() const { return pos_; }
  const std::string& token() const { return token_; }
  const std::string& message() const { return message_; }

private:
  SourcePos pos_;
  std::string message_;
  std::string token_;
};

/// A parsed s-expression.  Atoms keep their spelling; quoted strings are atoms
/// with `quoted` set.  Comments run from ';' to end of line.
struct Sexpr {
  enum class Kind { Atom, List };

  Kind kind = Kind::Atom;
  std::string text;
  bool quoted = false;
  std::vector<Sexpr> items;
  SourcePos pos;

  static Sexpr atom(std::string text, SourcePos pos = {});
  static Sexpr list(std::vector<Sexpr> items, SourcePos pos = {});

  bool is_atom() const { return kind == Kind::Atom; }
  bool is_list() const { return kind == Kind::List; }
  bool is_keyword() const { return is_atom() && !quoted && !text.empty() && text[0] == ':'; }
  bool is_atom(std::string_view s) const { return is_atom() && text == s; }
  std::size_t size() const { return items.size(); }
  const Sexpr& operator[](std::size_t i) const { return items.at(i); }

  /// Numeric value of an atom; throws ParseError if it is not a number.
  double number() const;
  std::optional<double> try_number() const;
  /// Compact single-line rendering.
  std::string str() const;

  [[noreturn]] void fail(const std::string& message) const;
};

/// Reads every top-level form in `text`.
std::vector<Sexpr> read_sexprs(std::string_view text);

/// Reads exactly one form.
Sexpr read_sexpr(std::string_view text);

/// Keyword/value view over the tail of a list form `(head :k v :k2 v2 ...)`.
/// Positional (non-keyword) items before the first keyword are kept separately.
class KeywordArgs {
public:
  KeywordArgs(const Sexpr& form, std::size_t start);

  const std::vector<const Sexpr*>& positional() const { return positional_; }
  const Sexpr* get(std::string_view key) const;
  const Sexpr& require(std::string_view key) const;
  bool has(std::string_view key) const { return get(key) != nullptr; }
  /// Throws on any keyword not listed in `allowed`.
  void reject_unknown(std::initializer_list<std::string_view> allowed) const;

private:
  const Sexpr* form_;
  std::vector<const Sexpr*> positional_;
  std::vector<std::pair<const Sexpr*, const Sexpr*>> pairs_;
};

/// Shortest round-trip decimal text for a double.
std::string format_number(double v);

/// Quotes `s` if it contains characters that would not survive as a bare atom.
std::string quote_if_needed(std::string_view s);

}  // namespace prk
