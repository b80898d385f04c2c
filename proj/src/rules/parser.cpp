#include "skg/rules/parser.hpp"

#include <cctype>
#include <set>

#include "skg/error.hpp"
#include "skg/util/text.hpp"

namespace skg::rules {

namespace {

enum class Tok { Ident, Number, Timestamp, String, LParen, RParen, LBrace, RBrace, Comma, Colon, Cmp, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
  // Comment lines immediately above this token (only kept for RULE).
  std::vector<std::string> comments;
};

[[noreturn]] void fail(Errc code, const std::string& what, int line, int column) {
  throw Error(code, what + " at line " + std::to_string(line) + ", column " + std::to_string(column),
              {{"line", line}, {"column", column}});
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    std::vector<std::string> pending_comments;
    while (true) {
      const bool blank_line = skip_space();
      if (blank_line) pending_comments.clear();
      if (pos_ >= src_.size()) break;
      const char c = src_[pos_];
      if (c == '#') {
        const auto end = src_.find('\n', pos_);
        auto text = src_.substr(pos_ + 1, end == std::string_view::npos ? std::string_view::npos : end - pos_ - 1);
        if (!text.empty() && text.front() == ' ') text.remove_prefix(1);
        while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.remove_suffix(1);
        pending_comments.emplace_back(text);
        advance(end == std::string_view::npos ? src_.size() - pos_ : end - pos_);
        continue;
      }
      Token t = next_token();
      if (t.type == Tok::Ident && t.text == "RULE") t.comments = std::move(pending_comments);
      pending_comments.clear();
      out.push_back(std::move(t));
    }
    Token end;
    end.line = line_;
    end.column = column_;
    out.push_back(end);
    return out;
  }

 private:
  // Skips whitespace; reports whether a blank line was crossed.
  bool skip_space() {
    int newlines = 0;
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      if (src_[pos_] == '\n') ++newlines;
      advance(1);
    }
    return newlines >= 2;
  }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i, ++pos_) {
      if (src_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
    }
  }

  Token make(Tok type, std::size_t len) {
    Token t{type, std::string(src_.substr(pos_, len)), line_, column_, {}};
    advance(len);
    return t;
  }

  Token next_token() {
    const char c = src_[pos_];
    const auto peek = [&](std::size_t k) { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; };
    switch (c) {
      case '(': return make(Tok::LParen, 1);
      case ')': return make(Tok::RParen, 1);
      case '{': return make(Tok::LBrace, 1);
      case '}': return make(Tok::RBrace, 1);
      case ',': return make(Tok::Comma, 1);
      case ':': return make(Tok::Colon, 1);
      case '=': return make(Tok::Cmp, 1);
      case '!':
        if (peek(1) == '=') return make(Tok::Cmp, 2);
        fail(Errc::SyntaxError, "expected '!='", line_, column_);
      case '<':
      case '>': return make(Tok::Cmp, peek(1) == '=' ? 2 : 1);
      case '"': return string_token();
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      std::size_t len = 1;
      while (pos_ + len < src_.size()) {
        const char d = src_[pos_ + len];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == ':' || d == '.' || d == '-') {
          ++len;
        } else {
          break;
        }
      }
      const auto text = src_.substr(pos_, len);
      if (Timestamp::parse(text)) return make(Tok::Timestamp, len);
      if (Decimal::parse(text)) return make(Tok::Number, len);
      fail(Errc::SyntaxError, "malformed literal '" + std::string(text) + "'", line_, column_);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t len = 1;
      while (pos_ + len < src_.size()) {
        const char d = src_[pos_ + len];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.' || d == '-') {
          ++len;
        } else {
          break;
        }
      }
      return make(Tok::Ident, len);
    }
    fail(Errc::SyntaxError, std::string("unexpected character '") + c + "'", line_, column_);
  }

  Token string_token() {
    Token t{Tok::String, {}, line_, column_, {}};
    advance(1);
    while (true) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') fail(Errc::SyntaxError, "unterminated string", t.line, t.column);
      const char c = src_[pos_];
      if (c == '"') {
        advance(1);
        return t;
      }
      if (c == '\\') {
        const char n = pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
        if (n != '"' && n != '\\') fail(Errc::SyntaxError, "bad escape in string", line_, column_);
        t.text.push_back(n);
        advance(2);
        continue;
      }
      t.text.push_back(c);
      advance(1);
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

const std::set<std::string>& keywords() {
  static const std::set<std::string> k{"RULE", "IF", "THEN", "AND", "OR", "NOT", "in", "true", "false"};
  return k;
}

std::optional<NodeKind> kind_from_dsl(std::string_view s) {
  for (NodeKind k : kAllNodeKinds) {
    if (util::to_lower(to_string(k)) == s) return k;
  }
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ConstraintSet run() {
    ConstraintSet set;
    std::set<std::string> ids;
    if (peek().type == Tok::End) fail(Errc::SyntaxError, "rule set is empty", peek().line, peek().column);
    while (peek().type != Tok::End) {
      const Token& start = peek();
      auto rule = parse_rule();
      if (!ids.insert(rule.rule_id).second) {
        fail(Errc::DuplicateRuleId, "duplicate rule id '" + rule.rule_id + "'", start.line, start.column);
      }
      set.rules.push_back(std::move(rule));
    }
    return set;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  bool is_word(const Token& t, std::string_view w) const { return t.type == Tok::Ident && t.text == w; }

  const Token& expect(Tok type, std::string_view what) {
    const Token& t = peek();
    if (t.type != type) fail(Errc::SyntaxError, "expected " + std::string(what), t.line, t.column);
    return take();
  }

  void expect_word(std::string_view w) {
    const Token& t = peek();
    if (!is_word(t, w)) fail(Errc::SyntaxError, "expected '" + std::string(w) + "'", t.line, t.column);
    take();
  }

  ConstraintRule parse_rule() {
    const Token& kw = peek();
    if (!is_word(kw, "RULE")) fail(Errc::SyntaxError, "expected 'RULE'", kw.line, kw.column);
    ConstraintRule rule;
    rule.description = util::join(kw.comments, "\n");
    take();
    const Token& id = peek();
    if (id.type != Tok::Ident || keywords().contains(id.text)) fail(Errc::SyntaxError, "expected rule id", id.line, id.column);
    rule.rule_id = take().text;
    const Token& sev = peek();
    if (is_word(sev, "blocking")) {
      rule.severity = Severity::Blocking;
    } else if (is_word(sev, "advisory")) {
      rule.severity = Severity::Advisory;
    } else {
      fail(Errc::SyntaxError, "expected severity 'blocking' or 'advisory'", sev.line, sev.column);
    }
    take();
    expect(Tok::Colon, "':'");
    expect_word("IF");
    rule.antecedent = parse_expr();
    expect_word("THEN");
    rule.consequent = parse_expr();
    return rule;
  }

  // expr := conj ("OR" conj)* ; conj := term ("AND" term)*
  Expr parse_expr() {
    std::vector<Expr> terms{parse_conj()};
    while (is_word(peek(), "OR")) {
      take();
      terms.push_back(parse_conj());
    }
    return Expr::any_of(std::move(terms));
  }

  Expr parse_conj() {
    std::vector<Expr> terms{parse_term()};
    while (is_word(peek(), "AND")) {
      take();
      terms.push_back(parse_term());
    }
    return Expr::all_of(std::move(terms));
  }

  Expr parse_term() {
    if (peek().type == Tok::LParen) {
      take();
      auto inner = parse_expr();
      expect(Tok::RParen, "')'");
      return inner;
    }
    bool negated = false;
    if (is_word(peek(), "NOT")) {
      take();
      negated = true;
    }
    return Expr::leaf(parse_atom(), negated);
  }

  Comparator parse_cmp() {
    const Token& t = peek();
    if (t.type == Tok::Cmp) {
      take();
      if (t.text == "=") return Comparator::Eq;
      if (t.text == "!=") return Comparator::Ne;
      if (t.text == "<") return Comparator::Lt;
      if (t.text == "<=") return Comparator::Le;
      if (t.text == ">") return Comparator::Gt;
      return Comparator::Ge;
    }
    if (is_word(t, "in")) {
      take();
      return Comparator::In;
    }
    fail(Errc::SyntaxError, "expected comparator", t.line, t.column);
  }

  Value parse_scalar() {
    const Token& t = peek();
    switch (t.type) {
      case Tok::String: return Value(take().text);
      case Tok::Number: {
        const auto text = take().text;
        if (text.find('.') == std::string::npos) {
          try {
            return Value(static_cast<std::int64_t>(std::stoll(text)));
          } catch (const std::exception&) {
            fail(Errc::SyntaxError, "integer out of range", t.line, t.column);
          }
        }
        return Value(*Decimal::parse(text));
      }
      case Tok::Timestamp: return Value(*Timestamp::parse(take().text));
      case Tok::Ident:
        if (t.text == "true" || t.text == "false") return Value(take().text == "true");
        if (keywords().contains(t.text)) fail(Errc::SyntaxError, "keyword used as value", t.line, t.column);
        return Value(take().text);
      default: fail(Errc::SyntaxError, "expected value", t.line, t.column);
    }
  }

  Literal parse_literal(Comparator cmp, const Token& at) {
    Literal lit;
    if (peek().type == Tok::LBrace) {
      take();
      lit.is_set = true;
      lit.values.push_back(parse_scalar());
      while (peek().type == Tok::Comma) {
        take();
        lit.values.push_back(parse_scalar());
      }
      expect(Tok::RBrace, "'}'");
    } else {
      lit.values.push_back(parse_scalar());
    }
    if (cmp == Comparator::In && !lit.is_set) fail(Errc::TypeError, "'in' needs a value set", at.line, at.column);
    if (cmp != Comparator::In && lit.is_set) fail(Errc::TypeError, "value set only allowed with 'in'", at.line, at.column);
    if (cmp == Comparator::Lt || cmp == Comparator::Le || cmp == Comparator::Gt || cmp == Comparator::Ge) {
      const Value& v = lit.values.front();
      if (!v.is_numeric() && !v.is_timestamp()) {
        fail(Errc::TypeError, "ordering comparator needs a numeric or timestamp value", at.line, at.column);
      }
    }
    return lit;
  }

  Atom parse_atom() {
    const Token& head = peek();
    if (head.type != Tok::Ident) fail(Errc::SyntaxError, "expected atom", head.line, head.column);

    if (head.text == "edge") {
      take();
      expect(Tok::LParen, "'('");
      const Token& rel = expect(Tok::Ident, "relation");
      const auto relation = parse_relation(rel.text);
      if (!relation) fail(Errc::TypeError, "unknown relation '" + rel.text + "'", rel.line, rel.column);
      expect(Tok::Comma, "','");
      const auto src = parse_kind();
      expect(Tok::Comma, "','");
      const auto dst = parse_kind();
      expect(Tok::RParen, "')'");
      return EdgeExists{*relation, src, dst};
    }

    if (head.text == "dim") {
      take();
      expect(Tok::LParen, "'('");
      const Token& name = expect(Tok::Ident, "scene dimension");
      const auto dim = parse_scene_dim(name.text);
      if (!dim) fail(Errc::TypeError, "unknown scene dimension '" + name.text + "'", name.line, name.column);
      const Token& at = peek();
      const auto cmp = parse_cmp();
      if (cmp != Comparator::Eq && cmp != Comparator::Ne && cmp != Comparator::In) {
        fail(Errc::TypeError, "scene dimensions are categorical", at.line, at.column);
      }
      auto lit = parse_literal(cmp, at);
      expect(Tok::RParen, "')'");
      return DimIs{*dim, cmp, std::move(lit)};
    }

    if (head.text == "decision" && peek(1).type != Tok::LParen) {
      take();
      const Token& at = peek();
      const auto cmp = parse_cmp();
      if (cmp != Comparator::Eq && cmp != Comparator::Ne && cmp != Comparator::In) {
        fail(Errc::TypeError, "decisions compare with =, != or in", at.line, at.column);
      }
      auto lit = parse_literal(cmp, at);
      DecisionIs atom{cmp, {}};
      for (const auto& v : lit.values) {
        const auto action = v.is_string() ? parse_action(v.as_string()) : std::nullopt;
        if (!action) fail(Errc::TypeError, "unknown decision action '" + v.to_display() + "'", at.line, at.column);
        atom.actions.push_back(*action);
      }
      return atom;
    }

    const auto kind = parse_kind();
    expect(Tok::LParen, "'('");
    const Token& key = expect(Tok::Ident, "attribute name");
    const Token& at = peek();
    const auto cmp = parse_cmp();
    auto lit = parse_literal(cmp, at);
    expect(Tok::RParen, "')'");
    return NodeAttrIs{kind, key.text, cmp, std::move(lit)};
  }

  NodeKind parse_kind() {
    const Token& t = expect(Tok::Ident, "node kind");
    const auto kind = kind_from_dsl(t.text);
    if (!kind) fail(Errc::TypeError, "unknown node kind '" + t.text + "'", t.line, t.column);
    return *kind;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

bool is_bare_word(const std::string& s) {
  if (s.empty() || keywords().contains(s)) return false;
  if (!std::isalpha(static_cast<unsigned char>(s.front())) && s.front() != '_') return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-') return false;
  }
  return true;
}

std::string print_scalar(const Value& v) {
  if (v.is_string()) {
    if (is_bare_word(v.as_string())) return v.as_string();
    std::string out = "\"";
    for (char c : v.as_string()) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    return out + "\"";
  }
  return v.to_display();
}

std::string print_literal(const Literal& lit) {
  if (!lit.is_set) return print_scalar(lit.values.front());
  std::vector<std::string> parts;
  for (const auto& v : lit.values) parts.push_back(print_scalar(v));
  return "{" + util::join(parts, ", ") + "}";
}

std::string print_atom(const Atom& atom) {
  return std::visit(
      [](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, NodeAttrIs>) {
          return util::to_lower(to_string(a.kind)) + "(" + a.key + " " + std::string(to_string(a.cmp)) + " " +
                 print_literal(a.value) + ")";
        } else if constexpr (std::is_same_v<T, EdgeExists>) {
          return "edge(" + std::string(to_string(a.relation)) + ", " + util::to_lower(to_string(a.src_kind)) + ", " +
                 util::to_lower(to_string(a.dst_kind)) + ")";
        } else if constexpr (std::is_same_v<T, DecisionIs>) {
          std::vector<std::string> names;
          for (auto act : a.actions) names.emplace_back(to_string(act));
          const auto value = a.cmp == Comparator::In ? "{" + util::join(names, ", ") + "}" : names.front();
          return "decision " + std::string(to_string(a.cmp)) + " " + value;
        } else {
          return "dim(" + std::string(to_string(a.dim)) + " " + std::string(to_string(a.cmp)) + " " +
                 print_literal(a.value) + ")";
        }
      },
      atom);
}

}  // namespace

ConstraintSet parse_rules(std::string_view source) { return Parser(Lexer(source).run()).run(); }

std::string print_expr(const Expr& e) {
  if (e.op == Expr::Op::Atom) return (e.negated ? "NOT " : "") + print_atom(*e.atom);
  std::vector<std::string> parts;
  for (const auto& c : e.children) {
    // AND binds tighter than OR, so only an AND directly under an OR may drop
    // its parentheses.
    const bool bare = c.op == Expr::Op::Atom || (e.op == Expr::Op::Or && c.op == Expr::Op::And);
    parts.push_back(bare ? print_expr(c) : "(" + print_expr(c) + ")");
  }
  return util::join(parts, e.op == Expr::Op::And ? " AND " : " OR ");
}

std::string print_rules(const ConstraintSet& set) {
  std::string out;
  for (std::size_t i = 0; i < set.rules.size(); ++i) {
    const auto& r = set.rules[i];
    if (i != 0) out += "\n";
    if (!r.description.empty()) {
      for (const auto& line : util::split(r.description, '\n')) out += "# " + line + "\n";
    }
    out += "RULE " + r.rule_id + " " + std::string(to_string(r.severity)) + ": IF " + print_expr(r.antecedent) +
           " THEN " + print_expr(r.consequent) + "\n";
  }
  return out;
}

}  // namespace skg::rules
