#include "ddopt/lp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "ddopt/errors.hpp"

namespace ddopt::lp {

std::int32_t LpModel::add_var(std::string var_name, double lb, double ub,
                              double obj) {
  vars.push_back({std::move(var_name), lb, ub, obj, false});
  return static_cast<std::int32_t>(vars.size()) - 1;
}

std::int32_t LpModel::add_binary(std::string var_name, double obj) {
  vars.push_back({std::move(var_name), 0.0, 1.0, obj, true});
  return static_cast<std::int32_t>(vars.size()) - 1;
}

void LpModel::add_row(std::string row_name, RowSense row_sense, double rhs,
                      std::vector<std::pair<std::int32_t, double>> coeffs) {
  rows.push_back({std::move(row_name), std::move(coeffs), row_sense, rhs});
}

double LpModel::objective_value(const std::vector<double>& x) const {
  double v = 0.0;
  for (int j = 0; j < num_vars(); ++j) v += vars[j].obj * x[j];
  return v;
}

double LpModel::row_activity(const Row& row, const std::vector<double>& x) const {
  double v = 0.0;
  for (const auto& [j, c] : row.coeffs) v += c * x[j];
  return v;
}

double LpModel::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int j = 0; j < num_vars(); ++j) {
    worst = std::max(worst, vars[j].lb - x[j]);
    worst = std::max(worst, x[j] - vars[j].ub);
  }
  for (const Row& row : rows) {
    const double act = row_activity(row, x);
    switch (row.sense) {
      case RowSense::Le: worst = std::max(worst, act - row.rhs); break;
      case RowSense::Ge: worst = std::max(worst, row.rhs - act); break;
      case RowSense::Eq: worst = std::max(worst, std::abs(act - row.rhs)); break;
    }
  }
  return worst;
}

namespace {

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  if (std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

}  // namespace

void LpModel::validate() const {
  std::set<std::string> names;
  for (const Var& v : vars) {
    if (!valid_name(v.name)) throw Error("LpModel: bad variable name '" + v.name + "'");
    if (!names.insert(v.name).second)
      throw Error("LpModel: duplicate variable name '" + v.name + "'");
    if (std::isnan(v.lb) || std::isnan(v.ub) || v.lb > v.ub)
      throw Error("LpModel: incoherent bounds on '" + v.name + "'");
    if (!std::isfinite(v.obj)) throw Error("LpModel: non-finite objective on '" + v.name + "'");
    if (v.binary && (v.lb < 0.0 || v.ub > 1.0))
      throw Error("LpModel: binary '" + v.name + "' must have bounds within [0,1]");
  }
  std::set<std::string> row_names;
  for (const Row& r : rows) {
    if (!valid_name(r.name)) throw Error("LpModel: bad row name '" + r.name + "'");
    if (!row_names.insert(r.name).second)
      throw Error("LpModel: duplicate row name '" + r.name + "'");
    if (names.count(r.name)) throw Error("LpModel: row name '" + r.name + "' clashes with a variable");
    if (!std::isfinite(r.rhs)) throw Error("LpModel: non-finite rhs on '" + r.name + "'");
    std::set<std::int32_t> cols;
    for (const auto& [j, c] : r.coeffs) {
      if (j < 0 || j >= num_vars()) throw Error("LpModel: column out of range in '" + r.name + "'");
      if (!std::isfinite(c)) throw Error("LpModel: non-finite coefficient in '" + r.name + "'");
      if (!cols.insert(j).second)
        throw Error("LpModel: duplicate column in row '" + r.name + "'");
    }
  }
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationCap: return "iteration_cap";
    case SolveStatus::NodeCap: return "node_cap";
    case SolveStatus::TimeLimit: return "time_limit";
  }
  return "unknown";
}

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Writes " c name" with an explicit sign, e.g. " + 2 x0" or " - x3"; the
// leading sign is omitted for a first positive term.
void append_term(std::ostringstream& os, double coef, const std::string& name,
                 bool first) {
  if (coef < 0) {
    os << " - ";
  } else {
    os << (first ? " " : " + ");
  }
  const double mag = std::abs(coef);
  if (mag != 1.0) os << num(mag) << " ";
  os << name;
}

}  // namespace

std::string write_lp_file(const LpModel& model) {
  model.validate();
  std::ostringstream os;
  os << "\\ Problem: " << model.name << "\n";
  os << (model.sense == Sense::Min ? "Minimize" : "Maximize") << "\n obj:";
  bool first = true;
  for (const LpModel::Var& v : model.vars) {
    if (v.obj == 0.0) continue;
    append_term(os, v.obj, v.name, first);
    first = false;
  }
  os << "\n";  // an empty objective line is legal: constant zero
  os << "Subject To\n";
  for (const LpModel::Row& r : model.rows) {
    os << " " << r.name << ":";
    bool rf = true;
    for (const auto& [j, c] : r.coeffs) {
      if (c == 0.0) continue;
      append_term(os, c, model.vars[j].name, rf);
      rf = false;
    }
    if (rf) os << " 0 " << model.vars[0].name;  // degenerate all-zero row
    const char* op = r.sense == RowSense::Le ? "<=" : r.sense == RowSense::Ge ? ">=" : "=";
    os << " " << op << " " << num(r.rhs) << "\n";
  }
  os << "Bounds\n";
  for (const LpModel::Var& v : model.vars) {
    if (v.binary) continue;  // the Binaries section implies [0,1]
    const bool lb_inf = v.lb == -kInf, ub_inf = v.ub == kInf;
    if (lb_inf && ub_inf) {
      os << " " << v.name << " free\n";
    } else if (lb_inf) {
      os << " -inf <= " << v.name << " <= " << num(v.ub) << "\n";
    } else if (ub_inf) {
      if (v.lb != 0.0) os << " " << v.name << " >= " << num(v.lb) << "\n";
    } else {
      os << " " << num(v.lb) << " <= " << v.name << " <= " << num(v.ub) << "\n";
    }
  }
  bool any_bin = false;
  for (const LpModel::Var& v : model.vars) any_bin = any_bin || v.binary;
  if (any_bin) {
    os << "Binaries\n";
    for (const LpModel::Var& v : model.vars)
      if (v.binary) os << " " << v.name << "\n";
  }
  os << "End\n";
  return os.str();
}

namespace {

struct Token {
  enum Kind { Word, Number, Op, Colon } kind;
  std::string text;
  double value = 0.0;
};

class Lexer {
public:
  explicit Lexer(const std::string& text) : text_(text) {}

  // Splits into words, numbers, comparison operators, +, -, and colons.
  std::vector<Token> run() {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = text_.size();
    while (i < n) {
      const char c = text_[i];
      if (c == '\\') {  // comment to end of line
        while (i < n && text_[i] != '\n') ++i;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
      if (c == ':') { out.push_back({Token::Colon, ":"}); ++i; continue; }
      if (c == '+' || c == '-') { out.push_back({Token::Op, std::string(1, c)}); ++i; continue; }
      if (c == '<' || c == '>' || c == '=') {
        std::string op(1, c);
        if (i + 1 < n && text_[i + 1] == '=') { op += '='; ++i; }
        out.push_back({Token::Op, op});
        ++i;
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t j = i;
        while (j < n && (std::isdigit(static_cast<unsigned char>(text_[j])) ||
                         text_[j] == '.' || text_[j] == 'e' || text_[j] == 'E' ||
                         ((text_[j] == '+' || text_[j] == '-') && j > i &&
                          (text_[j - 1] == 'e' || text_[j - 1] == 'E'))))
          ++j;
        const std::string s = text_.substr(i, j - i);
        try {
          out.push_back({Token::Number, s, std::stod(s)});
        } catch (const std::exception&) {
          throw ParseError("lp parse: bad number '" + s + "'");
        }
        i = j;
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < n && (std::isalnum(static_cast<unsigned char>(text_[j])) ||
                         text_[j] == '_' || text_[j] == '.'))
          ++j;
        out.push_back({Token::Word, text_.substr(i, j - i)});
        i = j;
        continue;
      }
      throw ParseError(std::string("lp parse: unexpected character '") + c + "'");
    }
    return out;
  }

private:
  const std::string& text_;
};

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_inf_word(const std::string& w) {
  const std::string l = lower(w);
  return l == "inf" || l == "infinity";
}

}  // namespace

LpModel parse_lp_file(const std::string& text) {
  const std::vector<Token> toks = Lexer(text).run();
  std::size_t pos = 0;
  const auto peek = [&]() -> const Token* {
    return pos < toks.size() ? &toks[pos] : nullptr;
  };
  const auto word_is = [&](const char* w) {
    const Token* t = peek();
    return t && t->kind == Token::Word && lower(t->text) == w;
  };

  LpModel model;
  model.name = "model";
  // Recover the problem name from the conventional header comment.
  {
    const std::string tag = "\\ Problem: ";
    if (text.rfind(tag, 0) == 0) {
      std::size_t eol = text.find('\n', tag.size());
      std::string name = text.substr(
          tag.size(),
          (eol == std::string::npos ? text.size() : eol) - tag.size());
      while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) {
        name.pop_back();
      }
      if (!name.empty()) model.name = name;
    }
  }

  // Objective sense.
  std::string sec;
  if (word_is("minimize") || word_is("minimise") || word_is("min")) {
    model.sense = Sense::Min;
    ++pos;
  } else if (word_is("maximize") || word_is("maximise") || word_is("max")) {
    model.sense = Sense::Max;
    ++pos;
  } else {
    throw ParseError("lp parse: expected Minimize or Maximize");
  }

  std::map<std::string, std::int32_t> var_ids;
  const auto var_id = [&](const std::string& name) {
    auto it = var_ids.find(name);
    if (it != var_ids.end()) return it->second;
    const std::int32_t id = model.add_var(name, 0.0, kInf, 0.0);
    var_ids.emplace(name, id);
    return id;
  };

  // Section keyword lookahead.
  const auto at_section = [&]() -> std::string {
    const Token* t = peek();
    if (!t || t->kind != Token::Word) return "";
    const std::string l = lower(t->text);
    if (l == "subject" || l == "st" || l == "s.t." || l == "such") return "subject";
    if (l == "bounds" || l == "bound") return "bounds";
    if (l == "binaries" || l == "binary" || l == "bin") return "binaries";
    if (l == "general" || l == "generals" || l == "gen") return "general";
    if (l == "end") return "end";
    return "";
  };

  // Linear expression: [label:] (sign? coef? name)+ — fills coefficient map.
  // Stops at a comparison operator or a section keyword.
  struct Expr {
    std::string label;
    std::vector<std::pair<std::int32_t, double>> terms;
  };
  const auto parse_expr = [&](bool allow_label) {
    Expr e;
    if (allow_label && peek() && peek()->kind == Token::Word &&
        pos + 1 < toks.size() && toks[pos + 1].kind == Token::Colon &&
        at_section().empty()) {
      e.label = toks[pos].text;
      pos += 2;
    }
    std::map<std::int32_t, double> acc;
    std::vector<std::int32_t> order;
    while (true) {
      if (!peek() || !at_section().empty()) break;
      const Token& t = *peek();
      if (t.kind == Token::Op && (t.text == "<=" || t.text == ">=" || t.text == "=" ||
                                  t.text == "<" || t.text == ">"))
        break;
      double sign = 1.0;
      while (peek() && peek()->kind == Token::Op &&
             (peek()->text == "+" || peek()->text == "-")) {
        if (peek()->text == "-") sign = -sign;
        ++pos;
      }
      if (!peek()) throw ParseError("lp parse: dangling sign");
      double coef = 1.0;
      if (peek()->kind == Token::Number) {
        coef = peek()->value;
        ++pos;
      }
      if (peek() && peek()->kind == Token::Word && at_section().empty()) {
        const std::int32_t j = var_id(peek()->text);
        ++pos;
        if (!acc.count(j)) order.push_back(j);
        acc[j] += sign * coef;
      } else {
        // bare constant term (only legal as the whole expression, e.g. "obj: 0")
        if (acc.empty() && (!peek() || peek()->kind == Token::Op || !at_section().empty())) {
          continue;  // swallow; constants are not represented
        }
        throw ParseError("lp parse: expected variable name");
      }
    }
    for (std::int32_t j : order) e.terms.emplace_back(j, acc[j]);
    return e;
  };

  // Objective.
  Expr obj = parse_expr(/*allow_label=*/true);
  for (const auto& [j, c] : obj.terms) model.vars[j].obj = c;

  // Subject To.
  if (at_section() != "subject") throw ParseError("lp parse: expected Subject To");
  ++pos;
  if (word_is("to")) ++pos;

  int unnamed = 0;
  while (at_section().empty() && peek()) {
    Expr lhs = parse_expr(/*allow_label=*/true);
    const Token* op = peek();
    if (!op || op->kind != Token::Op)
      throw ParseError("lp parse: expected row comparison");
    RowSense sense;
    if (op->text == "<=" || op->text == "<") sense = RowSense::Le;
    else if (op->text == ">=" || op->text == ">") sense = RowSense::Ge;
    else if (op->text == "=") sense = RowSense::Eq;
    else throw ParseError("lp parse: bad comparison '" + op->text + "'");
    ++pos;
    double sign = 1.0;
    while (peek() && peek()->kind == Token::Op &&
           (peek()->text == "+" || peek()->text == "-")) {
      if (peek()->text == "-") sign = -sign;
      ++pos;
    }
    if (!peek() || peek()->kind != Token::Number)
      throw ParseError("lp parse: expected numeric rhs");
    const double rhs = sign * peek()->value;
    ++pos;
    std::string label = lhs.label.empty() ? "c" + std::to_string(unnamed++) : lhs.label;
    model.add_row(std::move(label), sense, rhs, std::move(lhs.terms));
  }

  // Bounds.
  if (at_section() == "bounds") {
    ++pos;
    while (at_section().empty() && peek()) {
      // Forms: "name free" | "lb <= name <= ub" | "name <= ub" | "name >= lb"
      double lead_sign = 1.0;
      bool lead_inf = false;
      double lead_val = 0.0;
      bool have_lead = false;
      while (peek() && peek()->kind == Token::Op &&
             (peek()->text == "+" || peek()->text == "-")) {
        if (peek()->text == "-") lead_sign = -lead_sign;
        ++pos;
      }
      if (peek() && peek()->kind == Token::Number) {
        lead_val = lead_sign * peek()->value;
        have_lead = true;
        ++pos;
      } else if (peek() && peek()->kind == Token::Word && is_inf_word(peek()->text)) {
        lead_inf = true;
        have_lead = true;
        ++pos;
      }
      if (have_lead) {
        // "lb <= name <= ub"
        if (!peek() || peek()->kind != Token::Op || (peek()->text != "<=" && peek()->text != "<"))
          throw ParseError("lp parse: expected <= after bound value");
        ++pos;
        if (!peek() || peek()->kind != Token::Word)
          throw ParseError("lp parse: expected variable in bound");
        const std::int32_t j = var_id(peek()->text);
        ++pos;
        model.vars[j].lb = lead_inf ? (lead_sign < 0 ? -kInf : kInf) : lead_val;
        if (peek() && peek()->kind == Token::Op &&
            (peek()->text == "<=" || peek()->text == "<")) {
          ++pos;
          double s = 1.0;
          while (peek() && peek()->kind == Token::Op &&
                 (peek()->text == "+" || peek()->text == "-")) {
            if (peek()->text == "-") s = -s;
            ++pos;
          }
          if (peek() && peek()->kind == Token::Number) {
            model.vars[j].ub = s * peek()->value;
            ++pos;
          } else if (peek() && peek()->kind == Token::Word && is_inf_word(peek()->text)) {
            model.vars[j].ub = s < 0 ? -kInf : kInf;
            ++pos;
          } else {
            throw ParseError("lp parse: expected upper bound value");
          }
        }
        continue;
      }
      if (!peek() || peek()->kind != Token::Word)
        throw ParseError("lp parse: expected bound line");
      const std::string name = peek()->text;
      ++pos;
      if (peek() && peek()->kind == Token::Word && lower(peek()->text) == "free") {
        const std::int32_t j = var_id(name);
        model.vars[j].lb = -kInf;
        model.vars[j].ub = kInf;
        ++pos;
        continue;
      }
      const std::int32_t j = var_id(name);
      if (!peek() || peek()->kind != Token::Op)
        throw ParseError("lp parse: expected comparison in bound line");
      const std::string op = peek()->text;
      ++pos;
      double s = 1.0;
      while (peek() && peek()->kind == Token::Op &&
             (peek()->text == "+" || peek()->text == "-")) {
        if (peek()->text == "-") s = -s;
        ++pos;
      }
      double val;
      if (peek() && peek()->kind == Token::Number) {
        val = s * peek()->value;
        ++pos;
      } else if (peek() && peek()->kind == Token::Word && is_inf_word(peek()->text)) {
        val = s < 0 ? -kInf : kInf;
        ++pos;
      } else {
        throw ParseError("lp parse: expected bound value");
      }
      if (op == "<=" || op == "<") model.vars[j].ub = val;
      else if (op == ">=" || op == ">") model.vars[j].lb = val;
      else if (op == "=") { model.vars[j].lb = val; model.vars[j].ub = val; }
      else throw ParseError("lp parse: bad bound comparison");
    }
  }

  // Binaries.
  if (at_section() == "binaries") {
    ++pos;
    while (at_section().empty() && peek()) {
      if (peek()->kind != Token::Word)
        throw ParseError("lp parse: expected variable name in Binaries");
      const std::int32_t j = var_id(peek()->text);
      model.vars[j].binary = true;
      model.vars[j].lb = 0.0;
      model.vars[j].ub = 1.0;
      ++pos;
    }
  }
  if (at_section() == "general") {
    throw ParseError("lp parse: general integers are not supported");
  }
  if (at_section() != "end") throw ParseError("lp parse: expected End");
  model.validate();
  return model;
}

}  // namespace ddopt::lp
