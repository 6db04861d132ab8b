#include "storeboard/measure.hpp"

#include "storeboard/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

namespace storeboard {

const char* to_string(AggFunc f) {
    switch (f) {
    case AggFunc::Sum:
        return "SUM";
    case AggFunc::Count:
        return "COUNT";
    case AggFunc::DistinctCount:
        return "DISTINCTCOUNT";
    case AggFunc::Min:
        return "MIN";
    case AggFunc::Max:
        return "MAX";
    case AggFunc::Average:
        return "AVERAGE";
    }
    return "?";
}

const char* to_string(BinaryOp op) {
    switch (op) {
    case BinaryOp::Add:
        return "+";
    case BinaryOp::Sub:
        return "-";
    case BinaryOp::Mul:
        return "*";
    case BinaryOp::Div:
        return "/";
    }
    return "?";
}

const char* to_string(CompareOp op) {
    switch (op) {
    case CompareOp::Lt:
        return "<";
    case CompareOp::Le:
        return "<=";
    case CompareOp::Gt:
        return ">";
    case CompareOp::Ge:
        return ">=";
    case CompareOp::Eq:
        return "=";
    case CompareOp::In:
        return "IN";
    }
    return "?";
}

MeasureExpr::MeasureExpr(Node node) : node_(std::make_shared<const Node>(std::move(node))) {}

namespace {

bool same(const NumberLiteral& a, const NumberLiteral& b) { return a.value == b.value; }
bool same(const ColumnAgg& a, const ColumnAgg& b) { return a.func == b.func && a.column == b.column; }
bool same(const MeasureRef& a, const MeasureRef& b) { return a.name == b.name; }
bool same(const Divide& a, const Divide& b) {
    return a.numerator == b.numerator && a.denominator == b.denominator && a.alternate == b.alternate;
}
bool same(const Binary& a, const Binary& b) {
    return a.op == b.op && a.left == b.left && a.right == b.right;
}
bool same(const Negate& a, const Negate& b) { return a.operand == b.operand; }
bool same(const Calculate& a, const Calculate& b) {
    return a.inner == b.inner && a.filters == b.filters;
}

} // namespace

bool MeasureExpr::operator==(const MeasureExpr& other) const {
    if (node_ == other.node_) {
        return true;
    }
    if (!node_ || !other.node_ || node_->value.index() != other.node_->value.index()) {
        return false;
    }
    return std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            return same(a, std::get<T>(other.node_->value));
        },
        node_->value);
}

MeasureExpr number(double v) { return MeasureExpr(Node{NumberLiteral{v}}); }
MeasureExpr aggregate(AggFunc f, ColumnRef column) {
    return MeasureExpr(Node{ColumnAgg{f, std::move(column)}});
}
MeasureExpr measure_ref(std::string name) { return MeasureExpr(Node{MeasureRef{std::move(name)}}); }
MeasureExpr divide(MeasureExpr num, MeasureExpr den, MeasureExpr alt) {
    return MeasureExpr(Node{Divide{std::move(num), std::move(den), std::move(alt)}});
}
MeasureExpr binary(BinaryOp op, MeasureExpr left, MeasureExpr right) {
    return MeasureExpr(Node{Binary{op, std::move(left), std::move(right)}});
}
MeasureExpr negate(MeasureExpr operand) { return MeasureExpr(Node{Negate{std::move(operand)}}); }
MeasureExpr calculate(MeasureExpr inner, std::vector<FilterAtom> filters) {
    return MeasureExpr(Node{Calculate{std::move(inner), std::move(filters)}});
}

ColumnPredicate FilterAtom::to_predicate() const {
    auto as_text = [](const Literal& l) {
        if (const auto* d = std::get_if<double>(&l)) {
            return fmt::format("{}", *d);
        }
        return std::get<std::string>(l);
    };
    auto as_number = [&](const Literal& l) -> double {
        if (const auto* d = std::get_if<double>(&l)) {
            return *d;
        }
        const auto& s = std::get<std::string>(l);
        if (auto day = parse_iso_date(s)) {
            return *day;
        }
        throw TypeMismatch("comparison on " + column.to_string() + " needs a number or ISO date, got \"" +
                           s + "\"");
    };
    if (op == CompareOp::Eq || op == CompareOp::In) {
        std::vector<std::string> texts;
        for (const auto& v : values) {
            texts.push_back(as_text(v));
        }
        return ColumnPredicate::in(column, std::move(texts));
    }
    Range r;
    double v = as_number(values.front());
    switch (op) {
    case CompareOp::Lt:
        r.hi = v;
        r.hi_inclusive = false;
        break;
    case CompareOp::Le:
        r.hi = v;
        break;
    case CompareOp::Gt:
        r.lo = v;
        r.lo_inclusive = false;
        break;
    case CompareOp::Ge:
        r.lo = v;
        break;
    default:
        break;
    }
    return ColumnPredicate::between(column, r);
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace {

enum class Tok {
    Number,
    Ident,
    Bracket, // [name]
    String,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    End
};

struct Token {
    Tok kind;
    std::string text;
    double number = 0;
    std::size_t pos = 0;
    std::size_t end = 0;
};

std::string describe(const Token& t) {
    switch (t.kind) {
    case Tok::End:
        return "end of input";
    case Tok::Number:
        return "number " + t.text;
    case Tok::Ident:
        return "identifier '" + t.text + "'";
    case Tok::Bracket:
        return "[" + t.text + "]";
    case Tok::String:
        return "string \"" + t.text + "\"";
    default:
        return "'" + t.text + "'";
    }
}

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto is_ident_start = [](char c) {
        return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_';
    };
    auto is_ident = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c)) != 0) {
            ++i;
            continue;
        }
        Token t{Tok::End, "", 0, i, i};
        if (std::isdigit(static_cast<unsigned char>(c)) != 0 ||
            (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])) != 0)) {
            std::size_t j = i;
            while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) != 0 || src[j] == '.')) {
                ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) {
                    ++k;
                }
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k])) != 0) {
                    j = k;
                    while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j])) != 0) {
                        ++j;
                    }
                }
            }
            t.kind = Tok::Number;
            t.text = std::string(src.substr(i, j - i));
            auto [ptr, ec] = std::from_chars(src.data() + i, src.data() + j, t.number);
            if (ec != std::errc{} || ptr != src.data() + j || !std::isfinite(t.number)) {
                throw SyntaxError(i, "number", "'" + t.text + "'");
            }
            i = j;
        } else if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && is_ident(src[j])) {
                ++j;
            }
            t.kind = Tok::Ident;
            t.text = std::string(src.substr(i, j - i));
            i = j;
        } else if (c == '[') {
            auto close = src.find(']', i + 1);
            if (close == std::string_view::npos) {
                throw SyntaxError(i, "']'", "end of input");
            }
            t.kind = Tok::Bracket;
            t.text = std::string(src.substr(i + 1, close - i - 1));
            if (t.text.empty()) {
                throw SyntaxError(i + 1, "name", "']'");
            }
            i = close + 1;
        } else if (c == '"') {
            std::string value;
            std::size_t j = i + 1;
            bool closed = false;
            while (j < src.size()) {
                if (src[j] == '"') {
                    if (j + 1 < src.size() && src[j + 1] == '"') {
                        value.push_back('"');
                        j += 2;
                        continue;
                    }
                    closed = true;
                    ++j;
                    break;
                }
                value.push_back(src[j++]);
            }
            if (!closed) {
                throw SyntaxError(i, "closing '\"'", "end of input");
            }
            t.kind = Tok::String;
            t.text = std::move(value);
            i = j;
        } else {
            auto two = src.substr(i, 2);
            if (two == "<=" || two == ">=") {
                t.kind = two == "<=" ? Tok::Le : Tok::Ge;
                t.text = std::string(two);
                i += 2;
            } else {
                switch (c) {
                case '(': t.kind = Tok::LParen; break;
                case ')': t.kind = Tok::RParen; break;
                case '{': t.kind = Tok::LBrace; break;
                case '}': t.kind = Tok::RBrace; break;
                case ',': t.kind = Tok::Comma; break;
                case '+': t.kind = Tok::Plus; break;
                case '-': t.kind = Tok::Minus; break;
                case '*': t.kind = Tok::Star; break;
                case '/': t.kind = Tok::Slash; break;
                case '<': t.kind = Tok::Lt; break;
                case '>': t.kind = Tok::Gt; break;
                case '=': t.kind = Tok::Eq; break;
                default:
                    throw SyntaxError(i, "expression", fmt::format("'{}'", c));
                }
                t.text = std::string(1, c);
                ++i;
            }
        }
        t.end = i;
        out.push_back(std::move(t));
    }
    out.push_back(Token{Tok::End, "", 0, src.size(), src.size()});
    return out;
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
  public:
    explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

    MeasureExpr parse_all() {
        auto e = expr();
        if (peek().kind != Tok::End) {
            fail("operator or end of input");
        }
        return e;
    }

  private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& next() { return tokens_[pos_++]; }

    [[noreturn]] void fail(const std::string& expected) const {
        throw SyntaxError(peek().pos, expected, describe(peek()));
    }

    void expect(Tok kind, const char* what) {
        if (peek().kind != kind) {
            fail(what);
        }
        ++pos_;
    }

    MeasureExpr expr() {
        auto left = term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            auto op = next().kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
            left = binary(op, std::move(left), term());
        }
        return left;
    }

    MeasureExpr term() {
        auto left = unary();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            auto op = next().kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
            left = binary(op, std::move(left), unary());
        }
        return left;
    }

    MeasureExpr unary() {
        if (peek().kind == Tok::Minus) {
            ++pos_;
            // "-<number>" is a negative literal; anything else is a negation.
            if (peek().kind == Tok::Number) {
                return number(-next().number);
            }
            return negate(primary());
        }
        return primary();
    }

    MeasureExpr primary() {
        const auto& t = peek();
        switch (t.kind) {
        case Tok::Number:
            ++pos_;
            return number(t.number);
        case Tok::Bracket:
            ++pos_;
            return measure_ref(t.text);
        case Tok::LParen: {
            ++pos_;
            auto e = expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        case Tok::Ident:
            return call();
        default:
            fail("number, '[measure]', function call or '('");
        }
    }

    ColumnRef column() {
        if (peek().kind != Tok::Ident) {
            fail("column reference");
        }
        const auto& ident = next();
        // Table[Column]: the bracket must follow the table name directly.
        if (peek().kind == Tok::Bracket && peek().pos == ident.end) {
            const auto& col = next();
            return {ident.text, col.text};
        }
        return {"", ident.text};
    }

    Literal literal() {
        if (peek().kind == Tok::String) {
            return next().text;
        }
        if (peek().kind == Tok::Minus) {
            ++pos_;
            if (peek().kind != Tok::Number) {
                fail("number");
            }
            return -next().number;
        }
        if (peek().kind == Tok::Number) {
            return next().number;
        }
        fail("literal");
    }

    FilterAtom filter() {
        FilterAtom atom;
        atom.column = column();
        auto k = peek().kind;
        if (k == Tok::Ident && upper(peek().text) == "IN") {
            ++pos_;
            expect(Tok::LBrace, "'{'");
            atom.op = CompareOp::In;
            atom.values.push_back(literal());
            while (peek().kind == Tok::Comma) {
                ++pos_;
                atom.values.push_back(literal());
            }
            expect(Tok::RBrace, "'}'");
            return atom;
        }
        switch (k) {
        case Tok::Lt: atom.op = CompareOp::Lt; break;
        case Tok::Le: atom.op = CompareOp::Le; break;
        case Tok::Gt: atom.op = CompareOp::Gt; break;
        case Tok::Ge: atom.op = CompareOp::Ge; break;
        case Tok::Eq: atom.op = CompareOp::Eq; break;
        default:
            fail("comparison operator or IN");
        }
        ++pos_;
        atom.values.push_back(literal());
        return atom;
    }

    MeasureExpr call() {
        const auto& name_tok = next();
        if (peek().kind != Tok::LParen) {
            fail("'(' after function name");
        }
        auto name = upper(name_tok.text);
        static const std::pair<const char*, AggFunc> aggs[] = {
            {"SUM", AggFunc::Sum}, {"COUNT", AggFunc::Count},
            {"DISTINCTCOUNT", AggFunc::DistinctCount}, {"MIN", AggFunc::Min},
            {"MAX", AggFunc::Max}, {"AVERAGE", AggFunc::Average}};
        for (const auto& [fname, f] : aggs) {
            if (name == fname) {
                ++pos_;
                auto col = column();
                expect(Tok::RParen, "')'");
                return aggregate(f, std::move(col));
            }
        }
        if (name == "DIVIDE") {
            ++pos_;
            auto num = expr();
            expect(Tok::Comma, "','");
            auto den = expr();
            expect(Tok::Comma, "',' (DIVIDE needs an alternate result)");
            auto alt = expr();
            expect(Tok::RParen, "')'");
            return divide(std::move(num), std::move(den), std::move(alt));
        }
        if (name == "CALCULATE") {
            ++pos_;
            auto inner = expr();
            std::vector<FilterAtom> filters;
            expect(Tok::Comma, "',' followed by a filter");
            filters.push_back(filter());
            while (peek().kind == Tok::Comma) {
                ++pos_;
                filters.push_back(filter());
            }
            expect(Tok::RParen, "')'");
            return calculate(std::move(inner), std::move(filters));
        }
        throw UnknownFunction(name_tok.text);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

int precedence(const MeasureExpr& e) {
    if (const auto* b = std::get_if<Binary>(&e.node().value)) {
        return (b->op == BinaryOp::Add || b->op == BinaryOp::Sub) ? 1 : 2;
    }
    return 3;
}

std::string print_number(double v) { return fmt::format("{}", v); }

std::string print_literal(const Literal& l) {
    if (const auto* d = std::get_if<double>(&l)) {
        return print_number(*d);
    }
    std::string out = "\"";
    for (char c : std::get<std::string>(l)) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out += '"';
    return out;
}

void print_to(const MeasureExpr& e, std::string& out);

void print_child(const MeasureExpr& child, bool parens, std::string& out) {
    if (parens) {
        out += '(';
    }
    print_to(child, out);
    if (parens) {
        out += ')';
    }
}

void print_to(const MeasureExpr& e, std::string& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, NumberLiteral>) {
                out += print_number(n.value);
            } else if constexpr (std::is_same_v<T, ColumnAgg>) {
                out += to_string(n.func);
                out += '(';
                out += n.column.to_string();
                out += ')';
            } else if constexpr (std::is_same_v<T, MeasureRef>) {
                out += '[';
                out += n.name;
                out += ']';
            } else if constexpr (std::is_same_v<T, Divide>) {
                out += "DIVIDE(";
                print_to(n.numerator, out);
                out += ", ";
                print_to(n.denominator, out);
                out += ", ";
                print_to(n.alternate, out);
                out += ')';
            } else if constexpr (std::is_same_v<T, Binary>) {
                int p = precedence(e);
                print_child(n.left, precedence(n.left) < p, out);
                out += ' ';
                out += to_string(n.op);
                out += ' ';
                print_child(n.right, precedence(n.right) <= p, out);
            } else if constexpr (std::is_same_v<T, Negate>) {
                out += '-';
                // A bare number after '-' would read back as a negative literal.
                bool parens = precedence(n.operand) < 3 ||
                              std::holds_alternative<NumberLiteral>(n.operand.node().value) ||
                              std::holds_alternative<Negate>(n.operand.node().value);
                print_child(n.operand, parens, out);
            } else if constexpr (std::is_same_v<T, Calculate>) {
                out += "CALCULATE(";
                print_to(n.inner, out);
                for (const auto& f : n.filters) {
                    out += ", ";
                    out += f.column.to_string();
                    if (f.op == CompareOp::In) {
                        out += " IN {";
                        for (std::size_t i = 0; i < f.values.size(); ++i) {
                            if (i > 0) {
                                out += ", ";
                            }
                            out += print_literal(f.values[i]);
                        }
                        out += '}';
                    } else {
                        out += ' ';
                        out += to_string(f.op);
                        out += ' ';
                        out += print_literal(f.values.front());
                    }
                }
                out += ')';
            }
        },
        e.node().value);
}

void collect(const MeasureExpr& e, std::vector<std::string>* measures, std::vector<ColumnRef>* columns) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ColumnAgg>) {
                if (columns) {
                    columns->push_back(n.column);
                }
            } else if constexpr (std::is_same_v<T, MeasureRef>) {
                if (measures) {
                    measures->push_back(n.name);
                }
            } else if constexpr (std::is_same_v<T, Divide>) {
                collect(n.numerator, measures, columns);
                collect(n.denominator, measures, columns);
                collect(n.alternate, measures, columns);
            } else if constexpr (std::is_same_v<T, Binary>) {
                collect(n.left, measures, columns);
                collect(n.right, measures, columns);
            } else if constexpr (std::is_same_v<T, Negate>) {
                collect(n.operand, measures, columns);
            } else if constexpr (std::is_same_v<T, Calculate>) {
                collect(n.inner, measures, columns);
                if (columns) {
                    for (const auto& f : n.filters) {
                        columns->push_back(f.column);
                    }
                }
            }
        },
        e.node().value);
}

} // namespace

MeasureExpr parse(std::string_view source) { return Parser(source).parse_all(); }

std::string print(const MeasureExpr& expr) {
    std::string out;
    print_to(expr, out);
    return out;
}

std::vector<std::string> referenced_measures(const MeasureExpr& expr) {
    std::vector<std::string> out;
    collect(expr, &out, nullptr);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<ColumnRef> referenced_columns(const MeasureExpr& expr) {
    std::vector<ColumnRef> out;
    collect(expr, nullptr, &out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace storeboard
