#include "skelreg/signal.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <utility>

namespace skelreg {

namespace {

double pow_int(double t, int k) {
    double out = 1.0;
    for (int i = 0; i < k; ++i) {
        out *= t;
    }
    return out;
}

/// Canonical form: freq > 0 for trig terms; sin(0*t) collapses to zero,
/// cos(0*t) to a plain factor of one.
SignalTerm canonicalize(SignalTerm term) {
    if (term.trig == TrigKind::None) {
        term.freq = 0.0;
        return term;
    }
    if (term.freq == 0.0) {
        if (term.trig == TrigKind::Sin) {
            term.coef = 0.0;
        }
        term.trig = TrigKind::None;
        return term;
    }
    if (term.freq < 0.0) {
        term.freq = -term.freq;
        if (term.trig == TrigKind::Sin) {
            term.coef = -term.coef;
        }
    }
    return term;
}

bool same_shape(const SignalTerm& a, const SignalTerm& b) {
    return a.power == b.power && a.exp_rate == b.exp_rate && a.trig == b.trig && a.freq == b.freq;
}

}  // namespace

double SignalTerm::eval(double t) const {
    double v = coef * pow_int(t, power);
    if (exp_rate != 0.0) {
        v *= std::exp(exp_rate * t);
    }
    switch (trig) {
        case TrigKind::Sin: v *= std::sin(freq * t); break;
        case TrigKind::Cos: v *= std::cos(freq * t); break;
        case TrigKind::None: break;
    }
    return v;
}

void Signal::add_term(Index comp, SignalTerm term) {
    term = canonicalize(term);
    if (term.coef == 0.0) {
        return;
    }
    auto& terms = components_.at(static_cast<std::size_t>(comp));
    for (auto& existing : terms) {
        if (same_shape(existing, term)) {
            existing.coef += term.coef;
            if (existing.coef == 0.0) {
                existing = terms.back();
                terms.pop_back();
            }
            return;
        }
    }
    terms.push_back(term);
}

double Signal::eval_component(Index comp, double t) const {
    double v = 0.0;
    for (const auto& term : components_.at(static_cast<std::size_t>(comp))) {
        v += term.eval(t);
    }
    return v;
}

Vector Signal::eval(double t) const {
    Vector v(dim());
    for (Index i = 0; i < dim(); ++i) {
        v(i) = eval_component(i, t);
    }
    return v;
}

bool Signal::is_zero() const noexcept {
    for (const auto& terms : components_) {
        if (!terms.empty()) return false;
    }
    return true;
}

Signal differentiate(const Signal& f) {
    Signal out(f.dim());
    for (Index i = 0; i < f.dim(); ++i) {
        for (const SignalTerm& term : f.components()[static_cast<std::size_t>(i)]) {
            // Product rule over the three factors; each piece stays in
            // the class.
            if (term.power > 0) {
                SignalTerm d = term;
                d.coef = term.coef * term.power;
                d.power = term.power - 1;
                out.add_term(i, d);
            }
            if (term.exp_rate != 0.0) {
                SignalTerm d = term;
                d.coef = term.coef * term.exp_rate;
                out.add_term(i, d);
            }
            if (term.trig == TrigKind::Sin) {
                SignalTerm d = term;
                d.coef = term.coef * term.freq;
                d.trig = TrigKind::Cos;
                out.add_term(i, d);
            } else if (term.trig == TrigKind::Cos) {
                SignalTerm d = term;
                d.coef = -term.coef * term.freq;
                d.trig = TrigKind::Sin;
                out.add_term(i, d);
            }
        }
    }
    return out;
}

std::vector<Signal> derivative_table(const Signal& f, int max_order, int order_cap) {
    if (max_order > order_cap) {
        throw OrderCapError("derivative order " + std::to_string(max_order) +
                            " exceeds cap " + std::to_string(order_cap));
    }
    std::vector<Signal> table;
    table.reserve(static_cast<std::size_t>(max_order) + 1);
    table.push_back(f);
    for (int k = 0; k < max_order; ++k) {
        table.push_back(differentiate(table.back()));
    }
    return table;
}

Vector eval(const Signal& f, double t, int order, int order_cap) {
    if (order < 0) {
        throw std::invalid_argument("derivative order must be nonnegative");
    }
    if (order > order_cap) {
        throw OrderCapError("derivative order " + std::to_string(order) + " exceeds cap " +
                            std::to_string(order_cap));
    }
    Signal g = f;
    for (int k = 0; k < order; ++k) {
        g = differentiate(g);
    }
    return g.eval(t);
}

Signal apply(const Matrix& m, const Signal& f) {
    if (m.cols() != f.dim()) {
        throw std::invalid_argument("apply: matrix columns must match signal dimension");
    }
    Signal out(m.rows());
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            const double w = m(i, j);
            if (w == 0.0) continue;
            for (SignalTerm term : f.components()[static_cast<std::size_t>(j)]) {
                term.coef *= w;
                out.add_term(i, term);
            }
        }
    }
    return out;
}

Signal operator+(const Signal& a, const Signal& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("signal sum: dimension mismatch");
    }
    Signal out = a;
    for (Index i = 0; i < b.dim(); ++i) {
        for (const SignalTerm& term : b.components()[static_cast<std::size_t>(i)]) {
            out.add_term(i, term);
        }
    }
    return out;
}

Signal operator*(double s, const Signal& f) {
    Signal out(f.dim());
    for (Index i = 0; i < f.dim(); ++i) {
        for (SignalTerm term : f.components()[static_cast<std::size_t>(i)]) {
            term.coef *= s;
            out.add_term(i, term);
        }
    }
    return out;
}

Signal operator-(const Signal& f) {
    return -1.0 * f;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string term_to_string(const SignalTerm& term, double coef_abs) {
    std::vector<std::string> factors;
    if (term.power == 1) {
        factors.push_back("t");
    } else if (term.power > 1) {
        factors.push_back("t^" + std::to_string(term.power));
    }
    if (term.exp_rate != 0.0) {
        factors.push_back("exp(" + fmt_double(term.exp_rate) + "*t)");
    }
    if (term.trig == TrigKind::Sin) {
        factors.push_back("sin(" + fmt_double(term.freq) + "*t)");
    } else if (term.trig == TrigKind::Cos) {
        factors.push_back("cos(" + fmt_double(term.freq) + "*t)");
    }

    std::string out;
    if (coef_abs != 1.0 || factors.empty()) {
        out = fmt_double(coef_abs);
    }
    for (const auto& f : factors) {
        if (!out.empty()) out += "*";
        out += f;
    }
    return out;
}

}  // namespace

namespace {

std::string component_to_string(const std::vector<SignalTerm>& terms) {
    if (terms.empty()) {
        return "0";
    }
    std::string out;
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const SignalTerm& term = terms[k];
        const bool negative = term.coef < 0.0;
        if (k == 0) {
            if (negative) out += "-";
        } else {
            out += negative ? " - " : " + ";
        }
        out += term_to_string(term, std::abs(term.coef));
    }
    return out;
}

}  // namespace

std::string to_string(const Signal& f) {
    std::string out;
    for (Index i = 0; i < f.dim(); ++i) {
        if (i > 0) out += "; ";
        out += component_to_string(f.components()[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::vector<std::string> component_strings(const Signal& f) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(f.dim()));
    for (Index i = 0; i < f.dim(); ++i) {
        out.push_back(component_to_string(f.components()[static_cast<std::size_t>(i)]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

struct Lexer {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
    }

    [[nodiscard]] bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    [[nodiscard]] char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what, std::vector<std::string> expected) {
        skip_ws();
        throw ParseError("parse error at position " + std::to_string(pos) + ": " + what,
                         pos, std::move(expected));
    }

    /// Word = maximal run of alphabetic characters (t, exp, sin, cos).
    std::string_view peek_word() {
        skip_ws();
        std::size_t end = pos;
        while (end < text.size() && std::isalpha(static_cast<unsigned char>(text[end]))) {
            ++end;
        }
        return text.substr(pos, end - pos);
    }

    [[nodiscard]] bool at_number() {
        const char c = peek();
        return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
    }

    double read_number() {
        skip_ws();
        if (!at_number()) {
            fail("expected a numeric literal", {"number"});
        }
        // Numbers are unsigned at the token level; signs are handled by
        // the term/sum structure.
        const std::string chunk(text.substr(pos, 64));
        char* end = nullptr;
        const double value = std::strtod(chunk.c_str(), &end);
        if (end == chunk.c_str()) {
            fail("malformed numeric literal", {"number"});
        }
        pos += static_cast<std::size_t>(end - chunk.c_str());
        return value;
    }

    int read_nonneg_int() {
        skip_ws();
        if (!std::isdigit(static_cast<unsigned char>(peek()))) {
            fail("expected a nonnegative integer exponent", {"integer"});
        }
        int value = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            value = value * 10 + (text[pos] - '0');
            ++pos;
        }
        return value;
    }
};

/// Rate argument of exp/sin/cos: ['-'] [number '*'] 't'.
double parse_rate_arg(Lexer& lex) {
    double sign = 1.0;
    while (lex.accept('-')) {
        sign = -sign;
    }
    double value = 1.0;
    if (lex.at_number()) {
        value = lex.read_number();
        if (!lex.accept('*')) {
            lex.fail("expected '*' before 't' in function argument", {"*"});
        }
    }
    if (lex.peek_word() != "t") {
        lex.fail("expected 't' in function argument", {"t"});
    }
    lex.pos += 1;
    return sign * value;
}

/// One multiplicative factor folded into the accumulating term.
void parse_factor(Lexer& lex, SignalTerm& term) {
    if (lex.at_number()) {
        term.coef *= lex.read_number();
        return;
    }
    const std::string_view word = lex.peek_word();
    if (word == "t") {
        lex.pos += 1;
        int k = 1;
        if (lex.accept('^')) {
            k = lex.read_nonneg_int();
        }
        term.power += k;
        return;
    }
    if (word == "exp" || word == "sin" || word == "cos") {
        const std::size_t word_pos = lex.pos;
        lex.pos += word.size();
        if (!lex.accept('(')) {
            lex.fail("expected '(' after function name", {"("});
        }
        const double rate = parse_rate_arg(lex);
        if (!lex.accept(')')) {
            lex.fail("expected ')' after function argument", {")"});
        }
        if (word == "exp") {
            term.exp_rate += rate;
        } else {
            if (term.trig != TrigKind::None) {
                lex.pos = word_pos;
                lex.fail("a term may contain at most one sin/cos factor", {"t", "exp", "number"});
            }
            term.trig = (word == "sin") ? TrigKind::Sin : TrigKind::Cos;
            term.freq = rate;
        }
        return;
    }
    lex.fail("expected a factor", {"number", "t", "exp", "sin", "cos"});
}

SignalTerm parse_term(Lexer& lex, double sign) {
    SignalTerm term;
    term.coef = sign;
    while (lex.accept('-')) {
        term.coef = -term.coef;
    }
    parse_factor(lex, term);
    while (lex.accept('*')) {
        while (lex.accept('-')) {
            term.coef = -term.coef;
        }
        parse_factor(lex, term);
    }
    return term;
}

void parse_component(Lexer& lex, Signal& out, Index comp) {
    double sign = 1.0;
    if (lex.accept('-')) {
        sign = -1.0;
    } else {
        lex.accept('+');
    }
    out.add_term(comp, parse_term(lex, sign));
    while (true) {
        if (lex.accept('+')) {
            sign = 1.0;
        } else if (lex.accept('-')) {
            sign = -1.0;
        } else {
            return;
        }
        out.add_term(comp, parse_term(lex, sign));
    }
}

}  // namespace

Signal parse_signal(std::string_view text, Index dim) {
    if (dim < 0) {
        throw std::invalid_argument("parse_signal: dimension must be nonnegative");
    }
    Lexer lex{text};
    Signal out(dim);
    Index comp = 0;
    while (true) {
        if (comp >= dim) {
            lex.fail("expression has more components than the declared dimension " +
                         std::to_string(dim),
                     {"end of input"});
        }
        parse_component(lex, out, comp);
        ++comp;
        if (lex.at_end()) {
            break;
        }
        if (!lex.accept(';')) {
            lex.fail("expected ';' between components or end of input", {";", "+", "-"});
        }
    }
    if (comp != dim) {
        lex.fail("expression has " + std::to_string(comp) + " components, expected " +
                     std::to_string(dim),
                 {";"});
    }
    return out;
}

}  // namespace skelreg
