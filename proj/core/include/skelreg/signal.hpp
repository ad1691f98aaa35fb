#pragma once

#include "skelreg/errors.hpp"
#include "skelreg/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace skelreg {

enum class TrigKind { None, Sin, Cos };

/// One summand of an exp-poly-trig signal:
///   coef * t^power * e^{exp_rate * t} * { 1 | sin(freq*t) | cos(freq*t) }
/// Canonical form keeps freq > 0 whenever trig != None; terms with equal
/// (power, exp_rate, trig, freq) merge by adding coefficients. The class
/// is closed under d/dt, so derivatives of any order are exact.
struct SignalTerm {
    double coef = 0.0;
    int power = 0;
    double exp_rate = 0.0;
    TrigKind trig = TrigKind::None;
    double freq = 0.0;

    [[nodiscard]] double eval(double t) const;
};

/// Vector-valued forcing term: each component is a finite sum of
/// SignalTerms. Immutable in use; all operations return new values.
class Signal {
public:
    Signal() = default;
    explicit Signal(Index dim) : components_(static_cast<std::size_t>(dim)) {}

    [[nodiscard]] static Signal zero(Index dim) { return Signal(dim); }

    /// Single-component constant signal helpers used by tests and synth.
    [[nodiscard]] Index dim() const noexcept { return static_cast<Index>(components_.size()); }

    [[nodiscard]] const std::vector<std::vector<SignalTerm>>& components() const noexcept {
        return components_;
    }

    /// Adds a term to component `comp`, merging with an existing term of
    /// the same shape. Zero-coefficient terms are dropped.
    void add_term(Index comp, SignalTerm term);

    [[nodiscard]] double eval_component(Index comp, double t) const;
    [[nodiscard]] Vector eval(double t) const;

    [[nodiscard]] bool is_zero() const noexcept;

private:
    std::vector<std::vector<SignalTerm>> components_;
};

inline constexpr int kDefaultOrderCap = 32;

/// Exact symbolic derivative; same dimension, same term class.
[[nodiscard]] Signal differentiate(const Signal& f);

/// [f, f', ..., f^(max_order)] computed once.
[[nodiscard]] std::vector<Signal> derivative_table(const Signal& f, int max_order,
                                                   int order_cap = kDefaultOrderCap);

/// Value of the order-th derivative at t. Throws OrderCapError when order
/// exceeds the cap.
[[nodiscard]] Vector eval(const Signal& f, double t, int order, int order_cap = kDefaultOrderCap);

/// Linear image m * f (m: rows x dim(f)); exact, term-merged.
[[nodiscard]] Signal apply(const Matrix& m, const Signal& f);

[[nodiscard]] Signal operator+(const Signal& a, const Signal& b);
[[nodiscard]] Signal operator*(double s, const Signal& f);
[[nodiscard]] Signal operator-(const Signal& f);

/// Expression form, one component per ';'. Parses back to an equivalent
/// signal (coefficients are printed round-trip exact).
[[nodiscard]] std::string to_string(const Signal& f);

/// One expression string per component, same syntax as to_string.
[[nodiscard]] std::vector<std::string> component_strings(const Signal& f);

/// Extension point for forcing terms outside the exp-poly-trig class.
/// The solvers consume forcing exclusively through this interface, so any
/// type able to evaluate its exact derivatives (to the order the chain
/// depth demands: length + 1) can drive them.
class Forcing {
public:
    virtual ~Forcing() = default;
    [[nodiscard]] virtual Index dim() const = 0;
    /// Value of the order-th derivative at t.
    [[nodiscard]] virtual Vector derivative(double t, int order) const = 0;
};

/// Signal-backed forcing with the symbolic derivative table precomputed
/// up to max_order; immutable and safe to share across threads.
class SignalForcing final : public Forcing {
public:
    SignalForcing(const Signal& f, int max_order, int order_cap = kDefaultOrderCap)
        : table_(derivative_table(f, max_order, order_cap)) {}

    [[nodiscard]] Index dim() const override { return table_.front().dim(); }

    [[nodiscard]] Vector derivative(double t, int order) const override {
        return table_.at(static_cast<std::size_t>(order)).eval(t);
    }

private:
    std::vector<Signal> table_;
};

/// Parse the signal grammar:
///   component := sum of terms, terms separated by '+'/'-'
///   term      := [coef '*'] factor {'*' factor}
///   factor    := 't' ['^' int] | 'exp' '(' coef '*' 't' ')'
///              | 'sin' '(' coef '*' 't' ')' | 'cos' '(' coef '*' 't' ')'
///              | numeric literal
/// Whitespace is insignificant; unary minus on coefficients is allowed.
/// Throws ParseError carrying the offending position and expected tokens.
[[nodiscard]] Signal parse_signal(std::string_view text, Index dim);

}  // namespace skelreg
