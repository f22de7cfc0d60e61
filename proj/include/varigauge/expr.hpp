#pragma once

// Scalar math expressions over a declared symbol set, with exact
// first partial derivatives via forward-mode dual numbers and a
// symbolic derivative used for composing transformed Lagrangians.

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace varigauge {

/// First-order dual number: value plus one directional derivative.
struct Dual {
    double v = 0.0;
    double d = 0.0;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t position)
        : std::runtime_error(msg), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class UnknownSymbolError : public ParseError {
public:
    UnknownSymbolError(const std::string& name, std::size_t position)
        : ParseError("unknown identifier '" + name + "'", position), name_(name) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

/// Domain error during evaluation (log of non-positive, division by
/// zero, ...). Carries the offending sub-expression in text form.
class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& what, std::string subexpr)
        : std::runtime_error(what + " in '" + subexpr + "'"),
          subexpr_(std::move(subexpr)) {}
    const std::string& subexpression() const { return subexpr_; }

private:
    std::string subexpr_;
};

using EvalPoint = std::map<std::string, double>;

namespace detail {
struct Node;
}

/// Immutable expression tree. Safe to evaluate concurrently.
class Expression {
public:
    Expression() = default;

    /// Parse standard infix notation. `^` is right-associative, binds
    /// tighter than unary minus. Functions: sin cos tan exp log sqrt
    /// and the 2-ary atan2. Every identifier must appear in `symbols`.
    static Expression parse(std::string_view source,
                            std::vector<std::string> symbols);

    bool valid() const { return root_ != nullptr; }

    const std::vector<std::string>& symbols() const { return *symbols_; }

    /// Value at a named point (must cover every referenced symbol).
    double eval(const EvalPoint& x) const;

    /// Fast path: values ordered as in symbols().
    double eval(std::span<const double> values) const;

    /// Value and exact partials with respect to `wrt` (one dual pass
    /// per direction).
    std::pair<double, std::vector<double>>
    eval_grad(const EvalPoint& x, const std::vector<std::string>& wrt) const;

    /// Fast path: partials with respect to symbol indices `wrt`,
    /// written into `grad` (same length). Returns the value.
    double eval_grad(std::span<const double> values, std::span<const int> wrt,
                     std::span<double> grad) const;

    /// Exact symbolic partial derivative (lightly constant-folded).
    Expression derivative(const std::string& symbol) const;

    /// Re-express over a different symbol set; every referenced symbol
    /// must exist in `symbols`.
    Expression with_symbols(std::vector<std::string> symbols) const;

    /// Serialize; parse(str(), symbols()) reproduces the tree.
    std::string str() const;

    /// Structural equality of the trees (symbol tables aside).
    bool same_tree(const Expression& other) const;

    int symbol_index(std::string_view name) const;

    bool references(std::string_view name) const;

    friend Expression operator+(const Expression& a, const Expression& b);
    friend Expression operator*(const Expression& a, const Expression& b);

    static Expression constant(double value);

private:
    Expression(std::shared_ptr<const detail::Node> root,
               std::shared_ptr<const std::vector<std::string>> symbols)
        : root_(std::move(root)), symbols_(std::move(symbols)) {}

    std::shared_ptr<const detail::Node> root_;
    std::shared_ptr<const std::vector<std::string>> symbols_ =
        std::make_shared<const std::vector<std::string>>();
};

}  // namespace varigauge
