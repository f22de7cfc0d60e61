#include "varigauge/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace varigauge {
namespace detail {

enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Atan2 };

struct Node {
    enum class Kind { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
    Kind kind;
    double num = 0.0;
    int var = -1;
    Fn fn = Fn::Sin;
    std::shared_ptr<const Node> a, b;
};

using NodePtr = std::shared_ptr<const Node>;

namespace {

NodePtr mkNum(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Num;
    n->num = v;
    return n;
}

NodePtr mkVar(int idx) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Var;
    n->var = idx;
    return n;
}

NodePtr mkBin(Node::Kind k, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr mkNeg(NodePtr a) {
    if (a->kind == Node::Kind::Num) return mkNum(-a->num);
    if (a->kind == Node::Kind::Neg) return a->a;
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Neg;
    n->a = std::move(a);
    return n;
}

NodePtr mkCall(Fn f, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Call;
    n->fn = f;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

bool isNum(const NodePtr& n, double v) {
    return n->kind == Node::Kind::Num && n->num == v;
}

// Folding constructors, used only when composing derivative trees.
NodePtr fAdd(NodePtr a, NodePtr b) {
    if (isNum(a, 0)) return b;
    if (isNum(b, 0)) return a;
    if (a->kind == Node::Kind::Num && b->kind == Node::Kind::Num)
        return mkNum(a->num + b->num);
    return mkBin(Node::Kind::Add, std::move(a), std::move(b));
}

NodePtr fSub(NodePtr a, NodePtr b) {
    if (isNum(b, 0)) return a;
    if (isNum(a, 0)) return mkNeg(std::move(b));
    if (a->kind == Node::Kind::Num && b->kind == Node::Kind::Num)
        return mkNum(a->num - b->num);
    return mkBin(Node::Kind::Sub, std::move(a), std::move(b));
}

NodePtr fMul(NodePtr a, NodePtr b) {
    if (isNum(a, 0) || isNum(b, 0)) return mkNum(0);
    if (isNum(a, 1)) return b;
    if (isNum(b, 1)) return a;
    if (a->kind == Node::Kind::Num && b->kind == Node::Kind::Num)
        return mkNum(a->num * b->num);
    return mkBin(Node::Kind::Mul, std::move(a), std::move(b));
}

NodePtr fDiv(NodePtr a, NodePtr b) {
    if (isNum(a, 0)) return mkNum(0);
    if (isNum(b, 1)) return a;
    return mkBin(Node::Kind::Div, std::move(a), std::move(b));
}

NodePtr fPow(NodePtr a, NodePtr b) {
    if (isNum(b, 1)) return a;
    if (isNum(b, 0)) return mkNum(1);
    return mkBin(Node::Kind::Pow, std::move(a), std::move(b));
}

struct FnInfo {
    const char* name;
    Fn fn;
    int arity;
};

constexpr FnInfo kFunctions[] = {
    {"sin", Fn::Sin, 1},  {"cos", Fn::Cos, 1},   {"tan", Fn::Tan, 1},
    {"exp", Fn::Exp, 1},  {"log", Fn::Log, 1},   {"sqrt", Fn::Sqrt, 1},
    {"atan2", Fn::Atan2, 2},
};

const FnInfo* lookupFn(std::string_view name) {
    for (const auto& f : kFunctions)
        if (name == f.name) return &f;
    return nullptr;
}

// ---- printing ------------------------------------------------------

int prec(const Node* n) {
    switch (n->kind) {
        case Node::Kind::Add:
        case Node::Kind::Sub: return 1;
        case Node::Kind::Mul:
        case Node::Kind::Div: return 2;
        case Node::Kind::Neg: return 3;
        case Node::Kind::Pow: return 4;
        default: return 5;
    }
}

void print(const Node* n, const std::vector<std::string>& syms,
           std::string& out) {
    auto wrap = [&](const Node* c, bool parens) {
        if (parens) out += '(';
        print(c, syms, out);
        if (parens) out += ')';
    };
    switch (n->kind) {
        case Node::Kind::Num: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n->num);
            out += buf;
            break;
        }
        case Node::Kind::Var:
            out += syms[static_cast<std::size_t>(n->var)];
            break;
        case Node::Kind::Neg:
            out += '-';
            wrap(n->a.get(), prec(n->a.get()) < 3);
            break;
        case Node::Kind::Add:
        case Node::Kind::Sub:
        case Node::Kind::Mul:
        case Node::Kind::Div: {
            int p = prec(n);
            wrap(n->a.get(), prec(n->a.get()) < p);
            switch (n->kind) {
                case Node::Kind::Add: out += " + "; break;
                case Node::Kind::Sub: out += " - "; break;
                case Node::Kind::Mul: out += '*'; break;
                default: out += '/'; break;
            }
            wrap(n->b.get(), prec(n->b.get()) <= p);
            break;
        }
        case Node::Kind::Pow:
            wrap(n->a.get(), prec(n->a.get()) <= 4);
            out += '^';
            wrap(n->b.get(), prec(n->b.get()) < 3);
            break;
        case Node::Kind::Call: {
            for (const auto& f : kFunctions)
                if (f.fn == n->fn) out += f.name;
            out += '(';
            print(n->a.get(), syms, out);
            if (n->b) {
                out += ", ";
                print(n->b.get(), syms, out);
            }
            out += ')';
            break;
        }
    }
}

std::string nodeStr(const Node* n, const std::vector<std::string>& syms) {
    std::string s;
    print(n, syms, s);
    return s;
}

// ---- evaluation ----------------------------------------------------

inline double val(double x) { return x; }
inline double val(const Dual& x) { return x.v; }
inline double der(double) { return 0.0; }
inline double der(const Dual& x) { return x.d; }

template <class T>
T make(double v, double d);
template <>
inline double make<double>(double v, double) {
    return v;
}
template <>
inline Dual make<Dual>(double v, double d) {
    return Dual{v, d};
}

template <class T>
struct Ctx {
    std::span<const T> vars;
    const std::vector<std::string>* syms;
};

[[noreturn]] void domainError(const char* what, const Node* n,
                              const std::vector<std::string>& syms) {
    throw EvalError(what, nodeStr(n, syms));
}

bool isInteger(double x) { return std::floor(x) == x && std::isfinite(x); }

template <class T>
T evalNode(const Node* n, const Ctx<T>& ctx) {
    using K = Node::Kind;
    switch (n->kind) {
        case K::Num: return make<T>(n->num, 0.0);
        case K::Var: return ctx.vars[static_cast<std::size_t>(n->var)];
        case K::Neg: {
            T a = evalNode(n->a.get(), ctx);
            return make<T>(-val(a), -der(a));
        }
        case K::Add: {
            T a = evalNode(n->a.get(), ctx), b = evalNode(n->b.get(), ctx);
            return make<T>(val(a) + val(b), der(a) + der(b));
        }
        case K::Sub: {
            T a = evalNode(n->a.get(), ctx), b = evalNode(n->b.get(), ctx);
            return make<T>(val(a) - val(b), der(a) - der(b));
        }
        case K::Mul: {
            T a = evalNode(n->a.get(), ctx), b = evalNode(n->b.get(), ctx);
            return make<T>(val(a) * val(b), der(a) * val(b) + val(a) * der(b));
        }
        case K::Div: {
            T a = evalNode(n->a.get(), ctx), b = evalNode(n->b.get(), ctx);
            if (val(b) == 0.0) domainError("division by zero", n, *ctx.syms);
            double q = val(a) / val(b);
            return make<T>(q, (der(a) - q * der(b)) / val(b));
        }
        case K::Pow: {
            T a = evalNode(n->a.get(), ctx), b = evalNode(n->b.get(), ctx);
            double av = val(a), bv = val(b);
            if (der(b) == 0.0 && isInteger(bv)) {
                if (av == 0.0 && bv < 0.0)
                    domainError("zero raised to negative power", n, *ctx.syms);
                double v = std::pow(av, bv);
                double dv = (av == 0.0 && bv > 1.0)
                                ? 0.0
                                : bv * std::pow(av, bv - 1.0) * der(a);
                if (bv == 0.0) dv = 0.0;
                return make<T>(v, dv);
            }
            if (av < 0.0)
                domainError("negative base with non-integer exponent", n,
                            *ctx.syms);
            if (av == 0.0) {
                if (bv <= 0.0)
                    domainError("zero raised to non-positive power", n,
                                *ctx.syms);
                if (der(a) != 0.0 && bv < 1.0)
                    domainError("derivative of x^p unbounded at x = 0", n,
                                *ctx.syms);
                return make<T>(0.0, bv == 1.0 ? der(a) : 0.0);
            }
            double v = std::pow(av, bv);
            double dv = v * (der(b) * std::log(av) + bv * der(a) / av);
            return make<T>(v, dv);
        }
        case K::Call: {
            T a = evalNode(n->a.get(), ctx);
            double av = val(a), ad = der(a);
            switch (n->fn) {
                case Fn::Sin: return make<T>(std::sin(av), std::cos(av) * ad);
                case Fn::Cos: return make<T>(std::cos(av), -std::sin(av) * ad);
                case Fn::Tan: {
                    double c = std::cos(av);
                    return make<T>(std::tan(av), ad / (c * c));
                }
                case Fn::Exp: {
                    double e = std::exp(av);
                    return make<T>(e, e * ad);
                }
                case Fn::Log:
                    if (av <= 0.0)
                        domainError("log of non-positive argument", n,
                                    *ctx.syms);
                    return make<T>(std::log(av), ad / av);
                case Fn::Sqrt: {
                    if (av < 0.0)
                        domainError("sqrt of negative argument", n, *ctx.syms);
                    if (av == 0.0) {
                        if (ad != 0.0)
                            domainError("derivative of sqrt unbounded at 0", n,
                                        *ctx.syms);
                        return make<T>(0.0, 0.0);
                    }
                    double s = std::sqrt(av);
                    return make<T>(s, ad / (2.0 * s));
                }
                case Fn::Atan2: {
                    T b = evalNode(n->b.get(), ctx);
                    double bv = val(b), bd = der(b);
                    if (av == 0.0 && bv == 0.0)
                        domainError("atan2(0, 0)", n, *ctx.syms);
                    double den = av * av + bv * bv;
                    return make<T>(std::atan2(av, bv),
                                (bv * ad - av * bd) / den);
                }
            }
        }
    }
    throw std::logic_error("corrupt expression node");
}

// ---- parser --------------------------------------------------------

class Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& symbols)
        : src_(src), symbols_(symbols) {}

    NodePtr run() {
        NodePtr e = expr();
        skipWs();
        if (pos_ != src_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view src_;
    const std::vector<std::string>& symbols_;
    std::size_t pos_ = 0;

    void skipWs() {
        while (pos_ < src_.size() &&
               std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    char peek() {
        skipWs();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = mkBin(Node::Kind::Add, std::move(lhs), term());
            else if (accept('-'))
                lhs = mkBin(Node::Kind::Sub, std::move(lhs), term());
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            if (accept('*'))
                lhs = mkBin(Node::Kind::Mul, std::move(lhs), factor());
            else if (accept('/'))
                lhs = mkBin(Node::Kind::Div, std::move(lhs), factor());
            else
                return lhs;
        }
    }

    // '^' binds tighter than unary minus: -x^2 parses as -(x^2).
    NodePtr factor() {
        if (accept('-')) return mkNeg(factor());
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (accept('^'))
            return mkBin(Node::Kind::Pow, std::move(base), factor());
        return base;
    }

    NodePtr atom() {
        char c = peek();
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        throw ParseError(c == '\0' ? "unexpected end of input"
                                   : std::string("unexpected character '") + c +
                                         "'",
                         pos_);
    }

    // Decimal with optional fraction and exponent; no hex, no
    // underscores.
    NodePtr number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() &&
                   std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                ++pos_;
            if (pos_ < src_.size() &&
                std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() &&
                       std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark;  // 'e' belongs to a following identifier
            }
        }
        std::string text(src_.substr(start, pos_ - start));
        if (text == ".") throw ParseError("malformed number", start);
        try {
            return mkNum(std::stod(text));
        } catch (const std::exception&) {
            throw ParseError("malformed number '" + text + "'", start);
        }
    }

    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_'))
            ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        if (const FnInfo* f = lookupFn(name)) {
            expect('(');
            NodePtr a = expr();
            NodePtr b;
            if (f->arity == 2) {
                expect(',');
                b = expr();
            }
            expect(')');
            return mkCall(f->fn, std::move(a), std::move(b));
        }
        for (std::size_t i = 0; i < symbols_.size(); ++i)
            if (symbols_[i] == name) return mkVar(static_cast<int>(i));
        throw UnknownSymbolError(name, start);
    }
};

// ---- derivative ----------------------------------------------------

NodePtr diff(const NodePtr& n, int wrt) {
    using K = Node::Kind;
    switch (n->kind) {
        case K::Num: return mkNum(0);
        case K::Var: return mkNum(n->var == wrt ? 1 : 0);
        case K::Neg: return mkNeg(diff(n->a, wrt));
        case K::Add: return fAdd(diff(n->a, wrt), diff(n->b, wrt));
        case K::Sub: return fSub(diff(n->a, wrt), diff(n->b, wrt));
        case K::Mul:
            return fAdd(fMul(diff(n->a, wrt), n->b),
                        fMul(n->a, diff(n->b, wrt)));
        case K::Div:
            return fDiv(fSub(fMul(diff(n->a, wrt), n->b),
                             fMul(n->a, diff(n->b, wrt))),
                        fMul(n->b, n->b));
        case K::Pow: {
            if (n->b->kind == K::Num) {
                double c = n->b->num;
                return fMul(fMul(mkNum(c), fPow(n->a, mkNum(c - 1))),
                            diff(n->a, wrt));
            }
            // a^b = exp(b log a)
            NodePtr da = diff(n->a, wrt), db = diff(n->b, wrt);
            NodePtr inner = fAdd(fMul(db, mkCall(Fn::Log, n->a)),
                                 fDiv(fMul(n->b, da), n->a));
            return fMul(n, inner);
        }
        case K::Call: {
            NodePtr da = diff(n->a, wrt);
            switch (n->fn) {
                case Fn::Sin: return fMul(mkCall(Fn::Cos, n->a), da);
                case Fn::Cos: return mkNeg(fMul(mkCall(Fn::Sin, n->a), da));
                case Fn::Tan: {
                    NodePtr c = mkCall(Fn::Cos, n->a);
                    return fDiv(da, fMul(c, c));
                }
                case Fn::Exp: return fMul(n, da);
                case Fn::Log: return fDiv(da, n->a);
                case Fn::Sqrt: return fDiv(da, fMul(mkNum(2), n));
                case Fn::Atan2: {
                    NodePtr db = diff(n->b, wrt);
                    NodePtr num = fSub(fMul(n->b, da), fMul(n->a, db));
                    NodePtr den = fAdd(fMul(n->a, n->a), fMul(n->b, n->b));
                    return fDiv(num, den);
                }
            }
        }
    }
    throw std::logic_error("corrupt expression node");
}

NodePtr remap(const NodePtr& n, const std::vector<int>& map) {
    using K = Node::Kind;
    if (n->kind == K::Var) return mkVar(map[static_cast<std::size_t>(n->var)]);
    if (!n->a) return n;
    auto m = std::make_shared<Node>(*n);
    m->a = remap(n->a, map);
    if (n->b) m->b = remap(n->b, map);
    return m;
}

bool sameTree(const Node* a, const std::vector<std::string>& sa, const Node* b,
              const std::vector<std::string>& sb) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Node::Kind::Num: return a->num == b->num;
        case Node::Kind::Var:
            return sa[static_cast<std::size_t>(a->var)] ==
                   sb[static_cast<std::size_t>(b->var)];
        case Node::Kind::Call:
            if (a->fn != b->fn) return false;
            [[fallthrough]];
        default:
            if (!sameTree(a->a.get(), sa, b->a.get(), sb)) return false;
            if (!a->b != !b->b) return false;
            return !a->b || sameTree(a->b.get(), sa, b->b.get(), sb);
    }
}

bool referencesVar(const Node* n, int idx) {
    if (n->kind == Node::Kind::Var) return n->var == idx;
    if (n->a && referencesVar(n->a.get(), idx)) return true;
    return n->b && referencesVar(n->b.get(), idx);
}

}  // namespace
}  // namespace detail

using detail::Node;

Expression Expression::parse(std::string_view source,
                             std::vector<std::string> symbols) {
    if (source.empty()) throw ParseError("empty expression", 0);
    auto syms = std::make_shared<const std::vector<std::string>>(
        std::move(symbols));
    detail::Parser p(source, *syms);
    return Expression(p.run(), std::move(syms));
}

Expression Expression::constant(double value) {
    return Expression(detail::mkNum(value),
                      std::make_shared<const std::vector<std::string>>());
}

int Expression::symbol_index(std::string_view name) const {
    for (std::size_t i = 0; i < symbols_->size(); ++i)
        if ((*symbols_)[i] == name) return static_cast<int>(i);
    return -1;
}

bool Expression::references(std::string_view name) const {
    int idx = symbol_index(name);
    return idx >= 0 && detail::referencesVar(root_.get(), idx);
}

double Expression::eval(std::span<const double> values) const {
    detail::Ctx<double> ctx{values, symbols_.get()};
    return detail::evalNode(root_.get(), ctx);
}

double Expression::eval(const EvalPoint& x) const {
    std::vector<double> vals(symbols_->size());
    for (std::size_t i = 0; i < symbols_->size(); ++i) {
        auto it = x.find((*symbols_)[i]);
        if (it == x.end()) {
            if (detail::referencesVar(root_.get(), static_cast<int>(i)))
                throw std::invalid_argument("evaluation point misses symbol '" +
                                            (*symbols_)[i] + "'");
            vals[i] = 0.0;
        } else {
            vals[i] = it->second;
        }
    }
    return eval(vals);
}

double Expression::eval_grad(std::span<const double> values,
                             std::span<const int> wrt,
                             std::span<double> grad) const {
    std::vector<Dual> duals(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) duals[i] = {values[i], 0.0};
    detail::Ctx<Dual> ctx{duals, symbols_.get()};
    double value = 0.0;
    if (wrt.empty()) return eval(values);
    for (std::size_t k = 0; k < wrt.size(); ++k) {
        auto idx = static_cast<std::size_t>(wrt[k]);
        duals[idx].d = 1.0;
        Dual out = detail::evalNode(root_.get(), ctx);
        duals[idx].d = 0.0;
        value = out.v;
        grad[k] = out.d;
    }
    return value;
}

std::pair<double, std::vector<double>>
Expression::eval_grad(const EvalPoint& x,
                      const std::vector<std::string>& wrt) const {
    std::vector<double> vals(symbols_->size());
    for (std::size_t i = 0; i < symbols_->size(); ++i) {
        auto it = x.find((*symbols_)[i]);
        if (it == x.end()) {
            if (detail::referencesVar(root_.get(), static_cast<int>(i)))
                throw std::invalid_argument("evaluation point misses symbol '" +
                                            (*symbols_)[i] + "'");
            vals[i] = 0.0;
        } else {
            vals[i] = it->second;
        }
    }
    std::vector<int> idx(wrt.size());
    for (std::size_t k = 0; k < wrt.size(); ++k) {
        int i = symbol_index(wrt[k]);
        if (i < 0)
            throw std::invalid_argument("gradient symbol '" + wrt[k] +
                                        "' is not declared");
        idx[k] = i;
    }
    std::vector<double> grad(wrt.size());
    double v = eval_grad(vals, idx, grad);
    return {v, std::move(grad)};
}

Expression Expression::derivative(const std::string& symbol) const {
    int idx = symbol_index(symbol);
    if (idx < 0)
        throw std::invalid_argument("derivative symbol '" + symbol +
                                    "' is not declared");
    return Expression(detail::diff(root_, idx), symbols_);
}

Expression Expression::with_symbols(std::vector<std::string> symbols) const {
    auto syms = std::make_shared<const std::vector<std::string>>(
        std::move(symbols));
    std::vector<int> map(symbols_->size(), -1);
    for (std::size_t i = 0; i < symbols_->size(); ++i) {
        for (std::size_t j = 0; j < syms->size(); ++j)
            if ((*syms)[j] == (*symbols_)[i]) map[i] = static_cast<int>(j);
        if (map[i] < 0 && detail::referencesVar(root_.get(),
                                                static_cast<int>(i)))
            throw std::invalid_argument("symbol '" + (*symbols_)[i] +
                                        "' missing from new symbol set");
        if (map[i] < 0) map[i] = 0;  // unreferenced, any slot works
    }
    if (symbols_->empty()) return Expression(root_, std::move(syms));
    return Expression(detail::remap(root_, map), std::move(syms));
}

std::string Expression::str() const {
    return detail::nodeStr(root_.get(), *symbols_);
}

bool Expression::same_tree(const Expression& other) const {
    return detail::sameTree(root_.get(), *symbols_, other.root_.get(),
                            *other.symbols_);
}

Expression operator+(const Expression& a, const Expression& b) {
    Expression rb = b.with_symbols(a.symbols());
    return Expression(detail::fAdd(a.root_, rb.root_), a.symbols_);
}

Expression operator*(const Expression& a, const Expression& b) {
    Expression rb = b.with_symbols(a.symbols());
    return Expression(detail::fMul(a.root_, rb.root_), a.symbols_);
}

}  // namespace varigauge
