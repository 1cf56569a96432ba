#pragma once

// Closed-form scalar expressions in the torus coordinates x, y.
//
// Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | sqrt | bump
//
// bump(s) is the smooth profile exp(1 - 1/(1 - s)) on s < 1 and 0 elsewhere,
// so bump(((x-a)^2 + (y-b)^2) / r^2) is a C-infinity bump of radius r.
// Expressions compile to a postfix program evaluated in forward-mode
// duals, so partial derivatives are exact.

#include <cctype>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "geometry.hpp"

namespace mather {

class Expr {
public:
    Expr() = default;

    static Expr parse(std::string_view text) {
        Expr e;
        e.source_ = std::string(text);
        Parser p{text, 0, e.program_};
        p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size()) p.fail("unexpected trailing input");
        for (const auto& ins : e.program_) {
            if (ins.op == Op::X) e.uses_x_ = true;
            if (ins.op == Op::Y) e.uses_y_ = true;
        }
        return e;
    }

    const std::string& source() const { return source_; }
    bool uses_x() const { return uses_x_; }
    bool uses_y() const { return uses_y_; }
    bool empty() const { return program_.empty(); }

    Dual2 eval(double x, double y) const {
        // Fixed-size stack; depth is bounded by the parser.
        Dual2 stack[kMaxDepth];
        int top = 0;
        for (const auto& ins : program_) {
            switch (ins.op) {
                case Op::Const: stack[top++] = Dual2::constant(ins.value); break;
                case Op::X: stack[top++] = {x, 1.0, 0.0}; break;
                case Op::Y: stack[top++] = {y, 0.0, 1.0}; break;
                case Op::Add: --top; stack[top - 1] = stack[top - 1] + stack[top]; break;
                case Op::Sub: --top; stack[top - 1] = stack[top - 1] - stack[top]; break;
                case Op::Mul: --top; stack[top - 1] = stack[top - 1] * stack[top]; break;
                case Op::Div: --top; stack[top - 1] = stack[top - 1] / stack[top]; break;
                case Op::Pow: --top; stack[top - 1] = pow(stack[top - 1], stack[top]); break;
                case Op::PowInt: stack[top - 1] = pow_int(stack[top - 1], static_cast<int>(ins.value)); break;
                case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
                case Op::Sin: stack[top - 1] = sin(stack[top - 1]); break;
                case Op::Cos: stack[top - 1] = cos(stack[top - 1]); break;
                case Op::Exp: stack[top - 1] = exp(stack[top - 1]); break;
                case Op::Sqrt: stack[top - 1] = sqrt(stack[top - 1]); break;
                case Op::Bump: stack[top - 1] = bump(stack[top - 1]); break;
            }
        }
        return stack[0];
    }

    double value(double x, double y) const { return eval(x, y).v; }

private:
    static constexpr int kMaxDepth = 64;

    enum class Op { Const, X, Y, Add, Sub, Mul, Div, Pow, PowInt, Neg, Sin, Cos, Exp, Sqrt, Bump };

    struct Instr {
        Op op;
        double value = 0.0;
    };

    struct Parser {
        std::string_view text;
        std::size_t pos;
        std::vector<Instr>& out;
        int depth = 0;
        int max_depth = 0;
        int nesting = 0;  // open parentheses and calls

        [[noreturn]] void fail(const std::string& what) const {
            throw Error("expression error at offset " + std::to_string(pos) + ": " + what + " in '" +
                        std::string(text) + "'");
        }

        void skip_ws() {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        }

        bool accept(char c) {
            skip_ws();
            if (pos < text.size() && text[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        void emit(Op op, double v = 0.0) {
            out.push_back({op, v});
            switch (op) {
                case Op::Const: case Op::X: case Op::Y: ++depth; break;
                case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: --depth; break;
                default: break;
            }
            if (depth > max_depth) max_depth = depth;
            if (max_depth >= kMaxDepth) fail("expression nests too deeply");
        }

        void parse_expr() {
            parse_term();
            for (;;) {
                if (accept('+')) { parse_term(); emit(Op::Add); }
                else if (accept('-')) { parse_term(); emit(Op::Sub); }
                else break;
            }
        }

        void parse_term() {
            parse_unary();
            for (;;) {
                if (accept('*')) { parse_unary(); emit(Op::Mul); }
                else if (accept('/')) { parse_unary(); emit(Op::Div); }
                else break;
            }
        }

        void parse_unary() {
            if (accept('-')) { parse_unary(); emit(Op::Neg); return; }
            if (accept('+')) { parse_unary(); return; }
            parse_power();
        }

        void parse_power() {
            parse_primary();
            if (!accept('^')) return;
            const std::size_t mark = out.size();
            const int depth_before = depth;
            parse_unary();
            // Constant integer exponents use repeated multiplication so negative bases work.
            if (out.size() == mark + 1 && out[mark].op == Op::Const) {
                const double e = out[mark].value;
                if (e == std::floor(e) && std::abs(e) <= 64.0) {
                    out.pop_back();
                    depth = depth_before;
                    emit(Op::PowInt, e);
                    return;
                }
            }
            emit(Op::Pow);
        }

        void parse_primary() {
            skip_ws();
            if (pos >= text.size()) fail("unexpected end of input");
            const char c = text[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                const std::string rest(text.substr(pos));
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(rest, &used);
                } catch (const std::exception&) {
                    fail("malformed number");
                }
                pos += used;
                emit(Op::Const, v);
                return;
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t end = pos;
                while (end < text.size() && (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_')) ++end;
                const std::string name(text.substr(pos, end - pos));
                pos = end;
                if (name == "x") { emit(Op::X); return; }
                if (name == "y") { emit(Op::Y); return; }
                if (name == "pi") { emit(Op::Const, 3.14159265358979323846); return; }
                Op fn;
                if (name == "sin") fn = Op::Sin;
                else if (name == "cos") fn = Op::Cos;
                else if (name == "exp") fn = Op::Exp;
                else if (name == "sqrt") fn = Op::Sqrt;
                else if (name == "bump") fn = Op::Bump;
                else fail("unknown identifier '" + name + "'");
                if (!accept('(')) fail("expected '(' after " + name);
                parse_nested();
                emit(fn);
                return;
            }
            if (accept('(')) {
                parse_nested();
                return;
            }
            fail(std::string("unexpected character '") + c + "'");
        }

        // Body of a parenthesized group, after the '('.
        void parse_nested() {
            if (++nesting > kMaxDepth) fail("expression nests too deeply");
            parse_expr();
            if (!accept(')')) fail("expected ')'");
            --nesting;
        }
    };

    std::string source_;
    std::vector<Instr> program_;
    bool uses_x_ = false;
    bool uses_y_ = false;
};

}  // namespace mather
