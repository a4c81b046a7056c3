#pragma once

#include "xaip/error.hpp"

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace xaip {

/// One node of a parsed s-expression: either an atom token or a list.
struct SExpr {
    bool is_list = false;
    std::string token;
    std::vector<SExpr> items;
    SourcePos pos;

    bool is_atom() const { return !is_list; }
    std::size_t size() const { return items.size(); }
    const SExpr& operator[](std::size_t i) const { return items[i]; }

    /// Lower-cased head token of a list, or "" when the list is empty or
    /// starts with a sub-list.
    std::string head() const {
        if (!is_list || items.empty() || items[0].is_list)
            return {};
        return lower(items[0].token);
    }

    static std::string lower(std::string_view s) {
        std::string out(s);
        std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
        return out;
    }
};

namespace detail {

class SExprReader {
public:
    explicit SExprReader(std::string_view text) : text_(text) {}

    std::vector<SExpr> read_all() {
        std::vector<SExpr> out;
        skip_space();
        while (i_ < text_.size()) {
            out.push_back(read());
            skip_space();
        }
        return out;
    }

private:
    SExpr read() {
        skip_space();
        if (i_ >= text_.size())
            throw SyntaxError(pos(), "unexpected end of input, expected '(' or token");
        char c = text_[i_];
        if (c == ')')
            throw SyntaxError(pos(), "unexpected ')'");
        if (c == '(') {
            SExpr list;
            list.is_list = true;
            list.pos = pos();
            advance();
            for (;;) {
                skip_space();
                if (i_ >= text_.size())
                    throw SyntaxError(pos(), "unexpected end of input, expected ')' closing list opened at " +
                                                 list.pos.to_string());
                if (text_[i_] == ')') {
                    advance();
                    return list;
                }
                list.items.push_back(read());
            }
        }
        SExpr atom;
        atom.pos = pos();
        while (i_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[i_])) && text_[i_] != '(' &&
               text_[i_] != ')' && text_[i_] != ';') {
            atom.token += text_[i_];
            advance();
        }
        return atom;
    }

    void skip_space() {
        while (i_ < text_.size()) {
            char c = text_[i_];
            if (c == ';') {
                while (i_ < text_.size() && text_[i_] != '\n')
                    advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    void advance() {
        if (text_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    SourcePos pos() const { return {line_, col_}; }

    std::string_view text_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
};

} // namespace detail

/// Reads every top-level expression in `text`. `;` starts a line comment.
inline std::vector<SExpr> read_sexprs(std::string_view text) {
    return detail::SExprReader(text).read_all();
}

} // namespace xaip
