#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xaip {

/// Fixed-point decimal stored as an integer count of 1/Scale units.
///
/// Plan timestamps are printed at millisecond resolution and epsilon gaps are
/// exactly one tick, so storing ticks makes sums such as 2.000 + 5.000 - 4.001
/// exact. Multiplication and division round half away from zero.
template <std::int64_t Scale>
class basic_decimal {
    static_assert(Scale > 0);

public:
    static constexpr std::int64_t scale = Scale;

    constexpr basic_decimal() = default;

    static constexpr basic_decimal from_ticks(std::int64_t ticks) {
        basic_decimal d;
        d.ticks_ = ticks;
        return d;
    }

    static constexpr basic_decimal from_int(std::int64_t v) { return from_ticks(v * Scale); }

    /// Parses `[-+]digits[.digits]`. Digits beyond the scale are rounded.
    static std::optional<basic_decimal> parse(std::string_view text) {
        if (text.empty())
            return std::nullopt;
        bool negative = false;
        std::size_t pos = 0;
        if (text[0] == '-' || text[0] == '+') {
            negative = text[0] == '-';
            ++pos;
        }
        std::int64_t whole = 0;
        bool any_digit = false;
        for (; pos < text.size() && text[pos] != '.'; ++pos) {
            char c = text[pos];
            if (c < '0' || c > '9')
                return std::nullopt;
            if (whole > (std::numeric_limits<std::int64_t>::max() / Scale - 9) / 10)
                return std::nullopt;
            whole = whole * 10 + (c - '0');
            any_digit = true;
        }
        std::int64_t frac = 0;
        std::int64_t unit = Scale;
        bool round_up = false;
        if (pos < text.size()) {
            ++pos;
            bool first_dropped = true;
            for (; pos < text.size(); ++pos) {
                char c = text[pos];
                if (c < '0' || c > '9')
                    return std::nullopt;
                any_digit = true;
                if (unit >= 10) {
                    unit /= 10;
                    frac += (c - '0') * unit;
                } else if (first_dropped) {
                    round_up = c >= '5';
                    first_dropped = false;
                }
            }
        }
        if (!any_digit)
            return std::nullopt;
        std::int64_t ticks = whole * Scale + frac + (round_up ? 1 : 0);
        return from_ticks(negative ? -ticks : ticks);
    }

    static basic_decimal parse_or_throw(std::string_view text) {
        auto d = parse(text);
        if (!d)
            throw std::invalid_argument("not a decimal number: '" + std::string(text) + "'");
        return *d;
    }

    constexpr std::int64_t ticks() const { return ticks_; }
    constexpr double to_double() const { return static_cast<double>(ticks_) / Scale; }

    /// Always prints every fractional digit of the scale, e.g. "4.001", "3.000".
    std::string to_string() const {
        std::int64_t t = ticks_ < 0 ? -ticks_ : ticks_;
        std::string out = ticks_ < 0 ? "-" : "";
        out += std::to_string(t / Scale);
        std::int64_t frac = t % Scale;
        std::string digits;
        for (std::int64_t unit = Scale / 10; unit >= 1; unit /= 10) {
            digits += static_cast<char>('0' + (frac / unit) % 10);
        }
        if (!digits.empty())
            out += "." + digits;
        return out;
    }

    /// Shortest form: trailing fractional zeros dropped ("1.5", "2").
    std::string to_short_string() const {
        std::string s = to_string();
        if (s.find('.') == std::string::npos)
            return s;
        while (s.back() == '0')
            s.pop_back();
        if (s.back() == '.')
            s.pop_back();
        return s;
    }

    constexpr auto operator<=>(const basic_decimal&) const = default;

    constexpr basic_decimal operator-() const { return from_ticks(-ticks_); }
    constexpr basic_decimal& operator+=(basic_decimal o) { ticks_ += o.ticks_; return *this; }
    constexpr basic_decimal& operator-=(basic_decimal o) { ticks_ -= o.ticks_; return *this; }
    friend constexpr basic_decimal operator+(basic_decimal a, basic_decimal b) { return a += b; }
    friend constexpr basic_decimal operator-(basic_decimal a, basic_decimal b) { return a -= b; }

    friend constexpr basic_decimal operator*(basic_decimal a, basic_decimal b) {
        __int128 p = static_cast<__int128>(a.ticks_) * b.ticks_;
        return from_ticks(static_cast<std::int64_t>(round_div(p, Scale)));
    }
    friend basic_decimal operator/(basic_decimal a, basic_decimal b) {
        if (b.ticks_ == 0)
            throw std::domain_error("decimal division by zero");
        __int128 n = static_cast<__int128>(a.ticks_) * Scale;
        return from_ticks(static_cast<std::int64_t>(round_div(n, b.ticks_)));
    }

    friend std::ostream& operator<<(std::ostream& os, basic_decimal d) { return os << d.to_string(); }

private:
    static constexpr __int128 round_div(__int128 n, __int128 d) {
        bool neg = (n < 0) != (d < 0);
        if (n < 0) n = -n;
        if (d < 0) d = -d;
        __int128 q = (n + d / 2) / d;
        return neg ? -q : q;
    }

    std::int64_t ticks_ = 0;
};

using decimal = basic_decimal<1000>;

/// Minimum separation between interfering happenings.
inline constexpr decimal epsilon = decimal::from_ticks(decimal::scale / 1000 > 0 ? decimal::scale / 1000 : 1);

/// `4.001_dec` or `"4.001"_dec`.
inline decimal operator""_dec(const char* text) { return decimal::parse_or_throw(text); }
inline decimal operator""_dec(const char* text, std::size_t n) { return decimal::parse_or_throw({text, n}); }

} // namespace xaip

template <std::int64_t S>
struct std::hash<xaip::basic_decimal<S>> {
    std::size_t operator()(xaip::basic_decimal<S> d) const noexcept { return std::hash<std::int64_t>{}(d.ticks()); }
};
