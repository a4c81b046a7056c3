#include "xaip/decimal.hpp"

#include <gtest/gtest.h>

using namespace xaip;

TEST(Decimal, ParsesAndPrints) {
    EXPECT_EQ(decimal::parse("4.001")->ticks(), 4001);
    EXPECT_EQ(decimal::parse("-1.5")->to_string(), "-1.500");
    EXPECT_EQ(decimal::parse("7")->to_string(), "7.000");
    EXPECT_EQ(decimal::parse(".5")->to_string(), "0.500");
    EXPECT_EQ("1.500"_dec.to_short_string(), "1.5");
    EXPECT_EQ("2.000"_dec.to_short_string(), "2");
    EXPECT_FALSE(decimal::parse(""));
    EXPECT_FALSE(decimal::parse("1.2.3"));
    EXPECT_FALSE(decimal::parse("abc"));
    EXPECT_FALSE(decimal::parse("."));
}

TEST(Decimal, RoundsExtraDigits) {
    EXPECT_EQ(decimal::parse("0.0004")->ticks(), 0);
    EXPECT_EQ(decimal::parse("0.0005")->ticks(), 1);
    EXPECT_EQ(decimal::parse("1.99951")->ticks(), 2000);
}

TEST(Decimal, ExactTimestampArithmetic) {
    EXPECT_EQ("2.000"_dec + "5.000"_dec - "4.001"_dec, "2.999"_dec);
    EXPECT_EQ("21.505"_dec - "20.003"_dec, "1.502"_dec);
    EXPECT_EQ(epsilon, "0.001"_dec);
}

TEST(Decimal, MultiplyDivideRoundHalfAwayFromZero) {
    EXPECT_EQ("1.5"_dec * "1.5"_dec, "2.25"_dec);
    EXPECT_EQ("1"_dec / "3"_dec, "0.333"_dec);
    EXPECT_EQ("2"_dec / "3"_dec, "0.667"_dec);
    EXPECT_EQ(-("2"_dec / "3"_dec), (-"2"_dec) / "3"_dec);
    EXPECT_THROW("1"_dec / decimal{}, std::domain_error);
}
