#pragma once

#include <array>
#include <string_view>

// Values stated in closed form or printed in the source tables, kept verbatim
// for regression diffing.
namespace kacgap::reference {

struct StatedValue {
  std::string_view key;
  std::string_view value;
  std::string_view tag;
};

inline constexpr std::array<StatedValue, 14> kStatedValues{{
    {"kappa_11(3)", "1/2", "kappa values, n+l=2"},
    {"kappa_22(3)", "13/40", "kappa values, n+l=4"},
    {"kappa_11(4)", "17/81", "kappa values, n+l=2"},
    {"kappa_20(5)", "19/264", "kappa values, n+l=2"},
    {"kappa_01(N)", "-1/(N-1)", "kappa values, n+l=1"},
    {"kappa_02(N)", "1/(N-1)^2", "kappa values, n+l=2"},
    {"mu_N", "(3N-1)/(3(N-1)^2)", "gap eigenvalue of P"},
    {"mu_22(3)", "11/20", "threshold for N=3"},
    {"1-mu_22(3)", "9/20", "second theorem, base step"},
    {"product_j=4..7", "558018643/495720000", "second theorem, product comparison"},
    {"Delta_N uniform", "(2/3)N/(N-1)", "gap, uniform redirection"},
    {"Delta_N morgenstern", "(8/15)N/(N-1)", "gap, Morgenstern"},
    {"Delta_N halfpower", "(1-B1)N/(N-1), N>=7", "gap, half-power kernels"},
    {"N=7 rectangle", "0<=n<=6, 0<=l<=27", "twotwo check at N=7"},
}};

struct HatRow {
  int n;
  int l;
  std::string_view value;
};

// Printed hat-kappa^2(3) table, five decimals.
inline constexpr std::array<HatRow, 67> kHatKappaTableN3{{
    {3, 1253, "0.10562"},
    {4, 989, "0.10562"},
    {5, 817, "0.10556"},
    {6, 694, "0.10561"},
    {7, 604, "0.10555"},
    {8, 533, "0.10560"},
    {9, 477, "0.10558"},
    {10, 431, "0.10558"},
    {11, 393, "0.10555"},
    {12, 360, "0.10561"},
    {13, 333, "0.10548"},
    {14, 308, "0.10558"},
    {15, 287, "0.10554"},
    {16, 268, "0.10556"},
    {17, 251, "0.10558"},
    {18, 236, "0.10554"},
    {19, 222, "0.10560"},
    {20, 210, "0.10547"},
    {21, 198, "0.10559"},
    {22, 188, "0.10546"},
    {23, 178, "0.10552"},
    {24, 169, "0.10549"},
    {25, 161, "0.10537"},
    {26, 153, "0.10540"},
    {27, 145, "0.10558"},
    {28, 138, "0.10561"},
    {29, 132, "0.10542"},
    {30, 126, "0.10534"},
    {31, 120, "0.10540"},
    {32, 114, "0.10554"},
    {33, 109, "0.10543"},
    {34, 104, "0.10540"},
    {35, 99, "0.10546"},
    {36, 94, "0.10562"},
    {37, 90, "0.10543"},
    {38, 86, "0.10531"},
    {39, 82, "0.10527"},
    {40, 78, "0.10528"},
    {41, 74, "0.10537"},
    {42, 70, "0.10551"},
    {43, 67, "0.10523"},
    {44, 63, "0.10552"},
    {45, 60, "0.10534"},
    {46, 57, "0.10521"},
    {47, 54, "0.10512"},
    {48, 50, "0.10562"},
    {49, 48, "0.10508"},
    {50, 45, "0.10512"},
    {51, 42, "0.10521"},
    {52, 39, "0.10535"},
    {53, 36, "0.10552"},
    {54, 34, "0.10514"},
    {55, 31, "0.10538"},
    {56, 29, "0.10506"},
    {57, 26, "0.10538"},
    {58, 24, "0.10511"},
    {59, 21, "0.10551"},
    {60, 19, "0.10529"},
    {61, 17, "0.10509"},
    {62, 14, "0.10560"},
    {63, 12, "0.10545"},
    {64, 10, "0.10534"},
    {65, 8, "0.10523"},
    {66, 6, "0.10514"},
    {67, 4, "0.10509"},
    {68, 2, "0.10506"},
    {69, 0, "0.10503"},
}};

}  // namespace kacgap::reference
