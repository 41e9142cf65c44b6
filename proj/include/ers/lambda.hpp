#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ers/common.hpp"

namespace ers::model {

// The four ERS coefficients. lambda0 weights the pretext regularizer;
// lambda1..lambda3 weight the clustering-stage terms.
struct LambdaVector {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;

    bool all_finite() const;
    double operator[](std::size_t i) const;
    std::string to_string() const;  // "(l0, l1, l2, l3)" with exact decimals

    bool operator==(const LambdaVector&) const = default;
};

// Symbolic dependence of one coefficient on the class count n.
enum class Growth : std::uint8_t {
    zero,         // 0
    constant,     // c
    sqrt_n,       // c*sqrt(n)
    linear_n,     // c*n
    n_sqrt_n,     // c*n*sqrt(n)
    inv_n,        // c/n
    inv_sqrt_n,   // c/sqrt(n)
    inv_n_sq,     // c/n^2
};

struct GrowthRule {
    Growth kind = Growth::zero;
    double c = 0.0;

    double eval(std::size_t n) const;
    std::string to_string() const;

    // Accepts "0", "5", "4*sqrt(n)", "4*n", "2*n*sqrt(n)", "-8/n",
    // "3/sqrt(n)", "1/n^2". Throws ConfigError on anything else.
    static GrowthRule parse(std::string_view text);
};

// Named rule set giving each lambda as a function of class count.
struct LambdaTemplate {
    std::string id;
    GrowthRule rules[4];

    // Registered templates: baseline (0,5,0,0); row1 (0,5,4,0);
    // constant aka row2 (2,5,4,8); row3 (2,5,4,4); row4 (2,5,4*sqrt(n),-8/n).
    static const std::vector<LambdaTemplate>& named();
    static const LambdaTemplate& by_id(std::string_view id);
};

// Concrete coefficients at class count n (n >= 2).
LambdaVector eval_template(const LambdaTemplate& t, std::size_t n);

// Copies of `stem` with lambda3 = base * ratio^i for i in [0, count).
std::vector<LambdaVector> geometric_lambda3_series(const LambdaVector& stem,
                                                   double base, double ratio,
                                                   std::size_t count);

}  // namespace ers::model
