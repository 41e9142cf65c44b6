#include "ers/lambda.hpp"

#include <cmath>
#include <cstdlib>

namespace ers::model {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

bool LambdaVector::all_finite() const {
    return std::isfinite(lambda0) && std::isfinite(lambda1) &&
           std::isfinite(lambda2) && std::isfinite(lambda3);
}

double LambdaVector::operator[](std::size_t i) const {
    switch (i) {
        case 0: return lambda0;
        case 1: return lambda1;
        case 2: return lambda2;
        case 3: return lambda3;
    }
    throw DomainError("LambdaVector index out of range");
}

std::string LambdaVector::to_string() const {
    return "(" + format_double(lambda0) + ", " + format_double(lambda1) +
           ", " + format_double(lambda2) + ", " + format_double(lambda3) + ")";
}

double GrowthRule::eval(std::size_t n) const {
    const double dn = static_cast<double>(n);
    switch (kind) {
        case Growth::zero: return 0.0;
        case Growth::constant: return c;
        case Growth::sqrt_n: return c * std::sqrt(dn);
        case Growth::linear_n: return c * dn;
        case Growth::n_sqrt_n: return c * dn * std::sqrt(dn);
        case Growth::inv_n: return c / dn;
        case Growth::inv_sqrt_n: return c / std::sqrt(dn);
        case Growth::inv_n_sq: return c / (dn * dn);
    }
    throw DomainError("GrowthRule: unknown kind");
}

std::string GrowthRule::to_string() const {
    switch (kind) {
        case Growth::zero: return "0";
        case Growth::constant: return format_double(c);
        case Growth::sqrt_n: return format_double(c) + "*sqrt(n)";
        case Growth::linear_n: return format_double(c) + "*n";
        case Growth::n_sqrt_n: return format_double(c) + "*n*sqrt(n)";
        case Growth::inv_n: return format_double(c) + "/n";
        case Growth::inv_sqrt_n: return format_double(c) + "/sqrt(n)";
        case Growth::inv_n_sq: return format_double(c) + "/n^2";
    }
    throw DomainError("GrowthRule: unknown kind");
}

GrowthRule GrowthRule::parse(std::string_view text) {
    const std::string_view trimmed = trim(text);
    if (trimmed.empty())
        throw ConfigError("growth rule: empty text");
    const std::string buf(trimmed);
    char* end = nullptr;
    const double c = std::strtod(buf.c_str(), &end);
    if (end == buf.c_str())
        throw ConfigError("growth rule '" + buf + "': expected a coefficient");
    const std::string_view rest = trim(std::string_view(end));
    GrowthRule r;
    r.c = c;
    if (rest.empty()) {
        r.kind = (c == 0.0) ? Growth::zero : Growth::constant;
    } else if (rest == "*sqrt(n)") {
        r.kind = Growth::sqrt_n;
    } else if (rest == "*n") {
        r.kind = Growth::linear_n;
    } else if (rest == "*n*sqrt(n)") {
        r.kind = Growth::n_sqrt_n;
    } else if (rest == "/n") {
        r.kind = Growth::inv_n;
    } else if (rest == "/sqrt(n)") {
        r.kind = Growth::inv_sqrt_n;
    } else if (rest == "/n^2") {
        r.kind = Growth::inv_n_sq;
    } else {
        throw ConfigError("growth rule '" + buf + "': unknown form '" +
                          std::string(rest) + "'");
    }
    return r;
}

namespace {

GrowthRule rule_zero() { return GrowthRule{Growth::zero, 0.0}; }
GrowthRule rule_const(double c) { return GrowthRule{Growth::constant, c}; }

std::vector<LambdaTemplate> build_named() {
    std::vector<LambdaTemplate> out;
    out.push_back({"baseline",
                   {rule_zero(), rule_const(5), rule_zero(), rule_zero()}});
    out.push_back({"row1",
                   {rule_zero(), rule_const(5), rule_const(4), rule_zero()}});
    out.push_back({"constant",
                   {rule_const(2), rule_const(5), rule_const(4), rule_const(8)}});
    out.push_back({"row3",
                   {rule_const(2), rule_const(5), rule_const(4), rule_const(4)}});
    out.push_back({"row4",
                   {rule_const(2), rule_const(5),
                    GrowthRule{Growth::sqrt_n, 4.0},
                    GrowthRule{Growth::inv_n, -8.0}}});
    return out;
}

}  // namespace

const std::vector<LambdaTemplate>& LambdaTemplate::named() {
    static const std::vector<LambdaTemplate> templates = build_named();
    return templates;
}

const LambdaTemplate& LambdaTemplate::by_id(std::string_view id) {
    const std::string_view wanted = (id == "row2") ? "constant" : id;
    for (const LambdaTemplate& t : named()) {
        if (t.id == wanted) return t;
    }
    throw ConfigError("unknown lambda template '" + std::string(id) + "'");
}

LambdaVector eval_template(const LambdaTemplate& t, std::size_t n) {
    if (n < 2) throw DomainError("eval_template: class count must be >= 2");
    LambdaVector v{t.rules[0].eval(n), t.rules[1].eval(n), t.rules[2].eval(n),
                   t.rules[3].eval(n)};
    if (!v.all_finite())
        throw DomainError("eval_template: non-finite coefficient");
    return v;
}

std::vector<LambdaVector> geometric_lambda3_series(const LambdaVector& stem,
                                                   double base, double ratio,
                                                   std::size_t count) {
    if (count < 1)
        throw DomainError("geometric_lambda3_series: count must be >= 1");
    std::vector<LambdaVector> out;
    out.reserve(count);
    double l3 = base;
    for (std::size_t i = 0; i < count; ++i) {
        LambdaVector v = stem;
        v.lambda3 = l3;
        if (!v.all_finite())
            throw DomainError("geometric_lambda3_series: non-finite lambda3");
        out.push_back(v);
        l3 *= ratio;
    }
    return out;
}

}  // namespace ers::model
