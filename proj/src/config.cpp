#include "ers/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace ers::cli {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

[[noreturn]] void bad_value(const std::string& key, std::size_t line,
                            const std::string& what) {
    throw ConfigError("key '" + key + "' (line " + std::to_string(line) +
                      "): " + what);
}

double to_double(const std::string& tok, const std::string& key,
                 std::size_t line) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || tok.empty() || errno == ERANGE)
        bad_value(key, line, "expected a number, got '" + tok + "'");
    return v;
}

std::uint64_t to_u64(const std::string& tok, const std::string& key,
                     std::size_t line) {
    errno = 0;
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(tok.c_str(), &end, 10);
    if (end != tok.c_str() + tok.size() || tok.empty() || errno == ERANGE ||
        tok[0] == '-')
        bad_value(key, line, "expected a non-negative integer, got '" + tok +
                                 "'");
    return v;
}

bool to_bool(const std::string& tok, const std::string& key,
             std::size_t line) {
    if (tok == "true") return true;
    if (tok == "false") return false;
    bad_value(key, line, "expected true or false, got '" + tok + "'");
}

model::LambdaVector to_lambda(const std::string& text, const std::string& key,
                              std::size_t line) {
    const auto toks = split_ws(text);
    if (toks.size() != 4)
        bad_value(key, line, "expected 4 coefficients, got " +
                                 std::to_string(toks.size()));
    model::LambdaVector v;
    v.lambda0 = to_double(toks[0], key, line);
    v.lambda1 = to_double(toks[1], key, line);
    v.lambda2 = to_double(toks[2], key, line);
    v.lambda3 = to_double(toks[3], key, line);
    if (!v.all_finite()) bad_value(key, line, "coefficients must be finite");
    return v;
}

}  // namespace

std::string SeriesSpec::to_string() const {
    if (none) return "none";
    return "geometric base=" + format_double(base) +
           " ratio=" + format_double(ratio) +
           " count=" + std::to_string(count);
}

SeriesSpec SeriesSpec::parse(std::string_view text) {
    const auto toks = split_ws(text);
    if (toks.empty()) throw ConfigError("empty series spec");
    SeriesSpec spec;
    if (toks[0] == "none") {
        if (toks.size() != 1)
            throw ConfigError("series 'none' takes no parameters");
        spec.none = true;
        return spec;
    }
    if (toks[0] != "geometric")
        throw ConfigError("unknown series kind '" + toks[0] +
                          "' (expected geometric or none)");
    bool got_base = false, got_ratio = false, got_count = false;
    for (std::size_t i = 1; i < toks.size(); ++i) {
        const auto eq = toks[i].find('=');
        if (eq == std::string::npos)
            throw ConfigError("series parameter '" + toks[i] +
                              "' is not name=value");
        const std::string name = toks[i].substr(0, eq);
        const std::string value = toks[i].substr(eq + 1);
        if (name == "base") {
            spec.base = to_double(value, "series base", 0);
            got_base = true;
        } else if (name == "ratio") {
            spec.ratio = to_double(value, "series ratio", 0);
            got_ratio = true;
        } else if (name == "count") {
            spec.count = to_u64(value, "series count", 0);
            got_count = true;
        } else {
            throw ConfigError("unknown series parameter '" + name + "'");
        }
    }
    if (!got_base || !got_ratio || !got_count)
        throw ConfigError("series needs base=, ratio= and count=");
    if (spec.count == 0) throw ConfigError("series count must be >= 1");
    return spec;
}

std::vector<model::LambdaVector> RunConfig::members() const {
    if (!lambda_members.empty()) return lambda_members;
    if (!lambda_templates.empty()) {
        std::vector<model::LambdaVector> out;
        for (const auto& id : lambda_templates)
            out.push_back(
                model::eval_template(model::LambdaTemplate::by_id(id),
                                     n_classes));
        return out;
    }
    if (series.none) return {stem};
    return model::geometric_lambda3_series(stem, series.base, series.ratio,
                                           series.count);
}

void RunConfig::validate() const {
    const auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    need(n_super >= 1, "data.n_super must be >= 1");
    need(n_sub_per_super >= 1, "data.n_sub_per_super must be >= 1");
    need(samples_per_sub >= 1, "data.samples_per_sub must be >= 1");
    need(d_in >= 1, "data.d_in must be >= 1");
    need(sub_spread > 0.0, "data.sub_spread must be positive");
    need(separation > sub_spread,
         "data.separation must exceed data.sub_spread");
    const std::size_t n_samples = n_super * n_sub_per_super * samples_per_sub;
    need(k_neighbors >= 1 && k_neighbors < n_samples,
         "data.k_neighbors must be in [1, sample count)");
    need(d_emb >= 1, "model.d_emb must be >= 1");
    need(n_classes >= 2, "model.n_classes must be >= 2");
    for (std::size_t w : hidden)
        need(w >= 1, "model.hidden widths must be >= 1");
    need(pretext_epochs >= 1, "pretext.epochs must be >= 1");
    need(pretext_batch_size >= 1, "pretext.batch_size must be >= 1");
    need(pretext_learning_rate > 0.0, "pretext.learning_rate must be positive");
    need(pretext_log_every >= 1, "pretext.log_every must be >= 1");
    need(scan_epochs >= 1, "scan.epochs must be >= 1");
    need(scan_batch_size >= 1, "scan.batch_size must be >= 1");
    need(scan_learning_rate > 0.0, "scan.learning_rate must be positive");
    need(scan_log_every >= 1, "scan.log_every must be >= 1");
    need(selflabel_epochs >= 1, "selflabel.epochs must be >= 1");
    need(selflabel_batch_size >= 1, "selflabel.batch_size must be >= 1");
    need(selflabel_learning_rate > 0.0,
         "selflabel.learning_rate must be positive");
    need(selflabel_threshold > 0.5 && selflabel_threshold < 1.0,
         "selflabel.threshold must lie in (0.5, 1)");
    need(selflabel_log_every >= 1, "selflabel.log_every must be >= 1");
    need(stem.all_finite(), "lambda.stem must be finite");
    for (const auto& m : lambda_members)
        need(m.all_finite(), "lambda.members must be finite");
    need(!k_guess.empty(), "eval.k_guess must name at least one size");
    for (std::size_t k : k_guess)
        need(k >= 1, "eval.k_guess sizes must be >= 1");
    need(quorum > 0.5 && quorum <= 1.0, "eval.quorum must lie in (0.5, 1]");
    need(tiers >= 1, "eval.tiers must be >= 1");
    need(prototypes >= 1, "eval.prototypes must be >= 1");
    need(!out.empty(), "out must not be empty");
    members();  // resolves template ids; throws on unknown ones
}

std::string RunConfig::to_text() const {
    std::string t;
    const auto line = [&t](const std::string& key, const std::string& value) {
        t += key;
        t += " = ";
        t += value;
        t += "\n";
    };
    const auto size_list = [](const std::vector<std::size_t>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) s += " ";
            s += std::to_string(v[i]);
        }
        return s;
    };
    const auto lambda_text = [](const model::LambdaVector& v) {
        return format_double(v.lambda0) + " " + format_double(v.lambda1) +
               " " + format_double(v.lambda2) + " " +
               format_double(v.lambda3);
    };
    line("seed", std::to_string(seed));
    line("out", out);
    line("data.n_super", std::to_string(n_super));
    line("data.n_sub_per_super", std::to_string(n_sub_per_super));
    line("data.samples_per_sub", std::to_string(samples_per_sub));
    line("data.d_in", std::to_string(d_in));
    line("data.separation", format_double(separation));
    line("data.sub_spread", format_double(sub_spread));
    line("data.k_neighbors", std::to_string(k_neighbors));
    line("model.d_emb", std::to_string(d_emb));
    line("model.hidden", size_list(hidden));
    line("model.n_classes", std::to_string(n_classes));
    line("pretext.epochs", std::to_string(pretext_epochs));
    line("pretext.batch_size", std::to_string(pretext_batch_size));
    line("pretext.learning_rate", format_double(pretext_learning_rate));
    line("pretext.log_every", std::to_string(pretext_log_every));
    line("pretext.augment_sigma", format_double(augment_sigma));
    line("scan.epochs", std::to_string(scan_epochs));
    line("scan.batch_size", std::to_string(scan_batch_size));
    line("scan.learning_rate", format_double(scan_learning_rate));
    line("scan.log_every", std::to_string(scan_log_every));
    line("scan.train_encoder", scan_train_encoder ? "true" : "false");
    line("scan.flip_lambda2", flip_lambda2 ? "true" : "false");
    line("selflabel.enabled", selflabel_enabled ? "true" : "false");
    line("selflabel.epochs", std::to_string(selflabel_epochs));
    line("selflabel.batch_size", std::to_string(selflabel_batch_size));
    line("selflabel.learning_rate", format_double(selflabel_learning_rate));
    line("selflabel.threshold", format_double(selflabel_threshold));
    line("selflabel.log_every", std::to_string(selflabel_log_every));
    line("lambda.stem", lambda_text(stem));
    line("lambda.series", series.to_string());
    std::string members_text;
    for (std::size_t i = 0; i < lambda_members.size(); ++i) {
        if (i > 0) members_text += "; ";
        members_text += lambda_text(lambda_members[i]);
    }
    line("lambda.members", members_text);
    std::string templates_text;
    for (std::size_t i = 0; i < lambda_templates.size(); ++i) {
        if (i > 0) templates_text += " ";
        templates_text += lambda_templates[i];
    }
    line("lambda.templates", templates_text);
    line("eval.k_guess", size_list(k_guess));
    line("eval.quorum", format_double(quorum));
    line("eval.tiers", std::to_string(tiers));
    line("eval.prototypes", std::to_string(prototypes));
    line("eval.subclass_scoring", subclass_scoring ? "true" : "false");
    return t;
}

RunConfig parse_config(std::string_view text) {
    RunConfig c;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string stripped = trim(raw);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + stripped +
                              "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no) +
                              ": missing key before '='");
        if (!seen.insert(key).second)
            throw ConfigError("duplicate key '" + key + "' (line " +
                              std::to_string(line_no) + ")");
        const std::size_t n = line_no;
        if (key == "seed") {
            c.seed = to_u64(value, key, n);
        } else if (key == "out") {
            if (value.empty()) bad_value(key, n, "must not be empty");
            c.out = value;
        } else if (key == "data.n_super") {
            c.n_super = to_u64(value, key, n);
        } else if (key == "data.n_sub_per_super") {
            c.n_sub_per_super = to_u64(value, key, n);
        } else if (key == "data.samples_per_sub") {
            c.samples_per_sub = to_u64(value, key, n);
        } else if (key == "data.d_in") {
            c.d_in = to_u64(value, key, n);
        } else if (key == "data.separation") {
            c.separation = to_double(value, key, n);
        } else if (key == "data.sub_spread") {
            c.sub_spread = to_double(value, key, n);
        } else if (key == "data.k_neighbors") {
            c.k_neighbors = to_u64(value, key, n);
        } else if (key == "model.d_emb") {
            c.d_emb = to_u64(value, key, n);
        } else if (key == "model.hidden") {
            c.hidden.clear();
            for (const auto& tok : split_ws(value))
                c.hidden.push_back(to_u64(tok, key, n));
        } else if (key == "model.n_classes") {
            c.n_classes = to_u64(value, key, n);
        } else if (key == "pretext.epochs") {
            c.pretext_epochs = to_u64(value, key, n);
        } else if (key == "pretext.batch_size") {
            c.pretext_batch_size = to_u64(value, key, n);
        } else if (key == "pretext.learning_rate") {
            c.pretext_learning_rate = to_double(value, key, n);
        } else if (key == "pretext.log_every") {
            c.pretext_log_every = to_u64(value, key, n);
        } else if (key == "pretext.augment_sigma") {
            c.augment_sigma = to_double(value, key, n);
        } else if (key == "scan.epochs") {
            c.scan_epochs = to_u64(value, key, n);
        } else if (key == "scan.batch_size") {
            c.scan_batch_size = to_u64(value, key, n);
        } else if (key == "scan.learning_rate") {
            c.scan_learning_rate = to_double(value, key, n);
        } else if (key == "scan.log_every") {
            c.scan_log_every = to_u64(value, key, n);
        } else if (key == "scan.train_encoder") {
            c.scan_train_encoder = to_bool(value, key, n);
        } else if (key == "scan.flip_lambda2") {
            c.flip_lambda2 = to_bool(value, key, n);
        } else if (key == "selflabel.enabled") {
            c.selflabel_enabled = to_bool(value, key, n);
        } else if (key == "selflabel.epochs") {
            c.selflabel_epochs = to_u64(value, key, n);
        } else if (key == "selflabel.batch_size") {
            c.selflabel_batch_size = to_u64(value, key, n);
        } else if (key == "selflabel.learning_rate") {
            c.selflabel_learning_rate = to_double(value, key, n);
        } else if (key == "selflabel.threshold") {
            c.selflabel_threshold = to_double(value, key, n);
        } else if (key == "selflabel.log_every") {
            c.selflabel_log_every = to_u64(value, key, n);
        } else if (key == "lambda.stem") {
            c.stem = to_lambda(value, key, n);
        } else if (key == "lambda.series") {
            try {
                c.series = SeriesSpec::parse(value);
            } catch (const ConfigError& e) {
                bad_value(key, n, e.what());
            }
        } else if (key == "lambda.members") {
            c.lambda_members.clear();
            std::string group;
            std::istringstream groups{value};
            while (std::getline(groups, group, ';')) {
                const std::string g = trim(group);
                if (!g.empty())
                    c.lambda_members.push_back(to_lambda(g, key, n));
            }
        } else if (key == "lambda.templates") {
            c.lambda_templates = split_ws(value);
        } else if (key == "eval.k_guess") {
            c.k_guess.clear();
            for (const auto& tok : split_ws(value))
                c.k_guess.push_back(to_u64(tok, key, n));
        } else if (key == "eval.quorum") {
            c.quorum = to_double(value, key, n);
        } else if (key == "eval.tiers") {
            c.tiers = to_u64(value, key, n);
        } else if (key == "eval.prototypes") {
            c.prototypes = to_u64(value, key, n);
        } else if (key == "eval.subclass_scoring") {
            c.subclass_scoring = to_bool(value, key, n);
        } else {
            throw ConfigError("unknown key '" + key + "' (line " +
                              std::to_string(line_no) + ")");
        }
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace ers::cli
