// Release gate: seven end-to-end criteria covering gradient fidelity,
// closed-form loss values, assignment optimality, metric laws, ensemble
// diversity on the default dataset, baseline confusion stability, and
// byte-level determinism. Prints one line per criterion; the exit code is
// the number of failures.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ers/commands.hpp"
#include "ers/config.hpp"
#include "ers/dataset.hpp"
#include "ers/grad_check.hpp"
#include "ers/losses.hpp"
#include "ers/metrics.hpp"
#include "ers/predictions.hpp"
#include "ers/rng.hpp"
#include "ers/trainer.hpp"

using namespace ers;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

// The ensemble spec matching a run config, as the train command wires it.
pipeline::EnsembleSpec spec_of(const cli::RunConfig& c) {
    pipeline::EnsembleSpec spec;
    spec.members = c.members();
    spec.k_neighbors = c.k_neighbors;
    spec.run_selflabel = c.selflabel_enabled;
    const auto common = [&](pipeline::TrainConfig& t) {
        t.seed = c.seed;
        t.hidden_widths = c.hidden;
        t.d_emb = c.d_emb;
        t.n_classes = c.n_classes;
        t.config_digest = c.digest();
    };
    spec.pretext.stage = pipeline::Stage::pretext;
    spec.pretext.epochs = c.pretext_epochs;
    spec.pretext.batch_size = c.pretext_batch_size;
    spec.pretext.learning_rate = c.pretext_learning_rate;
    spec.pretext.log_every = c.pretext_log_every;
    spec.pretext.augment_sigma = c.augment_sigma;
    common(spec.pretext);
    spec.scan.stage = pipeline::Stage::scan;
    spec.scan.epochs = c.scan_epochs;
    spec.scan.batch_size = c.scan_batch_size;
    spec.scan.learning_rate = c.scan_learning_rate;
    spec.scan.log_every = c.scan_log_every;
    spec.scan.train_encoder = c.scan_train_encoder;
    spec.scan.flip_lambda2 = c.flip_lambda2;
    common(spec.scan);
    spec.selflabel.stage = pipeline::Stage::selflabel;
    spec.selflabel.epochs = c.selflabel_epochs;
    spec.selflabel.batch_size = c.selflabel_batch_size;
    spec.selflabel.learning_rate = c.selflabel_learning_rate;
    spec.selflabel.log_every = c.selflabel_log_every;
    spec.selflabel.confidence_threshold = c.selflabel_threshold;
    common(spec.selflabel);
    return spec;
}

// ---- criterion 1: analytic gradients vs central finite differences ----

bool criterion_gradients(std::string& detail) {
    constexpr double kEps = 1e-5;
    constexpr double kTol = 1e-4;
    constexpr std::size_t kSeeds = 100;
    const auto t0 = std::chrono::steady_clock::now();

    enum Term {
        kMeanEntropy,
        kConsistency,
        kPointwise,
        kMeanCross,
        kScanTotal,
        kSimclr
    };
    const auto one_trial = [&](Term term, Rng& rng) {
        if (term == kSimclr) {
            const std::size_t batch = 1 + rng.below(4);
            const std::size_t dim = 2 + rng.below(7);
            Tensor a = Tensor::zeros({batch, dim});
            Tensor b = Tensor::zeros({batch, dim});
            for (auto& v : a.values) v = rng.normal();
            for (auto& v : b.values) v = rng.normal();
            const double lambda0 = 5.0 * rng.uniform();
            const autodiff::MultiExpr f =
                [lambda0](autodiff::Tape& tape,
                          const std::vector<autodiff::Var>& xs) {
                    return model::simclr_loss_graph(tape,
                                                    tape.l2norm_rows(xs[0]),
                                                    tape.l2norm_rows(xs[1]),
                                                    lambda0);
                };
            return autodiff::grad_check(f, {a, b}, kEps);
        }
        const std::size_t batch = 2 + rng.below(3);
        const std::size_t n = 2 + rng.below(4);
        const std::size_t k = 1 + rng.below(3);
        Tensor anchors = Tensor::zeros({batch, n});
        Tensor neighbors = Tensor::zeros({batch * k, n});
        for (auto& v : anchors.values) v = 1.5 * rng.normal();
        for (auto& v : neighbors.values) v = 1.5 * rng.normal();
        model::LambdaVector lambdas;
        lambdas.lambda0 = 5.0 * rng.uniform();
        lambdas.lambda1 = 8.0 * rng.uniform();
        lambdas.lambda2 = 8.0 * rng.uniform();
        lambdas.lambda3 = 12.0 * rng.uniform() - 4.0;
        const autodiff::MultiExpr f =
            [k, lambdas, term](autodiff::Tape& tape,
                               const std::vector<autodiff::Var>& xs) {
                const auto a = tape.softmax_rows(xs[0]);
                const auto nb = tape.softmax_rows(xs[1]);
                const auto terms =
                    model::scan_loss_graph(tape, a, nb, k, lambdas);
                switch (term) {
                    case kMeanEntropy: return terms.mean_entropy;
                    case kConsistency: return terms.consistency;
                    case kPointwise: return terms.pointwise_cross;
                    case kMeanCross: return terms.mean_cross;
                    default: return terms.total;
                }
            };
        return autodiff::grad_check(f, {anchors, neighbors}, kEps);
    };

    const std::pair<Term, const char*> terms[] = {
        {kMeanEntropy, "term_mean_entropy"},
        {kConsistency, "term_consistency"},
        {kPointwise, "term_pointwise_cross"},
        {kMeanCross, "term_mean_cross"},
        {kScanTotal, "scan_ers_loss"},
        {kSimclr, "simclr_ers_loss"},
    };
    double worst = 0.0;
    for (const auto& [term, name] : terms) {
        for (std::size_t seed = 1; seed <= kSeeds; ++seed) {
            Rng rng(seed, name);
            worst = std::max(worst, one_trial(term, rng));
        }
    }
    const double elapsed = seconds_since(t0);
    detail = "6 terms x 100 seeds, max rel err " + fmt("%.2e", worst) +
             " (tol 1e-4), " + fmt("%.1f", elapsed) + "s (budget 60s)";
    return worst < kTol && elapsed < 60.0;
}

// ---- criterion 2: closed-form term values ----

bool criterion_closed_forms(std::string& detail) {
    const Tensor uniform =
        Tensor::matrix(6, 4, std::vector<double>(24, 0.25));
    const double me = model::term_mean_entropy(uniform);
    const double me_err = std::abs(me - (-std::log(4.0)));

    std::vector<double> hot(8 * 4, 0.0);
    for (std::size_t r = 0; r < 8; ++r) hot[r * 4 + (r % 4)] = 1.0;
    const Tensor one_hots = Tensor::matrix(8, 4, std::move(hot));
    const double cons = model::term_consistency(one_hots, one_hots, 1);

    Rng rng(7, "closed-form-units");
    double simclr_worst = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        std::vector<double> v(16);
        double sq = 0.0;
        for (double& x : v) {
            x = rng.normal();
            sq += x * x;
        }
        for (double& x : v) x /= std::sqrt(sq);
        const Tensor a = Tensor::matrix(1, 16, std::move(v));
        for (const double lambda0 : {0.0, 2.0, 5.0})
            simclr_worst = std::max(
                simclr_worst, std::abs(model::simclr_ers_loss(a, a, lambda0)));
    }

    detail = "mean-entropy err " + fmt("%.1e", me_err) +
             " (tol 1e-9), consistency " + fmt("%.1e", std::abs(cons)) +
             " (tol 1e-7), self-pair pretext loss " +
             fmt("%.1e", simclr_worst) + " over 20 unit vectors x 3 lambdas";
    return me_err <= 1e-9 && std::abs(cons) <= 1e-7 && simclr_worst <= 1e-9;
}

// ---- criterion 3: assignment optimality vs exhaustive search ----

bool criterion_hungarian(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(13, "assignment-grid");
    std::size_t mismatches = 0;
    for (std::size_t trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 5;
        evalkit::ConfusionMatrix raw = evalkit::ConfusionMatrix::zeros(n, n);
        for (auto& c : raw.counts) c = rng.below(50);
        const auto res = evalkit::hungarian_match(raw);

        std::vector<std::uint32_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0u);
        std::uint64_t best = 0;
        do {
            std::uint64_t matched = 0;
            for (std::size_t c = 0; c < n; ++c)
                matched += raw.at(perm[c], c);
            best = std::max(best, matched);
        } while (std::next_permutation(perm.begin(), perm.end()));

        std::uint64_t realized = 0;
        for (std::size_t c = 0; c < n; ++c)
            realized += raw.at(res.permutation[c], c);
        if (res.matched != best || realized != best) ++mismatches;
    }
    const double elapsed = seconds_since(t0);
    detail = "200 matrices n=2..6, " + std::to_string(mismatches) +
             " mismatches vs exhaustive search, " + fmt("%.2f", elapsed) +
             "s (budget 10s)";
    return mismatches == 0 && elapsed < 10.0;
}

// ---- criterion 4: metric laws on random prediction sets ----

bool criterion_metric_laws(std::string& detail) {
    std::size_t violations = 0;
    for (std::size_t trial = 1; trial <= 500; ++trial) {
        Rng rng(trial, "metric-laws");
        const std::size_t m = 2 + rng.below(4);
        const std::size_t n_samples = 20 + rng.below(41);
        const std::size_t n_labels = 2 + rng.below(4);
        std::vector<std::uint32_t> labels(n_samples);
        for (auto& l : labels)
            l = static_cast<std::uint32_t>(rng.below(n_labels));

        std::vector<evalkit::PredictionSet> members(m);
        for (std::size_t j = 0; j < m; ++j) {
            auto& p = members[j];
            p.checkpoint_id = static_cast<std::uint32_t>(j);
            p.probs = Tensor::zeros({n_samples, n_labels});
            p.argmax.resize(n_samples);
            for (std::size_t i = 0; i < n_samples; ++i) {
                double mx = -1e300;
                for (std::size_t c = 0; c < n_labels; ++c) {
                    p.probs.at(i, c) = 1.5 * rng.normal();
                    mx = std::max(mx, p.probs.at(i, c));
                }
                double sum = 0.0;
                for (std::size_t c = 0; c < n_labels; ++c) {
                    p.probs.at(i, c) = std::exp(p.probs.at(i, c) - mx);
                    sum += p.probs.at(i, c);
                }
                std::size_t best = 0;
                for (std::size_t c = 0; c < n_labels; ++c) {
                    p.probs.at(i, c) /= sum;
                    if (p.probs.at(i, c) > p.probs.at(i, best)) best = c;
                }
                p.argmax[i] = static_cast<std::uint32_t>(best);
            }
            evalkit::map_to_labels(p, labels, n_labels);
        }
        std::vector<const evalkit::PredictionSet*> all;
        for (const auto& p : members) all.push_back(&p);

        // Vote accuracy never beats the any-member union.
        const auto vote = evalkit::majority_vote(all, labels, n_labels);
        if (vote.accuracy > evalkit::n_guess_accuracy(all, labels) + 1e-12)
            ++violations;

        // Unions over nested member prefixes are monotone.
        double prev = 0.0;
        for (std::size_t k = 1; k <= m; ++k) {
            std::vector<const evalkit::PredictionSet*> prefix(
                all.begin(), all.begin() + static_cast<long>(k));
            const double acc = evalkit::n_guess_accuracy(prefix, labels);
            if (acc < prev) ++violations;
            prev = acc;
        }

        // Agreement is symmetric.
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b)
                if (evalkit::agreement_rate(members[a], members[b]) !=
                    evalkit::agreement_rate(members[b], members[a]))
                    ++violations;

        // The disagreement filter partitions the sample index range.
        const double quorum = 0.51 + 0.49 * rng.uniform();
        const auto filter = evalkit::disagreement_filter(all, quorum);
        std::vector<std::uint32_t> merged = filter.confident;
        merged.insert(merged.end(), filter.confused.begin(),
                      filter.confused.end());
        std::sort(merged.begin(), merged.end());
        bool covers = merged.size() == n_samples;
        for (std::size_t i = 0; covers && i < merged.size(); ++i)
            covers = merged[i] == i;
        if (!covers) ++violations;
    }
    detail = "500 trials, " + std::to_string(violations) + " violations";
    return violations == 0;
}

// ---- criterion 5: ensemble diversity on the default dataset ----

bool criterion_diversity(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const cli::RunConfig config;
    const auto dataset = data::generate_dataset(
        config.n_super, config.n_sub_per_super, config.d_in,
        config.samples_per_sub, config.separation, config.sub_spread,
        config.seed);
    const auto result = pipeline::train_ensemble(spec_of(config), dataset);
    if (result.failures() != 0) {
        detail = "training failed for " +
                 std::to_string(result.failures()) + " members";
        return false;
    }

    const std::size_t n_labels = config.n_super;
    std::vector<evalkit::PredictionSet> preds;
    for (const auto& m : result.members) {
        auto p = evalkit::predictions_from_checkpoint(m.final, dataset);
        evalkit::map_to_labels(p, dataset.super_labels, n_labels);
        preds.push_back(std::move(p));
    }
    const std::size_t m = preds.size();

    double min_acc = 1.0, best_single = 0.0;
    for (const auto& p : preds) {
        min_acc = std::min(min_acc, p.mapped_accuracy);
        best_single = std::max(best_single, p.mapped_accuracy);
    }
    const bool all_above = min_acc >= 0.6;

    double min_agreement = 1.0;
    double best_pair = 0.0;
    bool pair_improves = false;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            min_agreement = std::min(
                min_agreement, evalkit::agreement_rate(preds[i], preds[j]));
            const double two = evalkit::n_guess_accuracy(
                {&preds[i], &preds[j]}, dataset.super_labels);
            best_pair = std::max(best_pair, two);
            if (two >= best_single + 0.01 - 1e-12) pair_improves = true;
        }
    }
    const bool disagree = min_agreement < 0.98;
    const bool pair_at_least = best_pair >= best_single - 1e-12;

    // Per superclass, the subclasses of each member's strongest sample in
    // the cluster mapped to it.
    std::size_t spanning = 0;
    for (std::uint32_t super = 0; super < n_labels; ++super) {
        std::set<std::uint32_t> subs;
        for (const auto& p : preds) {
            const auto report = evalkit::confident_prototypes(p, dataset, 1);
            for (std::size_t cluster = 0; cluster < p.mapping.size();
                 ++cluster) {
                if (p.mapping[cluster] != super) continue;
                if (!report.clusters[cluster].entries.empty())
                    subs.insert(report.clusters[cluster].entries[0].sub_label);
            }
        }
        if (subs.size() >= 2) ++spanning;
    }
    const double elapsed = seconds_since(t0);

    detail = "min acc " + fmt("%.3f", min_acc) + " (>=0.6), min agreement " +
             fmt("%.3f", min_agreement) + " (<0.98), best pair 2-guess " +
             fmt("%.3f", best_pair) + " vs best single " +
             fmt("%.3f", best_single) + " (+0.01 pair " +
             (pair_improves ? "yes" : "no") + "), " +
             std::to_string(spanning) +
             " superclasses span >=2 subclasses, " + fmt("%.1f", elapsed) +
             "s (budget 600s)";
    return all_above && disagree && pair_at_least && pair_improves &&
           spanning >= 1 && elapsed < 600.0;
}

// ---- criterion 6: baseline confusions agree more than baseline-vs-ers ----

bool criterion_confusion_stability(std::string& detail) {
    const cli::RunConfig config;
    const auto dataset = data::generate_dataset(
        config.n_super, config.n_sub_per_super, config.d_in,
        config.samples_per_sub, config.separation, config.sub_spread,
        config.seed);
    const std::size_t n_labels = config.n_super;

    int wins = 0;
    for (int trial = 1; trial <= 5; ++trial) {
        const std::uint64_t seeds[2] = {
            static_cast<std::uint64_t>(100 * trial + 1),
            static_cast<std::uint64_t>(100 * trial + 2)};
        evalkit::ConfusionMatrix base_cm[2], ers_cm[2];
        for (int s = 0; s < 2; ++s) {
            cli::RunConfig run = config;
            run.seed = seeds[s];
            run.lambda_members = {model::LambdaVector{0.0, 5.0, 0.0, 0.0},
                                  model::LambdaVector{2.0, 5.0, 4.0, 32.0}};
            const auto res =
                pipeline::train_ensemble(spec_of(run), dataset);
            if (res.failures() != 0) {
                detail = "training failed in trial " + std::to_string(trial);
                return false;
            }
            for (int member = 0; member < 2; ++member) {
                auto p = evalkit::predictions_from_checkpoint(
                    res.members[member].final, dataset);
                evalkit::map_to_labels(p, dataset.super_labels, n_labels);
                const auto cm = evalkit::confusion_matrix(
                    p, dataset.super_labels, n_labels);
                (member == 0 ? base_cm : ers_cm)[s] = cm;
            }
        }
        const std::uint64_t between_baselines =
            evalkit::l1_distance(base_cm[0], base_cm[1]);
        std::uint64_t nearest_ers = ~std::uint64_t{0};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                nearest_ers = std::min(
                    nearest_ers, evalkit::l1_distance(base_cm[i], ers_cm[j]));
        if (between_baselines < nearest_ers) ++wins;
    }
    detail = std::to_string(wins) + "/5 seed trials (need >=4)";
    return wins >= 4;
}

// ---- criterion 7: byte-identical reruns ----

bool criterion_determinism(std::string& detail) {
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    const fs::path root = fs::temp_directory_path() /
                          ("ers-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);

    const cli::RunConfig config;
    bool ok = true;
    std::ostringstream log;
    std::vector<std::string> manifests, bundles, reports;
    // Both passes reuse the same directory names (wiped in between) so even
    // path-bearing report output must match byte for byte.
    for (int pass = 0; pass < 2 && ok; ++pass) {
        const fs::path run = root / "run";
        const fs::path eval = root / "eval";
        fs::remove_all(run);
        fs::remove_all(eval);
        if (cli::cmd_train(config, run.string(), log) != cli::kExitOk) {
            detail = "train exited nonzero";
            ok = false;
            break;
        }
        std::vector<std::string> ckpts;
        for (std::size_t i = 0; i < config.members().size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "member-%02zu.ckpt", i);
            ckpts.push_back((run / name).string());
        }
        if (cli::cmd_eval(config, ckpts, eval.string(), log) !=
            cli::kExitOk) {
            detail = "eval exited nonzero";
            ok = false;
            break;
        }
        std::ostringstream report;
        if (cli::cmd_report(eval.string(), report) != cli::kExitOk) {
            detail = "report exited nonzero";
            ok = false;
            break;
        }
        std::string all_csv;
        for (const char* table :
             {"members.csv", "kguess.csv", "agreement.csv", "votes.csv",
              "filter.csv", "prototypes.csv", "entropy.csv"})
            all_csv += slurp(eval / table);
        manifests.push_back(slurp(run / "manifest.txt") +
                            slurp(eval / "manifest.txt"));
        bundles.push_back(slurp(eval / "bundle.txt"));
        reports.push_back(report.str() + all_csv);
    }
    if (ok) {
        const bool manifests_equal = manifests[0] == manifests[1];
        const bool bundles_equal = bundles[0] == bundles[1];
        const bool reports_equal = reports[0] == reports[1];
        detail = std::string("manifests ") +
                 (manifests_equal ? "identical" : "DIFFER") + ", bundles " +
                 (bundles_equal ? "identical" : "DIFFER") + ", reports " +
                 (reports_equal ? "identical" : "DIFFER");
        ok = manifests_equal && bundles_equal && reports_equal;
    }
    fs::remove_all(root);
    return ok;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<bool(std::string&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"gradient fidelity", criterion_gradients},
        {"closed-form term values", criterion_closed_forms},
        {"assignment optimality", criterion_hungarian},
        {"metric laws", criterion_metric_laws},
        {"ensemble diversity", criterion_diversity},
        {"baseline confusion stability", criterion_confusion_stability},
        {"end-to-end determinism", criterion_determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool pass = false;
        try {
            pass = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("unexpected error: ") + e.what();
        }
        if (!pass) ++failures;
        std::printf("[%s] criterion %zu: %s -- %s\n", pass ? "PASS" : "FAIL",
                    i + 1, criteria[i].name, detail.c_str());
        std::fflush(stdout);
    }
    if (failures == 0)
        std::printf("all %zu criteria passed\n", criteria.size());
    else
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures;
}
