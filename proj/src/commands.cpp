#include "ers/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ers/grad_check.hpp"
#include "ers/losses.hpp"
#include "ers/metrics.hpp"
#include "ers/rng.hpp"
#include "ers/trainer.hpp"

namespace ers::cli {

namespace fs = std::filesystem;

namespace {

// Writes run artifacts and remembers (relative path, content digest) pairs
// for the manifest.
struct ArtifactWriter {
    fs::path dir;
    std::vector<std::pair<std::string, std::uint64_t>> files;

    void write(const std::string& rel, const std::string& content) {
        const fs::path p = dir / rel;
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw IoError("cannot open '" + p.string() + "' for writing");
        out.write(content.data(),
                  static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed for '" + p.string() + "'");
        files.emplace_back(rel, fnv1a64(content));
    }
};

// Runs are immutable: refuse to reuse a non-empty directory.
bool fresh_dir(const std::string& out_dir, std::ostream& log) {
    const fs::path p(out_dir);
    if (fs::exists(p) && (!fs::is_directory(p) || !fs::is_empty(p))) {
        log << "error: '" << out_dir
            << "' already exists and is not empty; completed runs are "
               "immutable, pick a fresh directory\n";
        return false;
    }
    fs::create_directories(p);
    return true;
}

data::HierarchicalDataset dataset_of(const RunConfig& c) {
    return data::generate_dataset(c.n_super, c.n_sub_per_super, c.d_in,
                                  c.samples_per_sub, c.separation,
                                  c.sub_spread, c.seed);
}

std::string two_digit(std::uint32_t id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02u", id);
    return buf;
}

std::string config_block(const RunConfig& config) {
    return "config-begin\n" + config.to_text() + "config-end\n";
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Calls visit() with every k-subset of {0..m-1} in lexicographic order.
void for_each_subset(std::size_t m, std::size_t k,
                     const std::function<void(const std::vector<std::size_t>&)>&
                         visit) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        visit(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == i - 1 + m - k) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace

int cmd_train(const RunConfig& config, const std::string& out_dir,
              std::ostream& log) {
    try {
        config.validate();
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    try {
        if (!fresh_dir(out_dir, log)) return kExitUsage;
        const auto dataset = dataset_of(config);

        pipeline::EnsembleSpec spec;
        spec.members = config.members();
        spec.k_neighbors = config.k_neighbors;
        spec.run_selflabel = config.selflabel_enabled;
        const std::uint64_t cfg_digest = config.digest();
        const auto common = [&](pipeline::TrainConfig& t) {
            t.seed = config.seed;
            t.hidden_widths = config.hidden;
            t.d_emb = config.d_emb;
            t.n_classes = config.n_classes;
            t.config_digest = cfg_digest;
        };
        spec.pretext.stage = pipeline::Stage::pretext;
        spec.pretext.epochs = config.pretext_epochs;
        spec.pretext.batch_size = config.pretext_batch_size;
        spec.pretext.learning_rate = config.pretext_learning_rate;
        spec.pretext.log_every = config.pretext_log_every;
        spec.pretext.augment_sigma = config.augment_sigma;
        common(spec.pretext);
        spec.scan.stage = pipeline::Stage::scan;
        spec.scan.epochs = config.scan_epochs;
        spec.scan.batch_size = config.scan_batch_size;
        spec.scan.learning_rate = config.scan_learning_rate;
        spec.scan.log_every = config.scan_log_every;
        spec.scan.train_encoder = config.scan_train_encoder;
        spec.scan.flip_lambda2 = config.flip_lambda2;
        common(spec.scan);
        spec.selflabel.stage = pipeline::Stage::selflabel;
        spec.selflabel.epochs = config.selflabel_epochs;
        spec.selflabel.batch_size = config.selflabel_batch_size;
        spec.selflabel.learning_rate = config.selflabel_learning_rate;
        spec.selflabel.log_every = config.selflabel_log_every;
        spec.selflabel.confidence_threshold = config.selflabel_threshold;
        common(spec.selflabel);

        const auto result = pipeline::train_ensemble(spec, dataset);
        const std::size_t trained = result.members.size() - result.failures();

        ArtifactWriter writer{out_dir, {}};
        writer.write("config.txt", config.to_text());
        writer.write("dataset.txt", dataset.serialize());
        std::string entropy;
        for (const auto& m : result.members) {
            for (const auto& rec : m.records) {
                entropy += "member " + std::to_string(m.member_id) +
                           " stage " + pipeline::stage_name(rec.stage) +
                           " step " + std::to_string(rec.step);
                for (const auto& tv : rec.terms)
                    entropy += " " + tv.name + "=" + format_double(tv.value);
                entropy += "\n";
            }
        }
        writer.write("entropy-state.txt", entropy);
        for (const auto& m : result.members)
            if (m.ok)
                writer.write("member-" + two_digit(m.member_id) + ".ckpt",
                             pipeline::serialize_checkpoint(m.final));

        std::string manifest = "ERSRUN 1\n";
        manifest += "status ";
        manifest += result.failures() == 0
                        ? "complete"
                        : (trained > 0 ? "partial" : "failed");
        manifest += "\n";
        manifest += "config-digest " + digest_hex(cfg_digest) + "\n";
        manifest += "dataset-digest " + digest_hex(dataset.digest()) + "\n";
        manifest += "members " + std::to_string(result.members.size()) + "\n";
        manifest += "trained " + std::to_string(trained) + "\n";
        for (const auto& m : result.members) {
            if (!m.ok)
                manifest += "warning member " + std::to_string(m.member_id) +
                            " failed: " + m.error + "\n";
            for (const auto& w : m.warnings)
                manifest += "warning member " + std::to_string(m.member_id) +
                            " " + w + "\n";
        }
        for (const auto& [rel, digest] : writer.files)
            manifest += "file " + rel + " " + digest_hex(digest) + "\n";
        manifest += config_block(config);
        writer.write("manifest.txt", manifest);

        for (const auto& m : result.members) {
            if (!m.ok)
                log << "warning: member " << m.member_id
                    << " failed: " << m.error << "\n";
            for (const auto& w : m.warnings)
                log << "warning: member " << m.member_id << ": " << w << "\n";
        }
        log << "trained " << trained << "/" << result.members.size()
            << " members into " << out_dir << "\n";
        if (trained == 0) {
            log << "error: every ensemble member failed\n";
            return kExitRuntime;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_eval(const RunConfig& config,
             const std::vector<std::string>& checkpoint_paths,
             const std::string& out_dir, std::ostream& log) {
    try {
        config.validate();
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (checkpoint_paths.empty()) {
        log << "error: eval needs at least one checkpoint\n";
        return kExitUsage;
    }
    try {
        if (!fresh_dir(out_dir, log)) return kExitUsage;
        const auto dataset = dataset_of(config);
        const std::uint64_t ds_digest = dataset.digest();

        std::vector<pipeline::Checkpoint> ckpts;
        for (const auto& path : checkpoint_paths) {
            auto c = pipeline::load_checkpoint(path);
            if (c.dataset_digest != ds_digest) {
                log << "error: checkpoint '" << path
                    << "' was trained on dataset "
                    << digest_hex(c.dataset_digest)
                    << " but this config generates " << digest_hex(ds_digest)
                    << "\n";
                return kExitRuntime;
            }
            if (!c.has_head) {
                log << "error: checkpoint '" << path
                    << "' has no cluster head (stage "
                    << pipeline::stage_name(c.stage) << ")\n";
                return kExitRuntime;
            }
            ckpts.push_back(std::move(c));
        }

        const bool sub_scoring = config.subclass_scoring;
        const auto& labels =
            sub_scoring ? dataset.sub_labels : dataset.super_labels;
        const std::size_t n_labels =
            sub_scoring ? dataset.n_sub_total() : dataset.n_super;
        const std::size_t m = ckpts.size();

        ArtifactWriter writer{out_dir, {}};
        std::vector<evalkit::PredictionSet> preds;
        std::vector<std::string> pred_files;
        for (std::size_t i = 0; i < m; ++i) {
            auto ps = evalkit::predictions_from_checkpoint(ckpts[i], dataset);
            evalkit::map_to_labels(ps, labels, n_labels);
            const std::string rel =
                "predictions-" + two_digit(static_cast<std::uint32_t>(i)) +
                ".txt";
            writer.write(rel, evalkit::serialize_predictions(ps));
            preds.push_back(std::move(ps));
            pred_files.push_back(rel);
        }
        std::vector<const evalkit::PredictionSet*> all;
        for (const auto& p : preds) all.push_back(&p);

        std::string b = "ERSBUNDLE 1\n";
        b += "config-digest " + digest_hex(config.digest()) + "\n";
        b += "dataset-digest " + digest_hex(ds_digest) + "\n";
        b += std::string("scoring ") + (sub_scoring ? "sub" : "super") + "\n";
        b += "labels " + std::to_string(n_labels) + "\n";
        b += "samples " + std::to_string(dataset.size()) + "\n";
        b += "members " + std::to_string(m) + "\n";
        for (std::size_t i = 0; i < m; ++i)
            b += "member " + std::to_string(i) + " id " +
                 std::to_string(preds[i].checkpoint_id) + " accuracy " +
                 format_double(preds[i].mapped_accuracy) + " predictions " +
                 pred_files[i] + "\n";
        for (std::size_t k : config.k_guess) {
            if (k > m) {
                b += "kguess-skipped " + std::to_string(k) +
                     " ensemble-smaller-than-k\n";
                continue;
            }
            std::vector<double> vals;
            for_each_subset(m, k, [&](const std::vector<std::size_t>& idx) {
                std::vector<const evalkit::PredictionSet*> subset;
                for (std::size_t j : idx) subset.push_back(&preds[j]);
                vals.push_back(evalkit::n_guess_accuracy(subset, labels));
            });
            b += "kguess " + std::to_string(k) + " best " +
                 format_double(*std::max_element(vals.begin(), vals.end())) +
                 " mean " +
                 format_double(
                     std::accumulate(vals.begin(), vals.end(), 0.0) /
                     static_cast<double>(vals.size())) +
                 " median " + format_double(median_of(vals)) + "\n";
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                b += "agreement " + std::to_string(i) + " " +
                     std::to_string(j) + " " +
                     format_double(evalkit::agreement_rate(preds[i],
                                                           preds[j])) +
                     "\n";
        const auto mv = evalkit::majority_vote(all, labels, n_labels);
        b += "vote majority accuracy " + format_double(mv.accuracy) +
             " ties " +
             std::to_string(std::count(mv.tie.begin(), mv.tie.end(), true)) +
             "\n";
        if (m >= config.tiers) {
            const auto tv =
                evalkit::tiered_vote(all, labels, n_labels, config.tiers);
            b += "vote tiered accuracy " + format_double(tv.accuracy) +
                 " tiers " + std::to_string(config.tiers) + "\n";
        } else {
            b += "vote-skipped tiered ensemble-smaller-than-tiers\n";
        }
        const auto filter = evalkit::disagreement_filter(all, config.quorum);
        b += "filter quorum " + format_double(config.quorum) + " confident " +
             std::to_string(filter.confident.size()) + " confused " +
             std::to_string(filter.confused.size()) + "\n";
        for (std::size_t i = 0; i < m; ++i) {
            const auto report = evalkit::confident_prototypes(
                preds[i], dataset, config.prototypes);
            for (const auto& cp : report.clusters) {
                if (cp.entries.empty()) {
                    b += "prototype-none " + std::to_string(i) + " cluster " +
                         std::to_string(cp.cluster) + "\n";
                    continue;
                }
                for (std::size_t r = 0; r < cp.entries.size(); ++r) {
                    const auto& e = cp.entries[r];
                    b += "prototype " + std::to_string(i) + " cluster " +
                         std::to_string(cp.cluster) + " rank " +
                         std::to_string(r) + " sample " +
                         std::to_string(e.sample) + " confidence " +
                         format_double(e.confidence) + " super " +
                         std::to_string(e.super_label) + " sub " +
                         std::to_string(e.sub_label) + " partial " +
                         (cp.partial ? "1" : "0") + "\n";
                }
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            const Tensor emb = pipeline::embed_dataset(ckpts[i], dataset);
            const auto neighbors =
                data::mine_neighbors(emb, config.k_neighbors);
            const auto terms = pipeline::scan_terms_of_checkpoint(
                ckpts[i], dataset, neighbors, config.flip_lambda2);
            b += "entropy " + std::to_string(i) + " consistency " +
                 format_double(terms.consistency) + " mean_entropy " +
                 format_double(terms.mean_entropy) + " pointwise_cross " +
                 format_double(terms.pointwise_cross) + " mean_cross " +
                 format_double(terms.mean_cross) + " total " +
                 format_double(terms.total) + "\n";
        }
        writer.write("bundle.txt", b);

        std::string manifest = "ERSEVAL 1\n";
        manifest += "config-digest " + digest_hex(config.digest()) + "\n";
        manifest += "dataset-digest " + digest_hex(ds_digest) + "\n";
        manifest += "members " + std::to_string(m) + "\n";
        for (std::size_t i = 0; i < m; ++i)
            manifest +=
                "input-checkpoint " + std::to_string(i) + " member " +
                std::to_string(ckpts[i].member_id) + " digest " +
                digest_hex(fnv1a64(pipeline::serialize_checkpoint(ckpts[i]))) +
                "\n";
        for (const auto& [rel, digest] : writer.files)
            manifest += "file " + rel + " " + digest_hex(digest) + "\n";
        manifest += config_block(config);
        writer.write("manifest.txt", manifest);

        log << "evaluated " << m << " member" << (m == 1 ? "" : "s")
            << " into " << out_dir << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

namespace {

// One parsed bundle table row, kept as raw tokens so regenerated reports
// preserve the exact number formatting.
struct BundleData {
    std::vector<std::vector<std::string>> members, kguess, agreement, votes,
        filter, prototypes, entropy;
    std::string scoring = "super";
    std::string labels = "0", samples = "0", member_count = "0";
};

BundleData parse_bundle(std::istream& in, const std::string& origin) {
    BundleData data;
    std::string line;
    if (!std::getline(in, line) || line != "ERSBUNDLE 1")
        throw IoError("'" + origin + "' is not a bundle file");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream toks(line);
        std::string head;
        toks >> head;
        std::vector<std::string> rest;
        std::string tok;
        while (toks >> tok) rest.push_back(tok);
        if (head == "member")
            data.members.push_back(rest);
        else if (head == "kguess")
            data.kguess.push_back(rest);
        else if (head == "agreement")
            data.agreement.push_back(rest);
        else if (head == "vote")
            data.votes.push_back(rest);
        else if (head == "filter")
            data.filter.push_back(rest);
        else if (head == "prototype")
            data.prototypes.push_back(rest);
        else if (head == "entropy")
            data.entropy.push_back(rest);
        else if (head == "scoring")
            data.scoring = rest.at(0);
        else if (head == "labels")
            data.labels = rest.at(0);
        else if (head == "samples")
            data.samples = rest.at(0);
        else if (head == "members")
            data.member_count = rest.at(0);
        else if (head == "config-digest" || head == "dataset-digest" ||
                 head == "kguess-skipped" || head == "vote-skipped" ||
                 head == "prototype-none")
            continue;
        else
            throw IoError("unknown bundle line '" + head + "' in '" + origin +
                          "'");
    }
    return data;
}

void write_text(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for '" + p.string() + "'");
}

}  // namespace

int cmd_report(const std::string& bundle_dir, std::ostream& out) {
    if (bundle_dir.empty()) {
        out << "error: empty bundle path\n";
        return kExitUsage;
    }
    try {
        const fs::path dir(bundle_dir);
        const fs::path bundle_path = dir / "bundle.txt";
        std::ifstream in(bundle_path, std::ios::binary);
        if (!in)
            throw IoError("no bundle at '" + bundle_path.string() + "'");
        const BundleData data = parse_bundle(in, bundle_path.string());

        // member <pos> id <id> accuracy <v> predictions <rel>
        std::string members_csv = "member,checkpoint,accuracy\n";
        for (const auto& r : data.members)
            members_csv += r.at(0) + "," + r.at(2) + "," + r.at(4) + "\n";
        write_text(dir / "members.csv", members_csv);

        // kguess <k> best <v> mean <v> median <v>
        std::string kguess_csv = "k,best,mean,median\n";
        for (const auto& r : data.kguess)
            kguess_csv += r.at(0) + "," + r.at(2) + "," + r.at(4) + "," +
                          r.at(6) + "\n";
        write_text(dir / "kguess.csv", kguess_csv);

        // agreement <i> <j> <v>
        std::string agreement_csv = "member_a,member_b,agreement\n";
        for (const auto& r : data.agreement)
            agreement_csv += r.at(0) + "," + r.at(1) + "," + r.at(2) + "\n";
        write_text(dir / "agreement.csv", agreement_csv);

        // vote majority accuracy <v> ties <n> | vote tiered accuracy <v> ...
        std::string votes_csv = "scheme,accuracy\n";
        for (const auto& r : data.votes)
            votes_csv += r.at(0) + "," + r.at(2) + "\n";
        write_text(dir / "votes.csv", votes_csv);

        // filter quorum <v> confident <n> confused <n>
        std::string filter_csv = "quorum,confident,confused\n";
        for (const auto& r : data.filter)
            filter_csv += r.at(1) + "," + r.at(3) + "," + r.at(5) + "\n";
        write_text(dir / "filter.csv", filter_csv);

        // prototype <pos> cluster <c> rank <r> sample <s> confidence <v>
        //   super <l> sub <l> partial <p>
        std::string proto_csv =
            "member,cluster,rank,sample,confidence,super_label,sub_label,"
            "partial\n";
        for (const auto& r : data.prototypes)
            proto_csv += r.at(0) + "," + r.at(2) + "," + r.at(4) + "," +
                         r.at(6) + "," + r.at(8) + "," + r.at(10) + "," +
                         r.at(12) + "," + r.at(14) + "\n";
        write_text(dir / "prototypes.csv", proto_csv);

        // entropy <pos> consistency <v> mean_entropy <v> ...
        std::string entropy_csv =
            "member,consistency,mean_entropy,pointwise_cross,mean_cross,"
            "total\n";
        for (const auto& r : data.entropy)
            entropy_csv += r.at(0) + "," + r.at(2) + "," + r.at(4) + "," +
                           r.at(6) + "," + r.at(8) + "," + r.at(10) + "\n";
        write_text(dir / "entropy.csv", entropy_csv);

        out << "bundle: " << bundle_dir << "\n";
        out << "members: " << data.member_count << " (scoring "
            << data.scoring << ", " << data.labels << " labels, "
            << data.samples << " samples)\n";
        if (!data.kguess.empty()) {
            const auto best = std::max_element(
                data.kguess.begin(), data.kguess.end(),
                [](const auto& a, const auto& b) {
                    return std::stod(a.at(2)) < std::stod(b.at(2));
                });
            out << "best k-guess: k=" << best->at(0) << " accuracy "
                << best->at(2) << "\n";
        }
        for (const auto& r : data.votes)
            out << r.at(0) << " vote accuracy: " << r.at(2) << "\n";
        for (const auto& r : data.filter)
            out << "confident samples: " << r.at(3) << "/" << data.samples
                << " at quorum " << r.at(1) << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_grad_check(std::uint64_t seed, std::size_t trials, std::ostream& out) {
    if (trials == 0) {
        out << "error: trials must be >= 1\n";
        return kExitUsage;
    }
    constexpr double kTol = 1e-4;
    constexpr double kEps = 1e-5;

    // Raw inputs go through softmax / l2norm inside the expression, keeping
    // the finite-difference path clear of the probability clamps.
    const auto scan_input = [](Rng& rng, std::size_t& k, Tensor& anchors,
                               Tensor& neighbors) {
        const std::size_t batch = 2 + rng.below(3);
        const std::size_t n = 2 + rng.below(4);
        k = 1 + rng.below(3);
        anchors = Tensor::zeros({batch, n});
        neighbors = Tensor::zeros({batch * k, n});
        for (auto& v : anchors.values) v = 1.5 * rng.normal();
        for (auto& v : neighbors.values) v = 1.5 * rng.normal();
    };
    const auto random_lambdas = [](Rng& rng) {
        model::LambdaVector l;
        l.lambda0 = 5.0 * rng.uniform();
        l.lambda1 = 8.0 * rng.uniform();
        l.lambda2 = 8.0 * rng.uniform();
        l.lambda3 = 12.0 * rng.uniform() - 4.0;
        return l;
    };

    enum Term { kMeanEntropy, kConsistency, kPointwise, kMeanCross, kTotal };
    const auto scan_check = [&](Term term) {
        return [&, term](Rng& rng) {
            std::size_t k = 0;
            Tensor anchors, neighbors;
            scan_input(rng, k, anchors, neighbors);
            const auto lambdas = random_lambdas(rng);
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
    };
    const auto simclr_check = [&](Rng& rng) {
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
                const auto ea = tape.l2norm_rows(xs[0]);
                const auto eb = tape.l2norm_rows(xs[1]);
                return model::simclr_loss_graph(tape, ea, eb, lambda0);
            };
        return autodiff::grad_check(f, {a, b}, kEps);
    };

    struct Check {
        const char* name;
        std::function<double(Rng&)> run;
    };
    const std::vector<Check> checks = {
        {"term_mean_entropy", scan_check(kMeanEntropy)},
        {"term_consistency", scan_check(kConsistency)},
        {"term_pointwise_cross", scan_check(kPointwise)},
        {"term_mean_cross", scan_check(kMeanCross)},
        {"scan_ers_loss", scan_check(kTotal)},
        {"simclr_ers_loss", simclr_check},
    };
    bool all_ok = true;
    for (const auto& check : checks) {
        Rng rng(seed, check.name);
        double worst = 0.0;
        for (std::size_t t = 0; t < trials; ++t)
            worst = std::max(worst, check.run(rng));
        const bool ok = worst < kTol;
        all_ok = all_ok && ok;
        out << "grad-check " << check.name << " trials " << trials
            << " max-rel-err " << format_double(worst) << " "
            << (ok ? "PASS" : "FAIL") << "\n";
    }
    out << (all_ok ? "all gradients verified\n"
                   : "gradient verification FAILED\n");
    return all_ok ? kExitOk : kExitRuntime;
}

}  // namespace ers::cli
