#include "ers/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <utility>

#include "ers/grad_check.hpp"
#include "ers/losses.hpp"
#include "ers/rng.hpp"

namespace ers::pipeline {

namespace {

using autodiff::GradientMap;
using autodiff::Tape;
using autodiff::Var;

Tensor gather_rows(const Tensor& src, const std::uint32_t* idx,
                   std::size_t count) {
    Tensor out = Tensor::zeros({count, src.cols()});
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t c = 0; c < src.cols(); ++c)
            out.at(i, c) = src.at(idx[i], c);
    return out;
}

Tensor gather_rows(const Tensor& src, const std::vector<std::uint32_t>& idx) {
    return gather_rows(src, idx.data(), idx.size());
}

// Flat neighbor indices for a batch of anchors, in anchor order.
std::vector<std::uint32_t> batch_neighbor_ids(
    const data::NeighborIndex& neighbors,
    const std::vector<std::uint32_t>& anchors) {
    std::vector<std::uint32_t> out;
    out.reserve(anchors.size() * neighbors.k);
    for (std::uint32_t a : anchors)
        for (std::size_t j = 0; j < neighbors.k; ++j)
            out.push_back(neighbors.at(a, j));
    return out;
}

struct ParamBinding {
    Tensor* param;
    Var var;
};

void bind_layer(std::vector<ParamBinding>& bindings, model::DenseLayer& layer,
                const model::LiftedLayer& lifted) {
    bindings.push_back({&layer.weight, lifted.w});
    bindings.push_back({&layer.bias, lifted.b});
}

void apply_sgd(const GradientMap& grads,
               const std::vector<ParamBinding>& bindings, double lr) {
    for (const ParamBinding& b : bindings) {
        if (!grads.has(b.var)) continue;
        const Tensor& g = grads.grad(b.var);
        for (std::size_t i = 0; i < b.param->size(); ++i)
            b.param->values[i] -= lr * g.values[i];
        if (!b.param->all_finite())
            throw DivergenceError("parameter went non-finite after update");
    }
}

[[noreturn]] void diverged(const char* stage, std::size_t epoch,
                           const model::LambdaVector& lambdas,
                           const std::exception& cause) {
    throw DivergenceError(std::string("train_") + stage +
                          ": diverged at epoch " + std::to_string(epoch) +
                          " with lambda " + lambdas.to_string() + ": " +
                          cause.what());
}

bool should_log(std::size_t epoch, std::size_t epochs, std::size_t cadence) {
    return epoch == epochs || epoch % cadence == 0;
}

std::vector<std::uint32_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    rng.shuffle(order);
    return order;
}

model::ScanTerms compute_scan_terms(const model::EncoderParams& encoder,
                                    const model::ClusterHead& head,
                                    const data::HierarchicalDataset& dataset,
                                    const data::NeighborIndex& neighbors,
                                    const model::LambdaVector& lambdas,
                                    bool flip_lambda2) {
    const Tensor z = model::encode_batch(encoder, dataset.samples);
    const Tensor probs = model::predict_probs_batch(head, z);
    std::vector<std::uint32_t> all(dataset.size());
    std::iota(all.begin(), all.end(), 0u);
    const Tensor neighbor_probs =
        gather_rows(probs, batch_neighbor_ids(neighbors, all));
    return model::scan_ers_terms(probs, neighbor_probs, neighbors.k, lambdas,
                                 flip_lambda2);
}

std::vector<TermValue> terms_to_values(const model::ScanTerms& t) {
    return {{"consistency", t.consistency},
            {"mean_entropy", t.mean_entropy},
            {"pointwise_cross", t.pointwise_cross},
            {"mean_cross", t.mean_cross},
            {"total", t.total}};
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
    if (batch_size < 1)
        throw ConfigError("train config: batch size must be >= 1");
    if (!(learning_rate > 0.0))
        throw ConfigError("train config: learning rate must be > 0");
    if (log_every < 1)
        throw ConfigError("train config: log cadence must be >= 1");
    if (!lambdas.all_finite())
        throw ConfigError("train config: lambda values must be finite");
    if (d_emb < 1) throw ConfigError("train config: d_emb must be >= 1");
    if (n_classes < 2)
        throw ConfigError("train config: n_classes must be >= 2");
    if (stage == Stage::selflabel &&
        !(confidence_threshold > 0.5 && confidence_threshold < 1.0))
        throw ConfigError(
            "train config: confidence threshold must lie in (0.5, 1)");
}

TrainResult train_pretext(const TrainConfig& config,
                          const data::HierarchicalDataset& dataset) {
    config.validate();
    if (config.stage != Stage::pretext)
        throw ConfigError("train_pretext: config stage must be 'pretext'");
    const std::size_t n = dataset.size();
    if (n == 0) throw DomainError("train_pretext: empty dataset");

    const double sigma = config.augment_sigma < 0.0
                             ? 0.5 * dataset.sub_spread
                             : config.augment_sigma;
    const data::AugmentationSpec aug{sigma, config.seed};

    TrainResult result;
    Rng init_rng(config.seed, "encoder-init");
    model::EncoderParams encoder = model::make_encoder(
        dataset.d_in, config.hidden_widths, config.d_emb, init_rng);
    Rng order_rng(config.seed, "pretext-order");

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const std::vector<std::uint32_t> order = shuffled_indices(n, order_rng);
        double loss_sum = 0.0;
        try {
            for (std::size_t start = 0; start < n;
                 start += config.batch_size) {
                const std::size_t count =
                    std::min(config.batch_size, n - start);
                Tensor x_a = Tensor::zeros({count, dataset.d_in});
                Tensor x_b = Tensor::zeros({count, dataset.d_in});
                for (std::size_t i = 0; i < count; ++i) {
                    const std::uint32_t s = order[start + i];
                    const std::vector<double> raw = dataset.sample(s);
                    const std::vector<double> view =
                        data::augment(raw, aug, s, epoch);
                    for (std::size_t c = 0; c < dataset.d_in; ++c) {
                        x_a.at(i, c) = raw[c];
                        x_b.at(i, c) = view[c];
                    }
                }
                Tape tape;
                const model::LiftedEncoder lifted = lift(tape, encoder, true);
                const Var va = tape.leaf(std::move(x_a));
                const Var vb = tape.leaf(std::move(x_b));
                const Var za = model::encode_graph(tape, lifted, va);
                const Var zb = model::encode_graph(tape, lifted, vb);
                const Var loss = model::simclr_loss_graph(
                    tape, za, zb, config.lambdas.lambda0);
                const GradientMap grads = tape.backward(loss);
                std::vector<ParamBinding> bindings;
                for (std::size_t l = 0; l < encoder.hidden.size(); ++l)
                    bind_layer(bindings, encoder.hidden[l], lifted.hidden[l]);
                bind_layer(bindings, encoder.out, lifted.out);
                apply_sgd(grads, bindings, config.learning_rate);
                loss_sum += tape.value(loss).values[0] *
                            static_cast<double>(count);
            }
        } catch (const DivergenceError& e) {
            diverged("pretext", epoch, config.lambdas, e);
        } catch (const DomainError& e) {
            diverged("pretext", epoch, config.lambdas, e);
        }
        const double epoch_mean = loss_sum / static_cast<double>(n);
        if (epoch == 1) result.initial_epoch_loss = epoch_mean;
        result.final_epoch_loss = epoch_mean;
        if (should_log(epoch, config.epochs, config.log_every)) {
            result.records.push_back(EntropyStateRecord{
                epoch, Stage::pretext, {{"loss", epoch_mean}}});
        }
    }

    Checkpoint& c = result.checkpoint;
    c.member_id = config.member_id;
    c.stage = Stage::pretext;
    c.config_digest = config.config_digest;
    c.dataset_digest = dataset.digest();
    c.lambdas = config.lambdas;
    c.encoder = std::move(encoder);
    c.has_head = false;
    c.final_terms = {{"loss", result.final_epoch_loss}};
    return result;
}

TrainResult train_scan(const TrainConfig& config,
                       const data::HierarchicalDataset& dataset,
                       const data::NeighborIndex& neighbors,
                       const Checkpoint& pretext) {
    config.validate();
    if (config.stage != Stage::scan)
        throw ConfigError("train_scan: config stage must be 'scan'");
    if (pretext.stage != Stage::pretext)
        throw DomainError("train_scan: expected a pretext-stage checkpoint, "
                          "got stage '" +
                          stage_name(pretext.stage) + "'");
    const std::size_t n = dataset.size();
    if (n == 0) throw DomainError("train_scan: empty dataset");
    if (neighbors.size() != n)
        throw ShapeError("train_scan: neighbor index covers " +
                         std::to_string(neighbors.size()) + " samples, "
                         "dataset has " +
                         std::to_string(n));

    TrainResult result;
    if (!(config.lambdas.lambda1 > 0.0)) {
        result.warnings.push_back(
            "lambda1 <= 0: the consistency-only objective tends to collapse "
            "all samples into one cluster");
    }

    model::EncoderParams encoder = pretext.encoder;
    Rng head_rng(config.seed, "head-init");
    model::ClusterHead head =
        model::make_head(encoder.embed_dim(), config.n_classes, head_rng);
    Rng order_rng(config.seed, "scan-order");

    // Frozen encoder: embeddings never change, compute them once.
    Tensor frozen_emb;
    if (!config.train_encoder)
        frozen_emb = model::encode_batch(encoder, dataset.samples);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const std::vector<std::uint32_t> order = shuffled_indices(n, order_rng);
        double loss_sum = 0.0;
        try {
            for (std::size_t start = 0; start < n;
                 start += config.batch_size) {
                const std::size_t count =
                    std::min(config.batch_size, n - start);
                const std::vector<std::uint32_t> anchors(
                    order.begin() + static_cast<long>(start),
                    order.begin() + static_cast<long>(start + count));
                const std::vector<std::uint32_t> nb_ids =
                    batch_neighbor_ids(neighbors, anchors);

                Tape tape;
                std::vector<ParamBinding> bindings;
                Var emb_a, emb_n;
                model::LiftedEncoder lifted_enc;
                if (config.train_encoder) {
                    lifted_enc = lift(tape, encoder, true);
                    const Var xa =
                        tape.leaf(gather_rows(dataset.samples, anchors));
                    const Var xn =
                        tape.leaf(gather_rows(dataset.samples, nb_ids));
                    emb_a = model::encode_graph(tape, lifted_enc, xa);
                    emb_n = model::encode_graph(tape, lifted_enc, xn);
                } else {
                    emb_a = tape.leaf(gather_rows(frozen_emb, anchors));
                    emb_n = tape.leaf(gather_rows(frozen_emb, nb_ids));
                }
                const model::LiftedLayer lifted_head = lift(tape, head, true);
                const Var probs_a =
                    model::predict_graph(tape, lifted_head, emb_a);
                const Var probs_n =
                    model::predict_graph(tape, lifted_head, emb_n);
                const model::ScanTermVars terms = model::scan_loss_graph(
                    tape, probs_a, probs_n, neighbors.k, config.lambdas,
                    config.flip_lambda2);
                const GradientMap grads = tape.backward(terms.total);
                if (config.train_encoder) {
                    for (std::size_t l = 0; l < encoder.hidden.size(); ++l)
                        bind_layer(bindings, encoder.hidden[l],
                                   lifted_enc.hidden[l]);
                    bind_layer(bindings, encoder.out, lifted_enc.out);
                }
                bind_layer(bindings, head.linear, lifted_head);
                apply_sgd(grads, bindings, config.learning_rate);
                loss_sum += tape.value(terms.total).values[0] *
                            static_cast<double>(count);
            }
        } catch (const DivergenceError& e) {
            diverged("scan", epoch, config.lambdas, e);
        } catch (const DomainError& e) {
            diverged("scan", epoch, config.lambdas, e);
        }
        const double epoch_mean = loss_sum / static_cast<double>(n);
        if (epoch == 1) result.initial_epoch_loss = epoch_mean;
        result.final_epoch_loss = epoch_mean;
        if (should_log(epoch, config.epochs, config.log_every)) {
            const model::ScanTerms full =
                compute_scan_terms(encoder, head, dataset, neighbors,
                                   config.lambdas, config.flip_lambda2);
            result.records.push_back(EntropyStateRecord{
                epoch, Stage::scan, terms_to_values(full)});
        }
    }

    Checkpoint& c = result.checkpoint;
    c.member_id = config.member_id;
    c.stage = Stage::scan;
    c.config_digest = config.config_digest;
    c.dataset_digest = dataset.digest();
    c.lambdas = config.lambdas;
    c.encoder = std::move(encoder);
    c.has_head = true;
    c.head = std::move(head);
    c.final_terms = result.records.back().terms;
    return result;
}

TrainResult train_selflabel(const TrainConfig& config,
                            const data::HierarchicalDataset& dataset,
                            const Checkpoint& scan) {
    config.validate();
    if (config.stage != Stage::selflabel)
        throw ConfigError("train_selflabel: config stage must be 'selflabel'");
    if (scan.stage != Stage::scan)
        throw DomainError("train_selflabel: expected a scan-stage checkpoint, "
                          "got stage '" +
                          stage_name(scan.stage) + "'");
    if (!scan.has_head)
        throw DomainError("train_selflabel: checkpoint has no cluster head");
    const std::size_t n = dataset.size();
    if (n == 0) throw DomainError("train_selflabel: empty dataset");

    model::EncoderParams encoder = scan.encoder;
    model::ClusterHead head = scan.head;
    const std::size_t classes = head.n_classes();

    // Pseudo-label the confident samples once, from the incoming checkpoint.
    const Tensor emb_all = model::encode_batch(encoder, dataset.samples);
    const Tensor probs_all = model::predict_probs_batch(head, emb_all);
    std::vector<std::uint32_t> confident;
    std::vector<std::uint32_t> pseudo;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c)
            if (probs_all.at(i, c) > probs_all.at(i, best)) best = c;
        if (probs_all.at(i, best) >= config.confidence_threshold) {
            confident.push_back(static_cast<std::uint32_t>(i));
            pseudo.push_back(static_cast<std::uint32_t>(best));
        }
    }

    TrainResult result;
    if (confident.empty()) {
        result.warnings.push_back(
            "no samples cleared the confidence threshold " +
            format_double(config.confidence_threshold) +
            "; returning the checkpoint unchanged");
        result.checkpoint = scan;
        return result;
    }

    Rng order_rng(config.seed, "selflabel-order");
    const std::size_t m = confident.size();
    Tensor frozen_emb;
    if (!config.train_encoder) frozen_emb = emb_all;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<std::uint32_t> order(m);
        std::iota(order.begin(), order.end(), 0u);
        order_rng.shuffle(order);
        double loss_sum = 0.0;
        try {
            for (std::size_t start = 0; start < m;
                 start += config.batch_size) {
                const std::size_t count =
                    std::min(config.batch_size, m - start);
                std::vector<std::uint32_t> rows(count);
                Tensor targets = Tensor::zeros({count, classes});
                for (std::size_t i = 0; i < count; ++i) {
                    const std::uint32_t j = order[start + i];
                    rows[i] = confident[j];
                    targets.at(i, pseudo[j]) = 1.0;
                }
                Tape tape;
                std::vector<ParamBinding> bindings;
                Var emb;
                model::LiftedEncoder lifted_enc;
                if (config.train_encoder) {
                    lifted_enc = lift(tape, encoder, true);
                    const Var x =
                        tape.leaf(gather_rows(dataset.samples, rows.data(),
                                              count));
                    emb = model::encode_graph(tape, lifted_enc, x);
                } else {
                    emb = tape.leaf(gather_rows(frozen_emb, rows.data(),
                                                count));
                }
                const model::LiftedLayer lifted_head = lift(tape, head, true);
                const Var probs =
                    model::predict_graph(tape, lifted_head, emb);
                const Var tv = tape.leaf(std::move(targets));
                const Var loss = model::cross_entropy_graph(tape, probs, tv);
                const GradientMap grads = tape.backward(loss);
                if (config.train_encoder) {
                    for (std::size_t l = 0; l < encoder.hidden.size(); ++l)
                        bind_layer(bindings, encoder.hidden[l],
                                   lifted_enc.hidden[l]);
                    bind_layer(bindings, encoder.out, lifted_enc.out);
                }
                bind_layer(bindings, head.linear, lifted_head);
                apply_sgd(grads, bindings, config.learning_rate);
                loss_sum += tape.value(loss).values[0] *
                            static_cast<double>(count);
            }
        } catch (const DivergenceError& e) {
            diverged("selflabel", epoch, config.lambdas, e);
        } catch (const DomainError& e) {
            diverged("selflabel", epoch, config.lambdas, e);
        }
        const double epoch_mean = loss_sum / static_cast<double>(m);
        if (epoch == 1) result.initial_epoch_loss = epoch_mean;
        result.final_epoch_loss = epoch_mean;
        if (should_log(epoch, config.epochs, config.log_every)) {
            result.records.push_back(EntropyStateRecord{
                epoch, Stage::selflabel, {{"cross_entropy", epoch_mean}}});
        }
    }

    Checkpoint& c = result.checkpoint;
    c.member_id = config.member_id;
    c.stage = Stage::selflabel;
    c.config_digest = config.config_digest;
    c.dataset_digest = dataset.digest();
    c.lambdas = scan.lambdas;
    c.encoder = std::move(encoder);
    c.has_head = true;
    c.head = std::move(head);
    c.final_terms = {{"cross_entropy", result.final_epoch_loss},
                     {"confident_count", static_cast<double>(m)}};
    return result;
}

Tensor embed_dataset(const Checkpoint& c,
                     const data::HierarchicalDataset& dataset) {
    return model::encode_batch(c.encoder, dataset.samples);
}

model::ScanTerms scan_terms_of_checkpoint(
    const Checkpoint& c, const data::HierarchicalDataset& dataset,
    const data::NeighborIndex& neighbors, bool flip_lambda2) {
    if (!c.has_head)
        throw DomainError(
            "scan_terms_of_checkpoint: checkpoint has no cluster head");
    return compute_scan_terms(c.encoder, c.head, dataset, neighbors,
                              c.lambdas, flip_lambda2);
}

std::size_t EnsembleResult::failures() const {
    std::size_t f = 0;
    for (const MemberResult& m : members)
        if (!m.ok) ++f;
    return f;
}

EnsembleResult train_ensemble(const EnsembleSpec& spec,
                              const data::HierarchicalDataset& dataset) {
    if (spec.members.empty())
        throw ConfigError("train_ensemble: ensemble needs >= 1 member");
    if (spec.pretext.stage != Stage::pretext ||
        spec.scan.stage != Stage::scan ||
        spec.selflabel.stage != Stage::selflabel)
        throw ConfigError("train_ensemble: stage configs are mislabeled");
    spec.pretext.validate();
    spec.scan.validate();
    spec.selflabel.validate();

    const std::size_t m = spec.members.size();
    EnsembleResult result;
    result.members.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        result.members[i].member_id = static_cast<std::uint32_t>(i);

    // Members sharing lambda0 share one pretext run and one neighbor index.
    struct Group {
        std::vector<std::size_t> member_ids;
        bool ok = false;
        std::string error;
        Checkpoint pretext;
        std::vector<EntropyStateRecord> records;
        data::NeighborIndex neighbors;
    };
    std::vector<Group> groups;
    std::map<std::uint64_t, std::size_t> group_of;
    for (std::size_t i = 0; i < m; ++i) {
        std::uint64_t bits = 0;
        const double l0 = spec.members[i].lambda0;
        static_assert(sizeof(bits) == sizeof(l0));
        std::memcpy(&bits, &l0, sizeof(bits));
        const auto [it, inserted] = group_of.try_emplace(bits, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].member_ids.push_back(i);
    }

    for (Group& g : groups) {
        TrainConfig cfg = spec.pretext;
        cfg.lambdas = spec.members[g.member_ids.front()];
        cfg.member_id =
            static_cast<std::uint32_t>(g.member_ids.front());
        try {
            TrainResult pre = train_pretext(cfg, dataset);
            const Tensor emb = embed_dataset(pre.checkpoint, dataset);
            g.neighbors = data::mine_neighbors(emb, spec.k_neighbors);
            g.pretext = std::move(pre.checkpoint);
            g.records = std::move(pre.records);
            g.ok = true;
        } catch (const std::exception& e) {
            g.error = e.what();
        }
    }

    std::vector<const Group*> member_group(m, nullptr);
    for (const Group& g : groups)
        for (std::size_t i : g.member_ids) member_group[i] = &g;

    const auto mi = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t ii = 0; ii < mi; ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        MemberResult& out = result.members[i];
        const Group& g = *member_group[i];
        if (!g.ok) {
            out.error = "pretext stage failed: " + g.error;
            continue;
        }
        try {
            out.records = g.records;
            TrainConfig scan_cfg = spec.scan;
            scan_cfg.lambdas = spec.members[i];
            scan_cfg.member_id = static_cast<std::uint32_t>(i);
            TrainResult scan =
                train_scan(scan_cfg, dataset, g.neighbors, g.pretext);
            for (const auto& w : scan.warnings) out.warnings.push_back(w);
            out.records.insert(out.records.end(), scan.records.begin(),
                               scan.records.end());
            Checkpoint final_ckpt = std::move(scan.checkpoint);
            if (spec.run_selflabel) {
                TrainConfig sl_cfg = spec.selflabel;
                sl_cfg.lambdas = spec.members[i];
                sl_cfg.member_id = static_cast<std::uint32_t>(i);
                TrainResult sl =
                    train_selflabel(sl_cfg, dataset, final_ckpt);
                for (const auto& w : sl.warnings) out.warnings.push_back(w);
                out.records.insert(out.records.end(), sl.records.begin(),
                                   sl.records.end());
                final_ckpt = std::move(sl.checkpoint);
                final_ckpt.member_id = static_cast<std::uint32_t>(i);
            }
            out.final = std::move(final_ckpt);
            out.ok = true;
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
    }
    return result;
}

}  // namespace ers::pipeline
