#include "ers/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ers::evalkit {

namespace {

void check_ensemble(const std::vector<const PredictionSet*>& members) {
    if (members.empty()) throw DomainError("empty ensemble");
    const std::size_t n = members[0]->size();
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (!members[i]->mapped())
            throw DomainError("ensemble member " + std::to_string(i) +
                              " is unmapped");
        if (members[i]->size() != n)
            throw ShapeError("ensemble member " + std::to_string(i) +
                             " has " + std::to_string(members[i]->size()) +
                             " samples, expected " + std::to_string(n));
    }
}

}  // namespace

double n_guess_accuracy(const std::vector<const PredictionSet*>& members,
                        const std::vector<std::uint32_t>& labels) {
    check_ensemble(members);
    if (labels.size() != members[0]->size())
        throw ShapeError("n_guess_accuracy: label count mismatch");
    if (labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (const PredictionSet* m : members) {
            if (m->mapped_label(i) == labels[i]) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double agreement_rate(const PredictionSet& a, const PredictionSet& b) {
    check_ensemble({&a, &b});
    if (a.size() == 0) return 1.0;
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.mapped_label(i) == b.mapped_label(i)) ++same;
    return static_cast<double>(same) / static_cast<double>(a.size());
}

VoteResult majority_vote(const std::vector<const PredictionSet*>& members,
                         const std::vector<std::uint32_t>& labels,
                         std::size_t n_labels, TieRule tie_rule) {
    check_ensemble(members);
    const std::size_t n = members[0]->size();
    if (labels.size() != n)
        throw ShapeError("majority_vote: label count mismatch");
    VoteResult result;
    result.winners.resize(n);
    result.tally.assign(n, std::vector<std::uint32_t>(n_labels, 0));
    result.tie.assign(n, false);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& tally = result.tally[i];
        for (const PredictionSet* m : members) {
            const std::uint32_t label = m->mapped_label(i);
            if (label >= n_labels)
                throw DomainError("majority_vote: mapped label " +
                                  std::to_string(label) + " out of range");
            ++tally[label];
        }
        const std::uint32_t top = *std::max_element(tally.begin(), tally.end());
        std::vector<std::uint32_t> leaders;
        for (std::uint32_t l = 0; l < n_labels; ++l)
            if (tally[l] == top) leaders.push_back(l);
        std::uint32_t winner = leaders.front();
        if (leaders.size() > 1) {
            result.tie[i] = true;
            if (tie_rule == TieRule::highest_confidence) {
                // The most confident member among those voting for a leading
                // label breaks the tie; equal confidences fall back to the
                // lower member index (scan order).
                double best_conf = -1.0;
                for (const PredictionSet* m : members) {
                    const std::uint32_t label = m->mapped_label(i);
                    if (std::find(leaders.begin(), leaders.end(), label) ==
                        leaders.end())
                        continue;
                    if (m->confidence(i) > best_conf) {
                        best_conf = m->confidence(i);
                        winner = label;
                    }
                }
            }
            // lowest_member_index: the first member voting for a leading
            // label wins; leaders.front() equals the first such member's
            // label only when labels tie at the same count, so scan members.
            if (tie_rule == TieRule::lowest_member_index) {
                for (const PredictionSet* m : members) {
                    const std::uint32_t label = m->mapped_label(i);
                    if (std::find(leaders.begin(), leaders.end(), label) !=
                        leaders.end()) {
                        winner = label;
                        break;
                    }
                }
            }
        }
        result.winners[i] = winner;
        if (winner == labels[i]) ++hits;
    }
    result.accuracy =
        n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
    return result;
}

VoteResult tiered_vote(const std::vector<const PredictionSet*>& members,
                       const std::vector<std::uint32_t>& labels,
                       std::size_t n_labels, std::size_t tiers,
                       TieRule tie_rule) {
    check_ensemble(members);
    if (tiers == 0) throw DomainError("tiered_vote: zero tiers");
    if (members.size() < tiers)
        throw DomainError("tiered_vote: ensemble of " +
                          std::to_string(members.size()) +
                          " members cannot fill " + std::to_string(tiers) +
                          " tiers");
    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (members[a]->mapped_accuracy != members[b]->mapped_accuracy)
            return members[a]->mapped_accuracy > members[b]->mapped_accuracy;
        return members[a]->checkpoint_id < members[b]->checkpoint_id;
    });
    // Equal tiers with the remainder going to the top tiers; the delegate of
    // each tier is its most accurate member, i.e. the first in sorted order.
    const std::size_t base = members.size() / tiers;
    const std::size_t remainder = members.size() % tiers;
    std::vector<const PredictionSet*> delegates;
    std::size_t start = 0;
    for (std::size_t t = 0; t < tiers; ++t) {
        const std::size_t span = base + (t < remainder ? 1 : 0);
        delegates.push_back(members[order[start]]);
        start += span;
    }
    return majority_vote(delegates, labels, n_labels, tie_rule);
}

FilterResult disagreement_filter(
    const std::vector<const PredictionSet*>& members, double quorum) {
    check_ensemble(members);
    if (!(quorum > 0.5 && quorum <= 1.0))
        throw DomainError("disagreement_filter: quorum " +
                          format_double(quorum) + " outside (0.5, 1]");
    const std::size_t n = members[0]->size();
    const double need = quorum * static_cast<double>(members.size());
    FilterResult result;
    std::vector<std::uint32_t> tally;
    for (std::size_t i = 0; i < n; ++i) {
        tally.clear();
        for (const PredictionSet* m : members) {
            const std::uint32_t label = m->mapped_label(i);
            if (label >= tally.size()) tally.resize(label + 1, 0);
            ++tally[label];
        }
        const std::uint32_t top = *std::max_element(tally.begin(), tally.end());
        // +1e-9 absorbs representation error in quorum * size (e.g. 0.75 * 4).
        if (static_cast<double>(top) + 1e-9 >= need)
            result.confident.push_back(static_cast<std::uint32_t>(i));
        else
            result.confused.push_back(static_cast<std::uint32_t>(i));
    }
    return result;
}

PrototypeReport confident_prototypes(const PredictionSet& preds,
                                     const data::HierarchicalDataset& dataset,
                                     std::size_t m) {
    if (m == 0) throw DomainError("confident_prototypes: m must be >= 1");
    if (preds.size() != dataset.size())
        throw ShapeError("confident_prototypes: prediction set covers " +
                         std::to_string(preds.size()) +
                         " samples, dataset has " +
                         std::to_string(dataset.size()));
    PrototypeReport report;
    report.checkpoint_id = preds.checkpoint_id;
    report.m = m;
    const std::size_t n_clusters = preds.n_clusters();
    std::vector<std::vector<std::uint32_t>> by_cluster(n_clusters);
    for (std::size_t i = 0; i < preds.size(); ++i)
        by_cluster[preds.argmax[i]].push_back(static_cast<std::uint32_t>(i));
    for (std::size_t c = 0; c < n_clusters; ++c) {
        ClusterPrototypes cp;
        cp.cluster = static_cast<std::uint32_t>(c);
        auto& ids = by_cluster[c];
        const std::size_t take = std::min(m, ids.size());
        cp.partial = ids.size() < m;
        std::partial_sort(ids.begin(), ids.begin() + static_cast<long>(take),
                          ids.end(),
                          [&](std::uint32_t a, std::uint32_t b) {
                              const double ca = preds.confidence(a);
                              const double cb = preds.confidence(b);
                              if (ca != cb) return ca > cb;
                              return a < b;
                          });
        for (std::size_t r = 0; r < take; ++r) {
            PrototypeEntry e;
            e.sample = ids[r];
            e.confidence = preds.confidence(ids[r]);
            e.super_label = dataset.super_labels[ids[r]];
            e.sub_label = dataset.sub_labels[ids[r]];
            cp.entries.push_back(e);
        }
        report.clusters.push_back(std::move(cp));
    }
    return report;
}

}  // namespace ers::evalkit
